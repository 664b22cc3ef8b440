"""MPS reading/writing and synthetic instance generators.

The reader accepts fixed- and free-format MPS (whitespace tokenized,
case-sensitive names) and produces the standard minimization form directly:
G rows stay as >=, L rows are negated, E rows form the equality block,
RANGES rows split into two >= rows, OBJSENSE MAX negates the objective and
flags the problem so reports flip the sign back.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .problem import LpProblem, PrimalDualPoint
from .sparse import SparseMatrix


class MpsParseError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_SECTION_ORDER = {"NAME": 0, "OBJSENSE": 1, "ROWS": 2, "COLUMNS": 3,
                  "RHS": 4, "RANGES": 4, "BOUNDS": 4, "ENDATA": 5}


@dataclass
class MpsDocument:
    """Tokenized MPS sections before assembly into an LpProblem."""

    name: str = "UNNAMED"
    maximize: bool = False
    rows: list[tuple[str, str]] = field(default_factory=list)   # (kind, name)
    objective_row: str | None = None
    extra_objective_rows: int = 0
    # records carry the source line number for error reporting
    columns: list[tuple[str, str, float, int]] = field(default_factory=list)
    rhs: list[tuple[str, float, int]] = field(default_factory=list)
    ranges: list[tuple[str, float, int]] = field(default_factory=list)
    bounds: list[tuple[str, str, float | None, int]] = field(default_factory=list)


def _tokenize(text: str | bytes):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for line_no, raw in enumerate(io.StringIO(text), start=1):
        if raw.startswith("*"):
            continue
        stripped = raw.rstrip("\n")
        if not stripped.strip():
            continue
        yield line_no, stripped, stripped.split()


def read_document(text: str | bytes) -> MpsDocument:
    doc = MpsDocument()
    section = None
    row_kinds: dict[str, str] = {}
    seen_sections: list[str] = []
    for line_no, raw, tokens in _tokenize(text):
        is_header = not raw[0].isspace()
        head = tokens[0]
        if is_header and head in _SECTION_ORDER:
            if seen_sections and _SECTION_ORDER[head] < _SECTION_ORDER[seen_sections[-1]]:
                raise MpsParseError(f"section {head} out of order", line_no)
            if head in ("RHS", "RANGES", "BOUNDS") and "COLUMNS" not in seen_sections:
                raise MpsParseError(f"section {head} before COLUMNS", line_no)
            if head == "COLUMNS" and "ROWS" not in seen_sections:
                raise MpsParseError("COLUMNS before ROWS", line_no)
            seen_sections.append(head)
            section = head
            if head == "NAME" and len(tokens) > 1:
                doc.name = tokens[1]
            if head == "OBJSENSE" and len(tokens) > 1:
                doc.maximize = tokens[1].upper().startswith("MAX")
            if head == "ENDATA":
                break
            continue
        if is_header:
            raise MpsParseError(f"unknown section '{head}'", line_no)
        if section == "OBJSENSE":
            doc.maximize = head.upper().startswith("MAX")
        elif section == "ROWS":
            if len(tokens) != 2 or tokens[0] not in ("N", "E", "L", "G"):
                raise MpsParseError("expected '<N|E|L|G> <rowname>'", line_no)
            kind, name = tokens
            if kind == "N":
                if doc.objective_row is None:
                    doc.objective_row = name
                else:
                    doc.extra_objective_rows += 1
                continue
            if name in row_kinds:
                raise MpsParseError(f"duplicate row '{name}'", line_no)
            row_kinds[name] = kind
            doc.rows.append((kind, name))
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                continue   # integrality markers are ignored (LP relaxation)
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError("expected '<col> (<row> <value>)+'", line_no)
            col = tokens[0]
            for i in range(1, len(tokens), 2):
                try:
                    val = float(tokens[i + 1])
                except ValueError:
                    raise MpsParseError(f"bad numeric '{tokens[i + 1]}'", line_no)
                doc.columns.append((col, tokens[i], val, line_no))
        elif section == "RHS":
            pairs = tokens[1:] if len(tokens) % 2 == 1 else tokens
            if not pairs or len(pairs) % 2 != 0:
                raise MpsParseError("expected '[setname] (<row> <value>)+'", line_no)
            for i in range(0, len(pairs), 2):
                try:
                    val = float(pairs[i + 1])
                except ValueError:
                    raise MpsParseError(f"bad numeric '{pairs[i + 1]}'", line_no)
                doc.rhs.append((pairs[i], val, line_no))
        elif section == "RANGES":
            pairs = tokens[1:] if len(tokens) % 2 == 1 else tokens
            if not pairs or len(pairs) % 2 != 0:
                raise MpsParseError("expected '[setname] (<row> <value>)+'", line_no)
            for i in range(0, len(pairs), 2):
                try:
                    val = float(pairs[i + 1])
                except ValueError:
                    raise MpsParseError(f"bad numeric '{pairs[i + 1]}'", line_no)
                doc.ranges.append((pairs[i], val, line_no))
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            if kind in ("FR", "MI", "PL", "BV"):
                if len(tokens) < 3:
                    raise MpsParseError("expected '<kind> <setname> <col>'", line_no)
                doc.bounds.append((kind, tokens[2], None, line_no))
            elif kind in ("LO", "UP", "FX"):
                if len(tokens) < 4:
                    raise MpsParseError("expected '<kind> <setname> <col> <value>'", line_no)
                try:
                    val = float(tokens[3])
                except ValueError:
                    raise MpsParseError(f"bad numeric '{tokens[3]}'", line_no)
                doc.bounds.append((kind, tokens[2], val, line_no))
            else:
                raise MpsParseError(f"unknown bound kind '{tokens[0]}'", line_no)
        else:
            raise MpsParseError("data before any section header", line_no)
    if "ROWS" not in seen_sections or "COLUMNS" not in seen_sections:
        raise MpsParseError("missing ROWS or COLUMNS section", 0)
    return doc


def document_to_problem(doc: MpsDocument) -> LpProblem:
    if doc.extra_objective_rows:
        warnings.warn(f"dropped {doc.extra_objective_rows} extra objective row(s)",
                      UserWarning)
    row_kind = {name: kind for kind, name in doc.rows}
    row_index = {name: i for i, (_, name) in enumerate(doc.rows)}

    col_names: list[str] = []
    col_index: dict[str, int] = {}
    entries: dict[int, list[tuple[int, float]]] = {}   # row -> [(col, val)]
    obj: dict[int, float] = {}
    for col, row, val, line_no in doc.columns:
        if col not in col_index:
            col_index[col] = len(col_names)
            col_names.append(col)
        j = col_index[col]
        if row == doc.objective_row:
            obj[j] = obj.get(j, 0.0) + val
            continue
        if row not in row_index:
            raise MpsParseError(f"unknown row '{row}'", line_no)
        entries.setdefault(row_index[row], []).append((j, val))

    n = len(col_names)
    rhs = np.zeros(len(doc.rows))
    objective_constant = 0.0
    for row, val, line_no in doc.rhs:
        if row == doc.objective_row:
            objective_constant = -val
            continue
        if row not in row_index:
            raise MpsParseError(f"unknown row '{row}'", line_no)
        rhs[row_index[row]] = val

    range_val: dict[int, float] = {}
    for row, val, line_no in doc.ranges:
        if row == doc.objective_row or row not in row_index:
            raise MpsParseError(f"RANGES references unknown row '{row}'", line_no)
        range_val[row_index[row]] = val

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for kind, col, val, line_no in doc.bounds:
        if col not in col_index:
            raise MpsParseError(f"BOUNDS references unknown column '{col}'", line_no)
        j = col_index[col]
        if kind == "LO":
            lower[j] = val
        elif kind == "UP":
            upper[j] = val
        elif kind == "FX":
            lower[j] = upper[j] = val
        elif kind == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif kind == "MI":
            lower[j] = -np.inf
        elif kind == "PL":
            upper[j] = np.inf
        elif kind == "BV":
            lower[j], upper[j] = 0.0, 1.0
        if lower[j] > upper[j]:
            raise MpsParseError(f"conflicting bounds for column '{col}'", line_no)

    c = np.zeros(n)
    for j, val in obj.items():
        c[j] = val

    # Assemble: equality rows first, then >= rows (L rows negated, ranged
    # rows split into a >=/<= pair in >= orientation).
    eq_rows: list[tuple[list[tuple[int, float]], float, str]] = []
    ge_rows: list[tuple[list[tuple[int, float]], float, str, float]] = []  # last: sign
    for i, (kind, name) in enumerate(doc.rows):
        coeffs = entries.get(i, [])
        b_i = rhs[i]
        if i in range_val:
            r = range_val[i]
            if kind == "G":
                lo, hi = b_i, b_i + abs(r)
            elif kind == "L":
                lo, hi = b_i - abs(r), b_i
            else:   # E
                lo, hi = (b_i, b_i + r) if r >= 0 else (b_i + r, b_i)
            ge_rows.append((coeffs, lo, name, 1.0))
            ge_rows.append((coeffs, -hi, name + ":rng", -1.0))
        elif kind == "E":
            eq_rows.append((coeffs, b_i, name))
        elif kind == "G":
            ge_rows.append((coeffs, b_i, name, 1.0))
        else:   # L: negate into >= orientation
            ge_rows.append((coeffs, -b_i, name, -1.0))

    def build(rows, signed):
        rr, cc, vv = [], [], []
        bvec = np.zeros(len(rows))
        names = []
        for i, rec in enumerate(rows):
            coeffs, b_i, name = rec[0], rec[1], rec[2]
            sign = rec[3] if signed else 1.0
            for j, val in coeffs:
                rr.append(i)
                cc.append(j)
                vv.append(sign * val)
            bvec[i] = b_i
            names.append(name)
        mat = SparseMatrix.from_coo(rr, cc, vv, shape=(len(rows), n))
        return mat, bvec, names

    a_eq, b_eq, eq_names = build(eq_rows, signed=False)
    a_ineq, b_ineq, ge_names = build(ge_rows, signed=True)

    if doc.maximize:
        c = -c
        objective_constant = -objective_constant

    return LpProblem(
        a_eq=a_eq, a_ineq=a_ineq, b_eq=b_eq, b_ineq=b_ineq, c=c,
        lower=lower, upper=upper,
        objective_constant=objective_constant,
        objective_negated=doc.maximize,
        row_names=eq_names + ge_names,
        col_names=col_names,
    )


def parse_mps(text: str | bytes) -> LpProblem:
    """Parse MPS text into the standard minimization form."""
    return document_to_problem(read_document(text))


def load_mps(path) -> LpProblem:
    with open(path, "rb") as fh:
        return parse_mps(fh.read())


def _fmt(v: float) -> str:
    return format(v, ".17g")


def write_mps(problem: LpProblem, name: str = "LP") -> str:
    """Write the standard form back out; parse(write(p)) reproduces p."""
    p = problem
    rows = p.row_names if p.row_names and len(p.row_names) == p.m else \
        [f"EQ{i}" for i in range(p.m1)] + [f"GE{i}" for i in range(p.m2)]
    cols = p.col_names if p.col_names and len(p.col_names) == p.n else \
        [f"X{j}" for j in range(p.n)]
    sign = -1.0 if p.objective_negated else 1.0
    out = [f"NAME          {name}"]
    if p.objective_negated:
        out.append("OBJSENSE")
        out.append("    MAX")
    out.append("ROWS")
    out.append(" N  OBJ")
    for i in range(p.m1):
        out.append(f" E  {rows[i]}")
    for i in range(p.m2):
        out.append(f" G  {rows[p.m1 + i]}")

    # collect per-column entries from both blocks
    per_col: list[list[tuple[str, float]]] = [[] for _ in range(p.n)]
    for block, offset in ((p.a_eq, 0), (p.a_ineq, p.m1)):
        for i in range(block.nrows):
            for idx in range(block.row_offsets[i], block.row_offsets[i + 1]):
                per_col[block.col_indices[idx]].append(
                    (rows[offset + i], float(block.values[idx])))
    out.append("COLUMNS")
    for j in range(p.n):
        items = []
        if p.c[j] != 0.0:
            items.append(("OBJ", sign * float(p.c[j])))
        items.extend(per_col[j])
        if not items:
            # a column must appear at least once to be declared
            items.append(("OBJ", 0.0))
        for start in range(0, len(items), 2):
            chunk = items[start:start + 2]
            parts = "  ".join(f"{r}  {_fmt(v)}" for r, v in chunk)
            out.append(f"    {cols[j]}  {parts}")
    out.append("RHS")
    if p.objective_constant != 0.0:
        out.append(f"    RHS  OBJ  {_fmt(-sign * p.objective_constant)}")
    for i in range(p.m1):
        if p.b_eq[i] != 0.0:
            out.append(f"    RHS  {rows[i]}  {_fmt(float(p.b_eq[i]))}")
    for i in range(p.m2):
        if p.b_ineq[i] != 0.0:
            out.append(f"    RHS  {rows[p.m1 + i]}  {_fmt(float(p.b_ineq[i]))}")
    bound_lines = []
    for j in range(p.n):
        lo, up = p.lower[j], p.upper[j]
        if lo == 0.0 and np.isposinf(up):
            continue
        if lo == up:
            bound_lines.append(f" FX BND {cols[j]}  {_fmt(float(lo))}")
            continue
        if np.isneginf(lo) and np.isposinf(up):
            bound_lines.append(f" FR BND {cols[j]}")
            continue
        if np.isneginf(lo):
            bound_lines.append(f" MI BND {cols[j]}")
        elif lo != 0.0:
            bound_lines.append(f" LO BND {cols[j]}  {_fmt(float(lo))}")
        if not np.isposinf(up):
            bound_lines.append(f" UP BND {cols[j]}  {_fmt(float(up))}")
    if bound_lines:
        out.append("BOUNDS")
        out.extend(bound_lines)
    out.append("ENDATA")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class QapInstance:
    """Flow/distance matrices of a facility-assignment problem."""

    n: int
    flow: np.ndarray
    distance: np.ndarray

    def __post_init__(self):
        if self.flow.shape != (self.n, self.n) or self.distance.shape != (self.n, self.n):
            raise ValueError("flow and distance must be n x n")
        if not (np.all(np.isfinite(self.flow)) and np.all(np.isfinite(self.distance))):
            raise ValueError("matrices must be finite")

    def permutation_cost(self, perm) -> float:
        """Objective of one assignment: sum_ik flow[i,k] * distance[perm(i),perm(k)]."""
        perm = np.asarray(perm)
        return float(np.sum(self.flow * self.distance[np.ix_(perm, perm)]))

    def brute_force_best(self) -> float:
        from itertools import permutations
        return min(self.permutation_cost(p) for p in permutations(range(self.n)))


QAP_SIZE_LIMIT = 40   # n^4 linking variables; above this the LP will not fit


def generate_qap_lp(q: QapInstance, dedup_symmetry: bool = True) -> LpProblem:
    """Linearized assignment relaxation with linking variables s_ijkl.

    Variables: x_ij (n^2, bounds [0,1]) followed by s_ijkl (n^4, >= 0).
    Equality rows: sum_i s_ijkl = x_kl, sum_j s_ijkl = x_kl, the symmetry
    ties s_ijkl = s_klij, and the 2n assignment rows.  With
    ``dedup_symmetry`` each symmetry pair is emitted once and the vacuous
    diagonal rows are dropped; otherwise the full n^4 set is kept.
    """
    n = q.n
    if n < 2:
        raise ValueError("need n >= 2")
    if n > QAP_SIZE_LIMIT:
        raise ValueError(f"n={n} exceeds the size limit {QAP_SIZE_LIMIT}")
    nx = n * n
    ns = n ** 4

    def xid(i, j):
        return i * n + j

    def sid(i, j, k, l):
        return nx + ((i * n + j) * n + k) * n + l

    rr: list[int] = []
    cc: list[int] = []
    vv: list[float] = []
    row = 0

    def add(r, c_, v):
        rr.append(r)
        cc.append(c_)
        vv.append(v)

    # sum_i s_ijkl = x_kl for each (j,k,l)
    for j in range(n):
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    add(row, sid(i, j, k, l), 1.0)
                add(row, xid(k, l), -1.0)
                row += 1
    # sum_j s_ijkl = x_kl for each (i,k,l)
    for i in range(n):
        for k in range(n):
            for l in range(n):
                for j in range(n):
                    add(row, sid(i, j, k, l), 1.0)
                add(row, xid(k, l), -1.0)
                row += 1
    # symmetry rows
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    ij, kl = i * n + j, k * n + l
                    if dedup_symmetry:
                        if ij >= kl:
                            continue
                    elif ij == kl:
                        row += 1     # vacuous 0 = 0 row kept in the literal model
                        continue
                    add(row, sid(i, j, k, l), 1.0)
                    add(row, sid(k, l, i, j), -1.0)
                    row += 1
    # assignment rows
    rhs_start = row
    for i in range(n):
        for j in range(n):
            add(row, xid(i, j), 1.0)
        row += 1
    for j in range(n):
        for i in range(n):
            add(row, xid(i, j), 1.0)
        row += 1

    m1 = row
    b_eq = np.zeros(m1)
    b_eq[rhs_start:] = 1.0

    c = np.zeros(nx + ns)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    c[sid(i, j, k, l)] = q.flow[i, k] * q.distance[j, l]

    lower = np.zeros(nx + ns)
    upper = np.concatenate([np.ones(nx), np.full(ns, np.inf)])
    a_eq = SparseMatrix.from_coo(rr, cc, vv, shape=(m1, nx + ns))
    empty = SparseMatrix(row_offsets=np.zeros(1, dtype=np.int64),
                         col_indices=np.zeros(0, dtype=np.int64),
                         values=np.zeros(0), nrows=0, ncols=nx + ns)
    names = [f"X{i}_{j}" for i in range(n) for j in range(n)] + \
        [f"S{i}_{j}_{k}_{l}" for i in range(n) for j in range(n)
         for k in range(n) for l in range(n)]
    return LpProblem(a_eq=a_eq, a_ineq=empty, b_eq=b_eq, b_ineq=np.zeros(0),
                     c=c, lower=lower, upper=upper, col_names=names)


def generate_degenerate_lp(seed: int, m1: int = 4, m2: int = 4, n: int = 16
                           ) -> LpProblem:
    """Random LP with nearly flat solution geometry.

    Rows are strongly correlated and the planted optimum has tiny reduced
    costs and slacks, so plain splitting crawls near the solution while
    restarts and penalty adaptation pay off.  Used by the ablation suite.
    """
    rng = np.random.default_rng(seed)
    m = m1 + m2
    base = rng.normal(size=(3, n))
    a = np.zeros((m, n))
    for i in range(m):
        a[i] = rng.normal(scale=0.15, size=3) @ base + 0.05 * rng.normal(size=n)
    x = np.abs(rng.normal(size=n)) + 0.1
    at_bound = rng.uniform(size=n) < 0.5
    x[at_bound] = 0.0
    z = np.zeros(n)
    z[at_bound] = rng.uniform(1e-4, 1e-2, size=int(at_bound.sum()))
    y = np.zeros(m)
    y[:m1] = rng.normal(size=m1)
    active = rng.uniform(size=m2) < 0.7
    y[m1:][active] = rng.uniform(0.5, 1.5, size=int(active.sum()))
    ax = a @ x
    b = ax.copy()
    b[m1:][~active] -= rng.uniform(1e-4, 1e-2, size=int((~active).sum()))
    c = a.T @ y + z
    return LpProblem.from_dense(a[:m1], b[:m1], a[m1:], b[m1:], c,
                                np.zeros(n), np.full(n, np.inf))


def generate_known_solution_lp(seed: int, m1: int, m2: int, n: int,
                               density: float = 0.3
                               ) -> tuple[LpProblem, PrimalDualPoint]:
    """Random sparse LP with a planted optimal triple.

    Draws A, plants x* with a mix of interior and at-bound components,
    y* in the dual cone with complementary slackness against the
    inequality block, z* supported on active bounds with the right signs,
    then back-solves b and c.  The returned point satisfies the optimality
    system to machine precision.
    """
    if n < m1:
        raise ValueError("need n >= m1")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    if m1 + m2 < 1:
        raise ValueError("need at least one row")
    rng = np.random.default_rng(seed)
    m = m1 + m2
    per_row = max(1, int(round(density * n)))

    rr, cc, vv = [], [], []
    for i in range(m):
        for attempt in range(16):
            cols = rng.choice(n, size=min(per_row, n), replace=False)
            vals = rng.uniform(-2.0, 2.0, size=cols.size)
            vals[np.abs(vals) < 0.1] += np.sign(vals[np.abs(vals) < 0.1] + 0.5) * 0.5
            if np.any(vals != 0.0):
                break
        else:
            raise RuntimeError("could not draw a non-zero row")
        rr.extend([i] * cols.size)
        cc.extend(cols.tolist())
        vv.extend(vals.tolist())
    a = SparseMatrix.from_coo(rr, cc, vv, shape=(m, n))

    # bounds: mostly [0, inf), some boxes, a few free / upper-only
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    kinds = rng.choice(4, size=n, p=[0.6, 0.2, 0.1, 0.1])
    boxed = kinds == 1
    lower[boxed] = rng.uniform(-1.0, 0.5, size=int(boxed.sum()))
    upper[boxed] = lower[boxed] + rng.uniform(0.5, 2.0, size=int(boxed.sum()))
    free = kinds == 2
    lower[free] = -np.inf
    upper_only = kinds == 3
    lower[upper_only] = -np.inf
    upper[upper_only] = rng.uniform(0.0, 2.0, size=int(upper_only.sum()))

    # plant x*: at a finite bound with probability ~0.4, else interior
    x_star = np.empty(n)
    z_star = np.zeros(n)
    for j in range(n):
        lo, up = lower[j], upper[j]
        roll = rng.uniform()
        if roll < 0.2 and np.isfinite(lo):
            x_star[j] = lo
            z_star[j] = rng.uniform(0.3, 1.5)
        elif roll < 0.4 and np.isfinite(up):
            x_star[j] = up
            z_star[j] = -rng.uniform(0.3, 1.5)
        else:
            base_lo = lo if np.isfinite(lo) else -1.5
            base_up = up if np.isfinite(up) else base_lo + 3.0
            x_star[j] = rng.uniform(base_lo + 0.1, base_up - 0.1) \
                if base_up - base_lo > 0.2 else lo
            if x_star[j] == lo:
                z_star[j] = rng.uniform(0.3, 1.5)

    ax = a.apply(x_star)
    b_eq = ax[:m1].copy()
    b_ineq = np.empty(m2)
    y_star = np.zeros(m)
    y_star[:m1] = rng.normal(size=m1)
    for i in range(m2):
        if rng.uniform() < 0.5:
            y_star[m1 + i] = rng.uniform(0.3, 1.5)   # active row
            b_ineq[i] = ax[m1 + i]
        else:
            b_ineq[i] = ax[m1 + i] - rng.uniform(0.5, 2.0)   # slack row

    c = a.t_apply(y_star) + z_star
    a_eq = SparseMatrix.from_scipy(a._csr[:m1])
    a_ineq = SparseMatrix.from_scipy(a._csr[m1:])
    problem = LpProblem(a_eq=a_eq, a_ineq=a_ineq, b_eq=b_eq, b_ineq=b_ineq,
                        c=c, lower=lower, upper=upper)
    return problem, PrimalDualPoint(y=y_star, z=z_star, x=x_star)
