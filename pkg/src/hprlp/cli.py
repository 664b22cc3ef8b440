"""Command line front end: solve, bench, generators, verification checks.

Exit codes: 0 optimal, 1 usage or input errors, 2 iteration/time limit,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Variant
from .driver import SolveReport, SolveStatus, SolverConfig, solve
from .exact import max_trace_gap
from .mps import (MpsParseError, QapInstance, generate_known_solution_lp,
                  generate_qap_lp, load_mps, write_mps)
from .oracle import check_complexity_bound, OracleSolution

SCHEMA_VERSION = 1


def sgm10(times: list[float], limit: float, solved: list[bool],
          shift: float = 10.0) -> float:
    """Shifted geometric mean of solve times, computed in log space.

    Unsolved entries are charged at the time limit.
    """
    if not times:
        raise ValueError("need at least one time")
    if len(times) != len(solved):
        raise ValueError("times and solved flags must align")
    charged = [t if ok else limit for t, ok in zip(times, solved)]
    logs = [math.log(t + shift) for t in charged]
    return math.exp(sum(logs) / len(logs)) - shift


@dataclass
class BenchRun:
    """One benchmark sweep over a list of instances."""

    instances: list[str]
    reports: list[SolveReport | None]
    errors: list[str | None]
    tolerance: float
    time_limit: float

    @property
    def times(self) -> list[float]:
        return [r.timings.solve_seconds if r is not None else self.time_limit
                for r in self.reports]

    @property
    def solved_flags(self) -> list[bool]:
        return [r is not None and r.status is SolveStatus.OPTIMAL
                for r in self.reports]

    @property
    def sgm10_value(self) -> float:
        return sgm10(self.times, self.time_limit, self.solved_flags)

    @property
    def solved_count(self) -> int:
        return sum(self.solved_flags)

    @property
    def iteration_counts(self) -> list[int]:
        return [r.iterations if r is not None else 0 for r in self.reports]


def bench(paths: list[Path], cfg: SolverConfig, time_limit: float) -> BenchRun:
    """Solve every instance; per-instance failures are recorded, not raised."""
    if not paths:
        raise ValueError("no instances to run")
    reports: list[SolveReport | None] = []
    errors: list[str | None] = []
    for path in paths:
        try:
            problem = load_mps(path)
            reports.append(solve(problem, cfg))
            errors.append(None)
        except Exception as exc:   # keep the batch going
            reports.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
    return BenchRun(instances=[str(p) for p in paths], reports=reports,
                    errors=errors, tolerance=cfg.tolerance,
                    time_limit=time_limit)


CSV_COLUMNS = ["instance", "status", "iterations", "restarts", "solve_seconds",
               "primal_objective", "dual_objective", "primal_infeas_rel",
               "dual_infeas_rel", "gap_rel"]


def write_bench_csv(run: BenchRun, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for name, report, err in zip(run.instances, run.reports, run.errors):
            if report is None:
                writer.writerow([name, f"Error({err})"] + [""] * 8)
                continue
            writer.writerow([
                name, report.status.value, report.iterations, report.restarts,
                repr(report.timings.solve_seconds),
                repr(report.primal_objective), repr(report.dual_objective),
                repr(report.kkt.primal_infeas_rel),
                repr(report.kkt.dual_infeas_rel), repr(report.kkt.gap_rel),
            ])


def bench_summary(runs: dict[str, BenchRun]) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "variants": {}}
    for label, run in runs.items():
        out["variants"][label] = {
            "tolerance": run.tolerance,
            "time_limit": run.time_limit,
            "sgm10": run.sgm10_value,
            "solved": run.solved_count,
            "total": len(run.instances),
            "median_iterations": statistics.median(run.iteration_counts)
            if run.iteration_counts else 0,
            "per_instance": [
                {
                    "instance": name,
                    "status": r.status.value if r else f"Error({err})",
                    "iterations": r.iterations if r else None,
                    "restarts": r.restarts if r else None,
                    "solve_seconds": r.timings.solve_seconds if r else None,
                }
                for name, r, err in zip(run.instances, run.reports, run.errors)
            ],
        }
    return out


def _read_matrix(path: Path, n: int) -> np.ndarray:
    mat = np.loadtxt(path, dtype=np.float64)
    mat = np.atleast_2d(mat)
    if mat.shape != (n, n):
        raise ValueError(f"{path}: expected a {n} x {n} matrix, got {mat.shape}")
    return mat


def _exit_code(status: SolveStatus) -> int:
    if status is SolveStatus.OPTIMAL:
        return 0
    if status is SolveStatus.NUMERICAL_ERROR:
        return 3
    return 2


def _config_from_args(args) -> SolverConfig:
    kwargs = dict(
        tolerance=float(args.tol),
        variant=args.variant,
        check_interval=args.check_interval,
        sigma0=args.sigma0,
        termination_space=args.termination_space,
        max_iterations=args.max_iterations,
    )
    if args.time_limit is not None:
        kwargs["time_limit_seconds"] = args.time_limit
    if args.no_scaling:
        kwargs.update(ruiz_iters=0, pock_chambolle=False, bc_normalize=False)
    return SolverConfig(**kwargs)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", choices=["1e-4", "1e-6", "1e-8"], default="1e-8")
    p.add_argument("--time-limit", type=float, default=None, metavar="S")
    p.add_argument("--variant", choices=[v.value for v in Variant],
                   default="hpr")
    p.add_argument("--check-interval", type=int, default=150, metavar="N")
    p.add_argument("--sigma0", type=float, default=1.0, metavar="V")
    p.add_argument("--max-iterations", type=int, default=1_000_000)
    p.add_argument("--no-scaling", action="store_true")
    p.add_argument("--termination-space", choices=["original", "scaled"],
                   default="original")


def cmd_solve(args) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return 1
    try:
        problem = load_mps(path)
    except MpsParseError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 1
    report = solve(problem, _config_from_args(args))
    payload = report.to_json_dict(include_solution=not args.no_solution)
    payload["instance"] = str(path)
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    else:
        summary = {k: payload[k] for k in
                   ("status", "primal_objective", "dual_objective",
                    "iterations", "restarts")}
        summary["solve_seconds"] = report.timings.solve_seconds
        print(json.dumps(summary, indent=2))
    return _exit_code(report.status)


def cmd_bench(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        print(f"error: not a directory: {root}", file=sys.stderr)
        return 1
    paths = sorted(root.glob("*.mps"))
    if not paths:
        print(f"error: no .mps instances in {root}", file=sys.stderr)
        return 1
    time_limit = args.time_limit if args.time_limit is not None else math.inf
    variants = [v.strip() for v in args.variants.split(",")] if args.variants \
        else [args.variant]
    runs: dict[str, BenchRun] = {}
    for label in variants:
        ns = argparse.Namespace(**vars(args))
        ns.variant = label
        cfg = _config_from_args(ns)
        runs[label] = bench(paths, cfg, time_limit)
    for label, run in runs.items():
        suffix = f".{label}" if len(runs) > 1 else ""
        if args.csv:
            base = Path(args.csv)
            write_bench_csv(run, base.with_name(base.stem + suffix + base.suffix))
    summary = bench_summary(runs)
    text = json.dumps(summary, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print("variant  sgm10  solved/total")
    for label, run in runs.items():
        print(f"{label:9s} {run.sgm10_value:10.4f}  {run.solved_count}/{len(run.instances)}")
    return 0


def cmd_gen_qap(args) -> int:
    n = args.n
    rng = np.random.default_rng(args.seed)
    if args.flow:
        flow = _read_matrix(Path(args.flow), n)
    else:
        flow = np.round(rng.uniform(0.0, 10.0, size=(n, n)), 1)
        np.fill_diagonal(flow, 0.0)
    if args.dist:
        dist = _read_matrix(Path(args.dist), n)
    else:
        dist = np.round(rng.uniform(0.0, 10.0, size=(n, n)), 1)
        np.fill_diagonal(dist, 0.0)
    problem = generate_qap_lp(QapInstance(n=n, flow=flow, distance=dist),
                              dedup_symmetry=not args.literal_symmetry)
    Path(args.out).write_text(write_mps(problem, name=f"QAP{n}"))
    print(f"wrote {args.out}: {problem.m1} equality rows, {problem.n} variables")
    return 0


def cmd_gen_known(args) -> int:
    problem, point = generate_known_solution_lp(
        seed=args.seed, m1=args.m1, m2=args.m2, n=args.n, density=args.density)
    Path(args.out).write_text(write_mps(problem, name=f"KNOWN{args.seed}"))
    if args.solution:
        payload = {
            "x_star": point.x.tolist(),
            "y_star": point.y.tolist(),
            "z_star": point.z.tolist(),
            "objective": float(problem.c @ point.x) + problem.objective_constant,
        }
        Path(args.solution).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {args.out}: m1={args.m1} m2={args.m2} n={args.n}")
    return 0


def cmd_verify_appendix(args) -> int:
    rng = np.random.default_rng(args.seed)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    worst = 0.0
    for idx in range(args.instances):
        m1 = int(rng.integers(2, 5))
        n = int(rng.integers(2 * m1, 3 * m1 + 2))
        problem, _ = generate_known_solution_lp(seed=args.seed + 1000 + idx,
                                                m1=m1, m2=0, n=n, density=0.8)
        for sigma in sigmas:
            worst = max(worst, max_trace_gap(problem, sigma, args.iters))
    print(f"max componentwise trace gap over {args.instances} instances "
          f"x {len(sigmas)} penalties: {worst:.3e}")
    return 0 if worst <= args.threshold else 2


def cmd_verify_bounds(args) -> int:
    worst_fp = 0.0
    worst_kkt = 0.0
    obj_ok = True
    details = []
    for idx in range(args.instances):
        problem, point = generate_known_solution_lp(
            seed=args.seed + idx, m1=2 + idx % 3, m2=1 + idx % 2,
            n=6 + idx, density=0.6)
        oracle = OracleSolution(x_star=point.x, y_star=point.y,
                                z_star=point.z,
                                value=float(problem.c @ point.x),
                                source="Construction")
        rep = check_complexity_bound(problem, oracle, iters=args.iters,
                                     sigma=args.sigma)
        worst_fp = max(worst_fp, rep.max_fixed_point_ratio)
        worst_kkt = max(worst_kkt, rep.max_kkt_ratio)
        obj_ok = obj_ok and rep.objective_within_bounds
        details.append({"instance": idx, "max_fixed_point_ratio": rep.max_fixed_point_ratio,
                        "max_kkt_ratio": rep.max_kkt_ratio,
                        "objective_within_bounds": rep.objective_within_bounds})
    payload = {"schema_version": SCHEMA_VERSION,
               "max_fixed_point_ratio": worst_fp,
               "max_kkt_ratio": worst_kkt,
               "objective_within_bounds": obj_ok,
               "instances": details}
    text = json.dumps(payload, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    limit = 1.0 + 1e-6
    return 0 if (worst_fp <= limit and worst_kkt <= limit and obj_ok) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hprlp",
        description="Restarted Halpern Peaceman-Rachford LP solver (CPU)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one MPS instance")
    p.add_argument("file")
    _add_solver_flags(p)
    p.add_argument("--json", metavar="OUT", help="write the full report as JSON")
    p.add_argument("--no-solution", action="store_true",
                   help="omit solution vectors from the JSON report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="solve a directory of MPS instances")
    p.add_argument("dir")
    _add_solver_flags(p)
    p.add_argument("--variants", metavar="LIST",
                   help="comma list (dr,hdr-fixed,hdr,hpr) for an ablation sweep")
    p.add_argument("--csv", metavar="OUT")
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-qap", help="write a linearized assignment LP")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--flow", metavar="FILE", help="whitespace matrix file")
    p.add_argument("--dist", metavar="FILE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--literal-symmetry", action="store_true",
                   help="keep the full redundant symmetry row set")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_qap)

    p = sub.add_parser("gen-known", help="write a random LP with planted optimum")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.add_argument("--solution", metavar="OUT", help="also write the planted triple")
    p.set_defaults(func=cmd_gen_known)

    p = sub.add_parser("verify-appendix",
                       help="compare the two no-proximal formulations' traces")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigmas", default="0.37,1.0,2.5")
    p.add_argument("--threshold", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify_appendix)

    p = sub.add_parser("verify-bounds",
                       help="check the proven per-iteration decay bounds")
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--json", metavar="OUT")
    p.set_defaults(func=cmd_verify_bounds)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (MpsParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
