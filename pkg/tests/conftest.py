import numpy as np
import pytest

from hprlp import LpProblem


@pytest.fixture
def one_d_problem() -> LpProblem:
    """min x s.t. x = 1, x >= 0; optimum (x, y, z) = (1, 1, 0)."""
    return LpProblem.from_dense([[1.0]], [1.0], None, None, [1.0])


def bounded_tiny_lp(seed: int, n: int = 4, m1: int = 1, m2: int = 2) -> LpProblem:
    """Random LP over a finite box, feasible by construction (and hence
    bounded), small enough for exhaustive vertex enumeration."""
    rng = np.random.default_rng(seed)
    lower = rng.uniform(-2.0, 0.0, size=n)
    upper = lower + rng.uniform(1.0, 3.0, size=n)
    a = rng.uniform(-2.0, 2.0, size=(m1 + m2, n))
    a[np.abs(a) < 0.3] += 0.5
    x0 = rng.uniform(lower + 0.1, upper - 0.1)
    b_eq = a[:m1] @ x0
    b_ineq = a[m1:] @ x0 - rng.uniform(0.2, 1.0, size=m2)
    c = rng.uniform(-1.5, 1.5, size=n)
    return LpProblem.from_dense(a[:m1], b_eq, a[m1:], b_ineq, c, lower, upper)


TINY2_MPS = """NAME          TINY2
ROWS
 N  COST
 E  C1
 G  C2
COLUMNS
    X1  COST  1.0  C1  1.0
    X1  C2    1.0
    X2  COST  2.0  C1  1.0
RHS
    RHS  C1  1.0
ENDATA
"""

TINY1_MPS = """NAME TINY1
ROWS
 N OBJ
 E R1
COLUMNS
 X OBJ 1.0 R1 1.0
RHS
 RHS R1 1.0
ENDATA
"""
