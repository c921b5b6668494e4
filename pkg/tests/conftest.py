import numpy as np
import pytest

from ma2d import grid, oracle, solver

DATA = __file__.rsplit("/", 1)[0] + "/data"


@pytest.fixture(scope="session")
def dual_profile_8():
    return oracle.RadialProfile(alpha=1 / 8, kind="dual_translator")


@pytest.fixture(scope="session")
def primal_profile_8():
    return oracle.RadialProfile(alpha=1 / 8, kind="primal_translator")


@pytest.fixture(scope="session")
def solved_dual_disk8(dual_profile_8):
    """The big dual-equation solve shared by several acceptance criteria.

    Returns (problem, report, solve_seconds); the wall time is charged to
    the verify-dual acceptance budget.
    """
    import time

    dom = grid.Domain2D.disk(8.0)
    rhs = grid.RhsField("dual_translator", alpha=1 / 8, eta=1.0)
    t0 = time.perf_counter()
    problem = solver.build_problem(dom, 0.125, rhs, dual_profile_8)
    report = solver.solve(problem, tol=1e-6)
    return problem, report, time.perf_counter() - t0


def quadratic(p):
    p = np.atleast_2d(p)
    return 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
