import numpy as np
import pytest

from lrt import geometry as geo

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def smooth_scene(rng, size=40, terms=4):
    """Random sum of low-frequency sinusoids, strictly positive."""
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    img = np.full((size, size), 2.0 + terms)
    for _ in range(terms):
        fx, fy = rng.uniform(-0.35, 0.35, size=2)
        img += rng.uniform(0.3, 1.0) * np.cos(fx * xx + fy * yy + rng.uniform(0, 2 * np.pi))
    return img


def make_inner_problem(rng, size=16, lam=None):
    """Normalized window of a smooth scene with its Jacobian."""
    from lrt.solvers import InnerProblem
    scene = smooth_scene(rng, size + 8)
    win = geo.Window(4, 4, size, size)
    A_t, Z = geo.center_constraint(win)
    D, _ = geo.normalize(geo.warp(scene, np.zeros(6), win))
    J = geo.jacobian(scene, np.zeros(6), win, Z)
    return InnerProblem(D, J, lam or 1 / np.sqrt(size), A_t)


def random_state(rng, problem, sigma=None):
    from lrt.solvers import SolverState
    shape, q = problem.D.shape, problem.J.q
    return SolverState(0.1 * rng.standard_normal(shape), 0.05 * rng.standard_normal(shape),
                       0.01 * rng.standard_normal(q), 0.1 * rng.standard_normal(shape),
                       sigma if sigma is not None else float(rng.uniform(0.5, 5.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
