"""Linearize-and-solve loop for texture rectification."""
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .prox import numerical_rank
from .solvers import InnerProblem, SolverConfig, get_solver

RANK_TOL = 1e-6


class RectificationError(RuntimeError):
    """A round of the outer loop could not be carried out."""

    def __init__(self, message, round_index=None):
        super().__init__(message)
        self.round_index = round_index


@dataclass
class OuterConfig:
    inner_solver: str = "sgs"
    inner: SolverConfig = field(default_factory=SolverConfig)
    outer_tol: float = 1e-4
    max_outer: int = 30
    init_angles: list = None
    init_max_iter: int = 100
    lam: float = None

    def validate(self):
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        get_solver(self.inner_solver)
        self.inner.validate()
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be positive")
        return self


def default_lambda(window):
    return 1.0 / np.sqrt(window.width)


def default_init_angles(n=11, span_deg=25.0):
    return list(np.deg2rad(np.linspace(-span_deg, span_deg, n)))


@dataclass
class RoundSummary:
    round: int
    iterations: int
    wall_time: float
    rank: int
    e_l1: float
    eta: float
    objective: float
    converged: bool
    beta: np.ndarray
    tau: np.ndarray


@dataclass
class RectifyResult:
    tau_final: np.ndarray
    X_final: np.ndarray
    E_final: np.ndarray
    D_final: np.ndarray
    per_round: list
    total_time: float
    rounds: int
    stagnated: bool
    tau_initial: np.ndarray = None

    @property
    def objectives(self):
        return [r.objective for r in self.per_round]

    @property
    def converged(self):
        return self.stagnated and all(r.converged for r in self.per_round)


def build_problem(scene, tau, window, lam, A_t=None, Z=None):
    """Warp, normalize and linearize at ``tau``."""
    if A_t is None or Z is None:
        A_t, Z = geo.center_constraint(window)
    D, _ = geo.normalize(geo.warp(scene, tau, window))
    J = geo.jacobian(scene, tau, window, Z)
    return InnerProblem(D, J, lam, A_t)


def rectify(scene, window, cfg=None, tau0=None):
    """Estimate the affine transform that makes the window low-rank.

    Each round solves the linearized problem from a zero start and adds the
    lifted increment to ``tau``.  Stops once the objective changes by at most
    ``cfg.outer_tol`` between rounds, or after ``cfg.max_outer`` rounds.
    """
    cfg = (cfg or OuterConfig()).validate()
    scene = np.asarray(scene, dtype=float)
    lam = cfg.lam if cfg.lam is not None else default_lambda(window)
    solve = get_solver(cfg.inner_solver)
    A_t, Z = geo.center_constraint(window)
    t0 = time.perf_counter()

    if tau0 is not None:
        tau = geo.as_params(tau0).copy()
    elif cfg.init_angles is not None:
        tau = init_search(scene, window, cfg.init_angles, cfg)
    else:
        tau = geo.identity_params()
    tau_initial = tau.copy()

    rounds = []
    stagnated = False
    result = None
    problem = None
    for i in range(cfg.max_outer):
        try:
            problem = build_problem(scene, tau, window, lam, A_t, Z)
        except (geo.OutOfBoundsError, geo.DegenerateInputError,
                geo.DegenerateJacobianError) as exc:
            raise RectificationError(f"round {i + 1}: {exc}", i + 1) from exc
        result = solve(problem, cfg.inner)
        beta = result.state.dtau
        tau = tau + Z @ beta
        st = result.state
        rounds.append(RoundSummary(
            round=i + 1, iterations=result.iterations, wall_time=result.wall_time,
            rank=numerical_rank(st.X, RANK_TOL), e_l1=float(np.abs(st.E).sum()),
            eta=result.residuals.eta, objective=result.objective,
            converged=result.converged, beta=beta.copy(), tau=tau.copy()))
        if len(rounds) > 1 and abs(rounds[-1].objective - rounds[-2].objective) <= cfg.outer_tol:
            stagnated = True
            break
    return RectifyResult(tau_final=tau, X_final=result.state.X, E_final=result.state.E,
                         D_final=problem.D, per_round=rounds,
                         total_time=time.perf_counter() - t0, rounds=len(rounds),
                         stagnated=stagnated, tau_initial=tau_initial)


def evaluate_angle(scene, window, theta, cfg, lam):
    """Objective after a short inner solve at a pure rotation."""
    tau = geo.rotation_params(theta)
    problem = build_problem(scene, tau, window, lam)
    short = SolverConfig(xi=cfg.inner.xi, rho=cfg.inner.rho, tol=cfg.inner.tol,
                         max_iter=cfg.init_max_iter, adapt_every=cfg.inner.adapt_every)
    return get_solver(cfg.inner_solver)(problem, short).objective


def init_search(scene, window, angles, cfg=None):
    """Pick the rotation on a grid with the smallest short-solve objective."""
    cfg = cfg or OuterConfig()
    angles = list(angles)
    if not angles:
        raise ValueError("init_search needs at least one angle")
    lam = cfg.lam if cfg.lam is not None else default_lambda(window)
    scores = {}
    failures = []
    for theta in angles:
        try:
            scores[theta] = evaluate_angle(scene, window, theta, cfg, lam)
        except (geo.OutOfBoundsError, geo.DegenerateInputError,
                geo.DegenerateJacobianError) as exc:
            failures.append((theta, str(exc)))
    if not scores:
        raise RectificationError(
            "no initial angle is feasible: "
            + "; ".join(f"{np.rad2deg(t):.2f} deg ({msg})" for t, msg in failures))
    # ties resolve to the earliest grid entry
    best = min(scores, key=lambda t: (scores[t], angles.index(t)))
    return geo.rotation_params(best)
