"""ADMM variants for the linearized rectification subproblem

    min ||X||_* + lam ||E||_1   s.t.   D + J(dtau) = X + E

where ``D`` is the normalized warped window and ``J`` the reduced Jacobian.
Three schemes share the same closed-form block updates:

* ``solve_direct_admm``  -- Gauss-Seidel sweep X -> dtau -> E, then Y.
* ``solve_sgs_admm``     -- symmetric sweep X -> dtau -> E -> dtau, then Y.
* ``solve_sgs_admm_g``   -- the symmetric sweep wrapped in a relaxation
  step on the whole iterate (generalized ADMM).

``sgs_proximal_form_step`` computes the (E, dtau) update of the symmetric
sweep a second way, as the minimizer of the augmented Lagrangian plus the
semi-proximal term ``sigma/2 ||E - E_k||_T^2`` with ``T = J (J*J)^-1 J*``.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from .prox import (nuclear_norm, project_inf_ball, project_spectral_ball,
                   soft_threshold, svt)

GOLDEN = (1 + np.sqrt(5)) / 2
BLOWUP = 1e12


class DivergenceError(RuntimeError):
    """An iterate became non-finite or exploded."""


@dataclass(frozen=True)
class InnerProblem:
    D: np.ndarray
    J: object
    lam: float
    A_t: np.ndarray = None

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        object.__setattr__(self, "D", D)
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam!r}")
        if D.shape != self.J.shape:
            raise ValueError(f"data shape {D.shape} != Jacobian shape {self.J.shape}")
        nrm = np.linalg.norm(D)
        # an all-zero problem is allowed as a degenerate test case
        if nrm > 0 and abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"D must have unit Frobenius norm, got {nrm!r}")

    @property
    def d_norm(self):
        return float(np.linalg.norm(self.D))


@dataclass
class SolverState:
    X: np.ndarray
    E: np.ndarray
    dtau: np.ndarray
    Y: np.ndarray
    sigma: float
    shadow: "SolverState" = None

    @classmethod
    def zeros(cls, shape, q, sigma):
        z = np.zeros(shape)
        return cls(z, z.copy(), np.zeros(q), z.copy(), sigma)

    def copy(self):
        return SolverState(self.X.copy(), self.E.copy(), self.dtau.copy(),
                           self.Y.copy(), self.sigma,
                           None if self.shadow is None else self.shadow.copy())

    def arrays(self):
        return (self.X, self.E, self.dtau, self.Y)


@dataclass(frozen=True)
class KktResiduals:
    eta_P: float
    eta_D: float
    eta_X: float
    eta_E: float

    @property
    def eta(self):
        return max(self.eta_P, self.eta_D, self.eta_X, self.eta_E)


@dataclass
class SolverConfig:
    xi: float = 1.618
    rho: float = 1.8
    tol: float = 1e-3
    max_iter: int = 1000
    adapt_every: int = 10
    sigma0: float = None

    def validate(self):
        if not 0 < self.xi < GOLDEN:
            raise ValueError(f"xi must lie in (0, (1+sqrt 5)/2), got {self.xi}")
        if not 0 < self.rho < 2:
            raise ValueError(f"rho must lie in (0, 2), got {self.rho}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.adapt_every < 0:
            raise ValueError("adapt_every must be nonnegative (0 disables)")
        return self


@dataclass
class InnerResult:
    state: SolverState
    iterations: int
    objective: float
    residuals: KktResiduals
    wall_time: float
    converged: bool
    solver: str = ""
    sigma_trace: list = field(default_factory=list)


# ---------------------------------------------------------------- block steps

def step_X(state, problem):
    s = state.sigma
    arg = problem.D + problem.J.apply(state.dtau) - state.E + state.Y / s
    return svt(arg, 1.0 / s)


def step_dtau(state, problem, E_used):
    s = state.sigma
    r = problem.D - state.X - E_used + state.Y / s
    return -problem.J.gram_solve(problem.J.adjoint(r))


def step_E(state, problem, dtau_used):
    s = state.sigma
    arg = problem.D + problem.J.apply(dtau_used) - state.X + state.Y / s
    return soft_threshold(arg, problem.lam / s)


def primal_residual(problem, X, E, dtau):
    return problem.D + problem.J.apply(dtau) - X - E


# ---------------------------------------------------------------- residuals

def _cheap_residuals(state, problem, A_t=None, dtau_full=None):
    J = problem.J
    X, E, Y = state.X, state.E, state.Y
    dn = problem.d_norm or 1.0
    eta_P = np.linalg.norm(primal_residual(problem, X, E, state.dtau)) / dn
    A_t = problem.A_t if A_t is None else A_t
    if A_t is not None:
        if dtau_full is None:
            dtau_full = J.full_increment(state.dtau)
        eta_P = max(eta_P, float(np.max(np.abs(A_t @ dtau_full))))
    eta_D = float(np.linalg.norm(J.adjoint(Y)))
    eta_E = (np.linalg.norm(Y - project_inf_ball(Y + E, problem.lam))
             / (1 + np.linalg.norm(Y) + np.linalg.norm(E)))
    return float(eta_P), eta_D, float(eta_E)


def _eta_X(state):
    X, Y = state.X, state.Y
    return float(np.linalg.norm(Y - project_spectral_ball(Y + X, 1.0))
                 / (1 + np.linalg.norm(Y) + np.linalg.norm(X)))


def kkt_residuals(state, problem, A_t=None, dtau_full=None):
    """Relative KKT residuals of a candidate (X, E, dtau; Y).

    ``A_t`` (2x6) and ``dtau_full`` (6-vector) default to the problem's
    constraint and the lifted reduced increment.
    """
    eta_P, eta_D, eta_E = _cheap_residuals(state, problem, A_t, dtau_full)
    return KktResiduals(eta_P, eta_D, _eta_X(state), eta_E)


def adapt_sigma(sigma, eta_P, eta_D):
    """Grow the penalty when primal lags dual, shrink it in the opposite case."""
    ratio = np.inf if eta_D == 0 else eta_P / eta_D
    if ratio >= 5:
        return 1.25 * sigma
    if ratio <= 0.2:
        return 0.8 * sigma
    return sigma


# ---------------------------------------------------------------- iterations

def direct_iteration(state, problem, xi):
    new = state.copy()
    new.X = step_X(new, problem)
    new.dtau = step_dtau(new, problem, new.E)
    new.E = step_E(new, problem, new.dtau)
    new.Y = state.Y + xi * state.sigma * primal_residual(problem, new.X, new.E, new.dtau)
    return new


def sgs_iteration(state, problem, xi):
    new = state.copy()
    new.X = step_X(new, problem)
    half = step_dtau(new, problem, new.E)
    new.E = step_E(new, problem, half)
    new.dtau = step_dtau(new, problem, new.E)
    new.Y = state.Y + xi * state.sigma * primal_residual(problem, new.X, new.E, new.dtau)
    return new


def sgs_proximal_form_step(state, problem, config):
    """One step of the two-block semi-proximal ADMM.

    After the X-step, ``(E, dtau)`` jointly minimize

        L_sigma(X, E, dtau; Y) + sigma/2 <E - E_k, P (E - E_k)>

    with ``P = J (J*J)^-1 J*``.  Minimizing out ``dtau`` first leaves
    ``lam ||E||_1 + sigma/2 (||(I-P)(E - R)||^2 + ||P (E - E_k)||^2)``, whose
    two pieces live in orthogonal subspaces, so ``E`` is one soft-threshold of
    ``(I-P) R + P E_k`` with ``R = D - X + Y/sigma``.
    """
    s = state.sigma
    J = problem.J
    new = state.copy()
    new.X = svt(problem.D + J.apply(state.dtau) - state.E + state.Y / s, 1.0 / s)
    R = problem.D - new.X + state.Y / s
    target = R - J.project(R) + J.project(state.E)
    new.E = soft_threshold(target, problem.lam / s)
    new.dtau = -J.gram_solve(J.adjoint(R - new.E))
    new.Y = state.Y + config.xi * s * (problem.D + J.apply(new.dtau) - new.X - new.E)
    return new


def sgs_g_iteration(state, problem, rho):
    """Generalized variant: sweep from the shadow point, then relax."""
    sh = state.shadow
    s = state.sigma
    work = SolverState(sh.X, sh.E, sh.dtau, sh.Y, s)
    half = step_dtau(work, problem, sh.E)
    E = step_E(work, problem, half)
    dtau = step_dtau(work, problem, E)
    Y = sh.Y + s * primal_residual(problem, sh.X, E, dtau)
    X = svt(problem.D + problem.J.apply(dtau) - E + Y / s, 1.0 / s)
    new = SolverState(X, E, dtau, Y, s)
    new.shadow = SolverState(sh.X + rho * (X - sh.X), sh.E + rho * (E - sh.E),
                             sh.dtau + rho * (dtau - sh.dtau),
                             sh.Y + rho * (Y - sh.Y), s)
    return new


# ---------------------------------------------------------------- drivers

def _check_finite(state, k):
    for name, a in zip("X E dtau Y".split(), state.arrays()):
        if not np.all(np.isfinite(a)) or np.max(np.abs(a), initial=0.0) > BLOWUP:
            raise DivergenceError(f"{name} diverged at inner iteration {k}")


def objective(state, problem):
    return nuclear_norm(state.X) + problem.lam * float(np.abs(state.E).sum())


def initial_state(problem, config, with_shadow=False):
    sigma = config.sigma0
    if sigma is None:
        dn = problem.d_norm
        sigma = 1.0 / dn if dn > 0 else 1.0
    st = SolverState.zeros(problem.D.shape, problem.J.q, sigma)
    if with_shadow:
        st.shadow = SolverState.zeros(problem.D.shape, problem.J.q, sigma)
    return st


def _run(name, problem, config, iterate, state):
    config.validate()
    t0 = time.perf_counter()
    sigmas = [state.sigma]
    converged = False
    res = None
    k = 0
    for k in range(1, config.max_iter + 1):
        state = iterate(state)
        _check_finite(state, k)
        eta_P, eta_D, eta_E = _cheap_residuals(state, problem)
        # the spectral residual costs an SVD; only pay for it when it decides
        if max(eta_P, eta_D, eta_E) < config.tol:
            res = KktResiduals(eta_P, eta_D, _eta_X(state), eta_E)
            if res.eta < config.tol:
                converged = True
                break
        if config.adapt_every and k % config.adapt_every == 0:
            sigma = adapt_sigma(state.sigma, eta_P, eta_D)
            if sigma != state.sigma:
                state.sigma = sigma
                if state.shadow is not None:
                    state.shadow.sigma = sigma
                sigmas.append(sigma)
    if not converged:
        res = kkt_residuals(state, problem)
    return InnerResult(state=state, iterations=k, objective=objective(state, problem),
                       residuals=res, wall_time=time.perf_counter() - t0,
                       converged=converged, solver=name, sigma_trace=sigmas)


def solve_direct_admm(problem, config=None, state=None):
    config = config or SolverConfig()
    state = state or initial_state(problem, config)
    return _run("direct", problem, config,
                lambda st: direct_iteration(st, problem, config.xi), state)


def solve_sgs_admm(problem, config=None, state=None):
    config = config or SolverConfig()
    state = state or initial_state(problem, config)
    return _run("sgs", problem, config,
                lambda st: sgs_iteration(st, problem, config.xi), state)


def solve_sgs_admm_g(problem, config=None, state=None):
    config = config or SolverConfig()
    state = state or initial_state(problem, config, with_shadow=True)
    if state.shadow is None:
        raise ValueError("generalized variant needs a shadow state")
    return _run("sgs_g", problem, config,
                lambda st: sgs_g_iteration(st, problem, config.rho), state)


SOLVERS = {
    "direct": solve_direct_admm,
    "sgs": solve_sgs_admm,
    "sgs_g": solve_sgs_admm_g,
}


def get_solver(name):
    key = name.replace("-", "_")
    try:
        return SOLVERS[key]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from "
                         f"{', '.join(SOLVERS)}") from None
