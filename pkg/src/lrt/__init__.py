"""Low-rank texture rectification with sGS-based ADMM solvers."""
from .geometry import (DegenerateInputError, DegenerateJacobianError, JacobianOperator,
                       OutOfBoundsError, Window, center_constraint, jacobian, normalize,
                       rotation_angle, rotation_params, warp)
from .outer import OuterConfig, RectifyResult, init_search, rectify
from .prox import (SvdFactors, numerical_rank, project_inf_ball, project_spectral_ball,
                   soft_threshold, svt, thin_svd)
from .solvers import (InnerProblem, KktResiduals, SolverConfig, SolverState,
                      adapt_sigma, kkt_residuals, sgs_proximal_form_step,
                      solve_direct_admm, solve_sgs_admm, solve_sgs_admm_g)

__version__ = "0.1.0"
