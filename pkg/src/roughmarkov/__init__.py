"""Sum-of-exponentials kernel approximations and rough Heston Fourier pricing."""

from .errors import (
    AccuracyError,
    ConstructionError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    ExplosionError,
    PrecisionError,
    RoughMarkovError,
)
from .kernels import (
    ErrorReport,
    KernelSpec,
    QuadratureRule,
    eval_K,
    eval_KN,
    l1_error_intersections,
    l1_error_lower_biased,
    l2_error,
)
from .quadrature import (
    GGParams,
    NGGParams,
    ae_rule,
    eta_explosion_time,
    eta_ode,
    gauss_legendre,
    gauss_singular,
    geometric_rule,
    non_geometric_rule,
)
from .special import bs_call_price, gamma, implied_vol, lower_incomplete_gamma

__version__ = "0.1.0"
