"""Gaussian quadrature construction for the fractional kernel.

Builds m-point Gaussian rules for the constant weight and for the singular
weight c_H x^(-H-1/2), assembles the geometric (GG) and non-geometric (NGG)
panel rules, the uniform-partition rule (AE), and solves the panel-growth ODE
whose time-1 value fixes the NGG convergence constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp
from scipy.integrate import solve_ivp

from .errors import ConstructionError, DomainError, ExplosionError, PrecisionError
from .kernels import KernelSpec, QuadratureRule

__all__ = [
    "GGParams",
    "NGGParams",
    "rd",
    "gauss_legendre",
    "gauss_singular",
    "geometric_rule",
    "non_geometric_rule",
    "eta_ode",
    "eta_explosion_time",
    "ae_rule",
    "NGG_C0",
    "NGG_BETA0",
]

# Tuned defaults for the non-geometric rule: the pair solving the rate
# optimization constrained by the growth ODE, and the resulting exponent.
NGG_C0 = 3.60585021
NGG_BETA0 = 0.92993273


@dataclass(frozen=True)
class GGParams:
    """Parameters (alpha, beta, a, b) of the geometric rule."""

    alpha: float
    beta: float
    a: float
    b: float

    def __post_init__(self):
        if min(self.alpha, self.beta, self.a, self.b) <= 0.0:
            raise DomainError("GGParams entries must be positive")

    @classmethod
    def defaults(cls, T: float) -> "GGParams":
        return cls(alpha=math.log(3.0 + 2.0 * math.sqrt(2.0)), beta=1.0, a=4.0 / T, b=0.5 / T)


@dataclass(frozen=True)
class NGGParams:
    """Parameters (c, beta, a) of the non-geometric rule; requires c > 1."""

    c: float
    beta: float
    a: float

    def __post_init__(self):
        if self.c <= 1.0:
            raise DomainError(f"NGGParams requires c > 1, got {self.c}")
        if self.beta <= 0.0 or self.a <= 0.0:
            raise DomainError("NGGParams requires beta, a > 0")

    @classmethod
    def defaults(cls, T: float) -> "NGGParams":
        return cls(c=NGG_C0, beta=NGG_BETA0, a=3.0 / T)


def rd(x: float) -> int:
    """Round half-up to the nearest positive integer (minimum 1)."""
    return max(1, int(math.floor(x + 0.5)))


def gauss_legendre(m: int, a: float, b: float):
    """m-point Gauss-Legendre rule on [a, b] for the constant weight."""
    if not 1 <= m <= 64:
        raise DomainError(f"gauss_legendre level must lie in [1, 64], got {m}")
    if not b > a:
        raise DomainError(f"gauss_legendre needs b > a, got [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def _singular_moments(m: int, a, H, ctx):
    """Closed-form moments of c_H x^(-H-1/2) on [0, a], degrees 0..2m."""
    c_h = 1 / (ctx.gamma(H + ctx.mpf(1) / 2) * ctx.gamma(ctx.mpf(1) / 2 - H))
    return [c_h * a ** (k + ctx.mpf(1) / 2 - H) / (k + ctx.mpf(1) / 2 - H) for k in range(2 * m + 1)]


def _golub_welsch(moments, m, ctx):
    """Nodes/weights from raw moments via Hankel Cholesky and the Jacobi matrix."""
    hankel = ctx.matrix(m + 1, m + 1)
    for i in range(m + 1):
        for j in range(m + 1):
            hankel[i, j] = moments[i + j]
    lower = ctx.cholesky(hankel)
    r = lambda i, j: lower[j, i]  # upper factor of the moment matrix

    alpha = []
    for k in range(m):
        val = r(k, k + 1) / r(k, k)
        if k > 0:
            val -= r(k - 1, k) / r(k - 1, k - 1)
        alpha.append(val)
    beta = [(r(k, k) / r(k - 1, k - 1)) ** 2 for k in range(1, m)]

    jacobi = ctx.matrix(m, m)
    for k in range(m):
        jacobi[k, k] = alpha[k]
    for k in range(m - 1):
        off = ctx.sqrt(beta[k])
        jacobi[k, k + 1] = off
        jacobi[k + 1, k] = off
    eigvals, eigvecs = ctx.eigsy(jacobi)
    nodes = np.array([float(eigvals[i]) for i in range(m)])
    weights = np.array(
        [float(moments[0] * eigvecs[0, i] ** 2) for i in range(m)]
    )
    order = np.argsort(nodes)
    return nodes[order], weights[order]


def gauss_singular(m: int, a: float, H: float):
    """m-point Gaussian rule on [0, a] w.r.t. the weight c_H x^(-H-1/2).

    The moment-to-recurrence map is exponentially ill-conditioned, so the
    Hankel factorization runs in extended precision (8 + 4m digits, doubled
    once on failure) before rounding the rule to doubles.
    """
    if not (-0.5 < H <= 0.5):
        raise DomainError(f"H must lie in (-1/2, 1/2], got {H}")
    if not 1 <= m <= 32:
        raise DomainError(f"gauss_singular level must lie in [1, 32], got {m}")
    if not (a > 0.0 and math.isfinite(a)):
        raise DomainError(f"right endpoint must be positive, got {a}")
    if H == 0.5:
        # weight degenerates to the constant 1; plain Legendre on [0, a]
        return gauss_legendre(m, 0.0, a)

    for digits in (8 + 4 * m, 2 * (8 + 4 * m)):
        with mp.workdps(digits):
            moments = _singular_moments(m, mp.mpf(a), mp.mpf(H), mp)
            try:
                nodes, weights = _golub_welsch(moments, m, mp)
            except ZeroDivisionError:
                continue
        if (
            np.all(weights > 0.0)
            and np.all(nodes > 0.0)
            and np.all(nodes < a)
            and (m == 1 or np.all(np.diff(nodes) > 0.0))
        ):
            return nodes, weights
    raise PrecisionError(
        f"singular Gauss rule failed positivity at m={m}, a={a}, H={H}"
    )


def _panel_rule(spec: KernelSpec, xi: list[float], m: int) -> QuadratureRule:
    """Assemble the rule from panel edges xi[0]=0 < xi[1] < ... < xi[n].

    First panel uses the singular weight directly; the remaining panels use
    Legendre nodes with weights rescaled by c_H x^(-H-1/2).
    """
    c_h = spec.c_h
    parts = [gauss_singular(m, xi[1], spec.H)]
    for lo, hi in zip(xi[1:-1], xi[2:]):
        x, w = gauss_legendre(m, lo, hi)
        parts.append((x, c_h * w * x ** (-spec.H - 0.5)))
    return QuadratureRule.merge(parts)


def _levels(H: float, N: int, beta: float) -> tuple[int, int]:
    m = rd(beta * math.sqrt((0.5 + H) * N))
    n = rd(math.sqrt(N / (0.5 + H)) / beta)
    return m, n


def geometric_rule(
    H: float, T: float, N: int, params: GGParams | None = None
) -> QuadratureRule:
    """Geometric Gaussian rule: panel edges in geometric progression.

    The rule carries m*n nodes with m, n rounded from the node budget N;
    the actual count is len(rule), not necessarily N.
    """
    spec = KernelSpec(H, T)
    if N < 1:
        raise DomainError(f"node budget must be >= 1, got {N}")
    if H == 0.5:
        # constant kernel is represented exactly by a single zero-rate node
        return QuadratureRule([0.0], [1.0])
    params = params if params is not None else GGParams.defaults(T)
    m, n = _levels(H, N, params.beta)
    xi_n = params.b * math.exp(params.alpha * math.sqrt(N) / math.sqrt(0.5 + H))
    if params.a >= xi_n:
        raise ConstructionError(
            f"degenerate geometry: a={params.a} >= xi_n={xi_n} at N={N}"
        )
    xi = [0.0] + [params.a * (xi_n / params.a) ** (i / n) for i in range(1, n + 1)]
    return _panel_rule(spec, xi, m)


def non_geometric_rule(
    H: float, T: float, N: int, params: NGGParams | None = None
) -> QuadratureRule:
    """Non-geometric Gaussian rule: panel edges grown by the c-recursion."""
    spec = KernelSpec(H, T)
    if N < 1:
        raise DomainError(f"node budget must be >= 1, got {N}")
    if H == 0.5:
        return QuadratureRule([0.0], [1.0])
    params = params if params is not None else NGGParams.defaults(T)
    m, n = _levels(H, N, params.beta)
    exponent = (0.5 + H) / (2.0 * m)
    xi = [0.0, params.a]
    for i in range(1, n):
        s = xi[i] ** exponent
        if s >= params.c:
            raise ConstructionError(
                f"panel recursion undefined: xi_{i}^((1/2+H)/(2m)) = {s} >= c = {params.c}",
                index=i,
            )
        xi.append(((params.c + s) / (params.c - s)) ** 2 * xi[i])
    return _panel_rule(spec, xi, m)


# --------------------------------------------------------------------------
# Panel-growth ODE
# --------------------------------------------------------------------------


def _inverse_field(eta: float, c: float, beta: float) -> float:
    """1 / (d eta / dt); zero at the explosion boundary exp(eta/(2 beta^2)) = c."""
    u = math.exp(eta / (2.0 * beta * beta))
    if u >= c:
        return 0.0
    return 1.0 / (2.0 * math.log((c + u) / (c - u)))


def _integrate_eta(c: float, beta: float, t_stop: float | None):
    """Integrate t as a function of eta up to the boundary.

    Inverting the independent variable removes the singularity: dt/d(eta) is
    smooth, positive, and decays to zero at the boundary eta* = 2 beta^2 log c,
    so an explicit adaptive Runge-Kutta scheme covers the full range.  Returns
    (eta_at_t_stop or None, total_time_to_boundary).
    """
    eta_star = 2.0 * beta * beta * math.log(c)
    events = []
    if t_stop is not None:
        def hit(eta, t, _c=c, _b=beta):
            return t[0] - t_stop

        hit.terminal = True
        hit.direction = 1.0
        events.append(hit)
    sol = solve_ivp(
        lambda eta, t: [_inverse_field(eta, c, beta)],
        (0.0, eta_star * (1.0 - 1e-14)),
        [0.0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=events or None,
        dense_output=False,
    )
    if events and sol.t_events[0].size:
        return float(sol.t_events[0][0]), None
    return None, float(sol.y[0, -1])


def eta_explosion_time(c: float, beta: float) -> float:
    """Time at which the growth ODE reaches its boundary value."""
    if c <= 1.0:
        raise DomainError(f"eta ODE requires c > 1, got {c}")
    if beta <= 0.0:
        raise DomainError(f"eta ODE requires beta > 0, got {beta}")
    _, t0 = _integrate_eta(c, beta, None)
    return t0


def eta_ode(c: float, beta: float, t_end: float, boundary_slack: float = 1e-4) -> float:
    """Value eta(t_end) of deta/dt = 2 log(1 + 2e^(eta/(2b^2))/(c - e^(eta/(2b^2)))).

    eta grows monotonically from eta(0) = 0 and reaches the boundary value
    2 beta^2 log(c) at a finite time T0 with infinite slope.  Returns the
    value of the maximal solution at min(t_end, T0): for t_end within
    ``boundary_slack`` of T0 this is the boundary value itself (the tuned
    parameter pair sits exactly on that edge up to rounding of its published
    digits); for t_end beyond the slack an ExplosionError carrying the
    estimated T0 is raised.
    """
    if c <= 1.0:
        raise DomainError(f"eta ODE requires c > 1, got {c}")
    if beta <= 0.0:
        raise DomainError(f"eta ODE requires beta > 0, got {beta}")
    if t_end <= 0.0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    eta_at_t, t0 = _integrate_eta(c, beta, t_end)
    if eta_at_t is not None:
        return eta_at_t
    if t_end > t0 + boundary_slack:
        raise ExplosionError(
            f"eta ODE explodes at T0={t0:.12g} before t_end={t_end}", explosion_time=t0
        )
    return 2.0 * beta * beta * math.log(c)


# --------------------------------------------------------------------------
# Uniform-partition rule
# --------------------------------------------------------------------------


def _uniform_spacing(H: float, T: float, N: int) -> float:
    # Spacing of the uniform node partition, tuned as in Abi Jaber & El Euch,
    # SIAM J. Finan. Math. 10(2), 2019, Sec. 4.2.
    return N ** (-0.2) * (math.sqrt(5.0) * (1.0 - H) / (3.0 - H)) ** 0.4 / T


def ae_rule(H: float, T: float, N: int) -> QuadratureRule:
    """Uniform-partition rule: cell mass as weight, cell mean as node."""
    spec = KernelSpec(H, T)
    if N < 1:
        raise DomainError(f"node count must be >= 1, got {N}")
    if H == 0.5:
        return QuadratureRule([0.0], [1.0])
    c_h = spec.c_h
    g = 0.5 - H
    edges = _uniform_spacing(H, T, N) * np.arange(N + 1)
    mass = c_h * np.diff(edges**g) / g
    first_moment = c_h * np.diff(edges ** (g + 1.0)) / (g + 1.0)
    return QuadratureRule(first_moment / mass, mass)
