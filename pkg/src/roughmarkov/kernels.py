"""Fractional kernel, sum-of-exponentials approximations, and error metrics.

The kernel is K(t) = t^(H-1/2) / Gamma(H+1/2) on [0, T].  Approximations are
K^N(t) = sum_i w_i exp(-x_i t) with nonnegative nodes and weights.  This module
evaluates both and measures their distance in L1 (exact formula for
lower-biased rules, crossing-tracking algorithm in general) and in L2
(closed form, H > 0 only).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError
from .special import gamma, lower_incomplete_gamma

__all__ = [
    "KernelSpec",
    "QuadratureRule",
    "ErrorReport",
    "eval_K",
    "eval_KN",
    "l1_error_lower_biased",
    "l1_error_intersections",
    "l2_error",
]


@dataclass(frozen=True)
class KernelSpec:
    """Hurst parameter H and horizon T identifying the kernel on [0, T]."""

    H: float
    T: float

    def __post_init__(self):
        if not (-0.5 < self.H <= 0.5):
            raise DomainError(f"H must lie in (-1/2, 1/2], got {self.H}")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise DomainError(f"T must be positive and finite, got {self.T}")

    @property
    def alpha(self) -> float:
        """Integrability exponent H + 1/2 of the kernel."""
        return self.H + 0.5

    @property
    def c_h(self) -> float:
        """Density constant of the node measure; undefined at H = 1/2."""
        if self.H == 0.5:
            raise DomainError("c_H has a Gamma(0) pole at H = 1/2")
        return 1.0 / (gamma(self.H + 0.5) * gamma(0.5 - self.H))

    @property
    def l1_norm(self) -> float:
        """Integral of K over [0, T]."""
        return self.T ** (self.H + 0.5) / gamma(self.H + 1.5)


class QuadratureRule:
    """Nonnegative nodes and weights defining K^N(t) = sum w_i exp(-x_i t).

    Immutable after construction; the empty rule (K^N = 0) is allowed.
    """

    __slots__ = ("nodes", "weights")

    def __init__(self, nodes, weights):
        nodes = np.atleast_1d(np.asarray(nodes, dtype=float))
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if nodes.size == 0:
            nodes = np.empty(0)
            weights = np.empty(0)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise DomainError("nodes and weights must be finite")
        if np.any(nodes < 0.0) or np.any(weights < 0.0):
            raise DomainError("nodes and weights must be nonnegative")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0.0):
            raise DomainError("nodes must be strictly increasing")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("QuadratureRule is immutable")

    def __len__(self) -> int:
        return self.nodes.size

    def __repr__(self) -> str:
        return f"QuadratureRule(n={len(self)}, max_node={self.max_node():.6g})"

    def __eq__(self, other):
        if not isinstance(other, QuadratureRule):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(
            self.weights, other.weights
        )

    def max_node(self) -> float:
        return float(self.nodes[-1]) if len(self) else 0.0

    @staticmethod
    def merge(parts) -> "QuadratureRule":
        """Concatenate (nodes, weights) pairs and sort by node."""
        nodes = np.concatenate([np.atleast_1d(p[0]) for p in parts])
        weights = np.concatenate([np.atleast_1d(p[1]) for p in parts])
        order = np.argsort(nodes)
        return QuadratureRule(nodes[order], weights[order])

    # --- JSON interchange format used by the CLI and the optimizers ---

    def to_json(self, spec: KernelSpec) -> str:
        doc = {
            "H": spec.H,
            "T": spec.T,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> tuple[KernelSpec, "QuadratureRule"]:
        doc = json.loads(text)
        spec = KernelSpec(float(doc["H"]), float(doc["T"]))
        return spec, QuadratureRule(doc["nodes"], doc["weights"])


@dataclass(frozen=True)
class ErrorReport:
    """Result of the crossing-tracking L1 computation."""

    absolute_l1: float
    relative_l1: float
    crossings: tuple[float, ...]
    kernel_evaluations: int
    tolerance_used: float

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.crossings, self.crossings[1:])):
            raise DomainError("crossings must be strictly increasing")


def eval_K(spec: KernelSpec, t):
    """Kernel value t^(H-1/2)/Gamma(H+1/2); singular at t=0 unless H=1/2."""
    t_arr = np.asarray(t, dtype=float)
    if spec.H == 0.5:
        out = np.ones_like(t_arr)
        return out if out.ndim else 1.0
    if np.any(t_arr <= 0.0):
        raise DomainError("eval_K requires t > 0 for H < 1/2")
    out = t_arr ** (spec.H - 0.5) / gamma(spec.H + 0.5)
    return out if out.ndim else float(out)


def eval_KN(rule: QuadratureRule, t):
    """Approximation value sum_i w_i exp(-x_i t); empty rule gives 0."""
    t_arr = np.asarray(t, dtype=float)
    if len(rule) == 0:
        out = np.zeros_like(t_arr)
        return out if out.ndim else 0.0
    out = np.exp(-np.multiply.outer(t_arr, rule.nodes)) @ rule.weights
    return out if out.ndim else float(out)


def _kn_integral(rule: QuadratureRule, u: float, v: float) -> float:
    """Exact integral of K^N over [u, v] (x=0 term contributes w*(v-u))."""
    if len(rule) == 0:
        return 0.0
    x = rule.nodes
    w = rule.weights
    out = np.empty_like(x)
    pos = x > 0.0
    out[pos] = w[pos] * (np.exp(-x[pos] * u) - np.exp(-x[pos] * v)) / x[pos]
    out[~pos] = w[~pos] * (v - u)
    return float(math.fsum(out))


def _k_integral(spec: KernelSpec, u: float, v: float) -> float:
    """Exact integral of K over [u, v]."""
    a = spec.H + 0.5
    return (v**a - u**a) / gamma(spec.H + 1.5)


def l1_error_lower_biased(spec: KernelSpec, rule: QuadratureRule) -> float:
    """Exact L1 error for rules with K^N <= K pointwise on (0, T].

    Evaluates ||K||_1 - sum_i (w_i/x_i)(1 - exp(-x_i T)) as given; on rules
    that are not lower-biased the result can be negative and is returned
    unmodified so misuse stays detectable.
    """
    return spec.l1_norm - _kn_integral(rule, 0.0, spec.T)


def l2_error(spec: KernelSpec, rule: QuadratureRule) -> float:
    """L2 distance between K and K^N on [0, T]; requires H > 0."""
    if spec.H <= 0.0:
        raise DomainError("the L2 norm of K is infinite for H <= 0")
    g = gamma(spec.H + 0.5)
    a = spec.H + 0.5
    k_sq = spec.T ** (2.0 * spec.H) / (2.0 * spec.H * g * g)
    x = rule.nodes
    w = rule.weights
    cross = 0.0
    gram = 0.0
    if len(rule):
        cross_terms = np.empty_like(x)
        for i, xi in enumerate(x):
            if xi > 0.0:
                cross_terms[i] = w[i] * xi ** (-a) * lower_incomplete_gamma(a, xi * spec.T) / g
            else:
                cross_terms[i] = w[i] * spec.T**a / a / g
        cross = float(math.fsum(cross_terms))
        s = np.add.outer(x, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_mat = np.where(s > 0.0, -np.expm1(-s * spec.T) / np.where(s > 0, s, 1.0), spec.T)
        gram = float(np.einsum("i,ij,j->", w, g_mat, w))
    val = k_sq - 2.0 * cross + gram
    return math.sqrt(max(val, 0.0))


# --------------------------------------------------------------------------
# Crossing-tracking L1 computation
# --------------------------------------------------------------------------


class _KernelCurve:
    """Value and first two derivatives of K at a point."""

    def __init__(self, spec: KernelSpec):
        self.spec = spec

    def at(self, t: float):
        v = eval_K(self.spec, t)
        e = self.spec.H - 0.5
        d1 = v * e / t if e != 0.0 else 0.0
        d2 = v * e * (e - 1.0) / (t * t) if e != 0.0 else 0.0
        return v, d1, d2


class _SumExpCurve:
    """Value and first two derivatives of K^N at a point."""

    def __init__(self, rule: QuadratureRule):
        self.x = rule.nodes
        self.w = rule.weights

    def at(self, t: float):
        e = self.w * np.exp(-self.x * t)
        v = float(math.fsum(e))
        d1 = -float(math.fsum(e * self.x))
        d2 = float(math.fsum(e * self.x * self.x))
        return v, d1, d2


def _case1_step(upper, lower) -> float:
    """Largest provably crossing-free step via tangent/quadratic bounds.

    Solves u + u'*d = l + l'*d + l''*d^2/2 for the positive root d; complete
    monotonicity makes the tangent a lower bound of the upper curve and the
    quadratic an upper bound of the lower one, so no crossing occurs before d.
    """
    uv, ud1, _ = upper
    lv, ld1, ld2 = lower
    a = 0.5 * ld2
    b = ld1 - ud1
    c = lv - uv  # < 0
    if a <= 0.0:
        if b <= 0.0:
            return math.inf
        return -c / b
    disc = b * b - 4.0 * a * c
    sqrt_disc = math.sqrt(disc)
    if b >= 0.0:
        return -2.0 * c / (b + sqrt_disc)
    return (-b + sqrt_disc) / (2.0 * a)


def _case2_step(upper, lower, tol: float) -> float:
    """Largest step keeping the change of the relative gap below tol.

    First-order Taylor bounds of both curves turn the two-sided gap condition
    into two linear inequalities in the step; returns the largest step
    satisfying both (inf when both derivatives vanish).
    """
    uv, ud1, _ = upper
    lv, ld1, _ = lower
    ratio = lv / uv
    bound = math.inf
    if ud1 < 0.0:
        bound = min(bound, uv * tol / ((ratio + tol) * -ud1))
    if ld1 < 0.0:
        bound = min(bound, uv * tol / -ld1)
    return bound


def l1_error_intersections(
    spec: KernelSpec, rule: QuadratureRule, tol: float
) -> ErrorReport:
    """Integral of |K - K^N| over [0, T] to relative accuracy 2*tol.

    Marches from 0 to T locating every sign change of K - K^N, then
    integrates both kernels in closed form on each inter-crossing segment.
    """
    if not (1e-12 < tol < 1.0):
        raise DomainError(f"tol must lie in (1e-12, 1), got {tol}")

    k_curve = _KernelCurve(spec)
    kn_curve = _SumExpCurve(rule)
    norm = spec.l1_norm
    crossings: list[float] = []
    evals = 0

    kn0 = eval_KN(rule, 0.0)
    if kn0 <= 0.0:
        # empty (or zero-mass) rule: K^N = 0, no crossings, pure integral
        abs_err = norm
        return ErrorReport(abs_err, abs_err / norm, (), 0, tol)

    if spec.H == 0.5:
        s = 0.0
    else:
        # K(0+) = inf > K^N(0): solve K(t) = K^N(0) in closed form; no
        # crossing can occur before that point.
        t_hat = (gamma(spec.H + 0.5) * kn0) ** (1.0 / (spec.H - 0.5))
        s = min(t_hat, spec.T)

    boundaries = [0.0]
    max_steps = 2_000_000

    if s < spec.T:
        kv, kd1, kd2 = k_curve.at(s)
        nv, nd1, nd2 = kn_curve.at(s)
        evals += 1
        sign = 1.0 if kv >= nv else -1.0
        while s < spec.T:
            if kv >= nv:
                upper, lower = (kv, kd1, kd2), (nv, nd1, nd2)
            else:
                upper, lower = (nv, nd1, nd2), (kv, kd1, kd2)
            gap = (upper[0] - lower[0]) / upper[0]
            if gap > tol:
                step = _case1_step(upper, lower)
            else:
                step = _case2_step(upper, lower, tol)
            t_next = min(s + step, spec.T)
            if not t_next > s or evals > max_steps:
                raise ConvergenceError(f"crossing march stalled at t={s!r}")
            kv, kd1, kd2 = k_curve.at(t_next)
            nv, nd1, nd2 = kn_curve.at(t_next)
            evals += 1
            new_sign = 1.0 if kv >= nv else -1.0
            if new_sign != sign:
                crossings.append(0.5 * (s + t_next))
                sign = new_sign
            s = t_next

    boundaries.extend(crossings)
    boundaries.append(spec.T)

    segments = []
    for u, v in zip(boundaries, boundaries[1:]):
        segments.append(abs(_k_integral(spec, u, v) - _kn_integral(rule, u, v)))
    abs_err = float(math.fsum(segments))
    return ErrorReport(abs_err, abs_err / norm, tuple(crossings), evals, tol)
