"""Cutoff bubbles, their energies, and the asymptotic rates of the weighted part.

The family is

    u_eps(r) = eps^((n-2)/4) zeta(r) / (eps + r^2)^((n-2)/2)

with a quintic smoothstep cutoff zeta.  Energies are computed grid-free by
adaptive quadrature of the exact derivative; the constants K1, K2, S and C
come from Beta-function closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .energy import ProblemParams, RadialField, RadialGrid
from .quadrature import DEFAULT_SPEC, QuadratureSpec, beta_moment, integrate, sphere_area


@dataclass(frozen=True)
class BubbleSpec:
    eps: float
    rho1: float
    rho2: float
    profile: str = "quintic"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("bubble eps must be > 0")
        if self.profile not in ("quintic", "none"):
            raise ValueError(f"unknown cutoff profile {self.profile!r}")
        if self.profile == "quintic" and not 0 < self.rho1 < self.rho2:
            raise ValueError("cutoff radii must satisfy 0 < rho1 < rho2")

    @classmethod
    def default(cls, eps, params: ProblemParams):
        return cls(eps, params.R / 4, params.R / 2)

    @classmethod
    def uncut(cls, eps):
        """zeta = 1 on all of R^n (test mode; not a field on a ball)."""
        return cls(eps, math.inf, math.inf, "none")


class Regime(str, Enum):
    POWER_LAW = "PowerLaw"
    LOG_CRITICAL = "LogCritical"
    SATURATED = "Saturated"


@dataclass(frozen=True)
class RatePrediction:
    regime: Regime
    exponent: float
    has_log: bool


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    with_log_correction: bool


@dataclass(frozen=True)
class BubbleConstants:
    K1: float
    K2: float
    S: float
    C: float | None = None


def cutoff(r, spec: BubbleSpec):
    """1 on [0, rho1], 0 beyond rho2, quintic smoothstep in between."""
    r = np.asarray(r, dtype=float)
    if spec.profile == "none":
        return np.ones_like(r)
    t = np.clip((r - spec.rho1) / (spec.rho2 - spec.rho1), 0.0, 1.0)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff_derivative(r, spec: BubbleSpec):
    r = np.asarray(r, dtype=float)
    if spec.profile == "none":
        return np.zeros_like(r)
    width = spec.rho2 - spec.rho1
    t = np.clip((r - spec.rho1) / width, 0.0, 1.0)
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / width


def bubble_profile(r, spec: BubbleSpec, n: int):
    r = np.asarray(r, dtype=float)
    e = spec.eps
    return e ** ((n - 2) / 4) * cutoff(r, spec) / (e + r * r) ** ((n - 2) / 2)


def bubble_derivative(r, spec: BubbleSpec, n: int):
    r = np.asarray(r, dtype=float)
    e = spec.eps
    base = e + r * r
    z = cutoff(r, spec)
    dz = cutoff_derivative(r, spec)
    return e ** ((n - 2) / 4) * (
        dz * base ** (-(n - 2) / 2) - (n - 2) * r * z * base ** (-n / 2)
    )


def bubble_field(spec: BubbleSpec, params: ProblemParams, grid: RadialGrid) -> RadialField:
    if spec.profile == "none" or spec.rho2 > params.R:
        raise ValueError("bubble field on a ball needs rho2 <= R")
    values = bubble_profile(grid.r, spec, params.n)
    values[-1] = 0.0
    return RadialField(grid, values)


def _breakpoints(spec: BubbleSpec):
    s = math.sqrt(spec.eps)
    if spec.profile == "none":
        return [0.0, s, math.inf]
    pts = [0.0]
    if s < spec.rho1:
        pts.append(s)
    pts += [spec.rho1, spec.rho2]
    return pts


def _radial_sum(f, pts, n, qspec):
    sigma = sphere_area(n)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += integrate(lambda r: f(r) * r ** (n - 1), lo, hi, qspec)
    return sigma * total


def bubble_energies(spec: BubbleSpec, params: ProblemParams, qspec: QuadratureSpec = DEFAULT_SPEC):
    """(int |grad u|^2, int |u|^q, int |x|^beta |u|^k |grad u|^2) for u = u_eps."""
    n, beta, k, q = params.n, params.beta, params.k, params.q
    pts = _breakpoints(spec)

    def grad_sq(r):
        return bubble_derivative(r, spec, n) ** 2

    def lq(r):
        return np.abs(bubble_profile(r, spec, n)) ** q

    def weighted(r):
        u = np.abs(bubble_profile(r, spec, n))
        rb = 1.0 if beta == 0 else r**beta
        uk = 1.0 if k == 0 else u**k
        return rb * uk * bubble_derivative(r, spec, n) ** 2

    return (
        _radial_sum(grad_sq, pts, n, qspec),
        _radial_sum(lq, pts, n, qspec),
        _radial_sum(weighted, pts, n, qspec),
    )


def normalized_total(grad_sq, lq_q, weighted, params: ProblemParams):
    """I(u / ||u||_q) from the three raw bubble integrals."""
    c = lq_q ** (1.0 / params.q)
    return grad_sq / c**2 + weighted / c ** (params.k + 2.0)


def predicted_weighted_rate(params: ProblemParams) -> RatePrediction:
    beta = Fraction(params.beta)
    if beta <= params.critical_beta_exact:
        raise ValueError(
            f"rate prediction needs beta > kn/q = {params.critical_beta}; got beta={params.beta}"
        )
    n, k = params.n, params.k
    threshold = (Fraction(k) + 1) * (n - 2)
    saturated = (k + 2) * (n - 2) / 4.0
    if beta < threshold:
        return RatePrediction(Regime.POWER_LAW, (2 * params.beta - k * (n - 2)) / 4.0, False)
    if beta == threshold:
        return RatePrediction(Regime.LOG_CRITICAL, saturated, True)
    return RatePrediction(Regime.SATURATED, saturated, False)


def bubble_constant_C(params: ProblemParams) -> float:
    """(n-2)^2 int_{R^n} |y|^(beta+2) / (1+|y|^2)^(k(n-2)/2 + n) dy."""
    n, beta, k = params.n, params.beta, params.k
    if not params.critical_beta < beta < (k + 1) * (n - 2):
        raise ValueError(
            f"C is finite only for kn/q < beta < (k+1)(n-2) = {(k + 1) * (n - 2)}; got beta={beta}"
        )
    return (n - 2) ** 2 * sphere_area(n) * beta_moment(beta + 2 + n - 1, k * (n - 2) / 2 + n)


def sobolev_constant(n: int) -> BubbleConstants:
    """K1, K2 and S = K1/K2 for U(x) = (1+|x|^2)^(-(n-2)/2) on R^n."""
    sigma = sphere_area(n)
    q = 2.0 * n / (n - 2)
    K1 = (n - 2) ** 2 * sigma * beta_moment(n + 1, n)
    K2 = (sigma * beta_moment(n - 1, n)) ** (2.0 / q)
    return BubbleConstants(K1, K2, K1 / K2)


def bubble_constants(params: ProblemParams) -> BubbleConstants:
    base = sobolev_constant(params.n)
    try:
        C = bubble_constant_C(params)
    except ValueError:
        C = None
    return BubbleConstants(base.K1, base.K2, base.S, C)


def eps_sweep(lo=1e-5, hi=1e-2, count=13):
    """Log-spaced eps values, largest first."""
    return [float(e) for e in np.logspace(math.log10(hi), math.log10(lo), count)]


def fit_rate(samples, with_log: bool = False) -> RateFit:
    """Least squares fit of log(value) [- log|log eps|] against log(eps)."""
    if len(samples) < 3:
        raise ValueError("rate fit needs at least 3 samples")
    eps = np.array([s[0] for s in samples], dtype=float)
    val = np.array([s[1] for s in samples], dtype=float)
    if np.any(val <= 0):
        raise ValueError("rate fit needs positive values")
    if np.any(eps <= 0) or not np.all(np.diff(eps) < 0):
        raise ValueError("eps samples must be positive and strictly decreasing")
    x = np.log(eps)
    y = np.log(val)
    if with_log:
        y = y - np.log(np.abs(x))
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), with_log)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    grad_sq: float
    lq_q: float
    weighted: float
    total_normalized: float


def bubble_sweep(params: ProblemParams, eps_values, qspec: QuadratureSpec = DEFAULT_SPEC, rho=None):
    """Evaluate the bubble energies at each eps (sorted largest first)."""
    rows = []
    for e in sorted(eps_values, reverse=True):
        spec = BubbleSpec(e, *rho) if rho else BubbleSpec.default(e, params)
        g, l, w = bubble_energies(spec, params, qspec)
        rows.append(SweepRow(e, g, l, w, normalized_total(g, l, w, params)))
    return rows
