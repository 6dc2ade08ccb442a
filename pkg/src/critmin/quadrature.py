"""Radial integrals over balls and all of space.

``beta_moment`` gives the closed form used as an oracle for every bubble
integral; ``adaptive_radial`` is the general-purpose numerical route
(globally adaptive Gauss-Legendre panels, bisection of the worst panel).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np


class QuadratureError(ArithmeticError):
    """Tolerance not reached before the subdivision depth ran out."""

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-300
    rel_tol: float = 1e-13
    max_depth: int = 60
    order: int = 16

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.order < 2:
            raise ValueError("panel rule order must be >= 2")


DEFAULT_SPEC = QuadratureSpec()

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    if int(n) != n or n < 2:
        raise ValueError(f"sphere_area needs an integer dimension n >= 2, got {n}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def beta_moment(a: float, b: float) -> float:
    """Closed form of int_0^inf r^a (1+r^2)^(-b) dr = B((a+1)/2, b-(a+1)/2) / 2."""
    if not a > -1:
        raise ValueError(f"beta_moment diverges at r=0: need a > -1, got a={a}")
    x = 0.5 * (a + 1.0)
    y = b - x
    if not y > 0:
        raise ValueError(
            f"beta_moment diverges at r=inf: need b > (a+1)/2, got a={a}, b={b}"
        )
    return 0.5 * math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def _mapped(f, lo, hi):
    """Return (g, t_lo, t_hi) with int_lo^hi f = int_t_lo^t_hi g."""
    if math.isinf(hi):
        # r = lo + expm1(x) with x = t/(1-t).  The plain map r = lo + x leaves
        # algebraic tails r^-a (a near 1) with an endpoint singularity whose
        # mass sits beyond the last representable t < 1; the exponential
        # stretch turns every integrable power tail into exponential decay.
        # Points past r - lo = e^69 ~ 1e30 are dropped so that polynomial
        # factors cannot overflow; a tail r^-a loses ~1e30^(1-a)/(a-1) there.
        def g(t):
            s = 1.0 - t
            out = np.zeros_like(t)
            ok = s > 0.0
            x = np.where(ok, t / np.where(ok, s, 1.0), np.inf)
            ok &= x < 69.0
            xo = x[ok]
            out[ok] = f(lo + np.expm1(xo)) * np.exp(xo) / (s[ok] * s[ok])
            return out

        return g, 0.0, 1.0
    return f, lo, hi


def integrate(f, lo: float, hi: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Adaptive integral of a vectorised scalar function over [lo, hi].

    ``hi`` may be ``inf``.  Panels are scored by the difference between the
    rule on the panel and on its two halves; the worst panel is bisected
    until the summed error bound meets the tolerance.
    """
    if lo == hi:
        return 0.0
    if hi < lo:
        return -integrate(f, hi, lo, spec)
    g, a, b = _mapped(f, lo, hi)
    x, w = _gauss_legendre(spec.order)

    def panel(a, b):
        # rule on [a,b] and on its halves, in one vectorised call
        c = 0.5 * (a + b)
        h1 = 0.5 * (c - a)
        h2 = 0.5 * (b - c)
        pts = np.concatenate((a + h1 * (x + 1.0), c + h2 * (x + 1.0)))
        vals = np.asarray(g(pts), dtype=float)
        left = h1 * np.dot(w, vals[: len(x)])
        right = h2 * np.dot(w, vals[len(x):])
        return left + right, left, right

    def coarse(a, b):
        hw = 0.5 * (b - a)
        return hw * np.dot(w, np.asarray(g(a + hw * (x + 1.0)), dtype=float))

    whole = coarse(a, b)
    fine, left, right = panel(a, b)
    # heap entries: (-err, seq, a, b, value, left, right, depth)
    heap = [(-abs(fine - whole), 0, a, b, fine, left, right, 0)]
    seq = 1
    total = fine
    err_total = abs(fine - whole)
    while True:
        if not (math.isfinite(total) and math.isfinite(err_total)):
            raise QuadratureError("non-finite integrand value", total, err_total)
        if err_total <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            # running sums drift; confirm with exact summation
            total = math.fsum(e[4] for e in heap)
            err_total = math.fsum(-e[0] for e in heap)
            if err_total <= max(spec.abs_tol, spec.rel_tol * abs(total)):
                break
        neg_err, _, pa, pb, pval, lval, rval, depth = heapq.heappop(heap)
        if depth >= spec.max_depth:
            total = math.fsum(e[4] for e in heap) + pval
            err_total = math.fsum(-e[0] for e in heap) - neg_err
            raise QuadratureError(
                "tolerance not reached at max subdivision depth", total, err_total
            )
        mid = 0.5 * (pa + pb)
        lfine, ll, lr = panel(pa, mid)
        rfine, rl, rr = panel(mid, pb)
        lerr = abs(lfine - lval)
        rerr = abs(rfine - rval)
        heapq.heappush(heap, (-lerr, seq, pa, mid, lfine, ll, lr, depth + 1))
        heapq.heappush(heap, (-rerr, seq + 1, mid, pb, rfine, rl, rr, depth + 1))
        seq += 2
        total += lfine + rfine - pval
        err_total += lerr + rerr + neg_err
    return float(total)


def adaptive_radial(f, interval, n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """sigma_{n-1} * int f(r) r^(n-1) dr over ``interval`` = (r_lo, r_hi)."""
    lo, hi = interval
    if lo < 0:
        raise ValueError("radial interval must start at r >= 0")
    sigma = sphere_area(n)
    return sigma * integrate(lambda r: f(r) * r ** (n - 1), lo, hi, spec)
