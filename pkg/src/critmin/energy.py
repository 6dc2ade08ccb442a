"""Radial fields on a ball and the discrete quasi-linear functional.

The functional is

    I(u) = int_B (1 + |x|^beta |u|^k) |grad u|^2 dx,     ||u||_q = 1,

with q = 2n/(n-2).  Fields are nodal values on a graded radial grid,
interpolated linearly on each cell.  Every integral is a sum of
nonnegative cell terms evaluated by a fixed Gauss rule in r (see
``kernels``); the rule is homogeneous under r -> r/eps, so the blow-up
rescaling is exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .quadrature import sphere_area


@dataclass(frozen=True)
class ProblemParams:
    n: int
    beta: float
    k: float
    R: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"dimension n must be an integer >= 3, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "R", float(self.R))
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got beta={self.beta}")
        if not 0 <= self.k <= self.q:
            raise ValueError(f"k must satisfy 0 <= k <= q={self.q}, got k={self.k}")
        if not self.R > 0:
            raise ValueError(f"ball radius R must be > 0, got R={self.R}")

    @property
    def q(self) -> float:
        return 2.0 * self.n / (self.n - 2)

    @property
    def critical_beta(self) -> float:
        """kn/q, written as k(n-2)/2 so that integer inputs stay exact."""
        return self.k * (self.n - 2) / 2.0

    @property
    def critical_beta_exact(self) -> Fraction:
        return Fraction(self.k) * (self.n - 2) / 2

    @property
    def sigma(self) -> float:
        return sphere_area(self.n)

    def as_dict(self):
        return {"n": self.n, "beta": self.beta, "k": self.k, "R": self.R}


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialGrid:
    r: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        r = _frozen(self.r)
        if r.ndim != 1 or len(r) < 2:
            raise ValueError("grid needs at least two nodes")
        if r[0] != 0.0:
            raise ValueError("grid must start at r=0")
        if not np.all(np.diff(r) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "r", r)

    @property
    def M(self) -> int:
        return len(self.r) - 1

    @property
    def R(self) -> float:
        return float(self.r[-1])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.r[1:] + self.r[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.r)

    def cell_measures(self, n: int) -> np.ndarray:
        """Volume of every spherical shell, sigma (r_{j+1}^n - r_j^n) / n."""
        return sphere_area(n) * np.diff(self.r**n) / n

    def node_measures(self, n: int) -> np.ndarray:
        """Lumped (diagonal) mass: half of each adjacent cell measure."""
        c = self.cell_measures(n)
        out = np.zeros(self.M + 1)
        out[:-1] += 0.5 * c
        out[1:] += 0.5 * c
        return out


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray
    check_boundary: bool = field(default=True, repr=False)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.r.shape:
            raise ValueError("field values must match the grid nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.check_boundary and v[-1] != 0.0:
            raise ValueError("field must vanish at r=R (Dirichlet trace)")
        object.__setattr__(self, "values", v)

    @property
    def r(self):
        return self.grid.r

    def with_values(self, values) -> "RadialField":
        return RadialField(self.grid, values, self.check_boundary)

    def abs(self) -> "RadialField":
        return self.with_values(np.abs(self.values))


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    weighted: float
    total: float
    lq_norm: float


def make_grid(params: ProblemParams, M: int, gamma: float = 1.0) -> RadialGrid:
    """Nodes r_i = R (i/M)^gamma, i = 0..M."""
    if int(M) != M or M < 8:
        raise ValueError(f"grid needs M >= 8 cells, got M={M}")
    if not gamma >= 1:
        raise ValueError(f"grading exponent must be >= 1, got gamma={gamma}")
    i = np.arange(M + 1, dtype=float)
    r = params.R * (i / M) ** gamma
    r[-1] = params.R
    return RadialGrid(r, float(gamma))


def field_from_function(grid: RadialGrid, func, check_boundary=True) -> RadialField:
    values = np.asarray(func(grid.r), dtype=float)
    if check_boundary:
        values = values.copy()
        values[-1] = 0.0
    return RadialField(grid, values, check_boundary)


def _sums(u: RadialField, params: ProblemParams):
    return kernels.energy_sums(
        u.grid.r, u.values, params.n, params.beta, params.k, params.q
    )


def dirichlet_energy(u: RadialField, params: ProblemParams) -> float:
    return params.sigma * _sums(u, params)[0]


def weighted_energy(u: RadialField, params: ProblemParams) -> float:
    """Only the int |x|^beta |u|^k |grad u|^2 part of the functional."""
    return params.sigma * _sums(u, params)[1]


def lq_norm(u: RadialField, params: ProblemParams) -> float:
    return (params.sigma * _sums(u, params)[2]) ** (1.0 / params.q)


def normalize(u: RadialField, params: ProblemParams) -> RadialField:
    norm = lq_norm(u, params)
    if not norm > 0:
        raise ValueError("cannot normalize a field with zero L^q norm")
    return u.with_values(u.values / norm)


def total_energy(u: RadialField, params: ProblemParams) -> EnergyBreakdown:
    d, w, l = _sums(u, params)
    s = params.sigma
    dirichlet = s * d
    weighted = s * w
    return EnergyBreakdown(dirichlet, weighted, dirichlet + weighted, (s * l) ** (1.0 / params.q))


def substitution_check(u: RadialField, params: ProblemParams) -> float:
    """Residual of I(u) = D(u) + (k/2+1)^-2 int |x|^beta |grad v|^2 with v = u^(k/2+1).

    ``v`` is formed nodally and then differenced, so the residual measures
    the discretisation error of the chain rule and vanishes under refinement.
    """
    if np.any(u.values < 0):
        raise ValueError("substitution check needs a nonnegative field")
    if not params.k > 0:
        raise ValueError("substitution check needs k > 0")
    a = params.k / 2.0 + 1.0
    v = u.with_values(u.values**a)
    plain = ProblemParams(params.n, params.beta, 0.0, params.R)
    # with k=0 the weighted sum is exactly int |x|^beta |grad v|^2
    vw = weighted_energy(v, plain)
    e = total_energy(u, params)
    return abs(e.total - e.dirichlet - vw / (a * a))


def rescale(u: RadialField, params: ProblemParams, eps: float):
    """Blow-up transform u(x) = eps^(-n/q) v(x/eps).

    Returns ``(v, grid)`` where grid has nodes r_i/eps and v_i = eps^(n/q) u_i.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    grid = RadialGrid(u.grid.r / eps, u.grid.gamma)
    v = RadialField(grid, u.values * eps ** (params.n / params.q), u.check_boundary)
    return v, grid


def rescaled_params(params: ProblemParams, eps: float) -> ProblemParams:
    return ProblemParams(params.n, params.beta, params.k, params.R / eps)


def scaling_identity_check(
    u: RadialField, params: ProblemParams, eps: float, explicit_factor: bool = False
) -> float:
    """Relative discrepancy between I(u) on the ball and the rescaled energy.

    By default the right-hand side is the plain functional on the rescaled
    ball, which equals I(u) only when beta = kn/q.  With ``explicit_factor``
    the weighted part is multiplied by eps^(beta - kn/q), and the identity
    holds for every beta.
    """
    lhs = total_energy(u, params).total
    v, _ = rescale(u, params, eps)
    sp = rescaled_params(params, eps)
    ev = total_energy(v, sp)
    if explicit_factor:
        rhs = ev.dirichlet + eps ** (params.beta - params.critical_beta) * ev.weighted
    else:
        rhs = ev.total
    if lhs == 0:
        return abs(rhs)
    return abs(lhs - rhs) / abs(lhs)
