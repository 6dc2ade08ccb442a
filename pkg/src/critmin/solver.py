"""Projected gradient descent on the L^q unit sphere, plus diagnostics.

The descent direction is the discrete gradient preconditioned either by
the lumped cell measures (``"mass"``) or by the frozen-coefficient weighted
stiffness matrix (``"stiffness"``, the default).  The step is projected on
the tangent space of the constraint, clamped to u >= 0 (the functional is
invariant under u -> |u|) and retracted by L^q normalisation.  Armijo
backtracking guards descent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from . import kernels
from .bubble import BubbleSpec, bubble_field
from .energy import (
    ProblemParams,
    RadialField,
    RadialGrid,
    field_from_function,
    normalize,
    total_energy,
    weighted_energy,
)

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class SingularityError(ArithmeticError):
    pass


class RegimeKind(str, Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class BubbleInit:
    eps: float | None = None  # None -> 0.1 R^2


@dataclass(frozen=True)
class ParabolicInit:
    pass


@dataclass(frozen=True)
class SolverConfig:
    initial_step: float = 1.0
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_iter: int = 20000
    rel_tol: float = 1e-9
    stall_window: int = 50
    init: BubbleInit | ParabolicInit = field(default_factory=BubbleInit)
    preconditioner: str = "stiffness"
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.initial_step > 0:
            raise ValueError("initial step must be > 0")
        if not 0 < self.armijo < 1:
            raise ValueError("Armijo factor must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack ratio must lie in (0, 1)")
        if self.max_iter < 1 or self.stall_window < 1:
            raise ValueError("max_iter and stall_window must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("relative tolerance must be > 0")
        if self.preconditioner not in ("mass", "stiffness"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class PohozaevDefect:
    interior: float
    boundary: float
    total: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    field: RadialField
    S_estimate: float
    mu_estimate: float
    iterations: int
    converged: bool
    history: list
    half_mass_radius: float
    sup_value: float
    pohozaev: PohozaevDefect
    dirichlet: float
    weighted: float


def regime_classify(params: ProblemParams) -> RegimeKind:
    beta = Fraction(params.beta)
    crit = params.critical_beta_exact
    if beta < crit:
        return RegimeKind.SUBCRITICAL
    if beta == crit:
        return RegimeKind.CRITICAL
    return RegimeKind.SUPERCRITICAL


def _grads(u: RadialField, params: ProblemParams):
    g, gl = kernels.gradient(u.grid.r, u.values, params.n, params.beta, params.k, params.q)
    return params.sigma * g, params.sigma * gl


def functional_gradient(u: RadialField, params: ProblemParams) -> RadialField:
    """Exact gradient of the discrete functional with respect to nodal values.

    The boundary entry is zero (the Dirichlet node is not an unknown).
    """
    if np.any(u.values < 0):
        raise ValueError("functional_gradient expects a nonnegative field")
    g, _ = _grads(u, params)
    if not np.all(np.isfinite(g)):
        bad = int(np.flatnonzero(~np.isfinite(g))[0])
        raise SingularityError(f"non-finite gradient at node {bad} (r={u.r[bad]!r})")
    return RadialField(u.grid, g)


def _precondition(vec, u: RadialField, params: ProblemParams, kind: str):
    """Apply the inverse preconditioner on the free nodes; boundary stays 0."""
    out = np.zeros_like(vec)
    if kind == "mass":
        m = u.grid.node_measures(params.n)
        out[:-1] = vec[:-1] / m[:-1]
        return out
    diag, off = kernels.stiffness(u.grid.r, u.values, params.n, params.beta, params.k)
    s = params.sigma
    out[:-1] = kernels.tridiag_solve(s * diag, s * off, np.ascontiguousarray(vec[:-1]))
    return out


def descent_step(u: RadialField, g, step: float, params: ProblemParams, preconditioner: str = "mass") -> RadialField:
    """normalize(max(u - step * P^-1 g, 0)), P the chosen preconditioner.

    Raises ``ValueError`` when the step is so long that clamping removes
    every positive value.  Pass ``projected_gradient`` as ``g`` to get a
    direction along which small steps decrease the energy.
    """
    gv = g.values if isinstance(g, RadialField) else np.asarray(g, dtype=float)
    d = _precondition(gv, u, params, preconditioner)
    w = np.maximum(u.values - step * d, 0.0)
    w[-1] = 0.0
    return normalize(u.with_values(w), params)


def _checked_grads(u, params):
    g, gl = _grads(u, params)
    if not np.all(np.isfinite(g)):
        bad = int(np.flatnonzero(~np.isfinite(g))[0])
        raise SingularityError(f"non-finite gradient at node {bad} (r={u.r[bad]!r})")
    return g, gl


def _projection(g, gl, u, params, kind):
    pg = _precondition(g, u, params, kind)
    pl = _precondition(gl, u, params, kind)
    denom = float(np.dot(gl, pl))
    lam = float(np.dot(g, pl)) / denom if denom > 0 else 0.0
    return lam, pg - lam * pl


def projected_gradient(u: RadialField, params: ProblemParams, preconditioner: str = "mass") -> RadialField:
    """g - lam * grad ||u||_q^q, with lam chosen so that P^-1 of the result is
    tangent to the constraint.  The functional is not homogeneous for k > 0,
    so the raw gradient followed by normalisation need not descend."""
    g, gl = _checked_grads(u, params)
    lam, _ = _projection(g, gl, u, params, preconditioner)
    return RadialField(u.grid, g - lam * gl)


def _tangent_direction(u, params, kind):
    """Preconditioned gradient projected on the tangent of ||u||_q = const."""
    g, gl = _checked_grads(u, params)
    _, d = _projection(g, gl, u, params, kind)
    return d, float(np.dot(g, d))


def _init_field(params: ProblemParams, grid: RadialGrid, config: SolverConfig):
    if isinstance(config.init, ParabolicInit):
        u = field_from_function(grid, lambda r: 1.0 - (r / params.R) ** 2)
    else:
        eps = config.init.eps if config.init.eps is not None else 0.1 * params.R**2
        u = bubble_field(BubbleSpec.default(eps, params), params, grid)
    return normalize(u, params)


def minimize(params: ProblemParams, grid: RadialGrid, config: SolverConfig = SolverConfig(), initial: RadialField | None = None) -> SolveResult:
    """Minimise the discrete functional over nonnegative fields with ||u||_q = 1."""
    if abs(grid.R - params.R) > 1e-12 * params.R:
        raise ValueError(f"grid radius {grid.R} does not match params.R={params.R}")
    u = normalize(initial.abs(), params) if initial is not None else _init_field(params, grid, config)
    E = total_energy(u, params).total
    history = [E]
    step = config.initial_step
    converged = False
    for it in range(1, config.max_iter + 1):
        d, slope = _tangent_direction(u, params, config.preconditioner)
        if not slope > 0:
            converged = True  # stationary to rounding
            break
        trial_step = step
        accepted = None
        best = math.inf
        for _ in range(config.max_backtracks):
            w = np.maximum(u.values - trial_step * d, 0.0)
            w[-1] = 0.0
            if np.any(w > 0):
                cand = normalize(u.with_values(w), params)
                Ec = total_energy(cand, params).total
                best = min(best, Ec)
                if Ec <= E - config.armijo * trial_step * slope:
                    accepted = (cand, Ec)
                    break
            trial_step *= config.backtrack
        if accepted is None:
            if best > E + 1e-12 * abs(E):
                raise SolverFailure(
                    f"energy increased after {config.max_backtracks} backtracks at iteration {it}",
                    history,
                )
            converged = True  # no decrease above rounding left along the descent direction
            break
        u, E = accepted
        history.append(E)
        # let the step grow again after first-try acceptances
        step = trial_step / config.backtrack if trial_step == step else trial_step
        if len(history) > config.stall_window:
            past = history[-1 - config.stall_window]
            if past - E <= config.rel_tol * abs(E) * config.stall_window:
                converged = True
                break
    log.debug("minimize %s: %d iterations, E=%r, converged=%s", params, len(history) - 1, E, converged)
    return _result(u, params, history, len(history) - 1, converged)


def _result(u, params, history, iterations, converged):
    e = total_energy(u, params)
    hm, sup = concentration_metrics(u, params)
    return SolveResult(
        field=u,
        S_estimate=e.total,
        mu_estimate=lagrange_multiplier(u, params),
        iterations=iterations,
        converged=converged,
        history=history,
        half_mass_radius=hm,
        sup_value=sup,
        pohozaev=pohozaev_defect(u, params),
        dirichlet=e.dirichlet,
        weighted=e.weighted,
    )


def lagrange_multiplier(u: RadialField, params: ProblemParams) -> float:
    """mu = I(u) + (k/2) int |x|^beta |u|^k |grad u|^2 (Euler-Lagrange tested with u)."""
    e = total_energy(u, params)
    return e.total + 0.5 * params.k * e.weighted


def pohozaev_defect(u: RadialField, params: ProblemParams) -> PohozaevDefect:
    factor = float(Fraction(params.beta) - params.critical_beta_exact)
    interior = 0.5 * factor * weighted_energy(u, params) if factor != 0 else 0.0
    r = u.grid.r
    slope = (u.values[-1] - u.values[-2]) / (r[-1] - r[-2])
    R = r[-1]
    boundary = float(0.5 * R * params.sigma * R ** (params.n - 1) * slope * slope)
    return PohozaevDefect(interior, boundary, interior + boundary)


def concentration_metrics(u: RadialField, params: ProblemParams):
    """(smallest node radius holding half the L^q mass, max |u|)."""
    mass = np.cumsum(kernels.cell_lq(u.grid.r, u.values, params.n, params.q))
    total = mass[-1]
    sup = float(np.max(np.abs(u.values)))
    if total <= 0:
        return float(u.grid.R), sup
    idx = int(np.searchsorted(mass, 0.5 * total))
    return float(u.grid.r[idx + 1]), sup
