"""Numerical laboratory for inf { int (1 + |x|^beta |u|^k) |grad u|^2 : ||u||_q = 1 } on a ball."""

from .bubble import (
    BubbleConstants,
    BubbleSpec,
    RateFit,
    RatePrediction,
    Regime,
    bubble_constant_C,
    bubble_energies,
    bubble_field,
    cutoff,
    fit_rate,
    predicted_weighted_rate,
    sobolev_constant,
)
from .energy import (
    EnergyBreakdown,
    ProblemParams,
    RadialField,
    RadialGrid,
    dirichlet_energy,
    lq_norm,
    make_grid,
    normalize,
    rescale,
    scaling_identity_check,
    substitution_check,
    total_energy,
    weighted_energy,
)
from .quadrature import QuadratureSpec, adaptive_radial, beta_moment, sphere_area
from .solver import (
    BubbleInit,
    ParabolicInit,
    PohozaevDefect,
    RegimeKind,
    SolveResult,
    SolverConfig,
    concentration_metrics,
    descent_step,
    functional_gradient,
    lagrange_multiplier,
    minimize,
    pohozaev_defect,
    projected_gradient,
    regime_classify,
)

__version__ = "0.1.0"
