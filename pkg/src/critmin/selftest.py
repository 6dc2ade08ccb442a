"""Quick invariant suite behind ``critmin selftest``.

Each check returns ``(passed, detail)``.  The suite is meant to run in a
few seconds; the slow convergence studies live in the test-suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import bubble as bb
from . import energy as en
from . import solver as sv
from .quadrature import beta_moment, integrate, sphere_area


def check_quadrature(seed=0, count=50):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        a = rng.uniform(0.0, 8.0)
        b = 0.5 * (a + 1.0) + rng.uniform(0.5, 5.0)
        num = integrate(lambda r: r**a * (1.0 + r * r) ** -b, 0.0, math.inf)
        worst = max(worst, abs(num / beta_moment(a, b) - 1.0))
    return worst <= 1e-10, f"max rel err {worst:.2e} over {count} Beta moments"


def check_sphere_area():
    err = max(
        abs(sphere_area(2) - 2 * math.pi),
        abs(sphere_area(3) - 4 * math.pi),
        abs(sphere_area(4) - 2 * math.pi**2),
    )
    return err < 1e-13, f"max abs err {err:.1e}"


def check_scaling_identity():
    p = en.ProblemParams(3, 1.0, 2.0)
    g = en.make_grid(p, 400, 2.0)
    u = en.normalize(en.field_from_function(g, lambda r: (1 - r * r) ** 2), p)
    worst = max(en.scaling_identity_check(u, p, e) for e in (1e-3, 1e-1, 1e1))
    return worst <= 1e-12, f"max discrepancy {worst:.1e}"


def check_substitution():
    p = en.ProblemParams(3, 1.0, 2.0)
    res = []
    for M in (100, 200, 400):
        g = en.make_grid(p, M, 1.0)
        res.append(en.substitution_check(en.field_from_function(g, lambda r: 1 - r * r), p))
    ratios = [res[i] / res[i + 1] for i in range(2)]
    return min(ratios) >= 1.8, "residuals " + ", ".join(f"{x:.2e}" for x in res)


def check_gradient(seed=1):
    rng = np.random.default_rng(seed)
    p = en.ProblemParams(4, 2.5, 0.7)
    g = en.make_grid(p, 120, 2.0)
    r = g.r
    u = en.RadialField(g, (1 - r**2) * (1.0 + 0.3 * np.cos(3 * r)) + 0.0)
    phi = (1 - r**2) * rng.normal(size=len(r))
    phi[-1] = 0.0
    grad = sv.functional_gradient(u, p).values
    exact = float(np.dot(grad, phi))
    best = math.inf
    for h in (1e-3, 1e-4, 1e-5, 1e-6):
        up = en.total_energy(u.with_values(u.values + h * phi), p).total
        dn = en.total_energy(u.with_values(u.values - h * phi), p).total
        best = min(best, abs((up - dn) / (2 * h) - exact) / abs(exact))
    return best <= 1e-5, f"best rel err {best:.1e}"


def check_rates():
    out = []
    ok = True
    for beta in (2.0, 6.0):
        p = en.ProblemParams(4, beta, 1.0)
        rows = bb.bubble_sweep(p, bb.eps_sweep())
        fit = bb.fit_rate([(row.eps, row.weighted) for row in rows[2:]])
        pred = bb.predicted_weighted_rate(p)
        ok &= abs(fit.slope - pred.exponent) <= 0.05
        out.append(f"beta={beta:g}: slope {fit.slope:.4f} vs {pred.exponent:g}")
    return ok, "; ".join(out)


def check_bubble_limit():
    p = en.ProblemParams(4, 2.0, 1.0)
    g, l, w = bb.bubble_energies(bb.BubbleSpec.default(1e-5, p), p)
    tot = bb.normalized_total(g, l, w, p)
    S = bb.sobolev_constant(4).S
    return S < tot < 1.01 * S, f"I(u_eps/|u_eps|) = {tot:.8f}, S(4) = {S:.8f}"


def check_pohozaev_signs():
    ok = True
    for beta, k in ((0.0, 4.0), (1.0, 2.0), (3.0, 1.0)):
        p = en.ProblemParams(3, beta, k)
        g = en.make_grid(p, 200, 2.0)
        u = en.normalize(en.field_from_function(g, lambda r: 1 - r * r), p)
        d = sv.pohozaev_defect(u, p)
        sign = np.sign(beta - p.critical_beta)
        ok &= np.sign(d.interior) == sign and d.boundary >= 0
    return bool(ok), "interior sign follows beta - kn/q, boundary >= 0"


def check_short_solve():
    p = en.ProblemParams(3, 0.0, 4.0)
    g = en.make_grid(p, 300, 2.0)
    res = sv.minimize(p, g, sv.SolverConfig(max_iter=2000))
    h = res.history
    mono = all(h[i + 1] <= h[i] + 1e-14 * abs(h[i]) for i in range(len(h) - 1))
    norm = en.lq_norm(res.field, p)
    ok = mono and abs(norm - 1) <= 1e-12 and res.converged and np.all(res.field.values >= 0)
    return bool(ok), f"S_est={res.S_estimate:.6f} iters={res.iterations} |u|_q-1={norm - 1:.1e}"


CHECKS = [
    ("sphere_area", check_sphere_area),
    ("quadrature_oracle", check_quadrature),
    ("scaling_identity", check_scaling_identity),
    ("substitution_identity", check_substitution),
    ("gradient_fd", check_gradient),
    ("rate_fits", check_rates),
    ("bubble_limit", check_bubble_limit),
    ("pohozaev_signs", check_pohozaev_signs),
    ("short_solve", check_short_solve),
]


def run_all(report=print):
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash counts as a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        report(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return failures
