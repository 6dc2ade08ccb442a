"""Cell-loop kernels for the discrete radial functional.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version.  The module-level names bind to one of them at import time:
numba is used when it imports and ``CRITMIN_NUMBA`` is not ``"0"``.

Fields are continuous and piecewise linear in r.  On cell j
(h = r[j+1] - r[j], d = (u[j+1] - u[j]) / h) every integrand is evaluated
at the GAUSS_POINTS Gauss-Legendre nodes r_g = r[j] + t_g h:

    dirichlet_j = h sum_g w_g d^2 r_g^(n-1)
    weighted_j  = h sum_g w_g d^2 r_g^beta |u(r_g)|^k r_g^(n-1)
    lq_j        = h sum_g w_g |u(r_g)|^q r_g^(n-1)

The rule is exact for the Dirichlet part (n <= 8), so a discrete field is a
genuine H^1_0 function and cannot undercut the Sobolev constant through
quadrature error.  ``|u|^k`` is 1 when k == 0 and 0 when |u| < TINY.
Sphere-area factors are applied by callers.
"""

import os

import numpy as np

TINY = 1e-300
GAUSS_POINTS = 4

_x, _w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
GL_T = 0.5 * (_x + 1.0)
GL_W = 0.5 * _w

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("CRITMIN_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# numpy path


def _cells_np(r, u):
    h = np.diff(r)
    d = np.diff(u) / h
    rg = r[:-1, None] + GL_T[None, :] * h[:, None]
    ug = np.abs(u[:-1, None] * (1.0 - GL_T[None, :]) + u[1:, None] * GL_T[None, :])
    return h, d, rg, ug


def _powk_np(m, k):
    if k == 0.0:
        return np.ones_like(m)
    out = np.zeros_like(m)
    big = m >= TINY
    out[big] = m[big] ** k
    return out


def _dpowk_np(m, k):
    if k == 0.0:
        return np.zeros_like(m)
    out = np.zeros_like(m)
    big = m >= TINY
    out[big] = k * m[big] ** (k - 1.0)
    return out


def _rbeta_np(rg, beta):
    if beta == 0.0:
        return np.ones_like(rg)
    return rg**beta


def energy_sums_numpy(r, u, n, beta, k, q):
    """Return (dirichlet, weighted, lq_q) without the sphere factor."""
    h, d, rg, ug = _cells_np(r, u)
    vol = GL_W[None, :] * rg ** (n - 1) * h[:, None]
    dd = (d * d)[:, None]
    dirichlet = np.sum(vol * dd)
    weighted = np.sum(vol * dd * _rbeta_np(rg, beta) * _powk_np(ug, k))
    lq_q = np.sum(vol * ug**q)
    return dirichlet, weighted, lq_q


def cell_lq_numpy(r, u, n, q):
    """Per-cell contributions to int |u|^q r^(n-1) dr."""
    h, _, rg, ug = _cells_np(r, u)
    return np.sum(GL_W[None, :] * rg ** (n - 1) * h[:, None] * ug**q, axis=1)


def gradient_numpy(r, u, n, beta, k, q):
    """Exact nodal gradients of (dirichlet + weighted) and of lq_q.

    Both arrays have length M+1 with the boundary entry left at 0.
    ``u`` is assumed nonnegative.
    """
    h, d, rg, ug = _cells_np(r, u)
    vol = GL_W[None, :] * rg ** (n - 1) * h[:, None]
    rb = _rbeta_np(rg, beta)
    p = 1.0 + rb * _powk_np(ug, k)
    flux = np.sum(vol * p, axis=1) * 2.0 * d / h
    dw = vol * (d * d)[:, None] * rb * _dpowk_np(ug, k)
    right = np.sum(dw * GL_T[None, :], axis=1)
    left = np.sum(dw * (1.0 - GL_T[None, :]), axis=1)
    g = np.zeros_like(u)
    g[1:] += flux + right
    g[:-1] += -flux + left
    dl = vol * q * ug ** (q - 1.0)
    gl = np.zeros_like(u)
    gl[1:] += np.sum(dl * GL_T[None, :], axis=1)
    gl[:-1] += np.sum(dl * (1.0 - GL_T[None, :]), axis=1)
    g[-1] = 0.0
    gl[-1] = 0.0
    return g, gl


def stiffness_numpy(r, u, n, beta, k):
    """Frozen-coefficient weighted stiffness on the free nodes 0..M-1.

    Returns (diag, off), ``off[i]`` coupling nodes i and i+1.
    """
    h, _, rg, ug = _cells_np(r, u)
    vol = GL_W[None, :] * rg ** (n - 1) * h[:, None]
    c = 2.0 * np.sum(vol * (1.0 + _rbeta_np(rg, beta) * _powk_np(ug, k)), axis=1) / (h * h)
    diag = c.copy()
    diag[1:] += c[:-1]
    off = -c[:-1].copy()
    return diag, off


def tridiag_solve_numpy(diag, off, rhs):
    from scipy.linalg import solveh_banded

    ab = np.zeros((2, len(diag)))
    ab[0, 1:] = off
    ab[1] = diag
    return solveh_banded(ab, rhs)


# ---------------------------------------------------------------------------
# numba path (plain loops; compiled below)


def _pow(x, p):
    # small integer exponents (q = 4 or 6, integer beta and k) by squaring;
    # a general pow per quadrature point dominates the loop otherwise
    if p == 0.0:
        return 1.0
    if 0.0 < p <= 16.0 and p == int(p):
        e = int(p)
        out = 1.0
        base = x
        while e:
            if e & 1:
                out *= base
            base *= base
            e >>= 1
        return out
    return x**p


def _energy_sums_loop(r, u, n, beta, k, q, gt, gw):
    dirichlet = 0.0
    weighted = 0.0
    lq_q = 0.0
    for j in range(r.shape[0] - 1):
        h = r[j + 1] - r[j]
        d = (u[j + 1] - u[j]) / h
        for g in range(gt.shape[0]):
            t = gt[g]
            rg = r[j] + t * h
            ug = abs(u[j] * (1.0 - t) + u[j + 1] * t)
            vol = gw[g] * _pow(rg, n - 1.0) * h
            rb = 1.0 if beta == 0.0 else _pow(rg, beta)
            if k == 0.0:
                mk = 1.0
            elif ug < 1e-300:
                mk = 0.0
            else:
                mk = _pow(ug, k)
            dirichlet += vol * d * d
            weighted += vol * d * d * rb * mk
            lq_q += vol * _pow(ug, q)
    return dirichlet, weighted, lq_q


def _cell_lq_loop(r, u, n, q, gt, gw):
    out = np.zeros(r.shape[0] - 1)
    for j in range(r.shape[0] - 1):
        h = r[j + 1] - r[j]
        s = 0.0
        for g in range(gt.shape[0]):
            t = gt[g]
            rg = r[j] + t * h
            ug = abs(u[j] * (1.0 - t) + u[j + 1] * t)
            s += gw[g] * _pow(rg, n - 1.0) * h * _pow(ug, q)
        out[j] = s
    return out


def _gradient_loop(r, u, n, beta, k, q, gt, gw):
    size = r.shape[0]
    gr = np.zeros(size)
    gl = np.zeros(size)
    for j in range(size - 1):
        h = r[j + 1] - r[j]
        d = (u[j + 1] - u[j]) / h
        pvol = 0.0
        right = 0.0
        left = 0.0
        lr = 0.0
        ll = 0.0
        for g in range(gt.shape[0]):
            t = gt[g]
            rg = r[j] + t * h
            ug = abs(u[j] * (1.0 - t) + u[j + 1] * t)
            vol = gw[g] * _pow(rg, n - 1.0) * h
            rb = 1.0 if beta == 0.0 else _pow(rg, beta)
            if k == 0.0:
                mk = 1.0
                dmk = 0.0
            elif ug < 1e-300:
                mk = 0.0
                dmk = 0.0
            else:
                mk = _pow(ug, k)
                dmk = k * _pow(ug, k - 1.0)
            pvol += vol * (1.0 + rb * mk)
            dw = vol * d * d * rb * dmk
            right += dw * t
            left += dw * (1.0 - t)
            dl = vol * q * _pow(ug, q - 1.0)
            lr += dl * t
            ll += dl * (1.0 - t)
        flux = 2.0 * pvol * d / h
        gr[j + 1] += flux + right
        gr[j] += -flux + left
        gl[j + 1] += lr
        gl[j] += ll
    gr[size - 1] = 0.0
    gl[size - 1] = 0.0
    return gr, gl


def _stiffness_loop(r, u, n, beta, k, gt, gw):
    cells = r.shape[0] - 1
    diag = np.zeros(cells)
    off = np.zeros(cells - 1)
    for j in range(cells):
        h = r[j + 1] - r[j]
        pvol = 0.0
        for g in range(gt.shape[0]):
            t = gt[g]
            rg = r[j] + t * h
            ug = abs(u[j] * (1.0 - t) + u[j + 1] * t)
            rb = 1.0 if beta == 0.0 else _pow(rg, beta)
            if k == 0.0:
                mk = 1.0
            elif ug < 1e-300:
                mk = 0.0
            else:
                mk = _pow(ug, k)
            pvol += gw[g] * _pow(rg, n - 1.0) * h * (1.0 + rb * mk)
        c = 2.0 * pvol / (h * h)
        diag[j] += c
        if j + 1 < cells:
            diag[j + 1] += c
            off[j] = -c
    return diag, off


def _tridiag_solve_loop(diag, off, rhs):
    # Thomas algorithm, symmetric tridiagonal
    size = diag.shape[0]
    cp = np.zeros(size)
    dp = np.zeros(size)
    x = np.zeros(size)
    cp[0] = off[0] / diag[0] if size > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, size):
        denom = diag[i] - off[i - 1] * cp[i - 1]
        if i < size - 1:
            cp[i] = off[i] / denom
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / denom
    x[size - 1] = dp[size - 1]
    for i in range(size - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


if numba is not None:
    _jit = numba.njit(cache=True)
    _pow = _jit(_pow)
    _energy_sums_jit = _jit(_energy_sums_loop)
    _cell_lq_jit = _jit(_cell_lq_loop)
    _gradient_jit = _jit(_gradient_loop)
    _stiffness_jit = _jit(_stiffness_loop)
    tridiag_solve_numba = _jit(_tridiag_solve_loop)
else:  # pragma: no cover
    _energy_sums_jit = _energy_sums_loop
    _cell_lq_jit = _cell_lq_loop
    _gradient_jit = _gradient_loop
    _stiffness_jit = _stiffness_loop
    tridiag_solve_numba = _tridiag_solve_loop


def energy_sums_numba(r, u, n, beta, k, q):
    return _energy_sums_jit(r, u, int(n), float(beta), float(k), float(q), GL_T, GL_W)


def cell_lq_numba(r, u, n, q):
    return _cell_lq_jit(r, u, int(n), float(q), GL_T, GL_W)


def gradient_numba(r, u, n, beta, k, q):
    return _gradient_jit(r, u, int(n), float(beta), float(k), float(q), GL_T, GL_W)


def stiffness_numba(r, u, n, beta, k):
    return _stiffness_jit(r, u, int(n), float(beta), float(k), GL_T, GL_W)


if USE_NUMBA:
    energy_sums = energy_sums_numba
    cell_lq = cell_lq_numba
    gradient = gradient_numba
    stiffness = stiffness_numba
    tridiag_solve = tridiag_solve_numba
else:
    energy_sums = energy_sums_numpy
    cell_lq = cell_lq_numpy
    gradient = gradient_numpy
    stiffness = stiffness_numpy
    tridiag_solve = tridiag_solve_numpy


def backend():
    return "numba" if USE_NUMBA else "numpy"
