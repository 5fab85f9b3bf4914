"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a ``@njit`` loop version and a vectorised numpy
version with identical semantics.  The public names at the bottom of this
module point at one or the other.  Set ``GMLIGHT_DISABLE_NUMBA=1`` before
import to force the numpy path (numba missing has the same effect).
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("GMLIGHT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy reference path


def _np_nearest(dirs, anchors):
    dots = np.clip(dirs @ anchors.T, -1.0, 1.0)
    # arccos is strictly decreasing, so max clipped dot == min angle; argmax keeps the first index
    return np.argmax(dots, axis=1).astype(np.int64)


def _np_gaussian_raster(dirs, anchors, weights, s):
    out = np.zeros((dirs.shape[0], 3))
    active = np.flatnonzero(np.any(weights != 0.0, axis=1))
    if active.size == 0:
        return out
    lobes = np.exp((dirs @ anchors[active].T - 1.0) / s)
    return lobes @ weights[active]


def _np_gibbs(f, g, cost, eps):
    return np.exp((f[:, None] + g[None, :] - cost) / eps)


def _lse_rows(z):
    mx = z.max(axis=1)
    return mx + np.log(np.exp(z - mx[:, None]).sum(axis=1))


def _np_ctransform_rows(g, logu, cost, eps, kappa):
    return kappa * eps * (logu - _lse_rows((g[None, :] - cost) / eps))


def _np_ctransform_cols(f, logv, cost, eps, kappa):
    return kappa * eps * (logv - _lse_rows((f[:, None] - cost).T / eps))


def _np_sweeps(f, g, logu, logv, cost, eps, rho, iters):
    kappa = 1.0 if math.isinf(rho) else rho / (rho + eps)
    u = np.exp(logu)
    v = np.exp(logv)
    for _ in range(iters):
        f[:] = _np_ctransform_rows(g, logu, cost, eps, kappa)
        g[:] = _np_ctransform_cols(f, logv, cost, eps, kappa)
        if not math.isinf(rho):
            shift = 0.5 * rho * (math.log(np.sum(u * np.exp(-f / rho))) - math.log(np.sum(v * np.exp(-g / rho))))
            f += shift
            g -= shift


# ---------------------------------------------------------------------------
# numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_nearest(dirs, anchors):
        npix = dirs.shape[0]
        n = anchors.shape[0]
        out = np.empty(npix, dtype=np.int64)
        for p in range(npix):
            best = -2.0
            arg = 0
            for k in range(n):
                d = dirs[p, 0] * anchors[k, 0] + dirs[p, 1] * anchors[k, 1] + dirs[p, 2] * anchors[k, 2]
                if d > 1.0:
                    d = 1.0
                elif d < -1.0:
                    d = -1.0
                if d > best:
                    best = d
                    arg = k
            out[p] = arg
        return out

    @njit(cache=True)
    def _nb_gaussian_raster(dirs, anchors, weights, s):
        npix = dirs.shape[0]
        n = anchors.shape[0]
        out = np.zeros((npix, 3))
        for p in range(npix):
            r = 0.0
            gr = 0.0
            b = 0.0
            for k in range(n):
                if weights[k, 0] == 0.0 and weights[k, 1] == 0.0 and weights[k, 2] == 0.0:
                    continue
                d = dirs[p, 0] * anchors[k, 0] + dirs[p, 1] * anchors[k, 1] + dirs[p, 2] * anchors[k, 2]
                e = math.exp((d - 1.0) / s)
                r += weights[k, 0] * e
                gr += weights[k, 1] * e
                b += weights[k, 2] * e
            out[p, 0] = r
            out[p, 1] = gr
            out[p, 2] = b
        return out

    @njit(cache=True)
    def _nb_gibbs(f, g, cost, eps):
        n, m = cost.shape
        out = np.empty((n, m))
        for i in range(n):
            for j in range(m):
                out[i, j] = math.exp((f[i] + g[j] - cost[i, j]) / eps)
        return out

    @njit(cache=True)
    def _nb_ctransform_rows(g, logu, cost, eps, kappa):
        n, m = cost.shape
        out = np.empty(n)
        for i in range(n):
            mx = -np.inf
            for j in range(m):
                t = (g[j] - cost[i, j]) / eps
                if t > mx:
                    mx = t
            acc = 0.0
            for j in range(m):
                acc += math.exp((g[j] - cost[i, j]) / eps - mx)
            out[i] = kappa * eps * (logu[i] - mx - math.log(acc))
        return out

    @njit(cache=True)
    def _nb_ctransform_cols(f, logv, cost, eps, kappa):
        n, m = cost.shape
        mx = np.full(m, -np.inf)
        for i in range(n):
            for j in range(m):
                t = (f[i] - cost[i, j]) / eps
                if t > mx[j]:
                    mx[j] = t
        acc = np.zeros(m)
        for i in range(n):
            for j in range(m):
                acc[j] += math.exp((f[i] - cost[i, j]) / eps - mx[j])
        out = np.empty(m)
        for j in range(m):
            out[j] = kappa * eps * (logv[j] - mx[j] - math.log(acc[j]))
        return out

    @njit(cache=True)
    def _nb_sweeps(f, g, logu, logv, cost, eps, rho, iters):
        balanced = math.isinf(rho)
        kappa = 1.0 if balanced else rho / (rho + eps)
        for _ in range(iters):
            f[:] = _nb_ctransform_rows(g, logu, cost, eps, kappa)
            g[:] = _nb_ctransform_cols(f, logv, cost, eps, kappa)
            if not balanced:
                a = 0.0
                for i in range(f.shape[0]):
                    a += math.exp(logu[i] - f[i] / rho)
                b = 0.0
                for j in range(g.shape[0]):
                    b += math.exp(logv[j] - g[j] / rho)
                shift = 0.5 * rho * (math.log(a) - math.log(b))
                f += shift
                g -= shift


if USE_NUMBA:
    nearest_indices = _nb_nearest
    gaussian_raster = _nb_gaussian_raster
    gibbs = _nb_gibbs
    ctransform_rows = _nb_ctransform_rows
    ctransform_cols = _nb_ctransform_cols
    sweeps = _nb_sweeps
else:
    nearest_indices = _np_nearest
    gaussian_raster = _np_gaussian_raster
    gibbs = _np_gibbs
    ctransform_rows = _np_ctransform_rows
    ctransform_cols = _np_ctransform_cols
    sweeps = _np_sweeps
