"""Hot inner kernels: Levi-Civita coefficients, their derivatives and curvature.

Each kernel exists twice, as an explicit-loop ``numba.njit`` version and as a
pure-numpy ``einsum`` version. The jitted path is used when numba imports and
``GTORSION_DISABLE_NUMBA`` is unset (or ``0``); otherwise the numpy path runs.
Both paths are exported under explicit names so they can be compared directly.

Index conventions (shared by the whole package)::

    dg[a, b, k]        = d_k g_ab
    d2g[a, b, k, l]    = d_k d_l g_ab
    gamma[k, i, j]     = Gamma^k_ij,   nabla_{d_i} d_j = Gamma^k_ij d_k
    dgamma[k, i, j, d] = d_d Gamma^k_ij
    riem[l, k, i, j]   = R^l_kij,      R(d_i, d_j) d_k = R^l_kij d_l
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _numba_requested():
    flag = os.environ.get("GTORSION_DISABLE_NUMBA", "0").strip().lower()
    return flag in ("", "0", "false", "no")


USE_NUMBA = numba is not None and _numba_requested()


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------


def christoffel_numpy(ginv, dg):
    first = np.einsum("jli->lij", dg)
    second = np.einsum("ilj->lij", dg)
    third = np.einsum("ijl->lij", dg)
    return 0.5 * np.einsum("kl,lij->kij", ginv, first + second - third)


def christoffel_derivative_numpy(ginv, dg, d2g):
    lower = np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    dlower = (
        np.einsum("jlid->lijd", d2g)
        + np.einsum("iljd->lijd", d2g)
        - np.einsum("ijld->lijd", d2g)
    )
    dginv = -np.einsum("ka,abd,bl->kld", ginv, dg, ginv)
    return 0.5 * (
        np.einsum("kld,lij->kijd", dginv, lower) + np.einsum("kl,lijd->kijd", ginv, dlower)
    )


def riemann_numpy(gamma, dgamma):
    deriv = np.einsum("ljki->lkij", dgamma) - np.einsum("likj->lkij", dgamma)
    quad = np.einsum("lim,mjk->lkij", gamma, gamma) - np.einsum("ljm,mik->lkij", gamma, gamma)
    return deriv + quad


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def christoffel_numba(ginv, dg):
        n = ginv.shape[0]
        lower = np.empty((n, n, n))
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    lower[l, i, j] = 0.5 * (dg[j, l, i] + dg[i, l, j] - dg[i, j, l])
        out = np.zeros((n, n, n))
        for k in range(n):
            for l in range(n):
                c = ginv[k, l]
                for i in range(n):
                    for j in range(n):
                        out[k, i, j] += c * lower[l, i, j]
        return out

    @numba.njit(cache=True)
    def christoffel_derivative_numba(ginv, dg, d2g):
        n = ginv.shape[0]
        lower = np.empty((n, n, n))
        dlower = np.empty((n, n, n, n))
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    lower[l, i, j] = dg[j, l, i] + dg[i, l, j] - dg[i, j, l]
                    for d in range(n):
                        dlower[l, i, j, d] = d2g[j, l, i, d] + d2g[i, l, j, d] - d2g[i, j, l, d]
        dginv = np.zeros((n, n, n))
        for k in range(n):
            for l in range(n):
                for d in range(n):
                    acc = 0.0
                    for a in range(n):
                        for b in range(n):
                            acc += ginv[k, a] * dg[a, b, d] * ginv[b, l]
                    dginv[k, l, d] = -acc
        out = np.zeros((n, n, n, n))
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    for d in range(n):
                        acc = 0.0
                        for l in range(n):
                            acc += dginv[k, l, d] * lower[l, i, j] + ginv[k, l] * dlower[l, i, j, d]
                        out[k, i, j, d] = 0.5 * acc
        return out

    @numba.njit(cache=True)
    def riemann_numba(gamma, dgamma):
        n = gamma.shape[0]
        out = np.empty((n, n, n, n))
        for l in range(n):
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        acc = dgamma[l, j, k, i] - dgamma[l, i, k, j]
                        for m in range(n):
                            acc += gamma[l, i, m] * gamma[m, j, k] - gamma[l, j, m] * gamma[m, i, k]
                        out[l, k, i, j] = acc
        return out

else:  # pragma: no cover
    christoffel_numba = christoffel_numpy
    christoffel_derivative_numba = christoffel_derivative_numpy
    riemann_numba = riemann_numpy


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def christoffel(ginv, dg):
    if USE_NUMBA:
        return christoffel_numba(_f64(ginv), _f64(dg))
    return christoffel_numpy(ginv, dg)


def christoffel_derivative(ginv, dg, d2g):
    if USE_NUMBA:
        return christoffel_derivative_numba(_f64(ginv), _f64(dg), _f64(d2g))
    return christoffel_derivative_numpy(ginv, dg, d2g)


def riemann(gamma, dgamma):
    """Curvature of an arbitrary (possibly torsionful) linear connection."""
    if USE_NUMBA:
        return riemann_numba(_f64(gamma), _f64(dgamma))
    return riemann_numpy(gamma, dgamma)
