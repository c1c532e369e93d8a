"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorized
numpy version. The public wrappers dispatch on :func:`bosoncap._accel.use_numba`
so both paths stay exercised and can be benchmarked against each other
(see ``benchmarks/bench_kernels.py``).
"""
import math

import numpy as np

from ._accel import njit, use_numba

__all__ = [
    "batched_logdet_spd",
    "gaussian_llr",
    "blahut_arimoto",
    "single_mode_mi_grid",
]


# --------------------------------------------------------------------------
# log-determinant of a stack of symmetric positive definite matrices
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _logdet_spd_numba(mats):
    t, k, _ = mats.shape
    out = np.empty(t)
    low = np.empty((k, k))
    for b in range(t):
        acc = 0.0
        for i in range(k):
            for j in range(i + 1):
                s = mats[b, i, j]
                for m in range(j):
                    s -= low[i, m] * low[j, m]
                if i == j:
                    if s <= 0.0:
                        acc = np.nan
                        low[i, i] = 1.0
                    else:
                        low[i, i] = math.sqrt(s)
                        acc += math.log(s)
                else:
                    low[i, j] = s / low[j, j]
        out[b] = acc
    return out


def _logdet_spd_numpy(mats):
    # eigenvalues rather than slogdet: an even number of negative
    # eigenvalues would otherwise pass as positive definite
    ev = np.linalg.eigvalsh(mats)
    ok = ev[:, 0] > 0
    return np.where(ok, np.sum(np.log(np.where(ok[:, None], ev, 1.0)), axis=1), np.nan)


def batched_logdet_spd(mats):
    """Natural log-determinant of each matrix in a ``(T, k, k)`` SPD stack.

    Non-positive-definite entries come back as NaN.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("expected a (T, k, k) stack of square matrices")
    if use_numba():
        return _logdet_spd_numba(mats)
    return _logdet_spd_numpy(mats)


# --------------------------------------------------------------------------
# per-sample Gaussian log-likelihood ratio  log p(y|d) - log p(y)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _gaussian_llr_numba(symbols, outcomes, prec_cond, prec_marg, offset):
    n, k = outcomes.shape
    out = np.empty(n)
    diff = np.empty(k)
    for s in range(n):
        for i in range(k):
            diff[i] = outcomes[s, i] - symbols[s, i]
        qc = 0.0
        qm = 0.0
        for i in range(k):
            rc = 0.0
            rm = 0.0
            for j in range(k):
                rc += prec_cond[i, j] * diff[j]
                rm += prec_marg[i, j] * outcomes[s, j]
            qc += diff[i] * rc
            qm += outcomes[s, i] * rm
        out[s] = offset - 0.5 * qc + 0.5 * qm
    return out


def _gaussian_llr_numpy(symbols, outcomes, prec_cond, prec_marg, offset):
    diff = outcomes - symbols
    qc = np.einsum("si,ij,sj->s", diff, prec_cond, diff)
    qm = np.einsum("si,ij,sj->s", outcomes, prec_marg, outcomes)
    return offset - 0.5 * qc + 0.5 * qm


def gaussian_llr(symbols, outcomes, prec_cond, prec_marg, offset):
    """Log-likelihood ratios (nats) for a linear Gaussian channel.

    Args:
        symbols: ``(N, k)`` channel inputs.
        outcomes: ``(N, k)`` channel outputs.
        prec_cond: inverse covariance of ``outcome - symbol``.
        prec_marg: inverse covariance of the output marginal (zero mean).
        offset: ``0.5 * (logdet(cov_marg) - logdet(cov_cond))``.
    """
    symbols = np.ascontiguousarray(symbols, dtype=np.float64)
    outcomes = np.ascontiguousarray(outcomes, dtype=np.float64)
    prec_cond = np.ascontiguousarray(prec_cond, dtype=np.float64)
    prec_marg = np.ascontiguousarray(prec_marg, dtype=np.float64)
    if use_numba():
        return _gaussian_llr_numba(symbols, outcomes, prec_cond, prec_marg, float(offset))
    return _gaussian_llr_numpy(symbols, outcomes, prec_cond, prec_marg, float(offset))


# --------------------------------------------------------------------------
# Blahut-Arimoto with capacity bounds as the stopping rule
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _blahut_arimoto_numba(w, tol, max_iter):
    nx, ny = w.shape
    p = np.full(nx, 1.0 / nx)
    q = np.empty(ny)
    div = np.empty(nx)
    lower = 0.0
    upper = 0.0
    it = 0
    while it < max_iter:
        it += 1
        for y in range(ny):
            acc = 0.0
            for x in range(nx):
                acc += p[x] * w[x, y]
            q[y] = acc
        for x in range(nx):
            acc = 0.0
            for y in range(ny):
                if w[x, y] > 0.0:
                    acc += w[x, y] * math.log(w[x, y] / q[y])
            div[x] = acc
        lower = 0.0
        upper = div[0]
        for x in range(nx):
            lower += p[x] * div[x]
            if div[x] > upper:
                upper = div[x]
        if upper - lower < tol:
            break
        total = 0.0
        for x in range(nx):
            p[x] = p[x] * math.exp(div[x] - upper)
            total += p[x]
        for x in range(nx):
            p[x] /= total
    return lower, upper, p, it


def _blahut_arimoto_numpy(w, tol, max_iter):
    nx = w.shape[0]
    p = np.full(nx, 1.0 / nx)
    logw = np.log(np.where(w > 0, w, 1.0))
    lower = upper = 0.0
    it = 0
    while it < max_iter:
        it += 1
        q = p @ w
        logq = np.log(np.where(q > 0, q, 1.0))
        div = np.sum(np.where(w > 0, w * (logw - logq), 0.0), axis=1)
        lower = float(p @ div)
        upper = float(div.max())
        if upper - lower < tol:
            break
        p = p * np.exp(div - upper)
        p /= p.sum()
    return lower, upper, p, it


def blahut_arimoto(w, tol=1e-11, max_iter=1_000_000):
    """Alternating maximization of I(X;Y) over the input prior.

    Returns ``(lower, upper, prior, iterations)`` with the bounds in nats;
    the true capacity lies in ``[lower, upper]``.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    if use_numba():
        lower, upper, p, it = _blahut_arimoto_numba(w, float(tol), int(max_iter))
    else:
        lower, upper, p, it = _blahut_arimoto_numpy(w, float(tol), int(max_iter))
    return float(lower), float(upper), np.asarray(p), int(it)


# --------------------------------------------------------------------------
# single-mode mutual information f(N1, r) on a grid
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _single_mode_grid_numba(n1, r, nbar, nth):
    a = n1.shape[0]
    b = r.shape[0]
    out = np.empty((a, b))
    c = 1.0 + 2.0 * nth
    inv_ln2 = 1.0 / math.log(2.0)
    for j in range(b):
        em = math.exp(-2.0 * r[j])
        ep = math.exp(2.0 * r[j])
        den = math.log(c + em) + math.log(c + ep)
        for i in range(a):
            num = math.log(2.0 * n1[i] + c + em) + math.log(4.0 * nbar - 2.0 * n1[i] + c + ep)
            out[i, j] = 0.5 * (num - den) * inv_ln2
    return out


def _single_mode_grid_numpy(n1, r, nbar, nth):
    c = 1.0 + 2.0 * nth
    n1 = n1[:, None]
    em = np.exp(-2.0 * r)[None, :]
    ep = np.exp(2.0 * r)[None, :]
    num = np.log(2.0 * n1 + c + em) + np.log(4.0 * nbar - 2.0 * n1 + c + ep)
    den = np.log(c + em) + np.log(c + ep)
    return 0.5 * (num - den) / np.log(2.0)


def single_mode_mi_grid(n1, r, nbar, nth):
    """Single-mode mutual information (bits) on the ``n1 x r`` grid."""
    n1 = np.ascontiguousarray(n1, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if use_numba():
        return _single_mode_grid_numba(n1, r, float(nbar), float(nth))
    return _single_mode_grid_numpy(n1, r, float(nbar), float(nth))
