"""Hot loops: exponential sums and pair enumeration.

Every kernel exists twice: a numba version (``_nb_*``) and a pure-numpy
version (``_np_*``). The public names dispatch on ``USING_NUMBA``; both
variants stay importable so they can be checked against each other.
"""
import numpy as np

from ._accel import USING_NUMBA, njit, prange

TWO_PI = 2.0 * np.pi

# grid points advanced by complex multiplication between exact re-seeds
_BLOCK = 64
# max elements of a temporary phase matrix in the numpy path
_CHUNK = 1 << 21


def _as_points(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return np.ascontiguousarray(x)


# --------------------------------------------------------------------------
# exponential sums S(k) = sum_n w_n exp(-2 pi i <k, x_n>)

def _np_exp_sum(x, w, k):
    x = _as_points(x)
    k = _as_points(k)
    w = np.asarray(w, dtype=np.complex128)
    out = np.empty(k.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // max(1, x.shape[0]))
    for s in range(0, k.shape[0], step):
        t = k[s:s + step] @ x.T
        t -= np.floor(t)
        out[s:s + step] = np.exp(-1j * TWO_PI * t) @ w
    return out


@njit(cache=True, parallel=True)
def _nb_exp_sum_impl(x, w, k):
    ng, d = k.shape
    n = x.shape[0]
    out = np.zeros(ng, dtype=np.complex128)
    for g in prange(ng):
        re = 0.0
        im = 0.0
        for i in range(n):
            t = 0.0
            for j in range(d):
                t += k[g, j] * x[i, j]
            t -= np.floor(t)
            c = np.cos(TWO_PI * t)
            s = -np.sin(TWO_PI * t)
            re += w[i].real * c - w[i].imag * s
            im += w[i].real * s + w[i].imag * c
        out[g] = complex(re, im)
    return out


def _nb_exp_sum(x, w, k):
    return _nb_exp_sum_impl(_as_points(x), np.asarray(w, dtype=np.complex128), _as_points(k))


def _np_exp_sum_uniform(x, w, k):
    # numpy has no cheaper route than the direct phase matrix
    return _np_exp_sum(x, w, k)


@njit(cache=True, inline="always")
def _cis(t):
    t -= np.floor(t)
    return complex(np.cos(TWO_PI * t), -np.sin(TWO_PI * t))


@njit(cache=True, parallel=True)
def _nb_exp_sum_uniform_impl(x, w, k, dk):
    ng = k.shape[0]
    n = x.shape[0]
    nblocks = (ng + _BLOCK - 1) // _BLOCK
    out = np.zeros(ng, dtype=np.complex128)
    n4 = n - n % 4
    for blk in prange(nblocks):
        g0 = blk * _BLOCK
        span = min(g0 + _BLOCK, ng) - g0
        acc = np.zeros(span, dtype=np.complex128)
        # four independent phase chains per pass hide multiply latency
        for i in range(0, n4, 4):
            z0 = w[i] * _cis(k[g0] * x[i])
            z1 = w[i + 1] * _cis(k[g0] * x[i + 1])
            z2 = w[i + 2] * _cis(k[g0] * x[i + 2])
            z3 = w[i + 3] * _cis(k[g0] * x[i + 3])
            s0 = _cis(dk * x[i])
            s1 = _cis(dk * x[i + 1])
            s2 = _cis(dk * x[i + 2])
            s3 = _cis(dk * x[i + 3])
            for g in range(span):
                acc[g] += (z0 + z1) + (z2 + z3)
                z0 *= s0
                z1 *= s1
                z2 *= s2
                z3 *= s3
        for i in range(n4, n):
            z = w[i] * _cis(k[g0] * x[i])
            s = _cis(dk * x[i])
            for g in range(span):
                acc[g] += z
                z *= s
        for g in range(span):
            out[g0 + g] = acc[g]
    return out


def _nb_exp_sum_uniform(x, w, k):
    k = np.ascontiguousarray(k, dtype=np.float64)
    dk = (k[-1] - k[0]) / (len(k) - 1) if len(k) > 1 else 0.0
    return _nb_exp_sum_uniform_impl(
        np.ascontiguousarray(x, dtype=np.float64), np.asarray(w, dtype=np.complex128), k, dk
    )


def is_uniform(k, rtol=1e-12):
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 1 or len(k) < 3:
        return False
    ref = np.linspace(k[0], k[-1], len(k))
    return bool(np.max(np.abs(k - ref)) <= rtol * max(1.0, np.max(np.abs(k))))


def exp_sum(x, w, k):
    """Direct summation of ``sum_n w_n exp(-2 pi i <k, x_n>)`` for every k.

    ``x`` is ``(N,)`` or ``(N, d)``; ``k`` is ``(G,)`` or ``(G, d)``. For 1-D
    uniform grids the numba path steps the phase factor by multiplication
    inside blocks of 64 wavenumbers and re-seeds exactly at each block start.
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    w = np.asarray(w, dtype=np.complex128)
    if x.shape[0] == 0:
        return np.zeros(k.shape[0], dtype=np.complex128)
    if not USING_NUMBA:
        return _np_exp_sum(x, w, k)
    if x.ndim == 1 and k.ndim == 1 and is_uniform(k):
        return _nb_exp_sum_uniform(x, w, k)
    return _nb_exp_sum(x, w, k)


# --------------------------------------------------------------------------
# pair enumeration for autocorrelation tables

def _np_pairs(x, keys, w, maxdist):
    x = _as_points(x)
    keys = np.asarray(keys, dtype=np.int64)
    if keys.ndim == 1:
        keys = keys[:, None]
    n = x.shape[0]
    dx, dkey, cf = [], [], []
    for s in range(1, n):
        lead = x[s:, 0] - x[:-s, 0]
        if lead.min() > maxdist:
            break
        diff = x[s:] - x[:-s]
        ok = np.sqrt(np.sum(diff * diff, axis=1)) <= maxdist
        if not ok.any():
            continue
        dx.append(diff[ok])
        dkey.append((keys[s:] - keys[:-s])[ok])
        cf.append((w[s:] * np.conj(w[:-s]))[ok])
    if not dx:
        return (np.empty((0, x.shape[1])), np.empty((0, keys.shape[1]), dtype=np.int64),
                np.empty(0, dtype=np.complex128))
    return np.concatenate(dx), np.concatenate(dkey), np.concatenate(cf)


@njit(cache=True)
def _nb_pairs_impl(x, keys, w, maxdist):
    n, d = x.shape
    m = keys.shape[1]
    md2 = maxdist * maxdist
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if x[j, 0] - x[i, 0] > maxdist:
                break
            r2 = 0.0
            for c in range(d):
                r2 += (x[j, c] - x[i, c]) ** 2
            if r2 <= md2:
                count += 1
    dx = np.empty((count, d))
    dkey = np.empty((count, m), dtype=np.int64)
    cf = np.empty(count, dtype=np.complex128)
    p = 0
    for i in range(n):
        for j in range(i + 1, n):
            if x[j, 0] - x[i, 0] > maxdist:
                break
            r2 = 0.0
            for c in range(d):
                r2 += (x[j, c] - x[i, c]) ** 2
            if r2 <= md2:
                for c in range(d):
                    dx[p, c] = x[j, c] - x[i, c]
                for c in range(m):
                    dkey[p, c] = keys[j, c] - keys[i, c]
                cf[p] = w[j] * np.conj(w[i])
                p += 1
    return dx, dkey, cf


def _nb_pairs(x, keys, w, maxdist):
    keys = np.asarray(keys, dtype=np.int64)
    if keys.ndim == 1:
        keys = keys[:, None]
    return _nb_pairs_impl(_as_points(x), np.ascontiguousarray(keys),
                          np.asarray(w, dtype=np.complex128), float(maxdist))


def pairs(x, keys, w, maxdist):
    """All ordered pairs ``j > i`` of sorted points within ``maxdist``.

    Returns ``(x_j - x_i, key_j - key_i, w_j * conj(w_i))`` row-aligned in a
    fixed order; the order differs between the two backends. ``keys`` holds
    exact integer coordinates, or zeros when positions are only real.
    """
    if USING_NUMBA:
        return _nb_pairs(x, keys, w, maxdist)
    return _np_pairs(x, keys, w, maxdist)
