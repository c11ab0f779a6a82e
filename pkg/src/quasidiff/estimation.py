"""Brute-force spectral estimates on finite patches and comparison metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .analytic import SpectralMeasure
from .generators import (
    RandomSpec,
    WeightedComb,
    derive_seed,
    gen_bernoulli,
    gen_random_fibonacci_tiling,
    gen_rs_bernoulli,
    gen_rudin_shapiro,
    make_rng,
)
from .goldenring import embed_array

CLUSTER_TOL = 1e-9
DEFAULT_MAXDIST_FRACTION = 0.1


@dataclass
class AutocorrelationTable:
    """Finite-patch autocorrelation coefficients ``sum w(x) conj(w(y)) / vol``.

    ``distances`` is ``(M,)`` or ``(M, d)``; for exact combs ``exact`` holds
    the same differences as integers (``(M, 2)`` Z[tau] pairs or ``(M,)``).
    Entries are sorted by distance and symmetric under ``z -> -z``.
    """

    distances: np.ndarray
    coefficients: np.ndarray
    volume: float
    kind: str = "real"
    exact: np.ndarray | None = None

    def coefficient(self, z) -> complex:
        """Coefficient at ``z`` (exact key for exact tables); 0 if absent."""
        if self.kind == "golden":
            a, b = (z.a, z.b) if hasattr(z, "a") else z
            hit = np.flatnonzero((self.exact[:, 0] == a) & (self.exact[:, 1] == b))
        elif self.kind == "integer":
            hit = np.flatnonzero(self.exact == int(z))
        else:
            d = np.atleast_2d(self.distances.reshape(len(self.distances), -1))
            hit = np.flatnonzero(np.all(np.abs(d - np.atleast_1d(z)) <= CLUSTER_TOL, axis=1))
        return complex(self.coefficients[hit[0]]) if len(hit) else 0j

    def fourier(self, k) -> np.ndarray:
        """``sum_z coeff(z) exp(-2 pi i k z)``, real up to rounding."""
        return kernels.exp_sum(self.distances, self.coefficients, k).real


def _cluster(diffs: np.ndarray, tol: float) -> np.ndarray:
    """Cluster labels for real difference vectors, merging lexicographic neighbours."""
    d = diffs.reshape(len(diffs), -1)
    order = np.lexsort(d.T[::-1])
    labels = np.empty(len(d), dtype=np.int64)
    cur = -1
    rep = None
    for i in order:
        if rep is None or np.any(np.abs(d[i] - rep) > tol):
            cur += 1
            rep = d[i]
        labels[i] = cur
    return labels


def _unique_rows(keys: np.ndarray):
    """``np.unique(keys, axis=0, return_inverse=True)`` via a packed 1-D key when it fits."""
    if len(keys) == 0:
        return keys, np.empty(0, dtype=np.int64)
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    if np.prod(span.astype(np.float64)) >= 2**62:
        u, inv = np.unique(keys, axis=0, return_inverse=True)
        return u, inv.ravel()
    packed = np.zeros(len(keys), dtype=np.int64)
    for c in range(keys.shape[1]):
        packed = packed * span[c] + (keys[:, c] - lo[c])
    u, first, inv = np.unique(packed, return_index=True, return_inverse=True)
    return keys[first], inv.ravel()


def autocorrelation(comb: WeightedComb, maxdist: float | None = None) -> AutocorrelationTable:
    """Autocorrelation coefficients for all differences with ``|z| <= maxdist``.

    Differences are grouped exactly for Z[tau] and integer combs and by
    merging neighbours within 1e-9 otherwise. ``maxdist`` defaults to 10% of
    the patch extent and may not exceed it.
    """
    extent = max(hi - lo for lo, hi in comb.bounds)
    if maxdist is None:
        maxdist = DEFAULT_MAXDIST_FRACTION * extent
    if maxdist > extent or maxdist < 0:
        raise ValueError(f"maxdist {maxdist} outside [0, patch extent {extent}]")
    n = len(comb)
    if comb.kind == "golden":
        keys = comb.exact
    elif comb.kind == "integer":
        keys = comb.exact[:, None]
    else:
        keys = np.zeros((n, 1), dtype=np.int64)
    dx, dkey, cf = kernels.pairs(comb.points, keys, comb.weights, maxdist)

    if comb.kind == "real":
        labels = _cluster(dx, CLUSTER_TOL)
        nlab = int(labels.max()) + 1 if len(labels) else 0
        counts = np.bincount(labels, minlength=nlab)
        dist = np.zeros((nlab, dx.shape[1]))
        for c in range(dx.shape[1]):
            dist[:, c] = np.bincount(labels, weights=dx[:, c], minlength=nlab) / np.maximum(counts, 1)
        ukey = None
    else:
        ukey, labels = _unique_rows(dkey)
        nlab = len(ukey)
        if comb.kind == "golden":
            dist = embed_array(ukey[:, 0], ukey[:, 1])[:, None]
        else:
            dist = ukey[:, :1].astype(np.float64)
    coef = (np.bincount(labels, weights=cf.real, minlength=nlab)
            + 1j * np.bincount(labels, weights=cf.imag, minlength=nlab))

    d = comb.dim
    zero = np.zeros((1, d))
    c0 = np.array([np.sum(np.abs(comb.weights) ** 2)], dtype=np.complex128)
    dist_all = np.concatenate([-dist[::-1], zero, dist]) + 0.0
    coef_all = np.concatenate([np.conj(coef[::-1]), c0, coef]) / comb.volume
    exact = None
    if ukey is not None:
        z = np.zeros((1, ukey.shape[1]), dtype=np.int64)
        exact = np.concatenate([-ukey[::-1], z, ukey])
    order = np.lexsort(dist_all.T[::-1])
    dist_all, coef_all = dist_all[order], coef_all[order]
    if exact is not None:
        exact = exact[order]
        if comb.kind == "integer":
            exact = exact[:, 0]
    if d == 1:
        dist_all = dist_all[:, 0]
    return AutocorrelationTable(dist_all, coef_all, comb.volume, kind=comb.kind, exact=exact)


# --------------------------------------------------------------------------


@dataclass
class DiffractionEstimate:
    """Periodogram values on a wavenumber grid.

    ``normalization`` is ``"ac"`` (``|S|^2 / vol``, a density estimate) or
    ``"bragg"`` (``|S|^2 / vol^2``, a peak-intensity estimate).
    """

    grid: np.ndarray
    values: np.ndarray
    normalization: str
    volume: float
    realizations: int = 1
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.normalization not in ("ac", "bragg"):
            raise ValueError("normalization must be 'ac' or 'bragg'")
        if np.any(self.values < 0):
            raise ValueError("periodogram values must be nonnegative")
        if self.grid.ndim == 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")


def _normalize(S, volume, normalization):
    if normalization == "ac":
        return np.abs(S) ** 2 / volume
    if normalization == "bragg":
        return np.abs(S / volume) ** 2
    raise ValueError("normalization must be 'ac' or 'bragg'")


def periodogram(comb: WeightedComb, grid, normalization: str = "ac") -> DiffractionEstimate:
    """``|sum_x w(x) exp(-2 pi i k x)|^2`` over ``vol`` or ``vol^2`` by direct summation."""
    grid = np.asarray(grid, dtype=np.float64)
    S = kernels.exp_sum(comb.local_positions(), comb.weights, grid)
    return DiffractionEstimate(grid, _normalize(S, comb.volume, normalization), normalization,
                               comb.volume, meta={"system": comb.meta.get("system")})


ENSEMBLE_FAMILIES = ("bernoulli", "rs-bernoulli", "random-fibonacci", "rs")


def realization(family: str, spec: RandomSpec, index: int) -> WeightedComb:
    """Member ``index`` of an ensemble whose master seed is ``spec.seed``.

    Families containing the Rudin-Shapiro sequence are sampled as windows of
    length ``spec.count`` at an offset drawn uniformly from ``[-2**40, 2**40)``
    using sub-stream ``(1,)`` of the realization seed; the coin flips use the
    root stream. A fixed window would leave the deterministic RS part of the
    periodogram unaveraged.
    """
    seed = derive_seed(spec.seed, index)
    sub = RandomSpec(seed, spec.p, spec.count)
    if family == "bernoulli":
        return gen_bernoulli(sub)
    if family == "random-fibonacci":
        return gen_random_fibonacci_tiling(sub)
    if family in ("rs", "rs-bernoulli"):
        off = int(make_rng(seed, 1).integers(-(2**40), 2**40))
        window = (off, off + spec.count)
        return gen_rudin_shapiro(window) if family == "rs" else gen_rs_bernoulli(sub, window)
    raise ValueError(f"unknown ensemble family {family!r}; expected one of {ENSEMBLE_FAMILIES}")


def ensemble_periodogram(family: str | Callable[[int], WeightedComb], spec: RandomSpec, grid,
                         realizations: int, normalization: str = "ac") -> DiffractionEstimate:
    """Mean periodogram over ``realizations`` members, summed in index order."""
    if realizations < 1:
        raise ValueError("need at least one realization")
    grid = np.asarray(grid, dtype=np.float64)
    make = family if callable(family) else (lambda i: realization(family, spec, i))
    total = np.zeros(grid.shape[0])
    vol = 0.0
    for i in range(realizations):
        comb = make(i)
        S = kernels.exp_sum(comb.local_positions(), comb.weights, grid)
        total += _normalize(S, comb.volume, normalization)
        vol += comb.volume
    return DiffractionEstimate(grid, total / realizations, normalization, vol / realizations, realizations,
                               meta={"family": family if isinstance(family, str) else "custom",
                                     "master_seed": spec.seed, "p": spec.p, "count": spec.count})


def scaling_exponent(family: Sequence[WeightedComb], k: float) -> float:
    """Least-squares slope of ``log |S_L(k)|^2`` against ``log L``.

    About 2 at a Bragg peak, about 1 on an absolutely continuous background,
    strictly between for singular-continuous-type local scaling.
    """
    if len(family) < 4:
        raise ValueError("need at least 4 patch sizes")
    vols = np.array([c.volume for c in family])
    if np.any(np.diff(vols) <= 0):
        raise ValueError("volumes must be strictly increasing")
    power = np.array([abs(kernels.exp_sum(c.local_positions(), c.weights, np.array([k]))[0]) ** 2 for c in family])
    if np.any(power <= 0):
        raise ValueError("exponential sum vanishes; cannot take logarithms")
    slope, _ = np.polyfit(np.log(vols), np.log(power), 1)
    return float(slope)


# --------------------------------------------------------------------------


def _metric(est, ref, metric):
    if metric == "L1rel":
        return float(np.sum(np.abs(est - ref)) / np.sum(np.abs(ref)))
    if metric == "maxrel":
        return float(np.max(np.abs(est - ref) / np.abs(ref)))
    raise ValueError("metric must be 'L1rel' or 'maxrel'")


def compare(estimate: DiffractionEstimate, reference, region=(-np.inf, np.inf), metric: str = "L1rel",
            exclude=()) -> float:
    """Scalar discrepancy between an estimate and a reference.

    ``reference`` is a :class:`SpectralMeasure` or another estimate. Bragg
    estimates are compared only at reference peaks lying on the estimate's
    grid; density estimates pointwise on the grid inside ``region`` minus the
    ``exclude`` intervals.
    """
    grid = estimate.grid
    lo, hi = region
    mask = (grid >= lo) & (grid <= hi)
    for a, b in exclude:
        mask &= ~((grid >= a) & (grid <= b))

    if isinstance(reference, DiffractionEstimate):
        if reference.normalization != estimate.normalization:
            raise ValueError("normalizations differ")
        if reference.grid.shape == grid.shape and np.array_equal(reference.grid, grid):
            ref = reference.values
        else:
            ref = np.interp(grid, reference.grid, reference.values, left=np.nan, right=np.nan)
        sel = mask & np.isfinite(ref)
        if not sel.any():
            raise ValueError("empty overlap between estimate and reference")
        return _metric(estimate.values[sel], ref[sel], metric)

    if estimate.normalization == "bragg":
        pk = reference.pp_k
        inside = (pk >= lo) & (pk <= hi)
        for a, b in exclude:
            inside &= ~((pk >= a) & (pk <= b))
        pk, pi = pk[inside], reference.pp_intensity[inside]
        idx = np.searchsorted(grid, pk)
        est, ref = [], []
        for j, k, intensity in zip(idx, pk, pi):
            for cand in (j - 1, j):
                if 0 <= cand < len(grid) and abs(grid[cand] - k) <= 1e-9 * max(1.0, abs(k)):
                    est.append(estimate.values[cand])
                    ref.append(intensity)
                    break
        if not est:
            raise ValueError("no reference peak lies on the estimate grid")
        return _metric(np.array(est), np.array(ref), metric)

    if reference.ac_fn is not None:
        ref = np.asarray(reference.ac_fn(grid[mask]), dtype=np.float64)
    elif reference.ac_k.size:
        ref = np.interp(grid[mask], reference.ac_k, reference.ac_density, left=np.nan, right=np.nan)
    else:
        raise ValueError("reference has no absolutely continuous part")
    est = estimate.values[mask]
    ok = np.isfinite(ref)
    if not ok.any():
        raise ValueError("empty overlap between estimate and reference")
    return _metric(est[ok], ref[ok], metric)


def threshold_peaks(spectrum: SpectralMeasure, threshold: float):
    """Peaks with intensity >= threshold as ``(k, intensity)`` sorted by position."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    keep = spectrum.pp_intensity >= threshold
    k, inten = spectrum.pp_k[keep], spectrum.pp_intensity[keep]
    if k.ndim == 1:
        order = np.argsort(k, kind="stable")
    else:
        order = np.lexsort(k.T[::-1])
    k, inten = k[order], inten[order]
    if len(k) > 1:
        gaps = np.diff(k) if k.ndim == 1 else np.linalg.norm(np.diff(k, axis=0), axis=1)
        assert gaps.min() > 0, "thresholded peak set must be uniformly discrete"
    return k, inten
