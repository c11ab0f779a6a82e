"""Closed-form diffraction measures.

Fourier convention: ``f^(k) = int exp(-2 pi i <k|x>) f(x) dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import kernels
from .generators import CPSSpec, CrystalSpec, thue_morse_word
from .goldenring import SQRT5, TAU, GoldenInt, embed, star

# |amplitude|^2 below this fraction of the maximal possible value is an extinction
EXTINCTION_RTOL = 1e-20

FIB_DENSITY = (TAU + 2.0) / 5.0
FIB_CENTRAL_INTENSITY = (TAU + 1.0) / 5.0


@dataclass
class SpectralMeasure:
    """Finite representation of ``pp + sc + ac`` parts of a diffraction measure.

    ``pp_k`` is ``(n,)`` (or ``(n, d)`` for d > 1) with strictly positive
    ``pp_intensity``. ``ac_k``/``ac_density`` and ``sc_k``/``sc_F`` are
    samples; ``ac_fn`` optionally evaluates the density anywhere.
    """

    pp_k: np.ndarray = field(default_factory=lambda: np.empty(0))
    pp_intensity: np.ndarray = field(default_factory=lambda: np.empty(0))
    ac_k: np.ndarray = field(default_factory=lambda: np.empty(0))
    ac_density: np.ndarray = field(default_factory=lambda: np.empty(0))
    sc_k: np.ndarray = field(default_factory=lambda: np.empty(0))
    sc_F: np.ndarray = field(default_factory=lambda: np.empty(0))
    ac_fn: Callable | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("pp_k", "pp_intensity", "ac_k", "ac_density", "sc_k", "sc_F"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.pp_intensity.shape[0] != self.pp_k.shape[0]:
            raise ValueError("pp positions and intensities differ in length")
        if np.any(self.pp_intensity <= 0):
            raise ValueError("pp intensities must be strictly positive; omit extinctions")
        if self.ac_k.shape != self.ac_density.shape or np.any(self.ac_density < 0):
            raise ValueError("ac density samples must be nonnegative and match the grid")
        if self.sc_k.shape != self.sc_F.shape or np.any(np.diff(self.sc_F) < 0):
            raise ValueError("sc distribution samples must be nondecreasing")

    def density(self, k):
        if self.ac_fn is None:
            raise ValueError("measure has no absolutely continuous density function")
        return self.ac_fn(k)

    @property
    def has_pp(self) -> bool:
        return self.pp_k.shape[0] > 0


@dataclass
class DistributionFn:
    """Samples of ``F(k) = mu([0, k])`` on an increasing grid in ``[0, 1]``.

    ``increments`` are the masses of the grid cells, computed directly rather
    than as differences of ``values`` so that cells of mass far below
    ``eps * F`` keep their (positive) value.
    """

    grid: np.ndarray
    values: np.ndarray
    method: str
    increments: np.ndarray | None = None
    alt_values: np.ndarray | None = None
    alt_method: str | None = None
    discrepancy: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.values[0] != 0 or np.any(np.diff(self.values) < 0):
            raise ValueError("distribution function must start at 0 and be nondecreasing")

    @property
    def strictly_increasing(self) -> bool:
        inc = self.increments if self.increments is not None else np.diff(self.values)
        return bool(np.all(inc > 0))


class TMDistributionError(ArithmeticError):
    """The two constructions of the Thue-Morse distribution function disagree."""

    def __init__(self, msg, grid, trapezoid, fourier):
        super().__init__(msg)
        self.grid = grid
        self.trapezoid = trapezoid
        self.fourier = fourier


def sinc(x):
    """``sin(x)/x`` with value 1 at 0; short Taylor series for ``|x| < 1e-4``."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# crystals


def dual_basis(basis) -> np.ndarray:
    """Columns generate the dual lattice: inverse transpose of ``basis``."""
    return np.linalg.inv(np.asarray(basis, dtype=np.float64)).T


def _structure_factor(spec: CrystalSpec, m: np.ndarray) -> np.ndarray:
    # <k|x> with k = B^-T m and x = B f reduces to <m|f>
    out = np.zeros(m.shape[0], dtype=np.complex128)
    for frac, wgt in spec.motif:
        t = m @ np.asarray(frac)
        t -= np.floor(t)
        out += wgt * np.exp(-2j * np.pi * t)
    return out


def crystal_diffraction(spec: CrystalSpec, kmax: float) -> SpectralMeasure:
    """Bragg peaks ``dens^2 |mu^(k)|^2`` at dual-lattice points ``|k| <= kmax``."""
    if not kmax > 0:
        raise ValueError("kmax must be positive")
    d = spec.dim
    dual = dual_basis(spec.basis)
    # m = B^T k, so |m_i| <= kmax * |column i of B|
    reach = kmax * np.sqrt(np.sum(spec.basis * spec.basis, axis=0))
    ranges = [np.arange(-math.ceil(r) - 1, math.ceil(r) + 2) for r in reach]
    m = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d).astype(np.float64)
    k = m @ dual.T
    inside = np.sqrt(np.sum(k * k, axis=1)) <= kmax * (1 + 1e-12)
    m, k = m[inside], k[inside]
    dens = spec.density
    inten = dens**2 * np.abs(_structure_factor(spec, m)) ** 2
    wsum = sum(abs(w) for _, w in spec.motif)
    keep = inten > EXTINCTION_RTOL * (dens * wsum) ** 2
    m, k, inten = m[keep], k[keep], inten[keep]
    order = np.lexsort(k.T[::-1])
    k, inten, m = k[order], inten[order], m[order]
    if d == 1:
        k = k[:, 0]
    return SpectralMeasure(pp_k=k, pp_intensity=inten,
                           meta={"formula": "crystal", "kmax": kmax, "density": dens,
                                 "dual_index": m.astype(np.int64).tolist()})


def two_atom_intensity(k1, k2, alpha=1.0, a=0.5, b=0.5):
    """``|1 + alpha exp(-2 pi i (k1 a + k2 b))|^2``."""
    k1 = np.asarray(k1, dtype=np.float64)
    k2 = np.asarray(k2, dtype=np.float64)
    t = k1 * a + k2 * b
    t = t - np.floor(t)
    out = np.abs(1.0 + alpha * np.exp(-2j * np.pi * t)) ** 2
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# model sets


def window_transform(q, lo: float, hi: float):
    """Fourier transform of the indicator of ``(lo, hi]`` at ``q``."""
    q = np.asarray(q, dtype=np.float64)
    length = hi - lo
    return np.exp(-1j * np.pi * q * (lo + hi)) * length * sinc(np.pi * length * q)


def model_set_spectrum(cps: CPSSpec, kmax: float, threshold: float, kstar_max: float | None = None) -> SpectralMeasure:
    """Bragg peaks of the model set on ``|k| <= kmax`` with intensity >= threshold.

    The Fourier module is the projection of the dual of the embedding
    lattice; each dual point gives a pair ``(k, k_star)`` and intensity
    ``(dens / vol W)^2 |1_W^(-k_star)|^2``. With ``threshold == 0`` the
    internal coordinate must be cut off explicitly by ``kstar_max``
    (default 50).
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if not kmax > 0:
        raise ValueError("kmax must be positive")
    lo, hi = float(cps.lo), float(cps.hi)
    length = hi - lo
    dens = cps.density
    if kstar_max is None:
        kstar_max = dens / (math.pi * length * math.sqrt(threshold)) if threshold > 0 else 50.0
    basis = cps.basis
    dual = dual_basis(basis)  # rows are dual generators as (k, k_star)
    mmax = kmax * abs(basis[0, 0]) + kstar_max * abs(basis[0, 1])
    nmax = kmax * abs(basis[1, 0]) + kstar_max * abs(basis[1, 1])
    mm, nn = np.meshgrid(np.arange(-math.ceil(mmax) - 1, math.ceil(mmax) + 2),
                         np.arange(-math.ceil(nmax) - 1, math.ceil(nmax) + 2), indexing="ij")
    mm, nn = mm.ravel(), nn.ravel()
    pts = np.stack([mm, nn], axis=1).astype(np.float64) @ dual
    k, ks = pts[:, 0], pts[:, 1]
    sel = (np.abs(k) <= kmax * (1 + 1e-12)) & (np.abs(ks) <= kstar_max)
    mm, nn, k, ks = mm[sel], nn[sel], k[sel], ks[sel]
    amp = dens / length * window_transform(-ks, lo, hi)
    inten = np.abs(amp) ** 2
    x = length * ks
    nearest = np.rint(x)
    extinct = (nearest != 0) & (np.abs(x - nearest) <= 1e-9 * np.maximum(1.0, np.abs(x)))
    keep = ~extinct & (inten > EXTINCTION_RTOL * dens**2) & (inten >= threshold)
    order = np.argsort(k[keep], kind="stable")
    meta = {"formula": "model-set", "kmax": kmax, "threshold": threshold, "kstar_max": kstar_max,
            "window": [str(cps.lo), str(cps.hi)], "density": dens}
    out = SpectralMeasure(pp_k=k[keep][order], pp_intensity=inten[keep][order], meta=meta)
    out.meta["k_star"] = ks[keep][order].tolist()
    if cps.is_golden:
        # k * sqrt5 = m (tau - 1) + n  =>  label (n - m) + m tau
        mk, nk = mm[keep][order], nn[keep][order]
        out.meta["label"] = np.stack([nk - mk, mk], axis=1).astype(np.int64).tolist()
    return out


def golden_wavenumber(y: GoldenInt) -> float:
    """The point ``y / sqrt5`` of the Fibonacci Fourier module."""
    return embed(y) / SQRT5


def fibonacci_intensity(y: GoldenInt) -> float:
    """Bragg intensity at ``k = y / sqrt5`` for the window ``(-1, tau - 1]``.

    ``tau * k_star = -(tau * y_star) / sqrt5``; when ``tau * y_star`` equals
    ``n * sqrt5 = -n + 2n tau`` with ``n != 0`` the peak is extinct and 0.0
    is returned exactly.
    """
    t = GoldenInt(0, 1) * star(GoldenInt.coerce(y))
    if t.b % 2 == 0 and t.a == -(t.b // 2) and t.b != 0:
        return 0.0
    arg = -embed(t) / SQRT5
    return float((TAU / SQRT5 * sinc(math.pi * arg)) ** 2)


# --------------------------------------------------------------------------
# Thue-Morse


def _frac_dyadic(k, n):
    t = np.ldexp(np.asarray(k, dtype=np.float64), n)
    return t - np.floor(t)


def tm_riesz_partial(k, N: int):
    """``prod_{n<N} (1 - cos(2^(n+1) pi k))``; 1 for N = 0."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    k = np.asarray(k, dtype=np.float64)
    out = np.ones_like(k)
    for n in range(N):
        out = out * (1.0 - np.cos(2.0 * np.pi * _frac_dyadic(k, n)))
    return out if out.ndim else float(out)


def tm_exponential_sum(k, n: int):
    """``g_n(k)`` via ``g_{j+1} = (1 - exp(-2 pi i k 2^j)) g_j``, ``g_0 = 1``."""
    if not 0 <= n <= 24:
        raise ValueError("n must lie in [0, 24]")
    k = np.asarray(k, dtype=np.float64)
    g = np.ones(k.shape, dtype=np.complex128)
    for j in range(n):
        g = g * (1.0 - np.exp(-2j * np.pi * _frac_dyadic(k, j)))
    return g if g.ndim else complex(g)


def tm_correlations(order: int, mmax: int) -> tuple[np.ndarray, int]:
    """Integer sums ``c(m) = sum_l v_l v_(l+m)`` over a word of length ``2**order``.

    Returns ``(c[0..mmax], 2**order)``; ``eta(m) = c(m) / 2**order``. The sums
    come from an FFT and are rounded to the integers they must be.
    """
    v = thue_morse_word(order).astype(np.float64)
    L = len(v)
    if mmax >= L:
        raise ValueError("need mmax < word length")
    nfft = 1 << (2 * L - 1).bit_length()
    f = np.fft.rfft(v, nfft)
    ac = np.fft.irfft(f * np.conj(f), nfft)[: mmax + 1]
    c = np.rint(ac)
    if np.max(np.abs(ac - c)) > 0.25:
        raise ArithmeticError("FFT correlation lost integer exactness")
    c = c.astype(np.int64)
    # parity check: L - m products of +-1
    if np.any((c - (L - np.arange(mmax + 1))) % 2 != 0):
        raise ArithmeticError("correlation parity check failed")
    return c, L


def tm_distribution(N: int = 16, gridsize: int = 2**14 + 1, M: int = 2**14,
                    word_order: int | None = None, tol: float = 1e-3) -> DistributionFn:
    """Distribution function of the Thue-Morse diffraction on ``[0, 1]``.

    Computed twice: by trapezoidal integration of the depth-``N`` Riesz
    product on at least ``2**(N+4)`` intervals, and by the Fourier series
    ``k + sum_{m<=M} eta(m) sin(2 pi m k) / (pi m)`` with ``eta`` taken from a
    Thue-Morse word of order ``word_order`` (default ``N + 4``). Raises
    :class:`TMDistributionError` if the two differ by more than ``tol``.
    """
    if N < 1 or gridsize < 2:
        raise ValueError("need N >= 1 and gridsize >= 2")
    word_order = N + 4 if word_order is None else word_order
    cells = gridsize - 1
    sub = -(-(2 ** (N + 4)) // cells)
    fine = np.linspace(0.0, 1.0, cells * sub + 1)
    f = tm_riesz_partial(fine, N)
    h = 1.0 / (cells * sub)
    pieces = 0.5 * h * (f[1:] + f[:-1])
    masses = np.add.reduceat(pieces, np.arange(0, cells * sub, sub))
    grid = fine[::sub]
    F_trap = np.concatenate([[0.0], np.cumsum(masses)])

    c, L = tm_correlations(word_order, M)
    m = np.arange(1, M + 1)
    coef = (c[1:] / L) / (np.pi * m)
    # sum coef_m sin(2 pi m k) = -Im sum coef_m exp(-2 pi i k m)
    F_four = grid - kernels.exp_sum(m.astype(np.float64), coef.astype(np.complex128), grid).imag

    gap = float(np.max(np.abs(F_trap - F_four)))
    if gap > tol:
        raise TMDistributionError(f"trapezoid and Fourier constructions differ by {gap:.3g} > {tol}",
                                  grid, F_trap, F_four)
    return DistributionFn(grid, F_trap, "trapezoid", increments=masses, alt_values=F_four,
                          alt_method="fourier", discrepancy=gap,
                          meta={"N": N, "M": M, "word_order": word_order, "fine_intervals": cells * sub})


# --------------------------------------------------------------------------
# absolutely continuous examples


def rs_diffraction(grid=None) -> SpectralMeasure:
    """Lebesgue measure: density 1 everywhere, no pp or sc part."""
    grid = np.empty(0) if grid is None else np.asarray(grid, dtype=np.float64)

    def one(k):
        k = np.asarray(k, dtype=np.float64)
        return np.ones_like(k) if k.ndim else 1.0

    return SpectralMeasure(ac_k=grid, ac_density=np.ones_like(grid), ac_fn=one,
                           meta={"formula": "rudin-shapiro"})


def _h_raw(k):
    s1 = np.sin(np.pi * k / TAU) ** 2
    num = FIB_DENSITY * s1
    den = TAU**2 * np.sin(np.pi * k * TAU) ** 2 + TAU * np.sin(np.pi * k) ** 2 - s1
    return num, den


def random_fibonacci_density(k, eps: float = 1e-6):
    """Density of the absolutely continuous part for the random Fibonacci tiling.

    Where numerator and denominator both vanish (only near k = 0), the
    removable value is replaced by the mean of the values at ``k +- eps``.
    """
    k = np.asarray(k, dtype=np.float64)
    num, den = _h_raw(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    both = (np.abs(num) < 1e-20) & (np.abs(den) < 1e-20)
    if np.any(both):
        kb = k[both] if k.ndim else k
        np_, dp = _h_raw(kb + eps)
        nm, dm = _h_raw(kb - eps)
        fill = 0.5 * (np_ / dp + nm / dm)
        if k.ndim:
            out[both] = fill
        else:
            out = fill
    bad = ~np.isfinite(out)
    if np.any(bad):
        where = k[bad][0] if k.ndim else k
        raise FloatingPointError(f"random tiling density not finite at k = {float(where)!r}")
    return out if np.ndim(out) else float(out)


def random_fibonacci_spectrum(grid) -> SpectralMeasure:
    """Bragg peak ``((tau+2)/5)^2`` at 0 plus the density sampled on ``grid``."""
    grid = np.asarray(grid, dtype=np.float64)
    return SpectralMeasure(pp_k=np.array([0.0]), pp_intensity=np.array([FIB_DENSITY**2]),
                           ac_k=grid, ac_density=random_fibonacci_density(grid),
                           ac_fn=random_fibonacci_density, meta={"formula": "random-fibonacci"})
