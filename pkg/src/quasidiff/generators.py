"""Finite patches of weighted Dirac combs for every point-set family.

Random generators draw from numpy's PCG64 seeded through ``SeedSequence``;
see :func:`make_rng` and :func:`derive_seed` for the stream rule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .goldenring import (
    SQRT5,
    TAU,
    GoldenInt,
    GoldenRational,
    compare_scaled,
    embed_array,
    sign_golden,
)

log = logging.getLogger(__name__)

MAX_TM_ORDER = 24


@dataclass
class WeightedComb:
    """A finite patch ``sum_x w(x) delta_x``.

    ``positions`` is ``(N,)`` for d = 1 and ``(N, d)`` otherwise. ``exact``
    optionally carries the positions exactly: ``(N, 2)`` int64 ``(a, b)``
    pairs for Z[tau] positions (``kind == "golden"``) or ``(N,)`` int64 for
    integer positions (``kind == "integer"``).
    """

    positions: np.ndarray
    weights: np.ndarray
    bounds: tuple
    volume: float
    kind: str = "real"
    exact: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        self.volume = float(self.volume)
        if self.exact is not None:
            self.exact = np.asarray(self.exact, dtype=np.int64)
        self._validate()

    def _validate(self):
        n = self.positions.shape[0]
        if self.weights.shape != (n,):
            raise ValueError("one weight per position required")
        if not self.volume > 0:
            raise ValueError("patch volume must be positive")
        if len(self.bounds) != self.dim:
            raise ValueError("bounds must match the dimension")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if self.kind not in ("real", "golden", "integer"):
            raise ValueError(f"unknown position kind {self.kind!r}")
        if self.kind != "real" and (self.exact is None or self.exact.shape[0] != n):
            raise ValueError("exact positions missing")
        if n == 0:
            return
        pts = self.points
        for c, (lo, hi) in enumerate(self.bounds):
            if pts[:, c].min() < lo or pts[:, c].max() > hi:
                raise ValueError("positions must lie inside the patch")
        if self.dim == 1:
            if np.any(np.diff(self.positions) <= 0):
                raise ValueError("positions must be strictly increasing")
        elif n > 1:
            order = np.lexsort(pts.T[::-1])
            if np.any(order != np.arange(n)):
                raise ValueError("positions must be lexicographically ordered")
            if np.any(np.all(np.diff(pts, axis=0) == 0, axis=1)):
                raise ValueError("duplicate positions")

    @property
    def dim(self) -> int:
        return 1 if self.positions.ndim == 1 else self.positions.shape[1]

    @property
    def points(self) -> np.ndarray:
        """Positions as an ``(N, d)`` array."""
        return self.positions if self.positions.ndim == 2 else self.positions[:, None]

    def __len__(self):
        return self.positions.shape[0]

    @property
    def density(self) -> float:
        return len(self) / self.volume

    def local_positions(self) -> np.ndarray:
        """Positions shifted so the first point sits at the origin.

        Periodogram magnitudes are translation invariant; shifting keeps the
        phases accurate for windows far from 0. Exact combs shift exactly.
        """
        if len(self) == 0:
            return self.positions
        if self.kind == "integer":
            return (self.exact - self.exact[0]).astype(np.float64)
        if self.kind == "golden":
            d = self.exact - self.exact[0]
            return embed_array(d[:, 0], d[:, 1])
        return self.positions - self.positions[0]

    def golden(self, i: int) -> GoldenInt:
        if self.kind != "golden":
            raise TypeError("comb has no Z[tau] positions")
        return GoldenInt(int(self.exact[i, 0]), int(self.exact[i, 1]))


@dataclass(frozen=True)
class CrystalSpec:
    """Lattice (columns of ``basis``) decorated by a motif of weighted points.

    Motif positions are fractional coordinates in ``[0, 1)^d``.
    """

    basis: np.ndarray
    motif: tuple

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if basis.shape[0] != basis.shape[1] or basis.shape[0] > 3:
            raise ValueError("basis must be a square matrix of size at most 3")
        if abs(np.linalg.det(basis)) < 1e-12:
            raise ValueError("basis is singular")
        if not self.motif:
            raise ValueError("motif must be nonempty")
        d = basis.shape[0]
        motif = []
        for pos, wgt in self.motif:
            pos = np.atleast_1d(np.asarray(pos, dtype=np.float64))
            if pos.shape != (d,):
                raise ValueError("motif position has the wrong dimension")
            if np.any(pos < 0) or np.any(pos >= 1):
                raise ValueError("fractional motif coordinates must lie in [0, 1)")
            motif.append((tuple(pos.tolist()), complex(wgt)))
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "motif", tuple(motif))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def density(self) -> float:
        """Lattice density ``1 / |det basis|``."""
        return 1.0 / abs(np.linalg.det(self.basis))

    @classmethod
    def two_atom(cls, alpha=1.0, a=0.5, b=0.5) -> CrystalSpec:
        """Z^2 with unit weight at the origin and ``alpha`` at ``(a, b)``."""
        motif = [((0.0, 0.0), 1.0)]
        if alpha != 0:
            motif.append(((a, b), alpha))
        return cls(np.eye(2), tuple(motif))


FIBONACCI_BASIS = np.array([[1.0, 1.0], [TAU, 1.0 - TAU]])


@dataclass(frozen=True)
class CPSSpec:
    """Cut-and-project scheme with a half-open interval window ``(lo, hi]``.

    Rows of ``basis`` are ``(x, x_star)`` for the two lattice generators.
    Window endpoints are kept exactly in Q[tau].
    """

    lo: GoldenRational
    hi: GoldenRational
    basis: np.ndarray = field(default_factory=lambda: FIBONACCI_BASIS.copy())

    def __post_init__(self):
        lo = GoldenRational.coerce(self.lo)
        hi = GoldenRational.coerce(self.hi)
        # hi - lo > 0 exactly: hi.num*lo.den - lo.num*hi.den
        diff = hi.num * lo.den - lo.num * hi.den
        if sign_golden(diff.a, diff.b) <= 0:
            raise ValueError("window requires lo < hi")
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.shape != (2, 2) or abs(np.linalg.det(basis)) < 1e-12:
            raise ValueError("embedding basis must be a nonsingular 2x2 matrix")
        basis.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def fibonacci(cls, lo=GoldenInt(-1, 0), hi=GoldenInt(-1, 1)) -> CPSSpec:
        """Z[tau] with the Galois star map; default window ``(-1, tau - 1]``."""
        return cls(lo, hi)

    @property
    def window_length(self) -> float:
        return float(self.hi) - float(self.lo)

    @property
    def density(self) -> float:
        """Point density ``vol(W) / |det L|`` of the model set."""
        return self.window_length / abs(np.linalg.det(self.basis))

    @property
    def is_golden(self) -> bool:
        return bool(np.allclose(self.basis, FIBONACCI_BASIS, rtol=0, atol=1e-15))


@dataclass(frozen=True)
class RandomSpec:
    seed: int
    p: float = 0.5
    count: int | None = None

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 <= float(self.p) <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.count is not None and int(self.count) < 0:
            raise ValueError("count must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "p", float(self.p))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """PCG64 stream for ``seed``; ``key`` selects an independent sub-stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def derive_seed(master: int, index: int) -> int:
    """Seed of realization ``index`` in an ensemble driven by ``master``.

    ``SeedSequence(master, spawn_key=(index,))`` hashed down to one uint64.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _coin(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """``+1`` with probability p, else ``-1``; one uniform draw per entry."""
    return np.where(rng.random(n) < p, 1, -1).astype(np.int64)


# --------------------------------------------------------------------------


def gen_crystal_patch(spec: CrystalSpec, radius: float) -> WeightedComb:
    """All lattice translates of the motif within the closed ball ``|x| <= radius``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    basis = spec.basis
    d = spec.dim
    inv = np.linalg.inv(basis)
    reach = radius * np.sqrt(np.sum(inv * inv, axis=1))
    ranges = [np.arange(math.floor(-r) - 1, math.ceil(r) + 2) for r in reach]
    cells = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d).astype(np.float64)
    pts, wts = [], []
    tol = radius * 1e-12
    for frac, wgt in spec.motif:
        x = (cells + np.asarray(frac)) @ basis.T
        keep = np.sqrt(np.sum(x * x, axis=1)) <= radius + tol
        pts.append(x[keep])
        wts.append(np.full(int(keep.sum()), wgt, dtype=np.complex128))
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    order = np.lexsort(pts.T[::-1])
    pts, wts = pts[order], wts[order]
    volume = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d
    meta = {"system": "crystal", "radius": radius}
    if len(pts) == 0:
        log.warning("crystal patch of radius %g contains no motif point", radius)
        meta["empty"] = True
    if d == 1:
        pts = pts[:, 0]
    return WeightedComb(pts, wts, [(-radius, radius)] * d, volume, meta=meta)


def _exact_in_range(a, b, lo: GoldenRational, hi: GoldenRational, lo_open: bool):
    s_lo = compare_scaled(a, b, lo)
    s_hi = compare_scaled(a, b, hi)
    return ((s_lo > 0) if lo_open else (s_lo >= 0)) & (s_hi <= 0)


def gen_fibonacci_model_set(cps: CPSSpec, range: tuple) -> WeightedComb:
    """Model set ``{x in Z[tau] : x in [r0, r1], x_star in (lo, hi]}``.

    Both membership tests are decided exactly; ``range`` endpoints may be
    GoldenInts, ints, Fractions or floats (read via their decimal repr).
    """
    if not cps.is_golden:
        raise ValueError("exact model-set generation needs the Z[tau] embedding")
    r0 = GoldenRational.coerce(range[0])
    r1 = GoldenRational.coerce(range[1])
    f0, f1 = float(r0), float(r1)
    if not (math.isfinite(f0) and math.isfinite(f1)) or f1 <= f0:
        raise ValueError("range must be a finite interval")
    wlo, whi = float(cps.lo), float(cps.hi)
    if max(abs(f0), abs(f1), abs(wlo), abs(whi)) > 2**50:
        raise OverflowError("range too large for 64-bit exact arithmetic")
    # x - x_star = b * sqrt5
    b = np.arange(math.floor((f0 - whi) / SQRT5) - 1, math.ceil((f1 - wlo) / SQRT5) + 2, dtype=np.int64)
    # x_star = a + b (1 - tau) in (lo, hi]  =>  a in (lo - b(1-tau), hi - b(1-tau)]
    a0 = np.floor(wlo - b * (1.0 - TAU)).astype(np.int64) - 1
    span = int(math.ceil(whi - wlo)) + 3
    a = (a0[:, None] + np.arange(span, dtype=np.int64)[None, :]).ravel()
    b = np.repeat(b, span)
    sa, sb = a + b, -b
    keep = _exact_in_range(sa, sb, cps.lo, cps.hi, lo_open=True)
    a, b = a[keep], b[keep]
    keep = _exact_in_range(a, b, r0, r1, lo_open=False)
    a, b = a[keep], b[keep]
    x = embed_array(a, b)
    order = np.argsort(x, kind="stable")
    a, b, x = a[order], b[order], x[order]
    exact = np.stack([a, b], axis=1) if len(a) else np.empty((0, 2), dtype=np.int64)
    return WeightedComb(
        x, np.ones(len(x), dtype=np.complex128), [(f0, f1)], f1 - f0,
        kind="golden", exact=exact,
        meta={"system": "fibonacci", "window": [str(cps.lo), str(cps.hi)], "range": [str(range[0]), str(range[1])]},
    )


def thue_morse_word(n: int) -> np.ndarray:
    """``v^(n)`` as int8 +-1 via ``v^(n+1) = v^(n) vbar^(n)``."""
    if not 0 <= n <= MAX_TM_ORDER:
        raise ValueError(f"Thue-Morse order must lie in [0, {MAX_TM_ORDER}]")
    v = np.ones(1, dtype=np.int8)
    for _ in range(n):
        v = np.concatenate([v, -v])
    return v


def gen_thue_morse(n: int) -> WeightedComb:
    v = thue_morse_word(n)
    idx = np.arange(len(v), dtype=np.int64)
    return WeightedComb(idx.astype(np.float64), v.astype(np.complex128), [(0, len(v))], len(v),
                        kind="integer", exact=idx, meta={"system": "tm", "n": n})


def rudin_shapiro(indices) -> np.ndarray:
    """Two-sided RS weights at integer ``indices``.

    Iterates ``i -> i // 4`` (floor division, so negative indices descend to
    -1) collecting the sign factor ``(-1)**(n + l)`` for ``l in {2, 3}``,
    until each index reaches an anchor ``w(0) = 1`` or ``w(-1) = -1``.
    """
    idx = np.array(indices, dtype=np.int64, copy=True).ravel()
    sign = np.ones(idx.shape, dtype=np.int64)
    active = (idx != 0) & (idx != -1)
    while active.any():
        n = idx // 4
        ell = idx % 4
        flip = active & (ell >= 2) & ((n + ell) % 2 == 1)
        sign[flip] *= -1
        idx = np.where(active, n, idx)
        active = (idx != 0) & (idx != -1)
    return sign * np.where(idx == 0, 1, -1)


def _int_range(range) -> tuple[int, int]:
    start, stop = (int(range[0]), int(range[1]))
    if stop <= start:
        raise ValueError("integer range must be nonempty: start < stop")
    if start < -(2**62) or stop > 2**62:
        raise OverflowError("integer range exceeds 64-bit width")
    return start, stop


def _integer_comb(start, stop, weights, meta) -> WeightedComb:
    idx = np.arange(start, stop, dtype=np.int64)
    return WeightedComb(idx.astype(np.float64), np.asarray(weights, dtype=np.complex128),
                        [(start, stop)], stop - start, kind="integer", exact=idx, meta=meta)


def gen_rudin_shapiro(range) -> WeightedComb:
    """RS comb on the integers ``start <= n < stop``."""
    start, stop = _int_range(range)
    w = rudin_shapiro(np.arange(start, stop))
    return _integer_comb(start, stop, w, {"system": "rs", "range": [start, stop]})


def _default_range(spec: RandomSpec, range):
    if range is not None:
        return _int_range(range)
    if spec.count is None:
        raise ValueError("need either a range or spec.count")
    return _int_range((0, spec.count))


def gen_bernoulli(spec: RandomSpec, range=None) -> WeightedComb:
    """I.i.d. +-1 weights on integers, ``+1`` with probability ``spec.p``."""
    start, stop = _default_range(spec, range)
    x = _coin(make_rng(spec.seed), stop - start, spec.p)
    return _integer_comb(start, stop, x, {"system": "bernoulli", "seed": spec.seed, "p": spec.p,
                                           "range": [start, stop]})


def gen_rs_bernoulli(spec: RandomSpec, range=None) -> WeightedComb:
    """``w_n X_n`` with ``w`` the RS sequence and ``X`` as in :func:`gen_bernoulli`."""
    start, stop = _default_range(spec, range)
    x = _coin(make_rng(spec.seed), stop - start, spec.p)
    w = rudin_shapiro(np.arange(start, stop))
    return _integer_comb(start, stop, w * x, {"system": "rs-bernoulli", "seed": spec.seed, "p": spec.p,
                                               "range": [start, stop]})


def gen_random_fibonacci_tiling(spec: RandomSpec) -> WeightedComb:
    """Left endpoints of ``spec.count`` random tiles laid from 0.

    Each tile is long (length tau) with probability ``spec.p`` and short
    (length 1) otherwise; endpoint ``i`` is ``a + b*tau`` with ``a``, ``b``
    the numbers of short and long tiles before it.
    """
    count = spec.count
    if count is None or count < 1:
        raise ValueError("random tiling needs count >= 1")
    long_tile = make_rng(spec.seed).random(count) < spec.p
    b_all = np.concatenate([[0], np.cumsum(long_tile, dtype=np.int64)])
    a_all = np.arange(count + 1, dtype=np.int64) - b_all
    a, b = a_all[:-1], b_all[:-1]
    total = float(embed_array(a_all[-1:], b_all[-1:])[0])
    return WeightedComb(
        embed_array(a, b), np.ones(count, dtype=np.complex128), [(0.0, total)], total,
        kind="golden", exact=np.stack([a, b], axis=1),
        meta={"system": "random-fibonacci", "seed": spec.seed, "p": spec.p, "count": count},
    )
