import math

import numpy as np
import pytest

from quasidiff.analytic import (
    FIB_CENTRAL_INTENSITY,
    FIB_DENSITY,
    DistributionFn,
    SpectralMeasure,
    TMDistributionError,
    crystal_diffraction,
    dual_basis,
    fibonacci_intensity,
    golden_wavenumber,
    model_set_spectrum,
    random_fibonacci_density,
    random_fibonacci_spectrum,
    rs_diffraction,
    sinc,
    tm_correlations,
    tm_distribution,
    tm_exponential_sum,
    tm_riesz_partial,
    two_atom_intensity,
)
from quasidiff.generators import CPSSpec, CrystalSpec, thue_morse_word
from quasidiff.goldenring import SQRT5, TAU, GoldenInt

FIB = CPSSpec.fibonacci()


def test_sinc():
    assert sinc(0.0) == 1.0
    assert sinc(math.pi) == pytest.approx(0.0, abs=1e-16)
    x = np.array([1e-5, 1e-4, 0.3])
    assert np.allclose(sinc(x), np.sin(x) / x, rtol=1e-15)


# crystals -------------------------------------------------------------------


def _peaks(spec):
    return {tuple(np.round(k, 9)): i for k, i in zip(spec.pp_k, spec.pp_intensity)}


def test_two_atom_crystal_examples():
    peaks = _peaks(crystal_diffraction(CrystalSpec.two_atom(alpha=1.0), 3.0))
    assert (1.0, 0.0) not in peaks
    assert peaks[(1.0, 1.0)] == pytest.approx(4.0, rel=1e-14)
    assert peaks[(0.0, 0.0)] == pytest.approx(4.0, rel=1e-14)


def test_single_scatterer_is_flat():
    spec = crystal_diffraction(CrystalSpec(np.eye(2), (((0.0, 0.0), 1.0),)), 4.0)
    assert np.allclose(spec.pp_intensity, 1.0)
    assert len(spec.pp_k) == sum(1 for i in range(-4, 5) for j in range(-4, 5) if i * i + j * j <= 16)


def test_rectangular_basis():
    spec = crystal_diffraction(CrystalSpec(np.diag([2.0, 1.0]), (((0.0, 0.0), 1.0),)), 2.0)
    assert np.allclose(spec.pp_intensity, 0.25)
    assert np.allclose(spec.pp_k[:, 0] * 2, np.round(spec.pp_k[:, 0] * 2))
    assert np.allclose(spec.pp_k[:, 1], np.round(spec.pp_k[:, 1]))
    assert (0.5, 0.0) in _peaks(spec)


def test_dual_basis_pairing():
    basis = np.array([[1.0, 0.3], [0.2, 2.0]])
    assert np.allclose(dual_basis(basis).T @ basis, np.eye(2))


def test_crystal_matches_closed_form_everywhere():
    alpha, a, b = 0.7 - 0.2j, 0.5, 0.5
    spec = crystal_diffraction(CrystalSpec.two_atom(alpha, a, b), 10.0)
    ref = two_atom_intensity(spec.pp_k[:, 0], spec.pp_k[:, 1], alpha, a, b)
    assert np.max(np.abs(spec.pp_intensity - ref)) <= 1e-12
    assert np.all(np.linalg.norm(spec.pp_k, axis=1) <= 10 + 1e-9)


def test_crystal_peaks_close_under_addition():
    spec = crystal_diffraction(CrystalSpec.two_atom(1.0), 6.0)
    allowed = {(i, j) for i in range(-7, 8) for j in range(-7, 8)}
    idx = {tuple(m) for m in spec.meta["dual_index"]}
    extinct = {(i, j) for (i, j) in allowed if (i + j) % 2 == 1}
    pts = list(idx)
    for p in pts[::7]:
        for q in pts[::11]:
            s = (p[0] + q[0], p[1] + q[1])
            if s[0] ** 2 + s[1] ** 2 <= 36:
                assert s in idx or s in extinct


@pytest.mark.parametrize("k1, k2, alpha, value", [(0, 0, 1.0, 4.0), (0.3, 1.7, 0.0, 1.0), (2, 1, 1.0, 0.0)])
def test_two_atom_intensity(k1, k2, alpha, value):
    assert two_atom_intensity(k1, k2, alpha, 0.5, 0.5) == pytest.approx(value, abs=1e-15)


def test_crystal_kmax_validation():
    with pytest.raises(ValueError):
        crystal_diffraction(CrystalSpec.two_atom(), 0.0)


# model sets -----------------------------------------------------------------


def test_model_set_central_peak():
    spec = model_set_spectrum(FIB, 20.0, FIB_CENTRAL_INTENSITY / 1000)
    i0 = spec.pp_intensity[np.argmin(np.abs(spec.pp_k))]
    assert spec.pp_k[np.argmin(np.abs(spec.pp_k))] == 0.0
    assert i0 == pytest.approx((TAU + 1) / 5, rel=1e-14)
    assert np.max(spec.pp_intensity) == i0
    assert np.all(spec.pp_intensity >= FIB_CENTRAL_INTENSITY / 1000)


def test_model_set_matches_golden_formula():
    spec = model_set_spectrum(FIB, 20.0, 1e-5)
    for k, inten, (a, b) in zip(spec.pp_k, spec.pp_intensity, spec.meta["label"]):
        y = GoldenInt(a, b)
        assert golden_wavenumber(y) == pytest.approx(k, abs=1e-12)
        assert fibonacci_intensity(y) == pytest.approx(inten, rel=1e-12, abs=1e-15)


def test_model_set_peaks_on_fourier_module():
    spec = model_set_spectrum(FIB, 10.0, 1e-4)
    x = spec.pp_k * SQRT5
    labels = np.array(spec.meta["label"])
    assert np.allclose(labels[:, 0] + labels[:, 1] * TAU, x, atol=1e-12)


def test_model_set_threshold_above_max_is_empty():
    spec = model_set_spectrum(FIB, 20.0, FIB_CENTRAL_INTENSITY * 1.001)
    assert len(spec.pp_k) == 0
    with pytest.raises(ValueError):
        model_set_spectrum(FIB, 20.0, -1.0)


def test_model_set_total_intensity_monotone_and_bounded():
    totals = [model_set_spectrum(FIB, 20.0, t).pp_intensity.sum() for t in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert all(b > a for a, b in zip(totals, totals[1:]))
    # stays bounded as the threshold drops
    assert totals[-1] < 41 * FIB_DENSITY


def test_fibonacci_intensity_examples():
    assert fibonacci_intensity(GoldenInt(0, 0)) == pytest.approx((TAU + 1) / 5, rel=1e-15)
    for ell in range(1, 51):
        for sgn in (1, -1):
            # k = l*tau means y = l*tau*sqrt5 = l*(2 + tau)
            y = GoldenInt(2 * ell * sgn, ell * sgn)
            assert golden_wavenumber(y) == pytest.approx(sgn * ell * TAU, rel=1e-14)
            assert fibonacci_intensity(y) == 0.0


def test_tau_scaling_series():
    vals = [fibonacci_intensity(GoldenInt(0, 1) ** i) for i in range(8)]
    assert golden_wavenumber(GoldenInt(0, 1) ** 5) == pytest.approx(4.96, abs=0.01)
    assert all(b > a for a, b in zip(vals[1:], vals[2:]))
    assert vals[7] == pytest.approx(FIB_CENTRAL_INTENSITY, rel=0.01)


# Thue-Morse -------------------------------------------------------------------


@pytest.mark.parametrize("k, N, value", [(0.0, 1, 0.0), (1 / 3, 3, 3.375), (0.5, 2, 0.0), (0.123, 0, 1.0)])
def test_riesz_examples(k, N, value):
    assert tm_riesz_partial(k, N) == pytest.approx(value, abs=1e-12)


def test_exponential_sum_examples():
    assert tm_exponential_sum(0.37, 0) == 1
    assert tm_exponential_sum(0.0, 1) == 0


def test_exponential_sum_is_direct_sum():
    k = np.random.default_rng(0).random(50) * 3 - 1
    for n in (1, 4, 9):
        v = thue_morse_word(n)
        direct = np.exp(-2j * np.pi * np.outer(k, np.arange(2**n))) @ v
        assert np.allclose(tm_exponential_sum(k, n), direct, atol=1e-9)


def test_riesz_identity():
    k = np.random.default_rng(42).random(1000) * 4 - 2
    for n in range(17):
        g = tm_exponential_sum(k, n)
        assert np.max(np.abs(np.abs(g) ** 2 / 2**n - tm_riesz_partial(k, n))) <= 1e-10


def test_tm_correlations_exact():
    c, L = tm_correlations(8, 20)
    v = thue_morse_word(8).astype(np.int64)
    direct = [int(np.dot(v[: L - m], v[m:])) for m in range(21)]
    assert c.tolist() == direct


def test_tm_distribution_properties():
    dist = tm_distribution(16)
    assert dist.values[0] == 0.0
    assert dist.values[-1] == pytest.approx(1.0, abs=1e-3)
    mid = np.searchsorted(dist.grid, 0.5)
    assert dist.grid[mid] == 0.5 and dist.values[mid] == pytest.approx(0.5, abs=1e-3)
    assert dist.discrepancy <= 1e-3
    assert np.max(np.abs(dist.values - dist.alt_values)) <= 1e-3
    assert np.all(np.diff(dist.values) >= 0)
    assert dist.strictly_increasing
    assert len(dist.grid) == 2**14 + 1


def test_tm_distribution_symmetry():
    dist = tm_distribution(12, gridsize=2**10 + 1, M=2**12, tol=1e-2)
    assert np.allclose(dist.values + dist.values[::-1], dist.values[-1], atol=1e-9)


def test_tm_distribution_disagreement_is_reported():
    with pytest.raises(TMDistributionError) as err:
        tm_distribution(10, gridsize=2**8 + 1, M=4)
    assert err.value.trapezoid.shape == err.value.fourier.shape == err.value.grid.shape


def test_distribution_fn_validation():
    with pytest.raises(ValueError):
        DistributionFn(np.array([0.0, 1.0]), np.array([0.5, 1.0]), "x")
    with pytest.raises(ValueError):
        tm_distribution(0)


# absolutely continuous -------------------------------------------------------


def test_rs_flat():
    spec = rs_diffraction(np.array([0.25, 17.3]))
    assert spec.ac_density.tolist() == [1.0, 1.0]
    assert spec.density(0.25) == 1.0 and spec.density(17.3) == 1.0
    assert not spec.has_pp and spec.sc_k.size == 0


def test_random_fibonacci_density_positive_and_even():
    k = np.random.default_rng(5).uniform(0.1, 20, 100)
    h = random_fibonacci_density(k)
    assert np.all(h > 0)
    assert np.array_equal(h, random_fibonacci_density(-k))


def test_random_fibonacci_density_integrable():
    k = np.linspace(0.1, 5.0, 200001)
    h = random_fibonacci_density(k)
    area = float(np.sum(0.5 * (h[1:] + h[:-1]) * np.diff(k)))
    assert math.isfinite(area) and area > 0


def test_random_fibonacci_removable_point():
    # both numerator and denominator vanish at k = 0
    h0 = random_fibonacci_density(0.0)
    assert math.isfinite(h0)
    assert h0 == pytest.approx(random_fibonacci_density(1e-4), rel=1e-3)


def test_random_fibonacci_bragg_part():
    spec = random_fibonacci_spectrum(np.linspace(0.1, 1, 5))
    assert spec.pp_k.tolist() == [0.0]
    assert spec.pp_intensity[0] == pytest.approx((TAU + 1) / 5, rel=1e-15)


def test_spectral_measure_rejects_zero_peaks():
    with pytest.raises(ValueError):
        SpectralMeasure(pp_k=np.array([0.0]), pp_intensity=np.array([0.0]))
    with pytest.raises(ValueError):
        SpectralMeasure(sc_k=np.array([0.0, 1.0]), sc_F=np.array([1.0, 0.5]))
