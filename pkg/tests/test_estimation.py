import math

import numpy as np
import pytest

from quasidiff.analytic import (
    FIB_CENTRAL_INTENSITY,
    fibonacci_intensity,
    model_set_spectrum,
    random_fibonacci_spectrum,
    rs_diffraction,
    tm_riesz_partial,
)
from quasidiff.estimation import (
    DiffractionEstimate,
    autocorrelation,
    compare,
    ensemble_periodogram,
    periodogram,
    realization,
    scaling_exponent,
    threshold_peaks,
)
from quasidiff.generators import (
    CPSSpec,
    CrystalSpec,
    RandomSpec,
    WeightedComb,
    gen_bernoulli,
    gen_crystal_patch,
    gen_fibonacci_model_set,
    gen_rudin_shapiro,
    gen_thue_morse,
)
from quasidiff.goldenring import SQRT5, TAU, GoldenInt

FIB = CPSSpec.fibonacci()


def _ones(n):
    idx = np.arange(n)
    return WeightedComb(idx.astype(float), np.ones(n), [(0, n)], n, kind="integer", exact=idx)


# autocorrelation --------------------------------------------------------------


def test_autocorrelation_counting():
    n = 200
    table = autocorrelation(_ones(n), maxdist=50)
    for m in range(51):
        assert table.coefficient(m) == pytest.approx((n - m) / n, rel=1e-15)
        assert table.coefficient(-m) == table.coefficient(m)
    assert table.coefficient(51) == 0


def test_autocorrelation_rudin_shapiro_is_delta():
    table = autocorrelation(gen_rudin_shapiro((0, 2**16)), maxdist=64)
    assert table.coefficient(0) == pytest.approx(1.0)
    assert max(abs(table.coefficient(m)) for m in range(1, 65)) <= 0.02


def test_autocorrelation_fibonacci_exact_distances():
    comb = gen_fibonacci_model_set(FIB, (0, 1000))
    table = autocorrelation(comb, maxdist=20)
    assert table.kind == "golden"
    assert table.exact.shape == (len(table.distances), 2)
    assert np.allclose(table.exact[:, 0] + table.exact[:, 1] * TAU, table.distances, atol=1e-9)
    ratio = table.coefficient(GoldenInt(0, 1)).real / table.coefficient(GoldenInt(0, 0)).real
    assert ratio == pytest.approx(1 / TAU, rel=0.01)


def test_autocorrelation_invariants():
    comb = gen_bernoulli(RandomSpec(9, 0.4, 500), (0, 500))
    comb.weights = comb.weights * np.exp(1j * np.linspace(0, 3, 500))
    table = autocorrelation(comb, maxdist=40)
    c0 = table.coefficient(0)
    assert c0.imag == 0 and c0.real == pytest.approx(np.sum(np.abs(comb.weights) ** 2) / comb.volume)
    for m in range(1, 41):
        assert table.coefficient(-m) == pytest.approx(np.conj(table.coefficient(m)), abs=1e-15)


def test_autocorrelation_real_positions_cluster():
    comb = gen_crystal_patch(CrystalSpec(np.array([[1.0]]), (((0.0,), 1.0), ((0.25,), 2.0))), 30.0)
    table = autocorrelation(comb, maxdist=3.0)
    assert table.kind == "real"
    assert table.coefficient(0.25) != 0 and table.coefficient(0.5) == 0
    assert table.coefficient(0.0).real == pytest.approx(np.sum(np.abs(comb.weights) ** 2) / comb.volume)


def test_autocorrelation_fourier_consistency():
    comb = gen_bernoulli(RandomSpec(1, 0.5, 300), (0, 300))
    table = autocorrelation(comb, maxdist=299)
    k = np.linspace(-0.5, 0.5, 101)
    assert np.allclose(table.fourier(k), periodogram(comb, k).values, atol=1e-10)


def test_autocorrelation_maxdist_beyond_patch():
    with pytest.raises(ValueError):
        autocorrelation(_ones(10), maxdist=11)


# periodogram -----------------------------------------------------------------


def test_periodogram_tm_identity():
    k = np.linspace(0, 1, 1001)
    for n in (4, 10, 14):
        est = periodogram(gen_thue_morse(n), k)
        assert np.max(np.abs(est.values - tm_riesz_partial(k, n))) <= 1e-10


def test_periodogram_bragg_at_zero():
    comb = gen_fibonacci_model_set(FIB, (-300, 300))
    est = periodogram(comb, [0.0], "bragg")
    assert est.values[0] == pytest.approx((len(comb) / comb.volume) ** 2, rel=1e-14)


def test_periodogram_fibonacci_peak():
    comb = gen_fibonacci_model_set(FIB, (-10**4, 10**4))
    y = GoldenInt(0, 1) * GoldenInt(-1, 2)  # tau * sqrt5, so k = tau
    k = TAU / SQRT5
    est = periodogram(comb, [k], "bragg")
    assert est.values[0] == pytest.approx(fibonacci_intensity(GoldenInt(0, 1)), rel=0.02)
    assert periodogram(comb, [TAU], "bragg").values[0] <= 1e-3
    assert fibonacci_intensity(y) == 0.0


def test_periodogram_phase_invariance():
    comb = gen_bernoulli(RandomSpec(2, 0.5, 400), (0, 400))
    k = np.linspace(0, 1, 77)
    base = periodogram(comb, k).values
    rotated = WeightedComb(comb.positions, 1j * comb.weights, comb.bounds, comb.volume, "integer", comb.exact)
    assert np.array_equal(periodogram(rotated, k).values, base)
    rotated.weights = np.exp(0.7j) * comb.weights
    assert np.allclose(periodogram(rotated, k).values, base, rtol=1e-12, atol=1e-12)
    assert np.all(base >= 0)


def test_periodogram_translation_far_from_origin():
    comb = gen_rudin_shapiro((0, 512))
    idx = comb.exact + 2**40
    far = WeightedComb(idx.astype(float), comb.weights, [(2**40, 2**40 + 512)], 512, "integer", idx)
    k = np.linspace(0, 1, 33)
    assert np.allclose(periodogram(far, k).values, periodogram(comb, k).values, rtol=1e-12, atol=1e-12)


# ensembles -----------------------------------------------------------------


def test_ensemble_single_realization_equals_periodogram():
    spec = RandomSpec(77, 0.5, 2048)
    grid = np.linspace(0, 1, 51)
    ens = ensemble_periodogram("bernoulli", spec, grid, 1)
    single = periodogram(realization("bernoulli", spec, 0), grid)
    assert np.array_equal(ens.values, single.values)
    assert ens.realizations == 1


def test_ensemble_bernoulli_flat_mean():
    grid = np.linspace(0, 1, 201)
    ens = ensemble_periodogram("bernoulli", RandomSpec(2024, 0.5, 2**14), grid, 100)
    assert ens.values.mean() == pytest.approx(1.0, abs=0.02)


def test_ensemble_is_deterministic():
    grid = np.linspace(0, 1, 31)
    spec = RandomSpec(5, 0.25, 1024)
    a = ensemble_periodogram("rs-bernoulli", spec, grid, 20)
    b = ensemble_periodogram("rs-bernoulli", spec, grid, 20)
    assert np.array_equal(a.values, b.values)


def test_ensemble_rejects_bad_input():
    with pytest.raises(ValueError):
        ensemble_periodogram("bernoulli", RandomSpec(0, 0.5, 10), [0.0, 1.0], 0)
    with pytest.raises(ValueError):
        realization("nope", RandomSpec(0, 0.5, 10), 0)


def test_random_fibonacci_ensemble_matches_density():
    # the per-point periodogram scatter is ~1/sqrt(R), so R is chosen for a 5% L1 budget
    grid = np.linspace(0.1, 20, 400)
    ens = ensemble_periodogram("random-fibonacci", RandomSpec(31, 1 / TAU, 10**4), grid, 1000)
    err = compare(ens, random_fibonacci_spectrum(grid), (0.1, 20), "L1rel")
    assert err <= 0.05


def test_homometric_family_converges():
    # RS, Bernoulli(1/2) and omega_{1/4} share one flat spectrum; enough
    # realizations push the scatter below the 2% / 3% budgets
    grid = np.linspace(0, 1, 257)
    ests = {fam: ensemble_periodogram(fam, RandomSpec(2024, p, 2**10), grid, 6400)
            for fam, p in (("rs", 1.0), ("bernoulli", 0.5), ("rs-bernoulli", 0.25))}
    flat = rs_diffraction()
    for est in ests.values():
        assert compare(est, flat, (0, 1)) <= 0.02
    names = list(ests)
    for i in range(3):
        for j in range(i + 1, 3):
            assert compare(ests[names[i]], ests[names[j]], (0, 1)) <= 0.03


# scaling -----------------------------------------------------------------------


def test_scaling_tm():
    fam = [gen_thue_morse(n) for n in range(8, 17)]
    assert scaling_exponent(fam, 1 / 3) == pytest.approx(math.log2(3), abs=0.05)


def test_scaling_fibonacci_bragg():
    fam = [gen_fibonacci_model_set(FIB, (0, 2**n)) for n in range(8, 17)]
    assert scaling_exponent(fam, TAU / SQRT5) == pytest.approx(2.0, abs=0.1)


def test_scaling_rs_flat():
    fam = [gen_rudin_shapiro((0, 2**n)) for n in range(8, 17)]
    assert scaling_exponent(fam, 1 / math.sqrt(2)) == pytest.approx(1.0, abs=0.15)


def test_scaling_needs_four_sizes():
    with pytest.raises(ValueError):
        scaling_exponent([gen_thue_morse(n) for n in range(3)], 0.3)


# compare / threshold --------------------------------------------------------


def test_compare_identity_is_zero():
    grid = np.linspace(0, 1, 11)
    est = DiffractionEstimate(grid, np.ones(11), "ac", 1.0)
    assert compare(est, rs_diffraction(), (0, 1)) == 0.0
    assert compare(est, est, (0, 1), "maxrel") == 0.0


def test_compare_exclusion_and_errors():
    grid = np.linspace(0, 1, 11)
    vals = np.ones(11)
    vals[5] = 3.0
    est = DiffractionEstimate(grid, vals, "ac", 1.0)
    assert compare(est, rs_diffraction(), (0, 1), "maxrel") == pytest.approx(2.0)
    assert compare(est, rs_diffraction(), (0, 1), "maxrel", exclude=[(0.45, 0.55)]) == 0.0
    with pytest.raises(ValueError):
        compare(est, rs_diffraction(), (2, 3))
    with pytest.raises(ValueError):
        compare(est, rs_diffraction(), (0, 1), "L2")


def test_compare_fibonacci_bragg_top_peaks():
    spec = model_set_spectrum(FIB, 20.0, FIB_CENTRAL_INTENSITY / 1000)
    inside = spec.pp_k >= 0
    top = np.sort(spec.pp_k[inside][np.argsort(-spec.pp_intensity[inside], kind="stable")[:20]])
    est = periodogram(gen_fibonacci_model_set(FIB, (-10**4, 10**4)), top, "bragg")
    assert compare(est, spec, (0, 20), "maxrel") <= 0.02


def test_compare_rs_ensemble_flat():
    grid = np.linspace(0, 1, 201)
    est = ensemble_periodogram("rs", RandomSpec(8, 1.0, 2**12), grid, 1000)
    assert compare(est, rs_diffraction(), (0, 1)) <= 0.05


def test_threshold_peaks():
    spec = model_set_spectrum(FIB, 20.0, 1e-4)
    k, inten = threshold_peaks(spec, 1.0)
    assert len(k) == 0
    k, inten = threshold_peaks(spec, FIB_CENTRAL_INTENSITY * (1 - 1e-12))
    assert k.tolist() == [0.0]
    k, inten = threshold_peaks(spec, FIB_CENTRAL_INTENSITY / 1000)
    assert np.all(np.diff(k) > 0) and np.all(inten >= FIB_CENTRAL_INTENSITY / 1000)
    with pytest.raises(ValueError):
        threshold_peaks(spec, 0.0)


def test_threshold_peaks_fig1_set():
    # peaks at >= I(0)/1000 on [0, 20] are exactly the labels whose formula value clears it
    spec = model_set_spectrum(FIB, 20.0, FIB_CENTRAL_INTENSITY / 1000)
    k, inten = threshold_peaks(spec, FIB_CENTRAL_INTENSITY / 1000)
    brute = []
    for a in range(-60, 60):
        for b in range(-40, 40):
            y = GoldenInt(a, b)
            kk = (a + b * TAU) / SQRT5
            if -20 <= kk <= 20 and fibonacci_intensity(y) >= FIB_CENTRAL_INTENSITY / 1000:
                brute.append(kk)
    assert np.allclose(np.sort(brute), k, atol=1e-12)


def test_estimate_validation():
    with pytest.raises(ValueError):
        DiffractionEstimate([0, 1], [1, -1], "ac", 1.0)
    with pytest.raises(ValueError):
        DiffractionEstimate([1, 0], [1, 1], "ac", 1.0)
    with pytest.raises(ValueError):
        DiffractionEstimate([0, 1], [1, 1], "x", 1.0)
