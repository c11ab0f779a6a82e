"""Diffraction of aperiodically ordered point sets: generators, closed-form
spectra and brute-force estimators."""

__version__ = "0.1.0"

from .goldenring import TAU, GoldenInt, GoldenRational  # noqa: E402
from .generators import (  # noqa: E402
    CPSSpec,
    CrystalSpec,
    RandomSpec,
    WeightedComb,
    gen_bernoulli,
    gen_crystal_patch,
    gen_fibonacci_model_set,
    gen_random_fibonacci_tiling,
    gen_rs_bernoulli,
    gen_rudin_shapiro,
    gen_thue_morse,
)
from .analytic import (  # noqa: E402
    DistributionFn,
    SpectralMeasure,
    crystal_diffraction,
    model_set_spectrum,
    random_fibonacci_density,
    rs_diffraction,
    tm_distribution,
)
from .estimation import (  # noqa: E402
    AutocorrelationTable,
    DiffractionEstimate,
    autocorrelation,
    compare,
    ensemble_periodogram,
    periodogram,
    scaling_exponent,
)
