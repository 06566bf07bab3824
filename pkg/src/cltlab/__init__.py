"""Simulation lab for partial-sum limit theorems of mixing lattice fields.

Core pieces: seeded lattice fields with exact moments (``fields``),
the Fejer-kernel variance identity (``spectral``), Bernstein blocking
(``blocking``), and Monte Carlo verification of the scalar, vector and
Hilbert-valued limit statements (``ensembles``, ``normality``,
``covariance``, ``tightness``).  ``service`` wraps everything in a
FastAPI app; ``cli`` is a thin client over it.
"""

from .blocking import (
    BlockingError,
    BlockingPlan,
    DegenerateVarianceError,
    decompose,
    negligibility_ratio,
    schedule,
    small_block_bound,
)
from .covariance import CovarianceEstimate, estimate_cov
from .ensembles import EnsembleResult, run_ensemble, shape_schedule, variance_convergence
from .fields import (
    FieldSample,
    HilbertFieldSpec,
    InnovationDist,
    LinearFieldSpec,
    MixingProfile,
    field_spec_from_json,
    field_spec_to_json,
    pop_moments,
    sample,
    truncate_tail,
    truncation_constant,
)
from .lattice import Rectangle, Shape, SiteSeed, site_innovation, slab, volume
from .normality import NormalityReport, cramer_wold, normality_test
from .spectral import (
    ResolutionError,
    SpectralDensity,
    autocovariance,
    exact_sum_variance,
    fejer_integral,
    fejer_kernel,
    multivariate_fejer,
    sigma_squared,
)
from .tightness import TightnessReport, tightness_profile

__version__ = "0.1.0"
