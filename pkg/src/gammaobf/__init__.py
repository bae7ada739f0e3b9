"""Optimal two-sided Gamma noise for data obfuscation, with recovery.

Pick a noise density from the two-sided Gamma family that meets a
worst-case disclosure-risk budget while minimizing the error of
recovering the data distribution from the masked values by deconvolution
kernel density estimation.
"""

__version__ = "0.1.0"

from .confidentiality import (
    DatasetSummary,
    MeasureCurve,
    MeasureEvaluator,
    PrivacyBudget,
    calibrate_scale,
    conditional_tail_curve,
    empirical_M,
    empirical_mu,
    fixed_quantile_scale,
    normal_normal_mu,
    sup_empirical_M,
    true_measure,
)
from .deconvolution import (
    BIAS_CONSTANT_KERNEL_MOMENT,
    BIAS_CONSTANT_PAPER,
    BandwidthSelection,
    DensityEstimate,
    aimse,
    aimse_variance_term,
    default_grid,
    estimate_density,
    estimate_from_masked,
    kernel_ft,
    noise_free_estimate,
    normal_reference_roughness,
    select_bandwidth,
)
from .errors import (
    CalibrationError,
    DataError,
    DegenerateSupportError,
    EmptyFrontierError,
    ExcludedPointError,
    GammaObfError,
    NumericalError,
    ParameterError,
    StudyError,
    UndefinedPointError,
    UnsupportedShapeError,
)
from .evaluation import (
    DISTRIBUTIONS,
    ReferenceLaw,
    ReplicationRecord,
    StudyConfig,
    StudyReport,
    cdf_error,
    reference_law,
    run_study,
)
from .noise import (
    GammaNoiseParams,
    OrdinarySmoothBounds,
    density,
    fourier_transform,
    ordinary_smooth_bounds,
    sample,
    variance,
)
from .optimizer import (
    FrontierPoint,
    SelectionReport,
    default_shape_grid,
    objective_J,
    run_selection,
    select_optimal,
    sweep,
)
