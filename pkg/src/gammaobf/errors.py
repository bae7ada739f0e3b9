"""Exception hierarchy for the toolkit.

The CLI maps these onto exit codes: data problems exit 3, numerical
failures exit 4 (usage errors exit 2 via argparse).
"""


class GammaObfError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(GammaObfError, ValueError):
    """Invalid parameter value (non-positive scale, level outside (0,1), ...)."""


class UnsupportedShapeError(ParameterError):
    """Shape outside the range where the requested quantity is defined."""


class DataError(GammaObfError):
    """Input data unusable: malformed file, too few points, constant column."""


class DegenerateSupportError(GammaObfError):
    """Conditional measure denominator underflowed to zero."""


class UndefinedPointError(GammaObfError):
    """Empirical measure requested at a point where it is undefined
    (evaluation point coincides with a datum while the noise density
    diverges at zero)."""


class ExcludedPointError(GammaObfError):
    """Empirical measure requested at a point where every weight
    underflowed to zero; the point lies outside the positivity set."""


class CalibrationError(GammaObfError):
    """No noise scale in the search range meets the privacy budget."""


class EmptyFrontierError(CalibrationError):
    """Every shape in the sweep failed calibration."""


class NumericalError(GammaObfError):
    """Quadrature or minimization did not converge."""


class StudyError(GammaObfError):
    """Monte Carlo study invalid (too many dropped replications)."""
