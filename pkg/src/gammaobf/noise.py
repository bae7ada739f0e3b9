"""Two-sided Gamma noise family.

The noise density is symmetric around zero with a Gamma-distributed
magnitude:

    f(x) = |x|^(shape-1) * exp(-|x|/scale) / (2 * Gamma(shape) * scale^shape)

shape = 1 is the Laplace distribution.  For shape <= 1 the Fourier
transform decays polynomially (an ordinary smooth density), which is what
makes deconvolution of the masked data well behaved; for shape > 1 the
transform has real zeros and the polynomial sandwich fails.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError, UnsupportedShapeError

__all__ = [
    "GammaNoiseParams",
    "OrdinarySmoothBounds",
    "density",
    "fourier_transform",
    "ordinary_smooth_bounds",
    "variance",
    "sample",
]


@dataclass(frozen=True)
class GammaNoiseParams:
    """Shape/scale pair of the two-sided Gamma noise density.

    The toolkit only obfuscates with shape <= 1; larger shapes are admitted
    so the non-ordinary-smooth regime can be exercised directly.
    """

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0):
            raise ParameterError(f"shape must be positive, got {self.shape}")
        if not (self.scale > 0.0):
            raise ParameterError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class OrdinarySmoothBounds:
    """Constants of the polynomial sandwich c1*(1+|t|)^-e <= ft <= c2*(1+|t|)^-e."""

    c1: float
    c2: float
    exponent: float

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2):
            raise ParameterError(f"need 0 < c1 < c2, got c1={self.c1}, c2={self.c2}")
        if not (self.exponent > 0.0):
            raise ParameterError(f"exponent must be positive, got {self.exponent}")

    def lower(self, t):
        return self.c1 * (1.0 + np.abs(t)) ** (-self.exponent)

    def upper(self, t):
        return self.c2 * (1.0 + np.abs(t)) ** (-self.exponent)


def density(params: GammaNoiseParams, x):
    """Noise density at x (scalar or array).

    For shape < 1 the density diverges at the origin; x = 0 returns +inf
    there so callers can detect and exclude such points.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    log_norm = np.log(2.0) + gammaln(params.shape) + params.shape * np.log(params.scale)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp((params.shape - 1.0) * np.log(ax) - ax / params.scale - log_norm)
    at_origin = ax == 0.0
    if np.any(at_origin):
        if params.shape < 1.0:
            origin_value = np.inf
        elif params.shape == 1.0:
            origin_value = np.exp(-log_norm)
        else:
            origin_value = 0.0
        out = np.where(at_origin, origin_value, out)
    return out if out.ndim else float(out)


def fourier_transform(params: GammaNoiseParams, t):
    """Fourier transform of the noise density at t (scalar or array).

    Closed form: r^(-shape) * cos(shape * arctan(t*scale)) with
    r = sqrt(1 + t^2 scale^2).  Real and even, equal to 1 at t = 0.
    """
    ts = np.asarray(t, dtype=float) * params.scale
    r2 = 1.0 + ts * ts
    out = r2 ** (-0.5 * params.shape) * np.cos(params.shape * np.arctan(ts))
    return out if out.ndim else float(out)


def ordinary_smooth_bounds(params: GammaNoiseParams) -> OrdinarySmoothBounds:
    """Sandwich constants bounding the transform for shape < 1.

    At shape = 1 the lower constant cos(pi/2) degenerates to zero even
    though the Laplace transform itself decays polynomially, and for
    shape > 1 the transform has zeros, so both cases are rejected.
    """
    shape, scale = params.shape, params.scale
    if shape >= 1.0:
        raise UnsupportedShapeError(
            f"sandwich constants are only available for shape < 1, got {shape}"
        )
    if scale > 1.0:
        c1 = scale ** (-shape) * np.cos(0.5 * np.pi * shape)
        c2 = 2.0 ** (0.5 * shape)
    else:
        c1 = np.cos(0.5 * np.pi * shape)
        c2 = 2.0 ** (0.5 * shape) * scale ** (-shape)
    return OrdinarySmoothBounds(c1=float(c1), c2=float(c2), exponent=shape)


def variance(params: GammaNoiseParams) -> float:
    """Variance of the noise: scale^2 * shape * (shape + 1).

    The density is even, so the mean is zero and the variance is the
    second moment of the Gamma-distributed magnitude.
    """
    return params.scale**2 * params.shape * (params.shape + 1.0)


def sample(params: GammaNoiseParams, n: int, seed) -> np.ndarray:
    """Draw n independent noise values, deterministic given seed.

    Magnitude from Gamma(shape, scale), sign an independent fair +-1.
    `seed` is anything accepted by numpy.random.default_rng.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    magnitude = rng.gamma(params.shape, params.scale, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return magnitude * sign
