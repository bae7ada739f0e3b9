"""Disclosure-risk measures and noise-scale calibration.

The worst-case measure asks: given a published masked value z, what is the
conditional probability that the confidential value lies within
epsilon * sd(X) of z?  A noise density is acceptable for a privacy budget
(Q, delta) when that probability stays below delta for every z at
epsilon = Q.  The module provides the exact conditional measure (by
quadrature, for known densities), its closed form for normal data with
normal noise, the plug-in empirical version built from the data alone, and
root solving of the noise scale against the budget.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaincinv, ndtri

from .errors import (
    CalibrationError,
    DataError,
    DegenerateSupportError,
    ExcludedPointError,
    ParameterError,
    UndefinedPointError,
)
from .noise import GammaNoiseParams, density

__all__ = [
    "PrivacyBudget",
    "MeasureCurve",
    "DatasetSummary",
    "MeasureEvaluator",
    "true_measure",
    "normal_normal_mu",
    "empirical_M",
    "sup_empirical_M",
    "empirical_mu",
    "calibrate_scale",
    "fixed_quantile_scale",
    "conditional_tail_curve",
]

#: A noise density: either Gamma-family parameters (closed-form fast path)
#: or an even density evaluated at |z - x|.
NoiseDensity = Union[GammaNoiseParams, Callable[[np.ndarray], np.ndarray]]

#: Number of z points the empirical supremum is evaluated over.
DEFAULT_GRID_SIZE = 1024

#: Default bisection resolution on the epsilon multiplier.
EPSILON_RESOLUTION = 1e-4

#: Relative tolerance of the calibrated noise scale.
SCALE_RTOL = 1e-4

_SCALE_SPAN = 1e6  # calibration searches scale in [sd/span, sd*span]


@dataclass(frozen=True)
class PrivacyBudget:
    """Required deviation multiplier Q (in units of sd(X)) and level delta."""

    deviation_multiplier: float
    level: float

    def __post_init__(self):
        if not (self.deviation_multiplier > 0.0):
            raise ParameterError(
                f"deviation multiplier must be positive, got {self.deviation_multiplier}"
            )
        if not (0.0 < self.level < 1.0):
            raise ParameterError(f"level must be in (0, 1), got {self.level}")


@dataclass(frozen=True)
class MeasureCurve:
    """Curve of measure values over a masked-value grid, at one epsilon."""

    z_grid: np.ndarray
    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        z = np.asarray(self.z_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if z.shape != v.shape:
            raise ParameterError("z_grid and values must have equal length")
        if z.size > 1 and not np.all(np.diff(z) > 0.0):
            raise ParameterError("z_grid must be strictly increasing")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ParameterError("curve values must lie in [0, 1]")


@dataclass(frozen=True)
class DatasetSummary:
    """The confidential data together with its sample sd (divisor n-1)."""

    values: np.ndarray
    sd: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DataError(f"need at least 2 data points, got {self.n}")
        if not (self.sd > 0.0):
            raise DataError("constant datasets are rejected (sd = 0)")

    @classmethod
    def from_values(cls, values) -> "DatasetSummary":
        x = np.asarray(values, dtype=float).ravel()
        if x.size < 2:
            raise DataError(f"need at least 2 data points, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise DataError("data contains non-finite values")
        sd = float(np.std(x, ddof=1))
        if not (sd > 0.0):
            raise DataError("constant datasets are rejected (sd = 0)")
        return cls(values=x, sd=sd, n=int(x.size))


# ---------------------------------------------------------------------------
# Exact measure by quadrature
# ---------------------------------------------------------------------------

_QUAD_OPTS = dict(epsabs=1e-10, epsrel=1e-10, limit=200)
_DEN_FLOOR = 1e-300


def _piecewise_quad(fn, points):
    """Integrate fn over (-inf, inf) split at the given finite breakpoints."""
    pts = sorted(set(float(p) for p in points))
    total = quad(fn, -np.inf, pts[0], **_QUAD_OPTS)[0]
    for a, b in zip(pts[:-1], pts[1:]):
        total += quad(fn, a, b, **_QUAD_OPTS)[0]
    total += quad(fn, pts[-1], np.inf, **_QUAD_OPTS)[0]
    return total


def true_measure(g, f, sigma_x: float, z: float, epsilon: float) -> float:
    """Conditional probability that X lies within epsilon*sigma_x of z, given Z=z.

    Both g (data density) and f (noise density) are callables; the value is
    the ratio of integrals of g(z-x)*f(x) over [-eps*sigma_x, eps*sigma_x]
    and over the whole line.
    """
    if epsilon < 0.0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    if not (sigma_x > 0.0):
        raise ParameterError(f"sigma_x must be positive, got {sigma_x}")
    if epsilon == 0.0:
        return 0.0

    a = epsilon * sigma_x
    fn = lambda x: g(z - x) * f(x)
    # Split at the noise-density peak (x=0) and the data-density peak (x=z);
    # the noise may have an integrable singularity at 0.
    den = _piecewise_quad(fn, {0.0, z})
    if not np.isfinite(den) or den < _DEN_FLOOR:
        raise DegenerateSupportError(
            f"measure denominator degenerate at z={z} (value {den})"
        )
    if a > 30.0 * sigma_x:
        # Wide window: the complement tails are the numerically stable part.
        tails = quad(fn, a, np.inf, **_QUAD_OPTS)[0]
        tails += quad(fn, -np.inf, -a, **_QUAD_OPTS)[0]
        num = den - tails
    else:
        inner = [p for p in (0.0, z) if -a < p < a]
        cuts = [-a] + sorted(inner) + [a]
        num = sum(
            quad(fn, lo, hi, **_QUAD_OPTS)[0] for lo, hi in zip(cuts[:-1], cuts[1:])
        )
    return float(min(max(num / den, 0.0), 1.0))


def normal_normal_mu(sigma_x: float, sigma_y: float, delta: float) -> float:
    """Closed-form worst-case epsilon for normal data with normal noise.

    Equals the (1+delta)/2 standard normal quantile shrunk by
    sqrt(1 + sigma_x^2/sigma_y^2); increases from 0 (no noise) toward the
    raw quantile as the noise dominates.
    """
    if not (sigma_x > 0.0 and sigma_y > 0.0):
        raise ParameterError("sigma_x and sigma_y must be positive")
    if not (0.0 < delta < 1.0):
        raise ParameterError(f"delta must be in (0, 1), got {delta}")
    return float(ndtri(0.5 * (1.0 + delta)) / np.sqrt(1.0 + (sigma_x / sigma_y) ** 2))


def conditional_tail_curve(g, f, epsilon: float, z_grid) -> MeasureCurve:
    """P(|X - z| > epsilon | Z = z) over a grid of masked values.

    Uses the absolute window epsilon (no sd scaling); the complement of the
    conditional measure at each z.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    values = np.array(
        [1.0 - true_measure(g, f, 1.0, z, epsilon) for z in z_grid]
    )
    return MeasureCurve(z_grid=z_grid, values=values, epsilon=epsilon)


# ---------------------------------------------------------------------------
# Empirical plug-in measure
# ---------------------------------------------------------------------------


def empirical_M(data: DatasetSummary, f: NoiseDensity, z: float, epsilon: float) -> float:
    """Plug-in estimate of the conditional measure at a single point z.

    Weights each datum by the noise density at its distance from z; the
    value is the weighted fraction of data within sd*epsilon of z.
    Undefined when z hits a datum and the density diverges there; excluded
    when every weight underflows to zero.
    """
    if epsilon < 0.0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    diff = z - data.values
    if isinstance(f, GammaNoiseParams):
        w = np.asarray(density(f, diff), dtype=float)
    else:
        w = np.asarray(f(diff), dtype=float)
    if np.any(np.isinf(w)):
        raise UndefinedPointError(
            f"measure undefined at z={z}: evaluation point coincides with a datum"
        )
    den = float(w.sum())
    if not np.isfinite(den):
        raise UndefinedPointError(f"measure undefined at z={z}: weights overflow")
    if den <= 0.0:
        raise ExcludedPointError(
            f"all noise weights vanish at z={z}; point outside the positivity set"
        )
    # Full-length masked sum keeps the value exactly non-decreasing in epsilon.
    num = float((w * (np.abs(diff) <= data.sd * epsilon)).sum())
    return min(max(num / den, 0.0), 1.0)


class MeasureEvaluator:
    """Vectorized empirical measure over the standard z grid.

    The grid spans [min(X) - 3*sd, max(X) + 3*sd]; grid points colliding
    with a datum (within 1e-12 relative) are nudged by half a step.  For
    Gamma noise the weights are formed in log space and normalized per row,
    so the supremum stays meaningful at extreme scales where the raw
    density would underflow.  Caches distance powers per shape and weights
    per (shape, scale), which makes the calibration loops cheap.
    """

    def __init__(self, data: DatasetSummary, grid_size: int = DEFAULT_GRID_SIZE):
        if grid_size < 2:
            raise ParameterError(f"grid_size must be >= 2, got {grid_size}")
        self.data = data
        x = data.values
        lo = x.min() - 3.0 * data.sd
        hi = x.max() + 3.0 * data.sd
        z = np.linspace(lo, hi, grid_size)
        step = (hi - lo) / (grid_size - 1)
        dist = np.abs(z[:, None] - x[None, :])
        collide = dist.min(axis=1) <= 1e-12 * np.maximum(np.abs(z), data.sd)
        if collide.any():
            z = z.copy()
            z[collide] += 0.5 * step
            dist[collide] = np.abs(z[collide, None] - x[None, :])
        self.z_grid = z
        self._dist = dist
        with np.errstate(divide="ignore"):
            self._logdist = np.log(dist)
        self._pow_key = None
        self._pow = None
        self._w_key = None
        self._w = None
        self._den = None
        self._row_valid = None
        self._mask_key = None
        self._mask = None

    def _weights(self, f: NoiseDensity):
        if isinstance(f, GammaNoiseParams):
            key = ("gamma", f.shape, f.scale)
        else:
            key = ("callable", id(f))
        if key == self._w_key:
            return
        if isinstance(f, GammaNoiseParams):
            if self._pow_key != f.shape:
                if f.shape == 1.0:
                    self._pow = np.zeros_like(self._dist)
                else:
                    self._pow = (f.shape - 1.0) * self._logdist
                self._pow_key = f.shape
            logw = self._pow - self._dist / f.scale
            peak = logw.max(axis=1, keepdims=True)
            bad = ~np.isfinite(peak[:, 0])  # a +inf marks a datum collision
            peak[bad] = 0.0
            w = np.exp(logw - peak)
            den = w.sum(axis=1)
            valid = ~bad
        else:
            w = np.asarray(f(self._dist), dtype=float)
            den = w.sum(axis=1)
            valid = np.isfinite(den) & (den > 0.0)
        self._w_key = key
        self._w = w
        self._den = den
        self._row_valid = valid

    def values(self, f: NoiseDensity, epsilon: float):
        """Measure values and a validity mask over the z grid."""
        if epsilon < 0.0:
            raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
        self._weights(f)
        thr = self.data.sd * epsilon
        if self._mask_key != thr:
            self._mask = self._dist <= thr
            self._mask_key = thr
        num = (self._w * self._mask).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = num / self._den
        valid = self._row_valid & np.isfinite(vals)
        return np.clip(vals, 0.0, 1.0), valid

    def sup(self, f: NoiseDensity, epsilon: float) -> float:
        """Supremum of the empirical measure over the valid grid points."""
        vals, valid = self.values(f, epsilon)
        if not valid.any():
            return 0.0
        return float(vals[valid].max())

    def curve(self, f: NoiseDensity, epsilon: float) -> MeasureCurve:
        """Measure curve at the valid grid points (invalid ones dropped)."""
        vals, valid = self.values(f, epsilon)
        return MeasureCurve(
            z_grid=self.z_grid[valid], values=vals[valid], epsilon=epsilon
        )


def sup_empirical_M(
    data: DatasetSummary,
    f: NoiseDensity,
    epsilon: float,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> float:
    """Supremum of the plug-in measure over the evaluation z grid."""
    return MeasureEvaluator(data, grid_size).sup(f, epsilon)


def empirical_mu(
    data: DatasetSummary,
    f: NoiseDensity,
    delta: float,
    evaluator: MeasureEvaluator | None = None,
    resolution: float = EPSILON_RESOLUTION,
) -> float:
    """Smallest epsilon whose measure supremum reaches delta.

    Bisection on epsilon, valid because the measure is non-decreasing in
    epsilon at every z.  Returns the upper bisection limit, resolved to
    `resolution` (epsilon is in units of sd, so the absolute window is
    resolved to resolution * sd).
    """
    if not (0.0 < delta < 1.0):
        raise ParameterError(f"delta must be in (0, 1), got {delta}")
    ev = evaluator if evaluator is not None else MeasureEvaluator(data)
    x = data.values
    lo = 0.0
    hi = (x.max() - x.min()) / data.sd + 1.0
    # At hi every datum lies inside the window of any mid-range z, so the
    # supremum is 1 and a root always exists.
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ev.sup(f, mid) >= delta:
            hi = mid
        else:
            lo = mid
    return hi


def calibrate_scale(
    data: DatasetSummary,
    shape: float,
    budget: PrivacyBudget,
    evaluator: MeasureEvaluator | None = None,
    initial_scale: float | None = None,
    rel_tol: float = SCALE_RTOL,
) -> float:
    """Noise scale at which the measure supremum (at epsilon = Q) equals delta.

    Geometric expansion from an initial guess brackets the crossing, then
    bisection on log-scale refines it to `rel_tol`; the feasible (upper)
    end of the final bracket is returned.  The criterion is assumed to
    cross delta once; if probes above the solution reveal another crossing,
    the topmost one is located instead and a warning is issued.
    """
    if not (0.0 < shape <= 1.0):
        raise ParameterError(f"obfuscation shape must be in (0, 1], got {shape}")
    ev = evaluator if evaluator is not None else MeasureEvaluator(data)
    q, delta = budget.deviation_multiplier, budget.level
    lo_lim = data.sd / _SCALE_SPAN
    hi_lim = data.sd * _SCALE_SPAN

    def excess(eta: float) -> float:
        return ev.sup(GammaNoiseParams(shape=shape, scale=eta), q) - delta

    eta = initial_scale if initial_scale is not None else data.sd
    eta = min(max(eta, lo_lim), hi_lim)
    g0 = excess(eta)
    if g0 > 0.0:  # too little noise: expand upward
        a, b = eta, eta
        while True:
            b *= 2.0
            if b > hi_lim:
                raise CalibrationError(
                    f"no scale up to {hi_lim:g} meets the budget (shape {shape})"
                )
            if excess(b) <= 0.0:
                break
            a = b
    else:  # already feasible: shrink to find the crossing
        a, b = eta, eta
        while True:
            a *= 0.5
            if a < lo_lim:
                raise CalibrationError(
                    f"criterion never exceeds the level down to scale {lo_lim:g} "
                    f"(shape {shape})"
                )
            if excess(a) > 0.0:
                break
            b = a

    eta_star = _bisect_scale(excess, a, b, rel_tol)

    for factor in (2.0, 4.0):
        probe = eta_star * factor
        if probe <= hi_lim and excess(probe) > 0.0:
            warnings.warn(
                "calibration criterion crosses the level more than once; "
                "reporting the topmost crossing",
                stacklevel=2,
            )
            eta_star = _topmost_crossing(excess, eta_star, hi_lim, rel_tol)
            break
    return eta_star


def _bisect_scale(excess, a: float, b: float, rel_tol: float) -> float:
    """Bisect on log scale; a has excess > 0, b has excess <= 0."""
    while b / a - 1.0 > rel_tol:
        mid = np.sqrt(a * b)
        if excess(mid) > 0.0:
            a = mid
        else:
            b = mid
    return float(b)


def _topmost_crossing(excess, start: float, hi_lim: float, rel_tol: float) -> float:
    """Locate the largest scale where the criterion still exceeds the level."""
    ladder = [start]
    while ladder[-1] * 2.0 <= hi_lim:
        ladder.append(ladder[-1] * 2.0)
    ladder.append(hi_lim)
    signs = [excess(eta) > 0.0 for eta in ladder]
    last_pos = max(i for i, s in enumerate(signs) if s)
    if last_pos + 1 >= len(ladder):
        raise CalibrationError(f"no scale up to {hi_lim:g} meets the budget")
    return _bisect_scale(excess, ladder[last_pos], ladder[last_pos + 1], rel_tol)


def fixed_quantile_scale(shape: float, epsilon: float, delta: float) -> float:
    """Scale putting noise magnitude above epsilon with probability delta.

    Solves P(|Y| < epsilon) = 1 - delta via the inverse regularized gamma
    integral; the baseline criterion that calibration by the conditional
    measure replaces.
    """
    if not (0.0 < shape <= 1.0):
        raise ParameterError(f"shape must be in (0, 1], got {shape}")
    if not (epsilon > 0.0):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not (0.0 < delta < 1.0):
        raise ParameterError(f"delta must be in (0, 1), got {delta}")
    return float(epsilon / gammaincinv(shape, 1.0 - delta))
