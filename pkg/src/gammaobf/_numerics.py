"""Shared numerical helpers: fixed quadrature nodes and 1-D minimization."""

from functools import lru_cache

import numpy as np

from .errors import NumericalError

#: Number of Gauss-Legendre nodes used for the compact-interval integrals.
GL_NODES = 256

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0  # 1/phi ~ 0.618034


@lru_cache(maxsize=8)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_legendre(a: float, b: float, n: int = GL_NODES):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def golden_section_min(f, a: float, b: float, tol: float = 1e-5) -> float:
    """Minimize a unimodal f on [a, b] to absolute tolerance tol.

    Reuses one function evaluation per step (standard golden-section
    bracketing).
    """
    m1 = b - _INVPHI * (b - a)
    m2 = a + _INVPHI * (b - a)
    f1, f2 = f(m1), f(m2)
    while b - a > tol:
        if f1 < f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - _INVPHI * (b - a)
            f1 = f(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + _INVPHI * (b - a)
            f2 = f(m2)
    return 0.5 * (a + b)


def minimize_log_bracketed(f, x0: float, tol: float = 1e-5,
                           max_doublings: int = 60) -> float:
    """Minimize f over x > 0 by golden section on log x.

    The bracket is auto-expanded geometrically from x0 until a triple
    u < m < v with f(m) below both ends is found.  `tol` is the absolute
    tolerance on log x, i.e. a relative tolerance on x.
    """
    lx0 = np.log(x0)
    g = lambda lx: f(np.exp(lx))
    step = np.log(2.0)
    lo, mid, hi = lx0 - step, lx0, lx0 + step
    flo, fmid, fhi = g(lo), g(mid), g(hi)
    for _ in range(max_doublings):
        if fmid <= flo and fmid <= fhi:
            break
        if flo < fhi:
            hi, fhi = mid, fmid
            mid, fmid = lo, flo
            lo = lo - step
            flo = g(lo)
        else:
            lo, flo = mid, fmid
            mid, fmid = hi, fhi
            hi = hi + step
            fhi = g(hi)
    else:
        raise NumericalError("could not bracket a minimum")
    return float(np.exp(golden_section_min(g, lo, hi, tol)))


def isotonic_nondecreasing(y: np.ndarray) -> np.ndarray:
    """L2 projection of y onto the cone of non-decreasing sequences (PAVA)."""
    from scipy.optimize import isotonic_regression

    return np.asarray(isotonic_regression(np.asarray(y, dtype=float)).x)
