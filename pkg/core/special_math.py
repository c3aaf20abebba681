import logging
from typing import Callable, Union

import numpy as np
from scipy import optimize, special

from utils.constants import ROOT_TOLERANCE

# Configure logging
logger = logging.getLogger('pla_tag_tool.special_math')

ArrayLike = Union[float, np.ndarray]


class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class NoSignChangeError(ValueError):
    """Raised when a root bracket does not contain a sign change."""


def _check_order(N: int) -> int:
    if int(N) != N or N < 1:
        raise DomainError(f"Chi-squared order must be a positive integer, got {N}")
    return int(N)


def _check_argument(z: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("Chi-squared argument must be non-negative")
    return z


def _unwrap(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def chi2_cdf(N: int, z: ArrayLike) -> ArrayLike:
    """
    CDF G(z) of the complex chi-squared variable with N degrees of freedom.

    G(z) = 1 - e^{-z} sum_{L<N} z^L / L!, i.e. the regularized lower incomplete
    gamma function P(N, z). Evaluated by scipy's series / continued-fraction
    split, which stays finite for N in the thousands.

    Args:
        N: Number of receive antennas (degrees of freedom)
        z: Non-negative argument (scalar or array)

    Returns:
        Probability in [0, 1], same shape as z
    """
    N = _check_order(N)
    z = _check_argument(z)
    return _unwrap(special.gammainc(N, z))


def chi2_sf(N: int, z: ArrayLike) -> ArrayLike:
    """Upper tail 1 - G(z), computed directly so small tails keep full precision."""
    N = _check_order(N)
    z = _check_argument(z)
    return _unwrap(special.gammaincc(N, z))


def chi2_logpdf(N: int, z: ArrayLike) -> ArrayLike:
    """Log density log f_Z(z) = (N-1) log z - z - log (N-1)!."""
    N = _check_order(N)
    z = _check_argument(z)
    return _unwrap(special.xlogy(N - 1, z) - z - special.gammaln(N))


def chi2_pdf(N: int, z: ArrayLike) -> ArrayLike:
    """
    Density f_Z(z) = z^{N-1} e^{-z} / (N-1)!, the derivative of chi2_cdf.

    Args:
        N: Degrees of freedom
        z: Non-negative argument

    Returns:
        Non-negative density value(s)
    """
    return _unwrap(np.exp(np.asarray(chi2_logpdf(N, z))))


def ratio_v(k: ArrayLike) -> ArrayLike:
    """v(e^k) = r ln r / (r - 1) written in k = ln r; tends to 1 as k -> 0."""
    k = np.asarray(k, dtype=float)
    small = np.abs(k) < 1e-8
    safe = np.where(small, 1.0, k)
    value = np.where(small, 1.0 + 0.5 * k, safe / -np.expm1(-safe))
    return _unwrap(value)


def ratio_u(k: ArrayLike) -> ArrayLike:
    """u(e^k) = ln r / (r - 1) written in k = ln r; equals v(e^k) - k."""
    k = np.asarray(k, dtype=float)
    small = np.abs(k) < 1e-8
    safe = np.where(small, 1.0, k)
    value = np.where(small, 1.0 - 0.5 * k, safe / np.expm1(safe))
    return _unwrap(value)


def ratio_v_prime(k: ArrayLike) -> ArrayLike:
    """Derivative of ratio_v with respect to k."""
    k = np.asarray(k, dtype=float)
    small = np.abs(k) < 1e-3
    safe = np.where(small, 1.0, k)
    one_minus = -np.expm1(-safe)
    exact = (one_minus - safe * np.exp(-safe)) / one_minus ** 2
    series = 0.5 + k / 6.0 - k ** 3 / 180.0
    return _unwrap(np.where(small, series, exact))


def solve_monotone(f: Callable[[float], float], lo: float, hi: float,
                   tol: float = ROOT_TOLERANCE) -> float:
    """
    Root of a continuous, strictly monotone function on [lo, hi].

    Args:
        f: Function with a sign change on the bracket
        lo: Lower end of the bracket
        hi: Upper end of the bracket
        tol: Absolute interval tolerance

    Returns:
        Root location

    Raises:
        NoSignChangeError: If f(lo) and f(hi) have the same strict sign
    """
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return float(lo)
    if f_hi == 0.0:
        return float(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChangeError(
            f"No sign change on [{lo}, {hi}]: f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}"
        )
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))
