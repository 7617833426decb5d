"""Log-scale modified Bessel functions of the third kind and GIG expectations.

The E-step of the fitting algorithms repeatedly evaluates ratios of Bessel
functions ``K_nu`` at arguments that range from nearly zero (observations at a
component mode) to several hundred (large Mahalanobis distances).  Working
with ``log K_nu`` throughout keeps every intermediate finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln, kve

__all__ = ["GigExpectations", "log_bessel_k", "bessel_k_ratio", "gig_moments"]

ArrayOrFloat = Union[float, NDArray]

# Below this argument the small-x asymptotics of K_nu are accurate to well
# under 1e-14 relative, which covers the region where scipy's kve overflows.
_SMALL_ORDER = 1e-8


def _validate_positive(x: NDArray, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    if np.any(x <= 0.0):
        raise ValueError(f"{name} must be positive")


def log_bessel_k(order: float, x: ArrayOrFloat) -> ArrayOrFloat:
    """Return ``log K_order(x)`` for real order and positive argument.

    Uses the exponentially scaled ``kve`` (``K_nu(x) e^x``) so that large
    arguments never underflow, and a small-argument asymptotic expansion
    where ``kve`` itself overflows (tiny ``x`` with large ``|order|``):

    - ``|order| > 0``: ``K_nu(x) ~ Gamma(|nu|)/2 * (2/x)^{|nu|}``
    - ``order = 0``:   ``K_0(x) ~ -log(x/2) - euler_gamma``

    The symmetry ``K_nu = K_{-nu}`` is applied to the order up front.

    Parameters
    ----------
    order : float
        Order ``nu`` of the Bessel function (any real number).
    x : float or ndarray
        Argument; must be strictly positive and finite.

    Returns
    -------
    float or ndarray
        ``log K_order(x)``, same shape as ``x``.
    """
    if not np.isfinite(order):
        raise ValueError("order must be finite")
    scalar = np.isscalar(x)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _validate_positive(xa, "x")

    v = abs(float(order))
    out = np.log(kve(v, xa)) - xa

    bad = ~np.isfinite(out)
    if np.any(bad):
        xs = xa[bad]
        if v > _SMALL_ORDER:
            approx = gammaln(v) - np.log(2.0) + v * (np.log(2.0) - np.log(xs))
        else:
            approx = np.log(-np.log(xs / 2.0) - np.euler_gamma)
        out[bad] = approx

    if scalar:
        return float(out[0])
    return out


def bessel_k_ratio(order: float, x: ArrayOrFloat) -> ArrayOrFloat:
    """Return ``K_{order+1}(x) / K_order(x)`` computed in log space.

    This ratio drives every GIG expectation; evaluating it as a difference
    of log values avoids the overflow/underflow of the raw Bessel values.

    Parameters
    ----------
    order : float
        Order of the denominator Bessel function.
    x : float or ndarray
        Argument; must be strictly positive and finite.

    Returns
    -------
    float or ndarray
        The (always positive) ratio.
    """
    return np.exp(log_bessel_k(order + 1.0, x) - log_bessel_k(order, x))


@dataclass(frozen=True)
class GigExpectations:
    """First-order expectations of a generalized inverse Gaussian variable.

    Attributes
    ----------
    e1 : float or ndarray
        ``E[W]`` of ``W ~ GIG(a, b, order)``.
    e2 : float or ndarray
        ``E[W^{-1}]``.
    clamped : bool or ndarray
        True where ``b`` fell below the floor and was clamped (observation
        at the component mode; ``E[W^{-1}]`` diverges there).
    """

    e1: ArrayOrFloat
    e2: ArrayOrFloat
    clamped: Union[bool, NDArray] = False


def gig_moments(
    a: float,
    b: ArrayOrFloat,
    order: float,
    b_floor: float = 1e-10,
) -> GigExpectations:
    """Expectations ``E[W]`` and ``E[W^{-1}]`` for ``W ~ GIG(a, b, order)``.

    The GIG density is proportional to ``w^{order-1} exp(-(a w + b/w)/2)``
    on ``(0, inf)``, and

    - ``E[W]      = sqrt(b/a) K_{order+1}(sqrt(ab)) / K_order(sqrt(ab))``
    - ``E[W^{-1}] = sqrt(a/b) K_{order+1}(sqrt(ab)) / K_order(sqrt(ab))
      - 2 order / b``

    Parameters
    ----------
    a : float
        First GIG parameter, strictly positive.
    b : float or ndarray
        Second GIG parameter.  Values below ``b_floor`` are clamped to the
        floor and flagged via ``clamped`` rather than raising, so that the
        E-step stays total when an observation coincides with a location
        parameter (the engine's location guard is the primary defence).
    order : float
        GIG index.
    b_floor : float
        Lower clamp for ``b``.

    Returns
    -------
    GigExpectations
        ``e1``, ``e2`` (same shape as ``b``) and the clamp flag.
    """
    if not (np.isfinite(a) and a > 0.0):
        raise ValueError("a must be finite and positive")
    scalar = np.isscalar(b)
    ba = np.atleast_1d(np.asarray(b, dtype=float))
    if not np.all(np.isfinite(ba)):
        raise ValueError("b must be finite")
    if np.any(ba < 0.0):
        raise ValueError("b must be nonnegative")

    clamped = ba < b_floor
    ba = np.maximum(ba, b_floor)

    ratio = bessel_k_ratio(order, np.sqrt(a * ba))
    e1 = np.sqrt(ba / a) * ratio
    e2 = np.sqrt(a / ba) * ratio - 2.0 * order / ba

    if scalar:
        return GigExpectations(float(e1[0]), float(e2[0]), bool(clamped[0]))
    return GigExpectations(e1, e2, clamped)
