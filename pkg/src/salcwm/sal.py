"""Multivariate shifted asymmetric Laplace (SAL) and contaminated SAL laws.

A ``SAL_p(mu, Sigma, alpha)`` variable has the stochastic representation
``W = mu + V alpha + sqrt(V) N`` with ``V ~ Exp(1)`` and ``N ~ N_p(0, Sigma)``,
so ``E[W] = mu + alpha`` and ``Cov[W] = Sigma + alpha alpha^T``.  The
contaminated variant mixes the reference law with an inflated-scale law
``SAL_p(mu, eta Sigma, sqrt(eta) alpha)`` sharing the same mode.

All densities are computed and returned in log space: the fitting engines
need log-likelihoods, and the raw density under/overflows routinely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_solve, solve_triangular

from .special import log_bessel_k

__all__ = [
    "SalParams",
    "CsalParams",
    "sal_log_density",
    "csal_log_density",
    "posterior_typical_probability",
    "sal_sample",
    "csal_sample",
]

# Euclidean distance below which the density at the location is treated as
# singular for p >= 2 (the density diverges there since nu <= 0).
_SINGULAR_DIST = 1e-12
# Floor for the squared Mahalanobis distance in the p = 1 case, where the
# density has a finite limit at the location but the generic formula is 0/0.
_B_TINY = 1e-300


@dataclass(frozen=True)
class SalParams:
    """Parameters of one multivariate SAL law.

    Attributes
    ----------
    mu : ndarray, shape (p,)
        Location (also the mode).
    sigma : ndarray, shape (p, p)
        Symmetric positive-definite scale matrix.
    alpha : ndarray, shape (p,)
        Skewness vector; the law is elliptically symmetric iff ``alpha = 0``.
    """

    mu: NDArray
    sigma: NDArray
    alpha: NDArray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        p = mu.size
        if sigma.shape != (p, p):
            raise ValueError(f"sigma must be {p}x{p}, got {sigma.shape}")
        if alpha.shape != (p,):
            raise ValueError("mu and alpha dimensions disagree")
        np.linalg.cholesky(sigma)  # raises LinAlgError if not PD
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "alpha", alpha)

    @property
    def dim(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class CsalParams:
    """Contaminated SAL law: reference plus inflated-scale contaminant.

    ``delta`` is the proportion of bad points and ``eta >= 1`` the degree of
    contamination.  ``delta = 0`` gives back the plain SAL law exactly (used
    internally to represent the uncontaminated model variant).
    """

    base: SalParams
    delta: float
    eta: float

    def __post_init__(self):
        if not (0.0 <= self.delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")
        if self.eta < 1.0:
            raise ValueError("eta must be >= 1")

    @property
    def dim(self) -> int:
        return self.base.dim


class LawEval:
    """Cached Cholesky pieces of one SAL law for batched evaluation.

    The contaminant of a cSAL law shares ``a = 2 + alpha^T Sigma^{-1} alpha``
    and rescales the Mahalanobis part by ``1/eta``, so a single factorization
    serves both mixture components.
    """

    def __init__(self, params: SalParams):
        self.p = params.dim
        self.mu = params.mu
        self.alpha = params.alpha
        self.chol = np.linalg.cholesky(params.sigma)
        self.log_det = 2.0 * np.sum(np.log(np.diag(self.chol)))
        self.sigma_inv_alpha = cho_solve((self.chol, True), params.alpha)
        self.a = 2.0 + float(params.alpha @ self.sigma_inv_alpha)
        self.nu = (2.0 - self.p) / 2.0

    def mahalanobis_sq(self, diff: NDArray) -> NDArray:
        z = solve_triangular(self.chol, diff.T, lower=True)
        return np.einsum("ij,ij->j", z, z)

    def log_density(self, diff: NDArray, eta: float = 1.0) -> NDArray:
        """Log SAL density for residuals ``diff`` (n, p).

        With ``eta > 1`` this evaluates the inflated law
        ``SAL(mu, eta Sigma, sqrt(eta) alpha)`` at the same points.
        Returns ``+inf`` where the point coincides with the location and
        ``p >= 2`` (the density diverges; callers must handle the marker).
        """
        n, p = diff.shape
        b = self.mahalanobis_sq(diff) / eta
        lin = (diff @ self.sigma_inv_alpha) / np.sqrt(eta)
        log_det = self.log_det + p * np.log(eta)

        out = np.empty(n)
        if p == 1:
            bb = np.maximum(b, _B_TINY)
            out[:] = (
                np.log(2.0)
                + lin
                - (p / 2.0) * np.log(2.0 * np.pi)
                - 0.5 * log_det
                + (self.nu / 2.0) * (np.log(bb) - np.log(self.a))
                + log_bessel_k(self.nu, np.sqrt(self.a * bb))
            )
            return out

        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        singular = dist < _SINGULAR_DIST
        ok = ~singular
        if np.any(ok):
            bb = b[ok]
            out[ok] = (
                np.log(2.0)
                + lin[ok]
                - (p / 2.0) * np.log(2.0 * np.pi)
                - 0.5 * log_det
                + (self.nu / 2.0) * (np.log(bb) - np.log(self.a))
                + log_bessel_k(self.nu, np.sqrt(self.a * bb))
            )
        out[singular] = np.inf
        return out


def _as_batch(w, p: int) -> Tuple[NDArray, bool]:
    wa = np.asarray(w, dtype=float)
    if wa.ndim == 1:
        if wa.size != p:
            raise ValueError(f"expected a vector of length {p}, got {wa.size}")
        return wa.reshape(1, p), True
    if wa.ndim == 2:
        if wa.shape[1] != p:
            raise ValueError(f"expected rows of length {p}, got {wa.shape[1]}")
        return wa, False
    raise ValueError("w must be a vector or a matrix of row vectors")


def sal_log_density(w, params: SalParams) -> Union[float, NDArray]:
    """Log density of the SAL law at ``w`` (one vector or rows of a matrix).

    Returns ``+inf`` (divergence marker) when ``w`` lies within Euclidean
    distance 1e-12 of ``mu`` and ``p >= 2``.
    """
    batch, scalar = _as_batch(w, params.dim)
    out = LawEval(params).log_density(batch - params.mu)
    return float(out[0]) if scalar else out


def _csal_parts(batch: NDArray, params: CsalParams) -> Tuple[NDArray, NDArray]:
    ev = LawEval(params.base)
    diff = batch - params.base.mu
    lf_ref = ev.log_density(diff)
    lf_con = ev.log_density(diff, eta=params.eta)
    return lf_ref, lf_con


def csal_log_density(w, params: CsalParams) -> Union[float, NDArray]:
    """Log density of the contaminated SAL mixture, via log-sum-exp."""
    batch, scalar = _as_batch(w, params.dim)
    lf_ref, lf_con = _csal_parts(batch, params)
    if params.delta == 0.0:
        out = lf_ref
    else:
        out = np.logaddexp(
            np.log1p(-params.delta) + lf_ref, np.log(params.delta) + lf_con
        )
    return float(out[0]) if scalar else out


def posterior_typical_probability(w, params: CsalParams) -> Union[float, NDArray]:
    """Posterior probability that ``w`` comes from the reference component.

    This is ``(1-delta) f_SAL(w) / f_cSAL(w)`` computed stably in log space;
    the conventional decision calls ``w`` good when the value is >= 0.5.
    """
    batch, scalar = _as_batch(w, params.dim)
    if params.delta == 0.0:
        out = np.ones(batch.shape[0])
        return float(out[0]) if scalar else out
    lf_ref, lf_con = _csal_parts(batch, params)
    log_good = np.log1p(-params.delta) + lf_ref
    log_bad = np.log(params.delta) + lf_con
    with np.errstate(invalid="ignore"):
        out = 1.0 / (1.0 + np.exp(log_bad - log_good))
    # At a singular location both components carry the +inf marker; the mode
    # belongs to both laws, so fall back to the mixing proportion.
    both_inf = np.isinf(lf_ref) & np.isinf(lf_con)
    out[both_inf] = 1.0 - params.delta
    return float(out[0]) if scalar else out


def sal_sample(params: SalParams, n: int, rng: np.random.Generator) -> NDArray:
    """Draw ``n`` rows from the SAL law via its normal mean-variance mixture."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = params.dim
    v = rng.exponential(1.0, size=n)
    normals = rng.standard_normal((n, p)) @ np.linalg.cholesky(params.sigma).T
    return params.mu + v[:, None] * params.alpha + np.sqrt(v)[:, None] * normals


def csal_sample(
    params: CsalParams, n: int, rng: np.random.Generator
) -> Tuple[NDArray, NDArray]:
    """Draw ``n`` rows from the cSAL mixture.

    Returns the sample and a boolean vector flagging rows drawn from the
    contaminant component.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base = params.base
    flags = rng.random(n) < params.delta
    contaminant = SalParams(
        base.mu, params.eta * base.sigma, np.sqrt(params.eta) * base.alpha
    )
    out = sal_sample(base, n, rng)
    n_bad = int(flags.sum())
    if n_bad:
        out[flags] = sal_sample(contaminant, n_bad, rng)
    return out, flags
