"""Scalar spectral constants of a collision kernel.

Every constant is a weighted angular moment of the kernel:

* ``lambda_alpha``  - exponential stability rate of the flow in the
  order-alpha metric; computed from the compensated bracket so singular
  kernels are handled uniformly.
* ``gamma_alpha`` / ``gamma_2`` - gain moment and total mass (cutoff only).
* ``beta_alpha``    - the equicontinuity constant bounding time derivatives.
* ``mu_alpha``      - self-similar scaling rate, lambda_alpha / alpha.
* ``lambda_p``, ``gamma_tilde``, ``B_coeff`` - reduced moments feeding the
  self-similar series recurrence.

All results are memoized per (kernel, exponent, tolerance); the caches are
insert-idempotent, so concurrent readers are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import AdmissibilityError, DomainError
from .kernel import AngularKernel, is_cutoff, min_alpha0, singularity_orders
from .quad import kernel_moment

__all__ = [
    "SpectralConstants",
    "ReducedMoment",
    "require_admissible",
    "lambda_alpha",
    "gamma_alpha",
    "gamma_2",
    "beta_alpha",
    "mu_alpha",
    "lambda_p",
    "gamma_tilde",
    "B_coeff",
    "g_weighted_integral",
    "compute_constants",
]

DEFAULT_REL_TOL = 1e-11


def require_admissible(kernel: AngularKernel, alpha: float) -> None:
    """alpha must lie in (0, 2], strictly above the kernel's infimum when that
    infimum is not attained (singular kernels)."""
    if not (0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    a0 = min_alpha0(kernel)
    if a0 > 0.0 and alpha <= a0:
        raise AdmissibilityError(
            f"alpha = {alpha} not admissible: needs alpha > {a0} for this kernel"
        )


def compensated_bracket(u, half):
    """(u/2)^h + (1-u/2)^h - 1 in the endpoint distance u, with the trailing
    cancellation done through expm1: its error must stay relative, because the
    kernel weight amplifies any absolute noise near the endpoint."""
    return (u / 2.0) ** half + np.expm1(half * np.log1p(-u / 2.0))


@lru_cache(maxsize=None)
def _lambda_alpha(kernel, alpha, rel_tol):
    require_admissible(kernel, alpha)
    half = alpha / 2.0

    def bracket(u, end):
        # (1 -+ s)/2 = u/2 and (1 +- s)/2 = 1 - u/2 at s = end*(1-u), both ends
        return compensated_bracket(u, half)

    val = kernel_moment(kernel, bracket, half, half, rel_tol).value
    if val < -rel_tol:
        raise AdmissibilityError(f"lambda_alpha came out negative ({val}); inadmissible pair")
    return val


def lambda_alpha(kernel: AngularKernel, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Stability rate: compensated angular moment of order alpha; zero at alpha=2."""
    return _lambda_alpha(kernel, float(alpha), float(rel_tol))


@lru_cache(maxsize=None)
def _gamma_2(kernel, rel_tol):
    if not is_cutoff(kernel):
        return math.inf
    return kernel_moment(kernel, lambda u, end: np.ones_like(u), 0.0, 0.0, rel_tol).value


def gamma_2(kernel: AngularKernel, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Total kernel mass 2*pi*int B; +inf flag for non-cutoff kernels."""
    return _gamma_2(kernel, float(rel_tol))


@lru_cache(maxsize=None)
def _gamma_alpha(kernel, alpha, rel_tol):
    if not (0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if not is_cutoff(kernel):
        return math.inf
    half = alpha / 2.0

    def weight(u, end):
        return (u / 2.0) ** half + (1.0 - u / 2.0) ** half

    return kernel_moment(kernel, weight, 0.0, 0.0, rel_tol).value


def gamma_alpha(kernel: AngularKernel, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Gain moment of order alpha; +inf flag for non-cutoff kernels."""
    return _gamma_alpha(kernel, float(alpha), float(rel_tol))


@lru_cache(maxsize=None)
def _beta_alpha(kernel, alpha, rel_tol):
    require_admissible(kernel, alpha)
    quarter = alpha / 4.0

    def weight(u, end):
        return (u / 2.0) ** quarter * (1.0 - u / 2.0) ** quarter

    return kernel_moment(kernel, weight, quarter, quarter, rel_tol).value


def beta_alpha(kernel: AngularKernel, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Cross moment bounding time derivatives; finite exactly on admissible pairs."""
    return _beta_alpha(kernel, float(alpha), float(rel_tol))


def mu_alpha(kernel: AngularKernel, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Self-similar scaling rate lambda_alpha / alpha (zero at alpha = 2)."""
    return lambda_alpha(kernel, alpha, rel_tol) / float(alpha)


def g_weighted_integral(kernel: AngularKernel, h, vanish0: float, vanish1: float,
                        rel_tol: float) -> float:
    """integral over (0,1) of G(s) * h(s), h vanishing like s^vanish0 at 0 and
    (1-s)^vanish1 at 1 (h must accept node arrays).

    This is the reduced form of a kernel moment: with s = (1 - s')/2 the
    integral equals 2*pi int B(s') h((1-s')/2) ds', which kernel_moment
    computes through endpoint-stable, cap-aware piecewise quadrature.
    """

    def weight(u, end):
        return h(0.5 * u) if end > 0 else h(1.0 - 0.5 * u)

    return kernel_moment(kernel, weight, vanish0, vanish1, rel_tol).value


_g_integral = g_weighted_integral


@lru_cache(maxsize=None)
def _lambda_p(kernel, p, rel_tol):
    if p <= 0.0:
        raise DomainError(f"reduced moment order must be positive, got {p}")
    nu_plus, nu_minus = singularity_orders(kernel)
    vanish = min(p, 1.0)
    if kernel.cutoff_cap is None and (vanish <= nu_plus or vanish <= nu_minus):
        raise AdmissibilityError(
            f"compensated integrand of order p={p} not integrable against this kernel"
        )

    def weight(u, end):
        # s^p + (1-s)^p - 1 is symmetric: in the distance d = u/2 from either
        # endpoint it reads d^p + ((1-d)^p - 1)
        return compensated_bracket(u, p)

    return kernel_moment(kernel, weight, vanish, vanish, rel_tol).value


def lambda_p(kernel: AngularKernel, p: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Reduced compensated moment over (0,1); equals lambda_alpha at p = alpha/2."""
    return _lambda_p(kernel, float(p), float(rel_tol))


def gamma_tilde(kernel: AngularKernel, alpha_tilde: float, n: int,
                rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Series denominators n*lambda(a) - lambda(n*a); positive for n >= 2, a < 1."""
    if n < 2 or n != int(n):
        raise DomainError(f"need integer n >= 2, got {n}")
    return n * lambda_p(kernel, alpha_tilde, rel_tol) - lambda_p(kernel, n * alpha_tilde, rel_tol)


@lru_cache(maxsize=None)
def _B_coeff(kernel, alpha_tilde, j, l, rel_tol):
    if j < 1 or l < 1:
        raise DomainError("coefficient indices must be >= 1")
    nu_plus, nu_minus = singularity_orders(kernel)
    ej, el = j * alpha_tilde, l * alpha_tilde
    if kernel.cutoff_cap is None and (ej <= nu_plus or el <= nu_minus):
        raise AdmissibilityError("weighted kernel moment not integrable")

    def weight(u, end):
        near, far = (ej, el) if end > 0 else (el, ej)
        return (u / 2.0) ** near * (1.0 - u / 2.0) ** far

    integral = kernel_moment(kernel, weight, ej, el, rel_tol).value
    n = j + l
    log_ratio = (
        gammaln(n * alpha_tilde + 1.0)
        - gammaln(j * alpha_tilde + 1.0)
        - gammaln(l * alpha_tilde + 1.0)
    )
    return math.exp(log_ratio) * integral


def B_coeff(kernel: AngularKernel, alpha_tilde: float, j: int, l: int,
            rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Gamma-normalized product moment feeding the profile recurrence.

    Symmetric in (j, l) whenever the reduced kernel is symmetric under
    s -> 1-s.
    """
    return _B_coeff(kernel, float(alpha_tilde), int(j), int(l), float(rel_tol))


@dataclass(frozen=True)
class ReducedMoment:
    p: float
    lambda_p: float


@dataclass(frozen=True)
class SpectralConstants:
    """The constant tuple for one (kernel, alpha) pair.

    For cutoff kernels ``gamma_alpha`` is assembled as ``gamma_2 +
    lambda_alpha`` so the defining identity holds exactly; the direct
    quadrature route is exposed separately as :func:`gamma_alpha` and
    cross-checked in the test suite.
    """

    alpha: float
    gamma_alpha: float
    gamma_2: float
    lambda_alpha: float
    beta_alpha: float
    mu_alpha: float

    def __post_init__(self):
        if self.lambda_alpha < -1e-12:
            raise DomainError(f"lambda_alpha must be >= 0, got {self.lambda_alpha}")
        if math.isfinite(self.gamma_alpha):
            # exact by construction up to the one rounding in gamma_2 + lambda
            gap = abs(self.gamma_alpha - self.gamma_2 - self.lambda_alpha)
            assert gap <= 4.0 * np.spacing(max(abs(self.gamma_alpha), 1.0))


def compute_constants(kernel: AngularKernel, alpha: float,
                      rel_tol: float = DEFAULT_REL_TOL) -> SpectralConstants:
    lam = lambda_alpha(kernel, alpha, rel_tol)
    g2 = gamma_2(kernel, rel_tol)
    ga = g2 + lam if math.isfinite(g2) else math.inf
    return SpectralConstants(
        alpha=float(alpha),
        gamma_alpha=ga,
        gamma_2=g2,
        lambda_alpha=lam,
        beta_alpha=beta_alpha(kernel, alpha, rel_tol),
        mu_alpha=lam / float(alpha),
    )
