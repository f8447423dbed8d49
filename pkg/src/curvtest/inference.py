"""Metric curvature estimate, curvature tests, intervals and confidence ellipses."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionEstimate
from .errors import DegenerateVarianceError
from .statsutil import chi2_2_quantile, normal_cdf, normal_quantile

__all__ = [
    "Alternative",
    "Ellipse",
    "CurvatureTestResult",
    "rho_hat",
    "rho_prime_hat",
    "sigma_for_rho",
    "curvature_test",
    "confidence_region",
    "region_contains",
    "region_boundary",
    "quadratic_form",
    "normal_quantile",
    "chi2_2_quantile",
    "DEGENERACY_RTOL",
]

#: sigma^2 is treated as zero below this fraction of its no-cancellation scale.
DEGENERACY_RTOL = 1e-10
#: relative slack on the boundary of the confidence ellipse
BOUNDARY_RTOL = 1e-9

_DEGENERATE_HINT = (
    "the limiting variance of the curvature estimate must be strictly positive "
    "for the normal approximation to apply"
)


class Alternative(str, enum.Enum):
    TWO_SIDED = "two-sided"
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Ellipse:
    """Joint confidence region ``{eta : (c - eta)' S^+ (c - eta) <= radius2}``.

    ``center`` is (v_m, v_f) and ``shape`` is the covariance estimate
    divided by n.
    """

    center: np.ndarray
    shape: np.ndarray
    radius2: float

    @property
    def singular(self) -> bool:
        w = np.linalg.eigvalsh(self.shape)
        return bool(w[0] <= 1e-12 * max(w[-1], 0.0) or w[-1] <= 0.0)


@dataclass(frozen=True)
class CurvatureTestResult:
    rho_hat: float
    rho_prime_hat: float | None
    sigma_hat: float
    t_n: float
    p_value: float
    alternative: Alternative
    ci: tuple
    alpha: float
    decision: bool
    ellipse: Ellipse
    n: int
    v_m: float
    v_f: float


def rho_hat(v_m: float, v_f: float) -> float:
    """Curvature estimate ``v_f / v_m - 1``."""
    if not v_m > 0:
        raise DegenerateVarianceError(f"metric variance is {v_m}; {_DEGENERATE_HINT}")
    return v_f / v_m - 1.0


def rho_prime_hat(v_m: float, v_f: float) -> float:
    """Alternative curvature measure ``1 / v_m - 1 / v_f``."""
    if not (v_m > 0 and v_f > 0):
        raise ValueError(f"both variances must be positive, got v_m={v_m}, v_f={v_f}")
    return 1.0 / v_m - 1.0 / v_f


def _gradient(v_m, v_f):
    return np.array([-v_f / v_m ** 2, 1.0 / v_m])


def sigma_for_rho(sigma, v_m: float, v_f: float) -> float:
    """Delta-method standard deviation of the curvature estimate."""
    a = _gradient(v_m, v_f)
    s = np.asarray(sigma, dtype=float)
    return math.sqrt(max(0.0, float(a @ s @ a)))


def _alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def curvature_test(est: DispersionEstimate, alpha: float = 0.05,
                   alternative: Alternative | str = Alternative.TWO_SIDED) -> CurvatureTestResult:
    """Test of zero metric curvature with interval and joint region.

    Parameters
    ----------
    est : DispersionEstimate
    alpha : float
        Level of the test; intervals and the ellipse have coverage 1 - alpha.
    alternative : {"two-sided", "positive", "negative"}

    Returns
    -------
    CurvatureTestResult

    Raises
    ------
    DegenerateVarianceError
        When the metric variance or the variance of the estimate vanishes.
    """
    alpha = _alpha(alpha)
    alternative = Alternative(alternative)
    n = est.n
    if n < 2:
        raise ValueError("at least 2 observations are required")
    rho = rho_hat(est.v_m, est.v_f)
    a = _gradient(est.v_m, est.v_f)
    s = np.asarray(est.sigma, dtype=float)
    var = float(a @ s @ a)
    scale = float(np.abs(a) @ np.abs(s) @ np.abs(a))
    if not (scale > 0 and var > DEGENERACY_RTOL * scale):
        raise DegenerateVarianceError(
            f"estimated variance of the curvature statistic is {var:.3g} "
            f"(scale {scale:.3g}); {_DEGENERATE_HINT}"
        )
    sigma_hat = math.sqrt(var)
    root_n = math.sqrt(n)
    t_n = root_n * rho / sigma_hat

    lower_tail = normal_cdf(t_n)
    upper_tail = normal_cdf(-t_n)
    z_half = normal_quantile(1.0 - alpha / 2.0)
    half = z_half * sigma_hat / root_n
    ci = (rho - half, rho + half)
    if alternative is Alternative.TWO_SIDED:
        p_value = 2.0 * min(lower_tail, upper_tail)
        decision = not (ci[0] <= 0.0 <= ci[1])
    elif alternative is Alternative.POSITIVE:
        p_value = upper_tail
        decision = t_n > normal_quantile(1.0 - alpha)
    else:
        p_value = lower_tail
        decision = t_n < -normal_quantile(1.0 - alpha)

    ellipse = confidence_region(est, alpha)
    rho_p = rho_prime_hat(est.v_m, est.v_f) if est.v_f > 0 else None
    return CurvatureTestResult(
        rho_hat=rho, rho_prime_hat=rho_p, sigma_hat=sigma_hat, t_n=t_n,
        p_value=min(1.0, p_value), alternative=alternative, ci=ci, alpha=alpha,
        decision=bool(decision), ellipse=ellipse, n=n, v_m=est.v_m, v_f=est.v_f,
    )


def confidence_region(est: DispersionEstimate, alpha: float = 0.05) -> Ellipse:
    """Joint confidence ellipse for ``(V_M, V_F)``.

    Unlike :func:`curvature_test` this needs no nondegenerate direction, so
    it is available for flat data too (the shape is then singular).
    """
    alpha = _alpha(alpha)
    if est.n < 2:
        raise ValueError("at least 2 observations are required")
    return Ellipse(center=np.array([est.v_m, est.v_f]),
                   shape=np.asarray(est.sigma, dtype=float) / est.n,
                   radius2=chi2_2_quantile(1.0 - alpha))


def quadratic_form(ellipse: Ellipse, eta) -> float:
    """``(center - eta)' shape^+ (center - eta)``; pseudo-inverse if singular."""
    diff = ellipse.center - np.asarray(eta, dtype=float)
    inv = np.linalg.pinv(ellipse.shape, rcond=1e-12, hermitian=True)
    return float(diff @ inv @ diff)


def region_contains(ellipse: Ellipse, eta) -> bool:
    """Membership in the closed confidence ellipse."""
    return quadratic_form(ellipse, eta) <= ellipse.radius2 * (1.0 + BOUNDARY_RTOL)


def region_boundary(ellipse: Ellipse, k: int = 64) -> np.ndarray:
    """``k`` points evenly spaced in angle along the ellipse boundary."""
    if k < 3:
        raise ValueError("need at least 3 boundary points")
    w, q = np.linalg.eigh(0.5 * (ellipse.shape + ellipse.shape.T))
    axes = q * np.sqrt(np.maximum(w, 0.0) * ellipse.radius2)
    t = 2.0 * np.pi * np.arange(k) / k
    return ellipse.center + np.column_stack([np.cos(t), np.sin(t)]) @ axes.T
