"""Fréchet variance, metric variance and their joint covariance estimate."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .frechet import frechet_mean
from .metrics import ObjectSample, check_distance_matrix, distance_matrix, distances_to
from .statsutil import pairwise_sum

__all__ = [
    "DispersionEstimate",
    "metric_variance",
    "frechet_variance",
    "covariance_estimate",
    "dispersion",
    "dispersion_from_distances",
]

_BLOCK_ROWS = 512


@dataclass(frozen=True)
class DispersionEstimate:
    """Sample dispersion summary.

    Attributes
    ----------
    v_m, v_f : float
        Metric variance and Fréchet variance.
    sigma : ndarray, shape (2, 2)
        Estimated asymptotic covariance of ``sqrt(n) (v_m, v_f)``, ordered
        as (metric, Fréchet).
    n : int
    mean_distances : ndarray, shape (n,)
        Distances from the Fréchet mean to each observation.
    mean : ndarray or None
        The Fréchet mean object, when computed in the ambient space.
    mean_index : int or None
        Sample index of the mean when it is restricted to the sample.
    clamped : tuple of str
        Names of diagonal entries of ``sigma`` that were negative and set to 0.
    converged : bool
        Whether the Fréchet mean optimiser converged.
    """

    v_m: float
    v_f: float
    sigma: np.ndarray
    n: int
    mean_distances: np.ndarray = field(repr=False)
    mean: np.ndarray | None = field(default=None, repr=False)
    mean_index: int | None = None
    clamped: tuple = ()
    converged: bool = True


def _row_square_sums(dist):
    """Per-row sums of squared distances, evaluated block by block."""
    n = dist.shape[0]
    out = np.empty(n)
    for a in range(0, n, _BLOCK_ROWS):
        block = dist[a:a + _BLOCK_ROWS]
        out[a:a + _BLOCK_ROWS] = pairwise_sum(block * block, axis=1)
    return out


def _check_square(dist):
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] < 2:
        raise ValueError("at least 2 observations are required")
    return d


def metric_variance(dist) -> float:
    """Average of ``d^2 / 2`` over ordered pairs, i.e. ``sum_{i<j} d_ij^2 / (n (n-1))``."""
    d = _check_square(dist)
    n = d.shape[0]
    return pairwise_sum(_row_square_sums(d)) / (2.0 * n * (n - 1))


def frechet_variance(dist_to_mean) -> float:
    """Mean of the squared distances to the Fréchet mean."""
    e = np.asarray(dist_to_mean, dtype=float)
    if e.ndim != 1 or len(e) == 0:
        raise ValueError("expected a nonempty vector of distances")
    if np.any(e < 0):
        raise ValueError("distances must be nonnegative")
    return pairwise_sum(e * e) / len(e)


def _covariance(d, e):
    n = d.shape[0]
    if e.shape != (n,):
        raise ValueError(f"expected {n} distances to the mean, got shape {e.shape}")
    rows = _row_square_sums(d)
    v_m = pairwise_sum(rows) / (2.0 * n * (n - 1))
    e2 = e * e
    v_f = pairwise_sum(e2) / n
    rbar = rows / (n - 1)
    s_mm = pairwise_sum(rbar * rbar) / n - (2.0 * v_m) ** 2
    s_fm = pairwise_sum(e2 * rbar) / n - v_f * (2.0 * v_m)
    s_ff = pairwise_sum(e2 * e2) / n - v_f ** 2
    clamped = []
    if s_mm < 0:
        clamped.append("sigma2_m")
        s_mm = 0.0
    if s_ff < 0:
        clamped.append("sigma2_f")
        s_ff = 0.0
    sigma = np.array([[s_mm, s_fm], [s_fm, s_ff]])
    return v_m, v_f, sigma, tuple(clamped)


def covariance_estimate(dist, dist_to_mean) -> np.ndarray:
    """Plug-in covariance matrix of (metric variance, Fréchet variance).

    Parameters
    ----------
    dist : array_like, shape (n, n)
        Pairwise distances.
    dist_to_mean : array_like, shape (n,)
        Distances from the Fréchet mean to each observation.

    Returns
    -------
    ndarray, shape (2, 2)
        ``[[s2_m, s_fm], [s_fm, s2_f]]`` with negative diagonal entries
        clamped to zero.
    """
    d = _check_square(dist)
    return _covariance(d, np.asarray(dist_to_mean, dtype=float))[2]


def dispersion_from_distances(dist, dist_to_mean, mean=None, mean_index=None,
                              converged=True) -> DispersionEstimate:
    """Assemble a :class:`DispersionEstimate` from precomputed distances."""
    d = _check_square(dist)
    e = np.array(dist_to_mean, dtype=float)
    v_m, v_f, sigma, clamped = _covariance(d, e)
    if clamped:
        warnings.warn(f"negative variance estimate clamped to 0: {', '.join(clamped)}",
                      RuntimeWarning, stacklevel=2)
    e.setflags(write=False)
    return DispersionEstimate(v_m=v_m, v_f=v_f, sigma=sigma, n=d.shape[0], mean_distances=e,
                              mean=mean, mean_index=mean_index, clamped=clamped,
                              converged=converged)


def dispersion(sample: ObjectSample, dist=None, **mean_options) -> DispersionEstimate:
    """Distance matrix, Fréchet mean and all dispersion estimates of a sample.

    ``dist`` may be passed to reuse an already computed distance matrix.
    Extra keyword arguments go to :func:`frechet_mean`.
    """
    if dist is None:
        dist = distance_matrix(sample)
    else:
        dist = check_distance_matrix(dist)
    fm = frechet_mean(sample, **mean_options)
    if not fm.converged:
        warnings.warn(f"Fréchet mean did not converge in {fm.iterations} iterations",
                      RuntimeWarning, stacklevel=2)
    e = distances_to(sample.space, fm.mean, sample.objects)
    return dispersion_from_distances(dist, e, mean=fm.mean, converged=fm.converged)
