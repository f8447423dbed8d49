"""Fréchet means: per-space minimisers of the (weighted) mean squared distance.

Spaces with a flat feature map have closed forms. The sphere, the
hyperboloid and the affine-invariant SPD geometry use Riemannian gradient
iterations; Bures-Wasserstein uses its barycentre fixed-point map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (
    Euclidean,
    FisherRao,
    GaussianBW,
    Hyperbolic2,
    ObjectSample,
    Spd,
    SpdMetric,
    Sphere,
    Wasserstein1D,
    check_distance_matrix,
    distances_to,
    quadrature_weights,
)
from .statsutil import expm, invsqrtm, logm, pairwise_sum, powm, sqrtm

__all__ = [
    "FrechetMeanResult",
    "frechet_mean",
    "weighted_frechet_mean",
    "frechet_objective",
    "frechet_mean_restricted",
    "bw_fixed_point_step",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 500


@dataclass(frozen=True)
class FrechetMeanResult:
    """Outcome of a Fréchet mean computation.

    Attributes
    ----------
    mean : ndarray
        The minimising object.
    objective : float
        Weighted mean squared distance from ``mean`` to the sample.
    iterations : int
        Iterations used (0 for closed forms).
    converged : bool
        False when ``max_iter`` was exhausted before the step fell below
        ``tol``.
    """

    mean: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _normalize_weights(weights, n):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not all be zero")
    return w / total


def _average(values, w):
    if w is None:
        return np.mean(values, axis=0)
    return np.tensordot(w, values, axes=1)


def frechet_objective(space, point, objects, weights=None) -> float:
    """Weighted mean of squared distances from ``point`` to ``objects``."""
    d2 = distances_to(space, point, objects) ** 2
    w = _normalize_weights(weights, len(d2))
    if w is None:
        return pairwise_sum(d2) / len(d2)
    return pairwise_sum(w * d2)


def frechet_mean(sample: ObjectSample, weights=None, max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL) -> FrechetMeanResult:
    """Fréchet mean of a sample.

    Parameters
    ----------
    sample : ObjectSample
    weights : array_like, optional
        Nonnegative weights (normalised internally). Uniform if omitted.
    max_iter : int
        Iteration cap for the iterative strategies.
    tol : float
        Convergence threshold on the norm of the update step.

    Returns
    -------
    FrechetMeanResult
    """
    return weighted_frechet_mean(sample.space, sample.objects, weights, max_iter, tol)


def weighted_frechet_mean(space, objects, weights=None, max_iter: int = DEFAULT_MAX_ITER,
                          tol: float = DEFAULT_TOL) -> FrechetMeanResult:
    """Same as :func:`frechet_mean` for a bare stack of objects (n >= 1)."""
    objs = np.asarray(objects, dtype=float)
    if len(objs) == 0:
        raise ValueError("cannot average an empty sample")
    w = _normalize_weights(weights, len(objs))

    iterations, converged = 0, True
    if isinstance(space, (Euclidean, Wasserstein1D)):
        mean = _average(objs, w)
    elif isinstance(space, Sphere):
        mean, iterations, converged = _sphere_mean(space, objs, w, max_iter, tol)
    elif isinstance(space, Hyperbolic2):
        mean, iterations, converged = _hyperbolic_mean(space, objs, w, max_iter, tol)
    elif isinstance(space, FisherRao):
        qw = quadrature_weights(space)
        roots = np.sqrt(objs * qw)
        roots /= np.linalg.norm(roots, axis=1, keepdims=True)
        u, iterations, converged = _sphere_mean(Sphere(space.grid_size - 1), roots, w, max_iter, tol)
        mean = u * u / qw
        mean /= mean @ qw
    elif isinstance(space, GaussianBW):
        mean, iterations, converged = _bw_mean(objs, w, max_iter, tol)
    elif isinstance(space, Spd):
        metric = space.metric
        if metric is SpdMetric.FROBENIUS:
            mean = _average(objs, w)
        elif metric is SpdMetric.LOG_EUCLIDEAN:
            mean = expm(_average(logm(objs), w))
        elif metric is SpdMetric.POWER_FROBENIUS:
            a = space.power
            mean = powm(_average(powm(objs, a), w), 1.0 / a)
        elif metric is SpdMetric.CHOLESKY:
            lbar = _average(np.linalg.cholesky(objs), w)
            mean = lbar @ lbar.T
        elif metric is SpdMetric.AFFINE_INVARIANT:
            mean, iterations, converged = _air_mean(objs, w, max_iter, tol)
        else:
            mean, iterations, converged = _bw_mean(objs, w, max_iter, tol)
        mean = 0.5 * (mean + mean.T)
    else:
        raise TypeError(f"unsupported space {space!r}")

    objective = frechet_objective(space, mean, objs, w)
    return FrechetMeanResult(mean, objective, iterations, converged)


# ---------------------------------------------------------------------------
# sphere


def _sphere_log(p, x):
    """Log map at unit ``p`` for each row of ``x``."""
    cos = x @ p
    resid = x - cos[:, None] * p
    sin = np.linalg.norm(resid, axis=1)
    theta = np.arctan2(sin, cos)
    scale = np.where(sin > 1e-300, theta / np.where(sin > 1e-300, sin, 1.0), 1.0)
    return scale[:, None] * resid


def _sphere_exp(p, v):
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return p.copy()
    q = np.cos(norm) * p + np.sin(norm) * (v / norm)
    return q / np.linalg.norm(q)


def _riemannian_descent(objective, log_map, exp_map, init, objs, w, max_iter, tol):
    """Gradient descent with unit initial step and step halving on increase."""
    weights = np.full(len(objs), 1.0 / len(objs)) if w is None else w
    p = init
    f = objective(p)
    for it in range(1, max_iter + 1):
        direction = weights @ log_map(p, objs)
        step = 1.0
        while True:
            cand = exp_map(p, step * direction)
            f_cand = objective(cand)
            if f_cand <= f or step < 1e-12:
                break
            step *= 0.5
        moved = step * _tangent_norm(direction)
        if f_cand <= f:
            p, f = cand, f_cand
        if moved < tol:
            return p, it, True
    return p, max_iter, False


def _tangent_norm(v):
    return float(np.sqrt(abs(np.sum(v * v))))


def _sphere_mean(space, objs, w, max_iter, tol):
    init = _average(objs, w)
    norm = np.linalg.norm(init)
    init = objs[0] / np.linalg.norm(objs[0]) if norm < 1e-12 else init / norm
    objective = lambda p: frechet_objective(space, p, objs, w)  # noqa: E731
    return _riemannian_descent(objective, _sphere_log, _sphere_exp, init, objs, w, max_iter, tol)


# ---------------------------------------------------------------------------
# hyperboloid (Minkowski form with signature (+, +, -))


def _minkowski(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def _lift(p):
    """Project a point back to the upper sheet through its (x, y) part."""
    return np.array([p[0], p[1], np.sqrt(1.0 + p[0] ** 2 + p[1] ** 2)])


def _hyperbolic_log(p, x):
    cosh = np.maximum(-_minkowski(x, p), 1.0)
    resid = x - cosh[:, None] * p
    sinh = np.sqrt(np.maximum(_minkowski(resid, resid), 0.0))
    theta = np.arccosh(cosh)
    scale = np.where(sinh > 1e-300, theta / np.where(sinh > 1e-300, sinh, 1.0), 1.0)
    return scale[:, None] * resid


def _hyperbolic_exp(p, v):
    norm = np.sqrt(max(float(_minkowski(v, v)), 0.0))
    if norm == 0.0:
        return p.copy()
    return _lift(np.cosh(norm) * p + np.sinh(norm) * (v / norm))


def _hyperbolic_mean(space, objs, w, max_iter, tol):
    m = _average(objs, w)
    init = _lift(m / np.sqrt(-_minkowski(m, m)))
    objective = lambda p: frechet_objective(space, p, objs, w)  # noqa: E731
    return _riemannian_descent(objective, _hyperbolic_log, _hyperbolic_exp, init, objs, w,
                               max_iter, tol)


# ---------------------------------------------------------------------------
# SPD iterations


def _air_mean(objs, w, max_iter, tol):
    mean = expm(_average(logm(objs), w))
    for it in range(1, max_iter + 1):
        s = sqrtm(mean)
        s_inv = invsqrtm(mean)
        tangent = _average(logm(s_inv @ objs @ s_inv), w)
        mean = s @ expm(tangent) @ s
        mean = 0.5 * (mean + mean.T)
        if np.linalg.norm(tangent) < tol:
            return mean, it, True
    return mean, max_iter, False


def bw_fixed_point_step(mean, objs, weights=None):
    """One application of the Bures-Wasserstein barycentre map."""
    w = _normalize_weights(weights, len(objs))
    s = sqrtm(mean)
    s_inv = invsqrtm(mean)
    inner = _average(sqrtm(s @ objs @ s), w)
    new = s_inv @ inner @ inner @ s_inv
    return 0.5 * (new + new.T)


def _bw_mean(objs, w, max_iter, tol):
    mean = _average(objs, w)
    for it in range(1, max_iter + 1):
        new = bw_fixed_point_step(mean, objs, w)
        step = np.linalg.norm(new - mean)
        mean = new
        if step < tol:
            return mean, it, True
    return mean, max_iter, False


# ---------------------------------------------------------------------------
# restricted mean


def frechet_mean_restricted(dist) -> tuple[int, float]:
    """Sample point minimising the mean squared distance to the sample.

    Each row is summed after sorting, so equal multisets of distances give
    bit-identical objectives and ties resolve to the smallest index no
    matter how the sample is ordered.
    """
    d = check_distance_matrix(dist)
    obj = np.sort(d * d, axis=1).sum(axis=1) / d.shape[0]
    k = int(np.argmin(obj))
    return k, float(obj[k])
