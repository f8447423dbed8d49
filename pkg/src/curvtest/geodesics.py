"""Geodesic reconstruction.

Two routes are provided. In an intrinsically flat space, intrinsic distances
are embedded by classical multidimensional scaling (ISOMAP), straight lines
are drawn in the representation space, and points on them are mapped back
to objects as kernel-weighted Fréchet means. For centred Gaussians under the
Wasserstein metric the geodesic is available in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ExtrapolationError
from .frechet import weighted_frechet_mean
from .intrinsic import intrinsic_distances
from .metrics import GaussianBW, ObjectSample, Spd, _validate, distance_matrix
from .statsutil import invsqrtm, sqrtm

__all__ = [
    "EmbeddingModel",
    "isomap_embed",
    "interpolate_representation",
    "default_bandwidth",
    "kernel_weights",
    "inverse_map",
    "isomap_geodesic",
    "gaussian_wasserstein_geodesic",
    "ellipse_parameters",
]

#: all kernel weights below this value means the point is out of reach
WEIGHT_FLOOR = 1e-300
#: eigenvalues below this fraction of the largest count as zero
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class EmbeddingModel:
    """Classical MDS embedding of a distance matrix.

    Attributes
    ----------
    coordinates : ndarray, shape (n, q)
    q : int
    eigenvalues : ndarray, shape (q,)
        Leading eigenvalues of the doubly centred squared-distance matrix,
        descending and clamped at zero.
    d_i : ndarray, shape (n, n)
        The embedded distance matrix.
    sample : ObjectSample or None
        Source objects, needed by :func:`inverse_map`.
    rank_deficient : bool
        True when the q-th eigenvalue is negligible relative to the first.
    """

    coordinates: np.ndarray = field(repr=False)
    q: int
    eigenvalues: np.ndarray
    d_i: np.ndarray = field(repr=False)
    sample: ObjectSample | None = field(default=None, repr=False)
    rank_deficient: bool = False


def isomap_embed(d_i, q: int = 1, sample: ObjectSample | None = None) -> EmbeddingModel:
    """Embed a distance matrix into ``R^q`` by classical scaling.

    Each eigenvector's sign is fixed so that its first entry that is not
    negligible is positive.
    """
    d = np.asarray(d_i, dtype=float)
    n = d.shape[0]
    if not 1 <= q < n:
        raise ValueError(f"need 1 <= q < n, got q={q}, n={n}")
    sq = d * d
    b = sq - sq.mean(axis=0, keepdims=True)
    b = b - b.mean(axis=1, keepdims=True)
    b = -0.25 * (b + b.T)
    w, v = np.linalg.eigh(b)
    w = w[::-1][:q]
    v = v[:, ::-1][:, :q]
    for k in range(q):
        col = v[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if lead.size and col[lead[0]] < 0:
            v[:, k] = -col
    rank_deficient = bool(w[-1] <= RANK_RTOL * max(w[0], 0.0))
    if rank_deficient:
        warnings.warn(f"eigenvalue {q} of the scaling matrix is not positive; "
                      "the intrinsic dimension is likely below q", RuntimeWarning, stacklevel=2)
    w = np.maximum(w, 0.0)
    coords = v * np.sqrt(w)
    return EmbeddingModel(coordinates=coords, q=q, eigenvalues=w, d_i=d, sample=sample,
                          rank_deficient=rank_deficient)


def interpolate_representation(model: EmbeddingModel, x_index: int, y_index: int,
                               t: float) -> np.ndarray:
    """Point ``(1 - t) psi(x) + t psi(y)`` of the representation space."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    c = model.coordinates
    return (1.0 - t) * c[x_index] + t * c[y_index]


def default_bandwidth(model: EmbeddingModel) -> float:
    """Median distance from each embedded point to its nearest neighbour."""
    c = model.coordinates
    diff = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)
    np.fill_diagonal(diff, np.inf)
    h = float(np.median(diff.min(axis=1)))
    if h > 0:
        return h
    positive = diff[np.isfinite(diff) & (diff > 0)]
    return float(positive.min()) if positive.size else 1.0


def kernel_weights(model: EmbeddingModel, zeta, bandwidth: float) -> np.ndarray:
    """Normalised Gaussian kernel weights of the embedded points around ``zeta``."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    z = np.asarray(zeta, dtype=float).reshape(-1)
    sq = np.sum((model.coordinates - z) ** 2, axis=1)
    logw = -sq / (2.0 * bandwidth ** 2)
    if logw.max() < math.log(WEIGHT_FLOOR):
        raise ExtrapolationError(
            f"point {z.tolist()} is too far from the embedded sample for bandwidth {bandwidth:.4g}"
        )
    return np.exp(logw - logsumexp(logw))


def inverse_map(model: EmbeddingModel, zeta, bandwidth: float | None = None,
                mode: str = "mean", **mean_options):
    """Map a representation point back to an object.

    Parameters
    ----------
    model : EmbeddingModel
        Must carry the source sample.
    zeta : array_like, shape (q,)
    bandwidth : float, optional
        Kernel bandwidth; :func:`default_bandwidth` if omitted.
    mode : {"mean", "sample"}
        ``"mean"`` returns the kernel-weighted Fréchet mean; ``"sample"``
        returns the sample object minimising the weighted objective.

    Returns
    -------
    ndarray
        The reconstructed object.
    """
    if model.sample is None:
        raise ValueError("the embedding model has no source sample")
    h = default_bandwidth(model) if bandwidth is None else bandwidth
    w = kernel_weights(model, zeta, h)
    sample = model.sample
    if mode == "mean":
        return weighted_frechet_mean(sample.space, sample.objects, w, **mean_options).mean
    if mode == "sample":
        d = distance_matrix(sample)
        return sample.objects[int(np.argmin((d * d) @ w))].copy()
    raise ValueError(f"unknown mode {mode!r}")


def isomap_geodesic(sample: ObjectSample, x_index: int, y_index: int, ts,
                    q: int = 1, bandwidth: float | None = None, radius: float | None = None,
                    c: float = 1.0, mode: str = "mean"):
    """Reconstructed geodesic between two sample objects.

    Intrinsic distances are estimated on a ball graph, embedded in ``R^q``,
    and each point of the straight segment between the two representations
    is mapped back by :func:`inverse_map`.

    Returns
    -------
    objects : ndarray
        One object per entry of ``ts``.
    model : EmbeddingModel
    """
    _, _, d_i = intrinsic_distances(sample, radius, c)
    model = isomap_embed(d_i, q, sample)
    h = default_bandwidth(model) if bandwidth is None else bandwidth
    path = [inverse_map(model, interpolate_representation(model, x_index, y_index, t), h, mode)
            for t in ts]
    return np.stack(path), model


def gaussian_wasserstein_geodesic(u, v, t: float) -> np.ndarray:
    """Covariance at time ``t`` on the Wasserstein geodesic from N(0, U) to N(0, V).

    ``W(t) = M U M`` with ``M = (1 - t) I + t T`` and ``T`` the optimal
    transport map from N(0, U) to N(0, V).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    u = np.asarray(u, dtype=float)
    dim = u.shape[-1]
    u, v = _validate(GaussianBW(dim), np.stack([u, np.asarray(v, dtype=float)]))
    vs = sqrtm(v)
    transport = vs @ invsqrtm(vs @ u @ vs) @ vs
    m = (1.0 - t) * np.eye(dim) + t * transport
    w = m @ u @ m.T
    return 0.5 * (w + w.T)


def ellipse_parameters(cov) -> dict:
    """Axis lengths (eigenvalues, descending) and major-axis angle of a 2x2 covariance."""
    s = np.asarray(cov, dtype=float)
    if s.shape != (2, 2):
        raise ValueError("expected a 2x2 covariance matrix")
    _validate(Spd(2), s[None])
    w, q = np.linalg.eigh(0.5 * (s + s.T))
    major = q[:, 1]
    angle = math.atan2(major[1], major[0])
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return {"eigenvalues": [float(w[1]), float(w[0])], "angle": angle}
