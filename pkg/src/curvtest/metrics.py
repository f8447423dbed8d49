"""Metric spaces, object samples and pairwise distances.

Every space is a small frozen dataclass. Objects of a sample are stored as
one stacked float array (vectors, unit vectors, hyperboloid points, SPD
matrices, quantile grids or density grids). Distances are computed by
per-space kernels that act on stacks of object pairs, so a single
:func:`distance` call and a full :func:`distance_matrix` share exactly the
same arithmetic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import ConformanceError
from .statsutil import EIGEN_FLOOR, invsqrtm, logm, powm, sqrtm

__all__ = [
    "Euclidean",
    "Sphere",
    "Hyperbolic2",
    "SpdMetric",
    "Spd",
    "Wasserstein1D",
    "GaussianBW",
    "FisherRao",
    "SpaceKind",
    "ObjectSample",
    "distance",
    "distance_matrix",
    "distances_to",
    "check_distance_matrix",
    "parse_space",
    "space_label",
    "probability_grid",
    "quadrature_weights",
]

UNIT_TOL = 1e-9
SYM_TOL = 1e-9
DENSITY_TOL = 1e-3


@dataclass(frozen=True)
class Euclidean:
    dim: int

    def __post_init__(self):
        _check_positive_int(self.dim, "dim")

    @property
    def object_shape(self):
        return (self.dim,)


@dataclass(frozen=True)
class Sphere:
    """Unit sphere S^dim, objects are unit vectors in R^(dim+1)."""

    dim: int

    def __post_init__(self):
        _check_positive_int(self.dim, "dim")

    @property
    def object_shape(self):
        return (self.dim + 1,)


@dataclass(frozen=True)
class Hyperbolic2:
    """Upper sheet of x^2 + y^2 - z^2 = -1 with the hyperbolic distance."""

    @property
    def object_shape(self):
        return (3,)


class SpdMetric(str, enum.Enum):
    FROBENIUS = "frobenius"
    LOG_EUCLIDEAN = "log-euclidean"
    POWER_FROBENIUS = "power-frobenius"
    CHOLESKY = "cholesky"
    AFFINE_INVARIANT = "affine-invariant"
    BURES_WASSERSTEIN = "bures-wasserstein"


_SPD_ALIASES = {
    "frob": SpdMetric.FROBENIUS,
    "log-e": SpdMetric.LOG_EUCLIDEAN,
    "loge": SpdMetric.LOG_EUCLIDEAN,
    "p-frob": SpdMetric.POWER_FROBENIUS,
    "chol": SpdMetric.CHOLESKY,
    "air": SpdMetric.AFFINE_INVARIANT,
    "bw": SpdMetric.BURES_WASSERSTEIN,
}


def _coerce_metric(value):
    if isinstance(value, SpdMetric):
        return value
    key = str(value).strip().lower().replace("_", "-")
    return _SPD_ALIASES.get(key) or SpdMetric(key)


@dataclass(frozen=True)
class Spd:
    dim: int
    metric: SpdMetric = SpdMetric.FROBENIUS
    power: float = 0.5

    def __post_init__(self):
        _check_positive_int(self.dim, "dim")
        object.__setattr__(self, "metric", _coerce_metric(self.metric))
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")

    @property
    def object_shape(self):
        return (self.dim, self.dim)


@dataclass(frozen=True)
class Wasserstein1D:
    """Distributions on the line, stored as quantile functions.

    Quantiles are evaluated at the midpoints ``(k + 1/2) / m`` of a uniform
    partition of (0, 1), so unbounded supports stay finite.
    """

    grid_size: int = 1001

    def __post_init__(self):
        if int(self.grid_size) < 2:
            raise ValueError("grid_size must be at least 2")

    @property
    def object_shape(self):
        return (self.grid_size,)


@dataclass(frozen=True)
class GaussianBW:
    """Centred Gaussians N(0, S) with the 2-Wasserstein (Bures) distance."""

    dim: int

    def __post_init__(self):
        _check_positive_int(self.dim, "dim")

    @property
    def object_shape(self):
        return (self.dim, self.dim)


@dataclass(frozen=True)
class FisherRao:
    """Densities tabulated on ``grid_size`` equispaced points of [lower, upper]."""

    grid_size: int
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if int(self.grid_size) < 2:
            raise ValueError("grid_size must be at least 2")
        if not self.upper > self.lower:
            raise ValueError("upper must exceed lower")

    @property
    def object_shape(self):
        return (self.grid_size,)


SpaceKind = Union[Euclidean, Sphere, Hyperbolic2, Spd, Wasserstein1D, GaussianBW, FisherRao]


def _check_positive_int(value, name):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def probability_grid(m: int) -> np.ndarray:
    """Probability levels at which :class:`Wasserstein1D` quantiles live."""
    return (np.arange(m) + 0.5) / m


def quadrature_weights(space) -> np.ndarray:
    """Quadrature weights of the grid spaces (sum to 1 / to the domain length)."""
    if isinstance(space, Wasserstein1D):
        return np.full(space.grid_size, 1.0 / space.grid_size)
    if isinstance(space, FisherRao):
        h = (space.upper - space.lower) / (space.grid_size - 1)
        w = np.full(space.grid_size, h)
        w[0] = w[-1] = 0.5 * h
        return w
    raise TypeError(f"{space!r} has no quadrature grid")


# ---------------------------------------------------------------------------
# validation


def _validate(space, objects) -> np.ndarray:
    arr = np.array(objects, dtype=float)
    shape = space.object_shape
    if arr.shape[1:] != shape:
        if arr.shape == shape:
            raise ConformanceError("expected a stack of objects, got a single object")
        raise ConformanceError(
            f"objects of {space_label(space)} must have shape {shape}, got {arr.shape[1:]}"
        )
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr.reshape(len(arr), -1)))[0, 0])
        raise ConformanceError(f"object {bad} has non-finite entries")

    if isinstance(space, Sphere):
        err = np.abs(np.linalg.norm(arr, axis=1) - 1.0)
        _fail_where(err > UNIT_TOL, "is not a unit vector (norm off by more than 1e-9)")
    elif isinstance(space, Hyperbolic2):
        x, y, z = arr.T
        resid = np.abs(x * x + y * y - z * z + 1.0)
        _fail_where((z <= 0) | (resid > UNIT_TOL * (1.0 + z * z)),
                    "is not on the upper hyperboloid sheet")
    elif isinstance(space, (Spd, GaussianBW)):
        asym = np.abs(arr - np.swapaxes(arr, 1, 2)).max(axis=(1, 2))
        scale = np.maximum(1.0, np.abs(arr).max(axis=(1, 2)))
        _fail_where(asym > SYM_TOL * scale, "is not symmetric")
        arr = 0.5 * (arr + np.swapaxes(arr, 1, 2))
        lam_min = np.linalg.eigvalsh(arr)[:, 0]
        _fail_where(lam_min <= EIGEN_FLOOR, "is not positive definite")
    elif isinstance(space, Wasserstein1D):
        _fail_where(np.any(np.diff(arr, axis=1) < 0, axis=1), "is not a nondecreasing quantile grid")
    elif isinstance(space, FisherRao):
        _fail_where(np.any(arr < 0, axis=1), "has negative density values")
        mass = arr @ quadrature_weights(space)
        _fail_where(np.abs(mass - 1.0) > DENSITY_TOL, "does not integrate to 1")
    return arr


def _fail_where(mask, message):
    mask = np.asarray(mask)
    if mask.any():
        raise ConformanceError(f"object {int(np.argmax(mask))} {message}")


@dataclass(frozen=True)
class ObjectSample:
    """A homogeneous, immutable sample of ``n >= 2`` objects from one space."""

    space: SpaceKind
    objects: np.ndarray
    meta: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        arr = _validate(self.space, self.objects)
        if len(arr) < 2:
            raise ConformanceError(f"a sample needs at least 2 objects, got {len(arr)}")
        arr.setflags(write=False)
        object.__setattr__(self, "objects", arr)

    @property
    def n(self) -> int:
        return len(self.objects)

    def __len__(self):
        return len(self.objects)

    def __getitem__(self, i):
        return self.objects[i]


# ---------------------------------------------------------------------------
# per-space features and pair kernels


def _features(space, arr):
    """Per-object precomputation shared by every pair involving the object."""
    if isinstance(space, Euclidean):
        return arr
    if isinstance(space, Sphere):
        return arr / np.linalg.norm(arr, axis=1, keepdims=True)
    if isinstance(space, Hyperbolic2):
        return arr
    if isinstance(space, Wasserstein1D):
        return arr * np.sqrt(quadrature_weights(space))
    if isinstance(space, FisherRao):
        u = np.sqrt(arr * quadrature_weights(space))
        return u / np.linalg.norm(u, axis=1, keepdims=True)
    if isinstance(space, GaussianBW):
        return sqrtm(arr)
    metric = space.metric
    k = len(arr)
    if metric is SpdMetric.FROBENIUS:
        return arr.reshape(k, -1)
    if metric is SpdMetric.LOG_EUCLIDEAN:
        return logm(arr).reshape(k, -1)
    if metric is SpdMetric.POWER_FROBENIUS:
        return (powm(arr, space.power) / space.power).reshape(k, -1)
    if metric is SpdMetric.CHOLESKY:
        return np.linalg.cholesky(arr).reshape(k, -1)
    if metric is SpdMetric.AFFINE_INVARIANT:
        return np.stack([arr, invsqrtm(arr)], axis=1)
    if metric is SpdMetric.BURES_WASSERSTEIN:
        return sqrtm(arr)
    raise TypeError(f"unsupported space {space!r}")


def _kernel(space):
    if isinstance(space, (Sphere, FisherRao)):
        return _great_circle
    if isinstance(space, Hyperbolic2):
        return _hyperbolic
    if isinstance(space, GaussianBW):
        return _bures_wasserstein
    if isinstance(space, Spd):
        if space.metric is SpdMetric.AFFINE_INVARIANT:
            return _affine_invariant
        if space.metric is SpdMetric.BURES_WASSERSTEIN:
            return _bures_wasserstein
    return _euclidean


def _euclidean(a, b):
    return np.linalg.norm(a - b, axis=-1)


def _great_circle(a, b):
    # equals arccos(<a, b>) for unit vectors, without its loss of accuracy near 0
    return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))


def _hyperbolic(a, b):
    # Minkowski norm of the chord is 2 sinh(d / 2)
    diff = a - b
    q = diff[:, 0] ** 2 + diff[:, 1] ** 2 - diff[:, 2] ** 2
    return 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(q, 0.0)))


def _canonical_swap(a, b):
    """Mask of pairs whose operands must be swapped to a fixed order.

    Kernels that are symmetric only in exact arithmetic are evaluated with
    the lexicographically smaller operand first, making d(x, y) == d(y, x)
    bit for bit.
    """
    diff = (a - b).reshape(len(a), -1)
    nz = diff != 0
    first = np.argmax(nz, axis=1)
    lead = diff[np.arange(len(a)), first]
    return lead > 0


def _ordered(a, b):
    swap = _canonical_swap(a, b)
    if swap.any():
        a, b = a.copy(), b.copy()
        a[swap], b[swap] = b[swap], a[swap]
    return a, b


def _affine_invariant(a, b):
    a, b = _ordered(a, b)
    u_isqrt = a[:, 1]
    v = b[:, 0]
    m = u_isqrt @ v @ u_isqrt
    lam = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, 1, 2)))
    lam = np.maximum(lam, EIGEN_FLOOR)
    return np.sqrt(np.sum(np.log(lam) ** 2, axis=1))


def _bures_wasserstein(a, b):
    # min over orthogonal Q of ||U^1/2 - V^1/2 Q||_F, attained at the polar
    # factor of V^1/2 U^1/2; equal to the trace formula, exact at U == V
    a, b = _ordered(a, b)
    w, _, zt = np.linalg.svd(b @ a)
    q = w @ zt
    return np.linalg.norm((a - b @ q).reshape(len(a), -1), axis=1)


# ---------------------------------------------------------------------------
# public distance API


def _as_object(space, x):
    arr = np.asarray(x, dtype=float)
    if arr.shape != space.object_shape:
        raise ConformanceError(
            f"objects of {space_label(space)} must have shape {space.object_shape}, got {arr.shape}"
        )
    return arr


def distance(space, x, y) -> float:
    """Distance between two objects of ``space``."""
    arr = _validate(space, np.stack([_as_object(space, x), _as_object(space, y)]))
    feats = _features(space, arr)
    d = _kernel(space)(feats[:1], feats[1:])
    return float(d[0])


def _pair_chunks(n, max_pairs):
    """Yield index arrays (i, j), i < j, covering all pairs in row order."""
    counts = np.arange(n - 1, 0, -1)
    ends = np.cumsum(counts)
    start_row = 0
    while start_row < n - 1:
        done = ends[start_row - 1] if start_row else 0
        stop_row = int(np.searchsorted(ends, done + max_pairs, side="left")) + 1
        stop_row = min(max(stop_row, start_row + 1), n - 1)
        rows = np.arange(start_row, stop_row)
        c = counts[rows]
        first = np.repeat(np.cumsum(c) - c, c)
        ii = np.repeat(rows, c)
        jj = np.arange(int(c.sum())) - first + ii + 1
        yield ii, jj
        start_row = stop_row


def distance_matrix(sample: ObjectSample, max_pairs: int = 1 << 20) -> np.ndarray:
    """Symmetric matrix of all pairwise distances of ``sample``.

    Each unordered pair is evaluated once and mirrored.
    """
    space = sample.space
    feats = _features(space, sample.objects)
    kernel = _kernel(space)
    n = sample.n
    out = np.zeros((n, n))
    for ii, jj in _pair_chunks(n, max_pairs):
        d = kernel(feats[ii], feats[jj])
        bad = ~np.isfinite(d)
        if bad.any():
            k = int(np.argmax(bad))
            raise ConformanceError(f"non-finite distance between objects {ii[k]} and {jj[k]}")
        out[ii, jj] = d
        out[jj, ii] = d
    return out


def check_distance_matrix(dist, atol: float = 1e-12) -> np.ndarray:
    """Validate a distance matrix and return it as a float array.

    Asymmetry up to ``atol`` relative to the largest entry is averaged out.
    """
    d = np.array(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ConformanceError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] < 1:
        raise ConformanceError("distance matrix is empty")
    if not np.all(np.isfinite(d)):
        raise ConformanceError("distance matrix has non-finite entries")
    scale = max(1.0, float(np.abs(d).max()))
    if np.abs(d - d.T).max() > atol * scale:
        raise ConformanceError("distance matrix is not symmetric")
    if np.abs(np.diag(d)).max() > atol * scale:
        raise ConformanceError("distance matrix has a nonzero diagonal")
    if d.min() < -atol * scale:
        raise ConformanceError("distance matrix has negative entries")
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# text labels (used by the command line and result documents)


def space_label(space) -> str:
    if isinstance(space, Euclidean):
        return f"euclidean:{space.dim}"
    if isinstance(space, Sphere):
        return f"sphere:{space.dim}"
    if isinstance(space, Hyperbolic2):
        return "hyperbolic"
    if isinstance(space, Spd):
        if space.metric is SpdMetric.POWER_FROBENIUS:
            return f"spd:{space.dim}:{space.metric.value}:{space.power!r}"
        return f"spd:{space.dim}:{space.metric.value}"
    if isinstance(space, Wasserstein1D):
        return f"wasserstein1d:{space.grid_size}"
    if isinstance(space, GaussianBW):
        return f"gaussian-bw:{space.dim}"
    if isinstance(space, FisherRao):
        return f"fisher-rao:{space.grid_size}:{space.lower!r}:{space.upper!r}"
    raise TypeError(f"unsupported space {space!r}")


def parse_space(text: str):
    """Parse labels such as ``euclidean:3``, ``sphere:2``, ``spd:3:bw``,
    ``spd:2:power-frobenius:0.5``, ``wasserstein1d:1001``,
    ``gaussian-bw:2`` or ``fisher-rao:512:-5:5``."""
    parts = text.strip().lower().split(":")
    kind, args = parts[0], parts[1:]
    try:
        if kind == "euclidean":
            return Euclidean(int(args[0]))
        if kind == "sphere":
            return Sphere(int(args[0]))
        if kind in ("hyperbolic", "hyperbolic2"):
            return Hyperbolic2()
        if kind == "spd":
            metric_name = args[1] if len(args) > 1 else "frobenius"
            metric = _coerce_metric(metric_name)
            power = float(args[2]) if len(args) > 2 else 0.5
            return Spd(int(args[0]), metric, power)
        if kind in ("wasserstein1d", "w1d"):
            return Wasserstein1D(int(args[0]) if args else 1001)
        if kind in ("gaussian-bw", "gaussianbw"):
            return GaussianBW(int(args[0]))
        if kind in ("fisher-rao", "fisherrao"):
            lo = float(args[1]) if len(args) > 1 else 0.0
            hi = float(args[2]) if len(args) > 2 else 1.0
            return FisherRao(int(args[0]), lo, hi)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"cannot parse space {text!r}: {exc}") from None
    raise ValueError(f"unknown space kind {kind!r}")


def distances_to(space, point, objects) -> np.ndarray:
    """Distances from one object to each object of a stack."""
    objs = np.asarray(objects, dtype=float)
    arr = _validate(space, np.concatenate([_as_object(space, point)[None], objs]))
    feats = _features(space, arr)
    first = np.repeat(feats[:1], len(objs), axis=0)
    return _kernel(space)(first, feats[1:])
