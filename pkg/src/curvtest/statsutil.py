"""Shared numerical substrate: seeded random streams, normal and chi-square
quantiles, symmetric eigendecomposition with matrix functions, and
deterministic tree summation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "RngStream",
    "derive_seed",
    "normal_cdf",
    "normal_quantile",
    "chi2_2_quantile",
    "sym_eigen",
    "sym_apply",
    "sqrtm",
    "invsqrtm",
    "logm",
    "expm",
    "powm",
    "pairwise_sum",
    "EIGEN_FLOOR",
]

#: Eigenvalue floor applied before sqrt/log/power of SPD matrices.
EIGEN_FLOOR = 1e-12


class RngStream:
    """A PCG64 generator whose output depends only on ``(seed, stream)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so ``RngStream(s, (0,))`` and ``RngStream(s, (1,))`` are statistically
    independent and reproducible across platforms. A stream has a single
    owner; use :meth:`child` rather than sharing one between workers.
    """

    def __init__(self, seed: int, stream: int | tuple[int, ...] = ()):
        if isinstance(stream, int):
            stream = (stream,)
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, key: int) -> "RngStream":
        return RngStream(self.seed, self.stream + (int(key),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def beta(self, a, b, size=None):
        return self.generator.beta(a, b, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def derive_seed(master: int, index: int) -> int:
    """Replicate seed as a pure function of ``(master, index)``."""
    seq = np.random.SeedSequence(int(master), spawn_key=(int(index),))
    return int(seq.generate_state(1, np.uint64)[0])


def normal_cdf(x):
    """Standard normal distribution function."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on the open interval (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    out = special.ndtri(p_arr)
    return float(out) if np.ndim(out) == 0 else out


def chi2_2_quantile(p: float) -> float:
    """Quantile of the chi-square law with two degrees of freedom.

    With two degrees of freedom the distribution is exponential with mean 2,
    so the quantile is ``-2 log(1 - p)``.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    return -2.0 * math.log1p(-p)


def _symmetrize(a):
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sym_eigen(a):
    """Eigendecomposition of a symmetric matrix (or a stack of them).

    Returns
    -------
    w : ndarray, shape (..., d)
        Eigenvalues in descending order.
    q : ndarray, shape (..., d, d)
        Orthonormal eigenvectors, column ``k`` paired with ``w[..., k]``.
    """
    w, q = np.linalg.eigh(_symmetrize(a))
    return w[..., ::-1], q[..., ::-1]


def sym_apply(a, func, floor=None):
    """Apply ``func`` to the spectrum of symmetric ``a``: Q f(L) Q^T."""
    w, q = np.linalg.eigh(_symmetrize(a))
    if floor is not None:
        w = np.maximum(w, floor)
    return (q * func(w)[..., None, :]) @ np.swapaxes(q, -1, -2)


def sqrtm(a):
    return sym_apply(a, np.sqrt, EIGEN_FLOOR)


def invsqrtm(a):
    return sym_apply(a, lambda w: 1.0 / np.sqrt(w), EIGEN_FLOOR)


def logm(a):
    return sym_apply(a, np.log, EIGEN_FLOOR)


def expm(a):
    return sym_apply(a, np.exp)


def powm(a, power: float):
    return sym_apply(a, lambda w: w ** power, EIGEN_FLOOR)


def pairwise_sum(values, axis=None):
    """Sum by repeated halving of adjacent pairs.

    The reduction tree depends only on the length of the summed axis, so
    results are identical however the caller chunks or parallelises the
    work that produced ``values``.
    """
    a = np.asarray(values, dtype=float)
    if axis is None:
        a = a.ravel()
        axis = 0
    a = np.moveaxis(a, axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1]) if a.ndim > 1 else 0.0
    while a.shape[-1] > 1:
        if a.shape[-1] % 2:
            a = np.concatenate([a, np.zeros(a.shape[:-1] + (1,))], axis=-1)
        a = a[..., 0::2] + a[..., 1::2]
    out = a[..., 0]
    return float(out) if out.ndim == 0 else out
