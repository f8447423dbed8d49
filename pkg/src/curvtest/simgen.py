"""Seeded simulation designs and a Monte Carlo harness for size and power.

Every scenario draws its signal from stream 0 and its additive noise from
stream 1 of the same seed, so a noisy sample is exactly the noiseless one
plus the noise draw.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Union, get_args

import numpy as np

from .dispersion import dispersion
from .errors import DegenerateVarianceError
from .inference import Alternative, curvature_test
from .intrinsic import intrinsic_curvature_test
from .metrics import Euclidean, GaussianBW, ObjectSample, Spd, SpdMetric
from .statsutil import RngStream, derive_seed

__all__ = [
    "Hemisphere",
    "Hyperboloid",
    "Plane",
    "SphereCap",
    "RandomSpd",
    "RotatedGaussians",
    "SparseSphere",
    "ScenarioSpec",
    "generate",
    "PowerCell",
    "monte_carlo_power",
    "SIGNAL_STREAM",
    "NOISE_STREAM",
]

SIGNAL_STREAM = 0
NOISE_STREAM = 1
NOISE_KINDS = ("gaussian", "truncated")


def _check_common(spec):
    if int(spec.n) != spec.n or spec.n < 2:
        raise ValueError(f"n must be an integer >= 2, got {spec.n}")
    sigma = getattr(spec, "sigma", 0.0)
    if sigma is not None and sigma < 0:
        raise ValueError(f"noise level must be nonnegative, got {sigma}")
    noise = getattr(spec, "noise", "gaussian")
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
    bound = getattr(spec, "bound", 1.0)
    if not bound > 0:
        raise ValueError(f"truncation bound must be positive, got {bound}")


@dataclass(frozen=True)
class Hemisphere:
    """Upper unit hemisphere with polar angle uniform on [0, pi/2].

    ``noise="truncated"`` restricts each noise coordinate to
    ``[-bound, bound]``.
    """

    n: int
    sigma: float = 0.0
    noise: str = "gaussian"
    bound: float = 1.5
    seed: int = 0

    def __post_init__(self):
        _check_common(self)


@dataclass(frozen=True)
class Hyperboloid:
    """Half of the one-sheet hyperboloid y^2 + z^2 - x^2 = 1 (z >= 0), with a
    truncated standard normal x coordinate and uniform angle on [0, pi]."""

    n: int
    sigma: float = 0.0
    trunc: float = math.sqrt(15.0)
    noise: str = "gaussian"
    bound: float = 1.5
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if not self.trunc > 0:
            raise ValueError("trunc must be positive")


@dataclass(frozen=True)
class Plane:
    """Uniform points on the unit square in the plane z = 0."""

    n: int
    sigma: float = 0.0
    noise: str = "gaussian"
    bound: float = 1.5
    seed: int = 0

    def __post_init__(self):
        _check_common(self)


@dataclass(frozen=True)
class SphereCap:
    """Area-uniform points on a spherical cap of curvature ``kappa``.

    The cap lies on the sphere of radius ``1 / sqrt(kappa)`` and has
    geodesic radius pi/4, hence diameter pi/2 for every ``kappa``. At
    ``kappa = 0`` it is the square of side ``pi / (2 sqrt 2)`` in z = 0.
    """

    n: int
    kappa: float = 1.0
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")


@dataclass(frozen=True)
class RandomSpd:
    """``X = V diag(lambda) V'`` with unit-norm Gaussian columns in ``V``
    and ``lambda_l ~ nu * Beta(beta, gamma)``."""

    n: int
    p: int = 3
    beta: float = 3.0
    gamma: float = 5.0
    nu: float = 100.0
    metric: SpdMetric = SpdMetric.FROBENIUS
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if not (self.beta > 0 and self.gamma > 0 and self.nu > 0):
            raise ValueError("beta, gamma and nu must be positive")
        object.__setattr__(self, "metric", Spd(self.p, self.metric).metric)


@dataclass(frozen=True)
class RotatedGaussians:
    """Centred Gaussians with covariance ``R diag(lam1, lam2) R'`` where R
    rotates by ``pi * theta / 2`` and ``theta ~ Beta(a, b)``."""

    n: int
    lam1: float = 4.0
    lam2: float = 1.0
    a: float = 2.0
    b: float = 2.0
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if not (self.lam1 > 0 and self.lam2 > 0 and self.a > 0 and self.b > 0):
            raise ValueError("eigenvalues and beta parameters must be positive")


@dataclass(frozen=True)
class SparseSphere:
    """Hemisphere points zero-padded to ``R^p`` plus isotropic Gaussian noise.

    With ``snr=True`` the noise level is ``3 / (10 sqrt(p))``.
    """

    n: int
    p: int = 3
    sigma: float = 0.0
    snr: bool = False
    seed: int = 0

    def __post_init__(self):
        _check_common(self)
        if self.p < 3:
            raise ValueError("ambient dimension p must be at least 3")

    @property
    def noise_level(self) -> float:
        return 3.0 / (10.0 * math.sqrt(self.p)) if self.snr else self.sigma


ScenarioSpec = Union[Hemisphere, Hyperboloid, Plane, SphereCap, RandomSpd, RotatedGaussians,
                     SparseSphere]


def _truncated_normal(rng: RngStream, size, bound, scale=1.0):
    """Normal(0, scale^2) draws restricted to [-bound, bound] by rejection."""
    total = int(np.prod(size))
    out = np.empty(total)
    filled = 0
    while filled < total:
        need = total - filled
        draw = scale * rng.standard_normal(max(16, 2 * need))
        draw = draw[np.abs(draw) <= bound][:need]
        out[filled:filled + len(draw)] = draw
        filled += len(draw)
    return out.reshape(size)


def _noise(spec, shape, sigma):
    rng = RngStream(spec.seed, NOISE_STREAM)
    if getattr(spec, "noise", "gaussian") == "truncated":
        return _truncated_normal(rng, shape, spec.bound, sigma) if sigma > 0 else np.zeros(shape)
    return sigma * rng.standard_normal(shape)


def _hemisphere_points(rng, n):
    psi = rng.uniform(0.0, math.pi / 2, n)
    theta = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([np.cos(theta) * np.sin(psi), np.sin(theta) * np.sin(psi), np.cos(psi)])


def generate(spec) -> ObjectSample:
    """Draw the sample described by ``spec`` (deterministic in ``spec.seed``)."""
    if not isinstance(spec, get_args(ScenarioSpec)):
        raise TypeError(f"unknown scenario {spec!r}")
    rng = RngStream(spec.seed, SIGNAL_STREAM)
    n = spec.n
    meta = {"scenario": type(spec).__name__, "seed": spec.seed}

    if isinstance(spec, Hemisphere):
        pts = _hemisphere_points(rng, n)
    elif isinstance(spec, Hyperboloid):
        up = _truncated_normal(rng, (n,), spec.trunc)
        theta = rng.uniform(0.0, math.pi, n)
        r = np.sqrt(1.0 + up * up)
        pts = np.column_stack([up, r * np.cos(theta), r * np.sin(theta)])
    elif isinstance(spec, Plane):
        pts = np.column_stack([rng.uniform(0.0, 1.0, (n, 2)), np.zeros(n)])
    elif isinstance(spec, SphereCap):
        return ObjectSample(Euclidean(3), _cap_points(rng, spec), meta)
    elif isinstance(spec, SparseSphere):
        pts = np.zeros((n, spec.p))
        pts[:, :3] = _hemisphere_points(rng, n)
        sigma = spec.noise_level
        if sigma > 0:
            pts = pts + sigma * RngStream(spec.seed, NOISE_STREAM).standard_normal(pts.shape)
        return ObjectSample(Euclidean(spec.p), pts, meta)
    elif isinstance(spec, RandomSpd):
        v = rng.standard_normal((n, spec.p, spec.p))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        lam = spec.nu * rng.beta(spec.beta, spec.gamma, (n, spec.p))
        x = (v * lam[:, None, :]) @ np.swapaxes(v, 1, 2)
        x = 0.5 * (x + np.swapaxes(x, 1, 2))
        meta["eigen_draws"] = lam
        return ObjectSample(Spd(spec.p, spec.metric), x, meta)
    elif isinstance(spec, RotatedGaussians):
        theta = rng.beta(spec.a, spec.b, n)
        ang = 0.5 * math.pi * theta
        c, s = np.cos(ang), np.sin(ang)
        rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        x = (rot * np.array([spec.lam1, spec.lam2])) @ np.swapaxes(rot, 1, 2)
        x = 0.5 * (x + np.swapaxes(x, 1, 2))
        meta["theta"] = theta
        return ObjectSample(GaussianBW(2), x, meta)
    else:
        raise AssertionError(type(spec))

    if spec.sigma > 0:
        pts = pts + _noise(spec, pts.shape, spec.sigma)
    return ObjectSample(Euclidean(3), pts, meta)


def _cap_points(rng, spec):
    n = spec.n
    if spec.kappa == 0.0:
        side = math.pi / (2.0 * math.sqrt(2.0))
        return np.column_stack([rng.uniform(0.0, side, (n, 2)), np.zeros(n)])
    radius = 1.0 / math.sqrt(spec.kappa)
    half = math.pi * math.sqrt(spec.kappa) / 4.0
    # 1 - cos(polar angle) is uniform on [0, 1 - cos(half)] for area-uniform draws
    top = 2.0 * math.sin(half / 2.0) ** 2
    u = top * rng.uniform(0.0, 1.0, n)
    sin_polar = np.sqrt(u * (2.0 - u))
    theta = rng.uniform(0.0, 2 * math.pi, n)
    return radius * np.column_stack([sin_polar * np.cos(theta), sin_polar * np.sin(theta), 1.0 - u])


@dataclass(frozen=True)
class PowerCell:
    """Rejection summary of one scenario over Monte Carlo replicates."""

    spec: object
    runs: int
    rejections: int
    degenerate: int

    @property
    def valid(self) -> int:
        return self.runs - self.degenerate

    @property
    def rate(self) -> float:
        return self.rejections / self.valid if self.valid else float("nan")

    @property
    def se(self) -> float:
        if not self.valid:
            return float("nan")
        p = self.rate
        return math.sqrt(p * (1.0 - p) / self.valid)


def _decide(sample, mode, alpha, alternative, c):
    if mode == "intrinsic":
        return intrinsic_curvature_test(sample, c=c, alpha=alpha, alternative=alternative).test
    if mode == "ambient":
        return curvature_test(dispersion(sample), alpha, alternative)
    raise ValueError(f"mode must be 'ambient' or 'intrinsic', got {mode!r}")


def monte_carlo_power(specs: Iterable, runs: int = 500, alpha: float = 0.05,
                      mode: str = "intrinsic", alternative=Alternative.TWO_SIDED,
                      seed: int = 0, c: float = 1.0) -> list[PowerCell]:
    """Empirical rejection rates of the curvature test.

    Parameters
    ----------
    specs : iterable of scenario specs
        One table row per spec; their own ``seed`` fields are ignored.
    runs : int
        Replicates per spec. Replicate ``r`` uses seed
        ``derive_seed(seed, r)`` in every row, so rows share random numbers.
    alpha : float
    mode : {"intrinsic", "ambient"}
        Test on graph-based intrinsic distances (automatic radius) or on the
        sample's own metric.
    alternative : {"two-sided", "positive", "negative"}
    seed : int
        Master seed.
    c : float
        Radius heuristic constant for the intrinsic mode.

    Returns
    -------
    list of PowerCell
        Degenerate replicates are counted separately and excluded from the
        rate.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    seeds = [derive_seed(seed, r) for r in range(runs)]
    table = []
    for spec in specs:
        rejections = degenerate = 0
        for s in seeds:
            sample = generate(dataclasses.replace(spec, seed=s))
            try:
                result = _decide(sample, mode, alpha, alternative, c)
            except DegenerateVarianceError:
                degenerate += 1
                continue
            rejections += int(result.decision)
        cell = PowerCell(spec=spec, runs=runs, rejections=rejections, degenerate=degenerate)
        if degenerate > 0.01 * runs:
            warnings.warn(f"{degenerate} of {runs} replicates were degenerate for {spec!r}",
                          RuntimeWarning, stacklevel=2)
        table.append(cell)
    return table
