"""Dispersion and curvature inference for data in metric spaces.

The sign of ``V_F / V_M - 1``, the ratio of the Fréchet variance to the
metric variance, matches the sign of the curvature of the space the data
live in. This package estimates both variances with their joint covariance,
tests for zero curvature in the ambient metric or on graph-based intrinsic
distances, reconstructs geodesics, and simulates the standard designs.
"""

__version__ = "0.1.0"

from .dispersion import (
    DispersionEstimate,
    covariance_estimate,
    dispersion,
    dispersion_from_distances,
    frechet_variance,
    metric_variance,
)
from .errors import (
    ConformanceError,
    CurvtestError,
    DegenerateVarianceError,
    DisconnectedGraphError,
    ExtrapolationError,
)
from .frechet import FrechetMeanResult, frechet_mean, frechet_mean_restricted
from .geodesics import (
    EmbeddingModel,
    gaussian_wasserstein_geodesic,
    interpolate_representation,
    inverse_map,
    isomap_embed,
    isomap_geodesic,
)
from .inference import (
    Alternative,
    CurvatureTestResult,
    Ellipse,
    confidence_region,
    curvature_test,
    region_boundary,
    region_contains,
    rho_hat,
    rho_prime_hat,
    sigma_for_rho,
)
from .intrinsic import (
    IntrinsicResult,
    NeighborGraph,
    ball_radius_heuristic,
    build_neighbor_graph,
    dijkstra_all_pairs,
    intrinsic_curvature_test,
)
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
    distance,
    distance_matrix,
)
from .simgen import generate, monte_carlo_power
from .statsutil import chi2_2_quantile, normal_cdf, normal_quantile

__all__ = [
    "__version__",
    "DispersionEstimate",
    "covariance_estimate",
    "dispersion",
    "dispersion_from_distances",
    "frechet_variance",
    "metric_variance",
    "ConformanceError",
    "CurvtestError",
    "DegenerateVarianceError",
    "DisconnectedGraphError",
    "ExtrapolationError",
    "EmbeddingModel",
    "gaussian_wasserstein_geodesic",
    "interpolate_representation",
    "inverse_map",
    "isomap_embed",
    "isomap_geodesic",
    "Alternative",
    "CurvatureTestResult",
    "Ellipse",
    "confidence_region",
    "curvature_test",
    "region_boundary",
    "region_contains",
    "rho_hat",
    "rho_prime_hat",
    "sigma_for_rho",
    "IntrinsicResult",
    "NeighborGraph",
    "ball_radius_heuristic",
    "build_neighbor_graph",
    "dijkstra_all_pairs",
    "intrinsic_curvature_test",
    "Euclidean",
    "FisherRao",
    "GaussianBW",
    "Hyperbolic2",
    "ObjectSample",
    "Spd",
    "SpdMetric",
    "Sphere",
    "Wasserstein1D",
    "distance",
    "distance_matrix",
    "generate",
    "monte_carlo_power",
    "chi2_2_quantile",
    "normal_cdf",
    "normal_quantile",
]
