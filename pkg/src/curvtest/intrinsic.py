"""Intrinsic distances from epsilon-ball neighbour graphs, and the curvature
test computed on them.

The ambient distance matrix is thresholded at a radius ``r`` to form an
undirected weighted graph; shortest-path lengths on that graph estimate the
distance along the support of the data. The Fréchet mean is then restricted
to sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .dispersion import DispersionEstimate, dispersion_from_distances
from .errors import DisconnectedGraphError
from .frechet import frechet_mean_restricted
from .inference import Alternative, CurvatureTestResult, curvature_test
from .metrics import ObjectSample, check_distance_matrix, distance_matrix

__all__ = [
    "NeighborGraph",
    "IntrinsicResult",
    "ball_radius_heuristic",
    "build_neighbor_graph",
    "connecting_radius",
    "auto_radius",
    "dijkstra_all_pairs",
    "intrinsic_distances",
    "intrinsic_curvature_test",
    "LADDER_STEP",
]

#: increment of the multiplier applied to the heuristic radius
LADDER_STEP = 0.25
_BLOCK_ROWS = 512


@dataclass(frozen=True)
class NeighborGraph:
    """Epsilon-ball graph over sample indices.

    ``adjacency`` is a symmetric CSR matrix whose stored entries are exactly
    the edges; zero-weight edges between duplicate points are stored
    explicitly.
    """

    n: int
    radius: float
    adjacency: sparse.csr_matrix = field(repr=False)
    component_count: int
    labels: np.ndarray = field(repr=False)
    ambient: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def edge_count(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, i: int):
        """Indices and weights of the neighbours of node ``i``."""
        lo, hi = self.adjacency.indptr[i], self.adjacency.indptr[i + 1]
        return self.adjacency.indices[lo:hi].copy(), self.adjacency.data[lo:hi].copy()

    def edges(self):
        """Edges as ``(i, j, weight)`` with ``i < j``, in row order."""
        coo = self.adjacency.tocoo()
        keep = coo.row < coo.col
        order = np.lexsort((coo.col[keep], coo.row[keep]))
        return [(int(i), int(j), float(w)) for i, j, w in
                zip(coo.row[keep][order], coo.col[keep][order], coo.data[keep][order])]


@dataclass(frozen=True)
class IntrinsicResult:
    d_i: np.ndarray = field(repr=False)
    graph: NeighborGraph
    test: CurvatureTestResult
    mean_index: int
    estimate: DispersionEstimate = field(repr=False)


def ball_radius_heuristic(dist, c: float = 1.0) -> float:
    """``c`` times the largest nearest-neighbour distance, raised to 2/3."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise ValueError("at least 2 points are required")
    nn = np.empty(n)
    for a in range(0, n, _BLOCK_ROWS):
        block = d[a:a + _BLOCK_ROWS].copy()
        rows = np.arange(len(block))
        block[rows, a + rows] = np.inf
        nn[a:a + _BLOCK_ROWS] = block.min(axis=1)
    return c * float(nn.max()) ** (2.0 / 3.0)


def build_neighbor_graph(dist, radius: float) -> NeighborGraph:
    """Graph with an edge ``i -- j`` (weight ``dist[i, j]``) whenever
    ``i != j`` and ``dist[i, j] <= radius``."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    d = check_distance_matrix(dist)
    n = d.shape[0]
    rows, cols = [], []
    for a in range(0, n, _BLOCK_ROWS):
        i, j = np.nonzero(d[a:a + _BLOCK_ROWS] <= radius)
        i = i + a
        keep = i != j
        rows.append(i[keep])
        cols.append(j[keep])
    i = np.concatenate(rows)
    j = np.concatenate(cols)
    adj = sparse.csr_matrix((d[i, j], (i, j)), shape=(n, n))
    adj.sort_indices()
    count, labels = csgraph.connected_components(adj, directed=False)
    d.setflags(write=False)
    return NeighborGraph(n=n, radius=float(radius), adjacency=adj,
                         component_count=int(count), labels=labels, ambient=d)


def connecting_radius(dist) -> float:
    """Smallest radius whose ball graph is connected.

    This is the longest edge of a minimum spanning tree (Prim's algorithm
    on the dense matrix; zero distances count as edges).
    """
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if n < 2:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d[0].copy()
    best[0] = np.inf
    longest = 0.0
    for _ in range(n - 1):
        k = int(np.argmin(best))
        longest = max(longest, float(best[k]))
        in_tree[k] = True
        best = np.minimum(best, d[k])
        best[in_tree] = np.inf
    return longest


def auto_radius(dist, c: float = 1.0) -> float:
    """Smallest of ``h, 1.25 h, 1.5 h, ...`` that connects the graph, where
    ``h`` is :func:`ball_radius_heuristic` with constant ``c``."""
    h = ball_radius_heuristic(dist, c)
    need = connecting_radius(dist)
    if h <= 0:
        return need if need > 0 else 1.0
    k = max(0, math.ceil((need / h - 1.0) / LADDER_STEP))
    while (1.0 + LADDER_STEP * k) * h < need:
        k += 1
    if k > 0 and (1.0 + LADDER_STEP * (k - 1)) * h >= need:
        k -= 1
    return (1.0 + LADDER_STEP * k) * h


def dijkstra_all_pairs(graph: NeighborGraph) -> np.ndarray:
    """All-pairs shortest path lengths on a connected graph.

    Raises
    ------
    DisconnectedGraphError
        If the graph has several components. The error carries the
        smallest radius that would connect the graph.
    """
    if graph.component_count > 1:
        required = connecting_radius(graph.ambient) if graph.ambient is not None else None
        hint = f"; radius {required:.6g} connects it" if required is not None else ""
        raise DisconnectedGraphError(
            f"neighbour graph at radius {graph.radius:.6g} has "
            f"{graph.component_count} components{hint}",
            components=graph.component_count, required_radius=required,
        )
    # the adjacency already holds both directions of every edge
    out = csgraph.dijkstra(graph.adjacency, directed=True)
    # the two directions of a pair come from different sources; keep one
    upper = np.triu(out, 1)
    out = upper + upper.T
    return out


def intrinsic_distances(data, radius: float | None = None, c: float = 1.0):
    """Ambient matrix, neighbour graph and intrinsic distance estimate.

    Parameters
    ----------
    data : ObjectSample or array_like
        A sample, or a precomputed ambient distance matrix.
    radius : float, optional
        Ball radius. If omitted, :func:`auto_radius` with constant ``c``.
    """
    if isinstance(data, ObjectSample):
        dist = distance_matrix(data)
    else:
        dist = check_distance_matrix(data)
    if dist.shape[0] < 2:
        raise ValueError("at least 2 points are required")
    r = auto_radius(dist, c) if radius is None else float(radius)
    graph = build_neighbor_graph(dist, r)
    return dist, graph, dijkstra_all_pairs(graph)


def intrinsic_curvature_test(data, radius: float | None = None, c: float = 1.0,
                             alpha: float = 0.05,
                             alternative: Alternative | str = Alternative.TWO_SIDED
                             ) -> IntrinsicResult:
    """Curvature test on estimated intrinsic distances.

    Parameters
    ----------
    data : ObjectSample or array_like
        A sample, or its ambient distance matrix.
    radius : float, optional
        Fixed ball radius; otherwise chosen by :func:`auto_radius`.
    c : float
        Constant of the radius heuristic.
    alpha : float
    alternative : {"two-sided", "positive", "negative"}

    Returns
    -------
    IntrinsicResult
    """
    _, graph, d_i = intrinsic_distances(data, radius, c)
    k, _ = frechet_mean_restricted(d_i)
    est = dispersion_from_distances(d_i, d_i[k], mean_index=k)
    test = curvature_test(est, alpha, alternative)
    d_i.setflags(write=False)
    return IntrinsicResult(d_i=d_i, graph=graph, test=test, mean_index=k, estimate=est)
