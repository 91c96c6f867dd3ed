"""
Mode seeking on candidate gray pixels.

Flat-kernel mean shift under the hybrid (Euclidean x angular) distance, plus a
seeded k-means alternative. Both return a ModeResult whose first mode is the
densest one.
"""
import logging
from typing import List, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from graypixel.models import (
    ClusterKind,
    DistanceKind,
    ModeInfo,
    ModeResult,
    MsgpParams,
    PixelSet,
)

logger = logging.getLogger(__name__)

_CHUNK = 1024


def pairwise_distances(A: np.ndarray, B: np.ndarray, kind: DistanceKind = DistanceKind.HYBRID) -> np.ndarray:
    """
    Distance matrix between the rows of A and B.

    The angle is recovered from the chord between unit vectors,
    2 asin(|u - v| / 2), which keeps precision for nearly parallel colors.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    ua = A / np.linalg.norm(A, axis=1, keepdims=True)
    ub = B / np.linalg.norm(B, axis=1, keepdims=True)
    angle = 2.0 * np.arcsin(np.clip(cdist(ua, ub) / 2.0, 0.0, 1.0))
    if DistanceKind(kind) is DistanceKind.ANGLE:
        return angle
    return cdist(A, B) * angle


def hybrid_distance(a, b) -> float:
    """Euclidean distance times angle (radians) between two RGB vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.linalg.norm(a) > 0 and np.linalg.norm(b) > 0):
        raise ValueError("hybrid distance is undefined for zero-norm colors")
    return float(pairwise_distances(a[np.newaxis], b[np.newaxis], DistanceKind.HYBRID)[0, 0])


def _neighbour_stats(
    positions: np.ndarray, X: np.ndarray, h: float, kind: DistanceKind
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of the points of X within h of each position, and how many there are."""
    means = positions.copy()
    counts = np.zeros(len(positions), dtype=np.int64)
    for start in range(0, len(positions), _CHUNK):
        block = positions[start:start + _CHUNK]
        within = pairwise_distances(block, X, kind) <= h
        n_within = within.sum(axis=1)
        sums = within.astype(np.float64) @ X
        found = n_within > 0
        means[start:start + _CHUNK][found] = sums[found] / n_within[found, np.newaxis]
        counts[start:start + _CHUNK] = n_within
    return means, counts


def _sorted_result(
    centroids: List[np.ndarray], members: np.ndarray, densities: List[float], assignments: np.ndarray
) -> ModeResult:
    """Order modes by density, then member count, then centroid, and remap assignments."""
    order = sorted(
        range(len(centroids)),
        key=lambda j: (-densities[j], -int(members[j]), tuple(centroids[j].tolist())),
    )
    remap = np.empty(len(centroids), dtype=np.int64)
    remap[order] = np.arange(len(order))
    modes = [
        ModeInfo(
            centroid=tuple(float(c) for c in centroids[j]),
            members=int(members[j]),
            density=float(densities[j]),
        )
        for j in order
    ]
    return ModeResult(modes=modes, assignments=remap[assignments])


def mean_shift(
    points: PixelSet,
    h: float = 1e-3,
    dist: DistanceKind = DistanceKind.HYBRID,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> ModeResult:
    """
    Flat-kernel mean shift.

    Every point moves to the mean of the original points within distance h of
    its current position until the move is shorter than tol. Converged
    positions within h of a denser one merge into it. Densities are the share
    of original points within h of each mode centroid.
    """
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if len(points) == 0:
        raise ValueError("mean shift needs at least one point")
    kind = DistanceKind(dist)
    X = points.rgb
    n = len(X)

    Y = X.copy()
    active = np.ones(n, dtype=bool)
    iterations = 0
    while iterations < max_iter and active.any():
        idx = np.flatnonzero(active)
        means, _ = _neighbour_stats(Y[idx], X, h, kind)
        shift = np.linalg.norm(means - Y[idx], axis=1)
        Y[idx] = means
        active[idx[shift < tol]] = False
        iterations += 1
    if active.any():
        logger.warning(f"Mean shift stopped at max_iter={max_iter} with {int(active.sum())} points still moving")

    unique, inverse = np.unique(Y, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    _, support = _neighbour_stats(unique, X, h, kind)
    order = np.lexsort((unique[:, 2], unique[:, 1], unique[:, 0], -support))

    centroids: List[np.ndarray] = []
    densities: List[float] = []
    owner = np.empty(len(unique), dtype=np.int64)
    for i in order:
        if centroids:
            d = pairwise_distances(unique[i:i + 1], np.asarray(centroids), kind)[0]
            near = np.flatnonzero(d <= h)
            if near.size:
                owner[i] = near[0]
                continue
        centroids.append(unique[i])
        densities.append(support[i] / n)
        owner[i] = len(centroids) - 1

    assignments = owner[inverse]
    members = np.bincount(assignments, minlength=len(centroids))
    logger.debug(f"Mean shift: {n} points, {iterations} iterations, {len(centroids)} modes")
    return _sorted_result(centroids, members, densities, assignments)


def pick_illuminant(result: ModeResult) -> Tuple[float, float, float]:
    """Unit-norm centroid of the densest mode (ties: more members, then lower index)."""
    if not result.modes:
        raise ValueError("mode result has no modes")
    best = min(
        range(len(result.modes)),
        key=lambda j: (-result.modes[j].density, -result.modes[j].members, j),
    )
    centroid = np.asarray(result.modes[best].centroid, dtype=np.float64)
    return tuple(float(c) for c in centroid / np.linalg.norm(centroid))


def kmeans(
    points: PixelSet,
    k: int = 2,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
) -> ModeResult:
    """
    Seeded k-means++ / Lloyd clustering, best of `restarts` by inertia.

    Centroids are the member means of the final labelling. Density is the
    member share, count / n, so it ranks modes exactly as the member count does.
    """
    X = points.rgb
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")

    model = KMeans(n_clusters=k, init="k-means++", n_init=restarts, max_iter=max_iter, random_state=seed)
    labels = model.fit_predict(X)
    counts = np.bincount(labels, minlength=k)
    centers = np.zeros((k, 3))
    np.add.at(centers, labels, X)
    centers[counts > 0] /= counts[counts > 0, np.newaxis]
    logger.debug(f"K-means: {n} points, k={k}, inertia={model.inertia_:.3e}")
    kept = np.flatnonzero(counts > 0)
    remap = np.full(k, -1, dtype=np.int64)
    remap[kept] = np.arange(kept.size)
    return _sorted_result(
        [centers[j] for j in kept],
        counts[kept],
        [counts[j] / n for j in kept],
        remap[labels],
    )


def cluster(points: PixelSet, params: MsgpParams) -> ModeResult:
    if params.cluster is ClusterKind.KMEANS:
        k = params.k
        if k > len(points):
            logger.warning(f"K-means k={k} exceeds the {len(points)} candidate pixels; using k={len(points)}")
            k = len(points)
        return kmeans(points, k=k, seed=params.seed, restarts=params.restarts)
    return mean_shift(points, h=params.bandwidth, dist=params.distance, tol=params.tol, max_iter=params.max_iter)
