"""Descriptor matching with the nearest-neighbor distance-ratio test.

A query descriptor matches its nearest neighbor only when the nearest
distance is strictly below ``ratio`` times the second-nearest: distinctive
correspondences pass, ambiguous ones are discarded.  Matching is two-sided
by default, keeping only mutual best pairs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = ["MatchResult", "match_features"]


@dataclass(frozen=True)
class MatchResult:
    """Accepted correspondences between two feature sets.

    ``pairs`` holds (index_a, index_b) tuples sorted by ``index_a``; no
    index appears twice on either side.  ``shared_count = len(pairs)``.
    """

    pairs: tuple
    shared_count: int


_EMPTY = MatchResult(pairs=(), shared_count=0)


def _ratio_forward(dist_sq: np.ndarray, ratio_sq: float) -> np.ndarray:
    """Index of the accepted nearest neighbor per row, -1 where rejected.

    Works on squared distances: d1 < ratio * d2 iff d1^2 < ratio^2 * d2^2.
    Needs at least two columns; with fewer, no second-nearest exists and
    nothing is accepted.
    """
    n_rows, n_cols = dist_sq.shape
    result = np.full(n_rows, -1, dtype=np.int64)
    if n_cols < 2:
        return result
    nearest = dist_sq.argmin(axis=1)
    rows = np.arange(n_rows)
    d1 = dist_sq[rows, nearest]
    punched = dist_sq.copy()
    punched[rows, nearest] = np.inf
    d2 = punched.min(axis=1)
    accepted = d1 < ratio_sq * d2
    result[accepted] = nearest[accepted]
    return result


def match_features(
    set_a,
    set_b,
    ratio: float = 0.6,
    two_sided: bool = True,
) -> MatchResult:
    """Match descriptors of ``set_a`` against ``set_b``.

    With ``two_sided`` (the default) a pair (i, j) is kept only when i and
    j are each other's accepted nearest neighbors, which makes the shared
    count symmetric in its arguments.  One-sided matching keeps the
    forward matches, resolving collisions on j in favor of the smallest
    distance.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    desc_a = set_a.descriptors
    desc_b = set_b.descriptors
    if len(desc_a) == 0 or len(desc_b) == 0:
        return _EMPTY

    dist_sq = cdist(desc_a, desc_b, "sqeuclidean")
    ratio_sq = ratio * ratio
    forward = _ratio_forward(dist_sq, ratio_sq)

    pairs = []
    if two_sided:
        backward = _ratio_forward(dist_sq.T, ratio_sq)
        for i, j in enumerate(forward):
            if j >= 0 and backward[j] == i:
                pairs.append((i, int(j)))
    else:
        best_for_j: dict = {}
        for i, j in enumerate(forward):
            if j < 0:
                continue
            d = dist_sq[i, j]
            if j not in best_for_j or d < best_for_j[j][0]:
                best_for_j[int(j)] = (d, i)
        pairs = sorted((i, j) for j, (_, i) in best_for_j.items())
    return MatchResult(pairs=tuple(pairs), shared_count=len(pairs))
