"""Exhaustive nearest/second-nearest descriptor matching and the ratio test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features.base import BINARY256, FLOAT128, FeatureSet

L2 = "L2"
HAMMING = "Hamming"
_CHUNK = 512


class MatchingError(ValueError):
    pass


class DescriptorKindMismatch(MatchingError):
    pass


class EmptyTrainSet(MatchingError):
    pass


@dataclass
class MatchSet:
    """Parallel arrays, one entry per retained query descriptor.

    ``second_distance`` is ``inf`` when the train set had a single descriptor;
    ``has_second`` flags whether it is defined.
    """

    query_idx: np.ndarray
    train_idx: np.ndarray
    distance: np.ndarray
    second_distance: np.ndarray
    metric: str
    ratio_used: float | None = None

    def __len__(self) -> int:
        return len(self.query_idx)

    @property
    def has_second(self) -> np.ndarray:
        return np.isfinite(self.second_distance)

    def subset(self, keep: np.ndarray, ratio: float | None = None) -> "MatchSet":
        return MatchSet(self.query_idx[keep], self.train_idx[keep], self.distance[keep],
                        self.second_distance[keep], self.metric,
                        self.ratio_used if ratio is None else ratio)

    def dumps(self) -> str:
        """``q t d d2`` debug lines; an undefined second distance prints as ``inf``."""
        return "".join(f"{q} {t} {d:.9g} {d2:.9g}\n" for q, t, d, d2 in
                       zip(self.query_idx, self.train_idx, self.distance, self.second_distance))


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise popcount distance between rows of two ``(N, 32) uint8`` arrays."""
    wa = np.ascontiguousarray(a).view(np.uint64)
    wb = np.ascontiguousarray(b).view(np.uint64)
    acc = np.zeros((len(wa), len(wb)), dtype=np.uint16)
    for k in range(wa.shape[1]):
        acc += np.bitwise_count(wa[:, k, None] ^ wb[None, :, k]).astype(np.uint16)
    return acc


def _two_smallest(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column indices of the smallest and second-smallest entry per row.

    Ties resolve to the lower index.
    """
    first = np.argmin(dist, axis=1)
    rows = np.arange(len(dist))
    masked = dist.copy()
    masked[rows, first] = np.inf if masked.dtype.kind == "f" else np.iinfo(masked.dtype).max
    second = np.argmin(masked, axis=1)
    return first, second


def brute_force_match(query: FeatureSet, train: FeatureSet) -> MatchSet:
    """Scan every train descriptor for each query descriptor.

    Float descriptors use Euclidean distance (candidates found with a
    Gram-matrix expansion, then re-measured exactly); binary descriptors use
    Hamming distance.
    """
    if query.kind != train.kind:
        raise DescriptorKindMismatch(f"{query.kind} vs {train.kind}")
    if len(train) == 0:
        raise EmptyTrainSet("train feature set is empty")
    nq = len(query)
    metric = L2 if query.kind == FLOAT128 else HAMMING
    t_idx = np.zeros(nq, dtype=np.int64)
    d1 = np.zeros(nq)
    d2 = np.full(nq, np.inf)
    if nq == 0:
        return MatchSet(np.zeros(0, dtype=np.int64), t_idx, d1, d2, metric)
    single = len(train) == 1

    if query.kind == BINARY256:
        for s in range(0, nq, _CHUNK):
            dist = hamming_matrix(query.descriptors[s:s + _CHUNK], train.descriptors)
            if single:
                t_idx[s:s + _CHUNK] = 0
                d1[s:s + _CHUNK] = dist[:, 0]
                continue
            first, second = _two_smallest(dist)
            rows = np.arange(len(dist))
            t_idx[s:s + _CHUNK] = first
            d1[s:s + _CHUNK] = dist[rows, first]
            d2[s:s + _CHUNK] = dist[rows, second]
    else:
        q = query.descriptors.astype(np.float64)
        t = train.descriptors.astype(np.float64)
        tn = (t * t).sum(axis=1)
        k = min(4, len(train))
        for s in range(0, nq, _CHUNK):
            qs = q[s:s + _CHUNK]
            approx = tn[None, :] - 2.0 * (qs @ t.T)
            if k < len(train):
                cand = np.argpartition(approx, k - 1, axis=1)[:, :k]
            else:
                cand = np.broadcast_to(np.arange(len(train)), (len(qs), len(train)))
            exact = np.sqrt(((qs[:, None, :] - t[cand]) ** 2).sum(axis=2))
            # order candidates by (exact distance, train index)
            order = np.lexsort((cand, exact), axis=1)
            cand = np.take_along_axis(cand, order, axis=1)
            exact = np.take_along_axis(exact, order, axis=1)
            t_idx[s:s + _CHUNK] = cand[:, 0]
            d1[s:s + _CHUNK] = exact[:, 0]
            if not single:
                d2[s:s + _CHUNK] = exact[:, 1]
    return MatchSet(np.arange(nq), t_idx, d1, d2, metric)


def ratio_test(ms: MatchSet, ratio: float = 0.75) -> MatchSet:
    """Keep matches with ``distance < ratio * second_distance``; undefined seconds drop."""
    keep = ms.has_second & (ms.distance < ratio * ms.second_distance)
    return ms.subset(keep, ratio)


def cross_check(forward: MatchSet, backward: MatchSet) -> MatchSet:
    """Retain forward matches whose train point maps back to the same query."""
    back = dict(zip(backward.query_idx.tolist(), backward.train_idx.tolist()))
    keep = np.array([back.get(int(t)) == int(q) for q, t in
                     zip(forward.query_idx, forward.train_idx)], dtype=bool)
    return forward.subset(keep)


def to_correspondences(ms: MatchSet, query: FeatureSet, train: FeatureSet,
                       roi_offset=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """``(src, dst)`` point arrays; ``dst`` is shifted by the ROI's canvas offset."""
    if len(ms) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))
    if ms.query_idx.max() >= len(query) or ms.train_idx.max() >= len(train) \
            or ms.query_idx.min() < 0 or ms.train_idx.min() < 0:
        raise IndexError("match index out of range")
    src = query.xy[ms.query_idx].astype(np.float64)
    dst = train.xy[ms.train_idx].astype(np.float64) + np.asarray(roi_offset, dtype=np.float64)
    return src, dst
