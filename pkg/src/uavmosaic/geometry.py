"""Homogeneous-coordinate algebra, normalized DLT and RANSAC homography fitting.

Points are handled as ``(N, 2)`` float arrays; a pair of equal-length arrays
``src`` / ``dst`` stands for a list of correspondences ``src[i] -> dst[i]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS_W = 1e-12
EPS_DET = 1e-12
EPS_H33 = 1e-12
RANK_TOL = 1e-8


class GeometryError(ValueError):
    """Base class for geometry failures."""


class DegenerateProjectionError(GeometryError):
    pass


class DegenerateConfigurationError(GeometryError):
    pass


class InsufficientCorrespondencesError(GeometryError):
    pass


class NoConsensusError(GeometryError):
    pass


class SingularMatrixError(GeometryError):
    pass


class Homography:
    """Immutable 3x3 projective transform stored with h33 == 1."""

    __slots__ = ("_m",)

    def __init__(self, matrix) -> None:
        m = np.array(matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise SingularMatrixError("homography has non-finite entries")
        scale = np.abs(m).max()
        if scale == 0.0 or abs(m[2, 2]) < EPS_H33 * scale:
            raise SingularMatrixError("h33 vanishes; cannot normalize")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= EPS_DET:
            raise SingularMatrixError("homography is singular")
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        return cls([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])

    @classmethod
    def similarity(cls, scale: float = 1.0, angle: float = 0.0,
                   tx: float = 0.0, ty: float = 0.0) -> "Homography":
        """Rotation by ``angle`` radians and uniform ``scale``, then translation."""
        c, s = scale * math.cos(angle), scale * math.sin(angle)
        return cls([[c, -s, tx], [s, c, ty], [0.0, 0.0, 1.0]])

    def apply(self, points) -> np.ndarray:
        """Map an ``(N, 2)`` array (or a single point) through the transform."""
        return apply_homography(self, points)

    def inverse(self) -> "Homography":
        return invert(self)

    def __matmul__(self, other: "Homography") -> "Homography":
        return compose(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, Homography) and np.array_equal(self._m, other._m)

    def __hash__(self) -> int:
        return hash(self._m.tobytes())

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(f"{v:.6g}" for v in r) + "]" for r in self._m)
        return f"Homography([{rows}])"

    def to_text(self) -> str:
        return format_homography(self)

    @classmethod
    def from_text(cls, text: str) -> "Homography":
        return parse_homography(text)


def format_homography(h: Homography) -> str:
    """Nine row-major entries, 17 significant digits each."""
    return " ".join(f"{v:.16e}" for v in h.matrix.ravel())


def parse_homography(text: str) -> Homography:
    parts = text.split()
    if len(parts) != 9:
        raise ValueError(f"expected 9 numbers, got {len(parts)}")
    return Homography(np.array([float(p) for p in parts]).reshape(3, 3))


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64)
    if p.ndim == 1:
        p = p.reshape(1, 2)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"points must have shape (N, 2); got {p.shape}")
    return p


def apply_homography(h: Homography, points) -> np.ndarray:
    """Project points; a single input point returns shape ``(2,)``."""
    single = np.ndim(points) == 1
    p = _as_points(points)
    m = h.matrix
    w = m[2, 0] * p[:, 0] + m[2, 1] * p[:, 1] + m[2, 2]
    if np.any(np.abs(w) <= EPS_W):
        raise DegenerateProjectionError("point maps to the line at infinity")
    x = (m[0, 0] * p[:, 0] + m[0, 1] * p[:, 1] + m[0, 2]) / w
    y = (m[1, 0] * p[:, 0] + m[1, 1] * p[:, 1] + m[1, 2]) / w
    out = np.column_stack([x, y])
    return out[0] if single else out


def compose(a: Homography, b: Homography) -> Homography:
    """``compose(a, b)`` applies ``b`` first, then ``a``."""
    return Homography(a.matrix @ b.matrix)


def invert(h: Homography) -> Homography:
    try:
        inv = np.linalg.inv(h.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return Homography(inv)


def normalize_points(points) -> tuple[np.ndarray, Homography]:
    """Hartley preconditioning: centroid to origin, mean radius sqrt(2).

    Returns the transformed points and the similarity that produced them.
    """
    p = _as_points(points)
    if len(p) < 2:
        raise DegenerateConfigurationError("need at least two points")
    c = p.mean(axis=0)
    d = np.sqrt(((p - c) ** 2).sum(axis=1)).mean()
    if d < 1e-12:
        raise DegenerateConfigurationError("all points coincide")
    s = math.sqrt(2.0) / d
    t = Homography([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])
    return (p - c) * s, t


def _design_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Stacked 2n x 9 DLT system; trailing dims broadcast over a batch."""
    x, y = src[..., 0], src[..., 1]
    u, v = dst[..., 0], dst[..., 1]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    r1 = np.stack([zero, zero, zero, -x, -y, -one, v * x, v * y, v], axis=-1)
    r2 = np.stack([x, y, one, zero, zero, zero, -u * x, -u * y, -u], axis=-1)
    a = np.stack([r1, r2], axis=-2)
    return a.reshape(*a.shape[:-3], -1, 9)


def _null_vectors(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right singular vector of the smallest singular value, plus a rank-deficiency flag.

    Systems with fewer than 9 rows are padded with zero rows so the last
    right singular vector spans the null space.
    """
    rows = a.shape[-2]
    if rows < 9:
        pad = np.zeros(a.shape[:-2] + (9 - rows, 9))
        a = np.concatenate([a, pad], axis=-2)
    _, sv, vt = np.linalg.svd(a, full_matrices=False)
    rank_deficient = sv[..., -2] <= RANK_TOL * np.maximum(sv[..., 0], 1e-300)
    return vt[..., -1, :], rank_deficient


def dlt_homography(src, dst) -> Homography:
    """Least-squares algebraic homography from >= 4 correspondences."""
    src = _as_points(src)
    dst = _as_points(dst)
    if len(src) != len(dst):
        raise ValueError("src and dst must have equal length")
    if len(src) < 4:
        raise InsufficientCorrespondencesError(f"need 4 correspondences, got {len(src)}")
    ns, ts = normalize_points(src)
    nd, td = normalize_points(dst)
    h, deficient = _null_vectors(_design_matrix(ns, nd))
    if deficient:
        raise DegenerateConfigurationError("DLT design matrix has rank < 8")
    hn = h.reshape(3, 3)
    m = np.linalg.inv(td.matrix) @ hn @ ts.matrix
    try:
        return Homography(m)
    except SingularMatrixError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc


def reprojection_error(h: Homography, src, dst) -> np.ndarray | float:
    """Forward transfer distance ``||h(src) - dst||``; scalar for single points."""
    single = np.ndim(src) == 1
    d = apply_homography(h, _as_points(src)) - _as_points(dst)
    err = np.hypot(d[:, 0], d[:, 1])
    return float(err[0]) if single else err


def _batch_errors(models: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Errors of N correspondences under K models; inf where w vanishes."""
    x = models[:, 0:1, 0] * src[:, 0] + models[:, 0:1, 1] * src[:, 1] + models[:, 0:1, 2]
    y = models[:, 1:2, 0] * src[:, 0] + models[:, 1:2, 1] * src[:, 1] + models[:, 1:2, 2]
    w = models[:, 2:3, 0] * src[:, 0] + models[:, 2:3, 1] * src[:, 1] + models[:, 2:3, 2]
    bad = np.abs(w) <= EPS_W
    w = np.where(bad, 1.0, w)
    err = np.hypot(x / w - dst[:, 0], y / w - dst[:, 1])
    err[bad] = np.inf
    return err


def _batch_minimal_dlt(src4: np.ndarray, dst4: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve K minimal problems at once; returns (K,3,3) models and a validity mask."""
    def norm(p):
        c = p.mean(axis=1, keepdims=True)
        d = np.sqrt(((p - c) ** 2).sum(axis=2)).mean(axis=1)
        d = np.where(d < 1e-12, 1.0, d)
        s = math.sqrt(2.0) / d
        t = np.zeros((len(p), 3, 3))
        t[:, 0, 0] = t[:, 1, 1] = s
        t[:, 0, 2] = -s * c[:, 0, 0]
        t[:, 1, 2] = -s * c[:, 0, 1]
        t[:, 2, 2] = 1.0
        return (p - c) * s[:, None, None], t

    ns, ts = norm(src4)
    nd, td = norm(dst4)
    h, deficient = _null_vectors(_design_matrix(ns, nd))
    hn = h.reshape(-1, 3, 3)
    m = np.linalg.inv(td) @ hn @ ts
    scale = np.abs(m).reshape(len(m), -1).max(axis=1)
    h33 = m[:, 2, 2]
    ok = ~deficient & (np.abs(h33) >= EPS_H33 * np.maximum(scale, 1e-300))
    m = m / np.where(ok, h33, 1.0)[:, None, None]
    ok &= np.abs(np.linalg.det(m)) > EPS_DET
    ok &= np.all(np.isfinite(m.reshape(len(m), -1)), axis=1)
    return m, ok


def _collinear_triplet(p4: np.ndarray) -> np.ndarray:
    """True where any 3 of the 4 points are (nearly) collinear."""
    span = p4.max(axis=1) - p4.min(axis=1)
    diag2 = (span ** 2).sum(axis=1)
    out = np.zeros(len(p4), dtype=bool)
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        a, b, c = p4[:, i], p4[:, j], p4[:, k]
        area = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        out |= area < 1e-6 * diag2
    return out


def adaptive_iterations(inlier_ratio: float, confidence: float, sample_size: int = 4) -> float:
    """Standard RANSAC bound on the number of samples still worth drawing."""
    if inlier_ratio <= 0.0:
        return math.inf
    p_good = inlier_ratio ** sample_size
    if p_good >= 1.0:
        return 1.0
    return math.ceil(math.log(1.0 - confidence) / math.log(1.0 - p_good))


@dataclass(frozen=True)
class RansacResult:
    model: Homography
    inlier_mask: np.ndarray
    iterations_run: int

    @property
    def n_inliers(self) -> int:
        return int(self.inlier_mask.sum())


def ransac_homography(src, dst, threshold: float = 3.0, max_iterations: int = 2000,
                      confidence: float = 0.995, seed: int = 0,
                      min_inliers: int = 4, batch: int = 64) -> RansacResult:
    """Robust homography fit with seeded minimal samples and adaptive stopping.

    Samples are evaluated in batches for speed, but the winner and the stopping
    point are decided in draw order, so the outcome equals the sequential loop.
    """
    src = _as_points(src)
    dst = _as_points(dst)
    n = len(src)
    if len(dst) != n:
        raise ValueError("src and dst must have equal length")
    if n < 4:
        raise InsufficientCorrespondencesError(f"need 4 correspondences, got {n}")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")

    rng = np.random.default_rng(seed)
    max_draws = 10 * max_iterations
    draws = 0
    iterations = 0
    needed = float(max_iterations)
    best = None  # (count, mean_err, model, mask)

    while iterations < min(needed, max_iterations) and draws < max_draws:
        k = min(batch, max_draws - draws)
        idx = np.stack([rng.choice(n, 4, replace=False) for _ in range(k)])
        draws += k
        s4, d4 = src[idx], dst[idx]
        keep = ~_collinear_triplet(s4)
        if not keep.any():
            continue
        idx, s4, d4 = idx[keep], s4[keep], d4[keep]
        models, ok = _batch_minimal_dlt(s4, d4)
        errs = _batch_errors(models, src, dst)
        inl = errs <= threshold
        counts = inl.sum(axis=1)
        for j in range(len(idx)):
            if iterations >= min(needed, max_iterations):
                break
            iterations += 1
            if not ok[j]:
                continue
            c = int(counts[j])
            if c == 0:
                continue
            mean_err = float(errs[j][inl[j]].mean())
            if best is None or c > best[0] or (c == best[0] and mean_err < best[1]):
                best = (c, mean_err, models[j], inl[j])
                needed = adaptive_iterations(c / n, confidence)

    if best is None:
        raise DegenerateConfigurationError("every sampled minimal set was degenerate")
    floor = max(4, min_inliers)
    if best[0] < floor:
        raise NoConsensusError(f"best consensus {best[0]} < {floor}")
    mask = best[3]
    try:
        model = dlt_homography(src[mask], dst[mask])
    except GeometryError:
        model = Homography(best[2])
    try:
        mask = reprojection_error(model, src, dst) <= threshold
    except DegenerateProjectionError:
        errs = _batch_errors(model.matrix[None], src, dst)[0]
        mask = errs <= threshold
    if mask.sum() < floor:
        raise NoConsensusError(f"refit consensus {int(mask.sum())} < {floor}")
    mask.setflags(write=False)
    return RansacResult(model=model, inlier_mask=mask, iterations_run=iterations)


def corner_transfer_error(estimated: Homography, reference: Homography,
                          width: float, height: float) -> float:
    """Mean displacement of the four frame corners under two transforms."""
    corners = frame_corners(width, height)
    d = apply_homography(estimated, corners) - apply_homography(reference, corners)
    return float(np.hypot(d[:, 0], d[:, 1]).mean())


def frame_corners(width: float, height: float) -> np.ndarray:
    return np.array([[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]])

