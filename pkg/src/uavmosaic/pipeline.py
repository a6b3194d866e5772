"""Frame-by-frame mosaicking: ROI, features, matching, RANSAC, warp and blend.

Mosaic coordinates are the pixel coordinates of the first (processed) frame.
The canvas stores them shifted by ``canvas.origin``.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable

import numpy as np

from .compositor import (DEFAULT_CANVAS_LIMIT, CanvasLimitError, DegenerateHomographyError,
                         MosaicCanvas, Roi, alpha_blend, distance_weight,
                         edge_complexity_mask, expand_canvas, quad_area, roi_extract,
                         warp_frame)
from .features import DETECTORS, detect
from .geometry import (GeometryError, Homography, InsufficientCorrespondencesError,
                       NoConsensusError, apply_homography, frame_corners, ransac_homography)
from .imaging import check_image, downscale
from .matching import brute_force_match, cross_check, ratio_test, to_correspondences

MIN_FRAME = 64
STAGES = ("features", "matching", "ransac", "warp", "blend", "total")
CSV_COLUMNS = ("frame", "status", "keypoints_frame", "keypoints_roi", "matches_raw",
               "matches_ratio", "inliers") + tuple(f"t_{s}" for s in STAGES)


class PipelineError(ValueError):
    pass


class ConfigError(PipelineError):
    pass


class FrameTooSmallError(PipelineError):
    pass


class EmptyInputError(PipelineError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    detector: str = "sift"
    scale: float = 1.0
    ratio: float = 0.75
    ransac_threshold: float = 3.0
    ransac_iterations: int = 2000
    ransac_confidence: float = 0.995
    min_inliers: int = 10
    roi_factor: float = 3.0
    use_roi: bool = True
    feather_radius: float = 64.0
    edge_boost: float = 0.35
    blend: bool = True
    cross_check: bool = False
    seed: int = 0
    snapshot_every: int = 0
    canvas_limit: int = DEFAULT_CANVAS_LIMIT
    max_area_ratio: float = 4.0
    max_corner_shift: float = 1.5

    def __post_init__(self) -> None:
        checks = [
            (self.detector in DETECTORS, f"detector must be one of {DETECTORS}"),
            (0.0 < self.scale <= 1.0, "scale must lie in (0, 1]"),
            (0.0 < self.ratio < 1.0, "ratio must lie in (0, 1)"),
            (self.ransac_threshold > 0.0, "ransac_threshold must be > 0"),
            (self.ransac_iterations >= 1, "ransac_iterations must be >= 1"),
            (0.0 < self.ransac_confidence < 1.0, "ransac_confidence must lie in (0, 1)"),
            (self.min_inliers >= 4, "min_inliers must be >= 4"),
            (self.roi_factor >= 1.0, "roi_factor must be >= 1"),
            (self.feather_radius > 0.0, "feather_radius must be > 0"),
            (self.edge_boost >= 0.0, "edge_boost must be >= 0"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.snapshot_every >= 0, "snapshot_every must be >= 0"),
            (self.canvas_limit >= MIN_FRAME, "canvas_limit too small"),
            (self.max_area_ratio >= 1.0, "max_area_ratio must be >= 1"),
            (self.max_corner_shift > 0.0, "max_corner_shift must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class FrameReport:
    frame_index: int
    status: str = "stitched"
    reason: str | None = None
    n_keypoints_frame: int = 0
    n_keypoints_roi: int = 0
    n_matches_raw: int = 0
    n_matches_ratio: int = 0
    n_inliers: int = 0
    homography: Homography | None = None
    timings: dict = field(default_factory=lambda: {s: 0.0 for s in STAGES})

    @property
    def stitched(self) -> bool:
        return self.status == "stitched"

    @property
    def status_text(self) -> str:
        return self.status if self.reason is None else f"{self.status}({self.reason})"

    def csv_row(self) -> list[str]:
        counts = [self.n_keypoints_frame, self.n_keypoints_roi, self.n_matches_raw,
                  self.n_matches_ratio, self.n_inliers]
        return ([str(self.frame_index), self.status_text] + [str(c) for c in counts]
                + [f"{self.timings[s]:.6f}" for s in STAGES])


@dataclass
class MosaicState:
    canvas: MosaicCanvas
    transform: Homography
    config: PipelineConfig
    frames_stitched: int = 1
    frames_seen: int = 1
    reports: list = field(default_factory=list)

    def canvas_transform(self, h_mosaic: Homography) -> Homography:
        ox, oy = self.canvas.origin
        return Homography.translation(ox, oy) @ h_mosaic


def _prepare(frame: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    frame = check_image(frame)
    if frame.dtype != np.uint8:
        raise PipelineError("frames must be uint8")
    if cfg.scale != 1.0:
        frame = downscale(frame, cfg.scale, min_size=1)
    if min(frame.shape[:2]) < MIN_FRAME:
        raise FrameTooSmallError(f"frame {frame.shape[1]}x{frame.shape[0]} below {MIN_FRAME}px")
    return frame


def init(first_frame: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> MosaicState:
    """Start a mosaic from the first frame, which defines mosaic coordinates."""
    t0 = time.perf_counter()
    frame = _prepare(first_frame, cfg)
    canvas = MosaicCanvas.from_frame(frame)
    report = FrameReport(0, homography=Homography.identity())
    report.timings["total"] = time.perf_counter() - t0
    return MosaicState(canvas, Homography.identity(), cfg, reports=[report])


def sanity_gates(h: Homography, width: int, height: int, n_inliers: int,
                 cfg: PipelineConfig = PipelineConfig(),
                 previous: Homography | None = None) -> str | None:
    """Reason string for rejecting a frame placement, or ``None`` to accept."""
    if n_inliers < cfg.min_inliers:
        return "min-inliers"
    corners = frame_corners(width, height)
    try:
        quad = apply_homography(h, corners)
    except GeometryError:
        return "degenerate"
    if not _convex_positive(quad):
        return "non-convex"
    ratio = quad_area(quad) / float(width * height)
    if not (1.0 / cfg.max_area_ratio <= ratio <= cfg.max_area_ratio):
        return "area-ratio"
    if previous is not None:
        ref = apply_homography(previous, corners)
        shift = np.hypot(*(quad - ref).T).max()
        if shift > cfg.max_corner_shift * math.hypot(width, height):
            return "corner-shift"
    return None


def _convex_positive(quad: np.ndarray) -> bool:
    """All turns of the quadrilateral share the orientation of the frame itself."""
    if not np.all(np.isfinite(quad)):
        return False
    edges = np.roll(quad, -1, axis=0) - quad
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    return bool(np.all(cross > 0))


def _roi(state: MosaicState) -> Roi:
    cfg = state.config
    if cfg.use_roi:
        return roi_extract(state.canvas, cfg.roi_factor, trim_invalid=True)
    rect = state.canvas.valid_bbox()
    img = state.canvas.image[rect.slices].copy()
    img[~state.canvas.valid[rect.slices]] = 0
    return Roi(img, (rect.x0, rect.y0), rect)


def stitch_next(state: MosaicState, frame: np.ndarray) -> tuple[MosaicState, FrameReport]:
    """Register one frame against the mosaic and blend it in.

    A rejected frame only appends its report; canvas and transform stay as they were.
    """
    cfg = state.config
    t_start = time.perf_counter()
    report = FrameReport(state.frames_seen, status="rejected")
    state.frames_seen += 1
    state.reports.append(report)
    tm = report.timings

    def finish(reason: str | None) -> tuple[MosaicState, FrameReport]:
        report.reason = reason
        if reason is None:
            report.status = "stitched"
        tm["total"] = time.perf_counter() - t_start
        return state, report

    try:
        frame = _prepare(frame, cfg)
    except FrameTooSmallError:
        return finish("frame-too-small")
    fh, fw = frame.shape[:2]
    roi = _roi(state)

    t = time.perf_counter()
    feats = detect(frame, cfg.detector)
    roi_feats = detect(roi.image, cfg.detector)
    tm["features"] = time.perf_counter() - t
    report.n_keypoints_frame = len(feats)
    report.n_keypoints_roi = len(roi_feats)
    if len(feats) == 0 or len(roi_feats) == 0:
        return finish("no-features")

    t = time.perf_counter()
    raw = brute_force_match(feats, roi_feats)
    report.n_matches_raw = len(raw)
    if cfg.cross_check:
        raw = cross_check(raw, brute_force_match(roi_feats, feats))
    good = ratio_test(raw, cfg.ratio)
    report.n_matches_ratio = len(good)
    src, dst = to_correspondences(good, feats, roi_feats)
    tm["matching"] = time.perf_counter() - t

    t = time.perf_counter()
    try:
        fit = ransac_homography(src, dst, cfg.ransac_threshold, cfg.ransac_iterations,
                                cfg.ransac_confidence, seed=cfg.seed + report.frame_index,
                                min_inliers=cfg.min_inliers)
    except (InsufficientCorrespondencesError, NoConsensusError):
        # fewer than four matches is also a failure to reach consensus
        tm["ransac"] = time.perf_counter() - t
        return finish("no-consensus")
    except GeometryError:
        tm["ransac"] = time.perf_counter() - t
        return finish("degenerate")
    tm["ransac"] = time.perf_counter() - t
    report.n_inliers = fit.n_inliers
    ox, oy = state.canvas.origin
    try:
        h_mosaic = (Homography.translation(roi.offset[0] - ox, roi.offset[1] - oy) @ fit.model)
    except GeometryError:
        return finish("degenerate")
    report.homography = h_mosaic
    reason = sanity_gates(h_mosaic, fw, fh, fit.n_inliers, cfg, state.transform)
    if reason is not None:
        return finish(reason)

    t = time.perf_counter()
    try:
        h_canvas = state.canvas_transform(h_mosaic)
        warped, mask, box = warp_frame(frame, h_canvas)
        canvas, (dx, dy) = expand_canvas(state.canvas, box, limit=cfg.canvas_limit)
    except DegenerateHomographyError:
        tm["warp"] = time.perf_counter() - t
        return finish("degenerate")
    except CanvasLimitError:
        tm["warp"] = time.perf_counter() - t
        return finish("canvas-limit")
    box = box.shifted(dx, dy)
    tm["warp"] = time.perf_counter() - t
    if not mask.any():
        return finish("degenerate")

    t = time.perf_counter()
    if cfg.blend:
        weights = distance_weight(mask, cfg.feather_radius)
        edges = edge_complexity_mask(warped, valid=mask) if cfg.edge_boost > 0 else None
        alpha_blend(canvas, warped, mask, box, weights, edges, cfg.edge_boost)
    else:
        alpha_blend(canvas, warped, mask, box, mask.astype(np.float64))
    canvas.last_frame_bbox = box
    tm["blend"] = time.perf_counter() - t

    state.canvas = canvas
    state.transform = h_mosaic
    state.frames_stitched += 1
    return finish(None)


def run_sequence(frames: Iterable[np.ndarray], cfg: PipelineConfig = PipelineConfig(),
                 snapshot: Callable[[MosaicState, int], None] | None = None,
                 ) -> tuple[MosaicState, list[FrameReport]]:
    """Initialise on the first frame and stitch the rest; rejections never abort.

    ``snapshot(state, index)`` is called after every ``cfg.snapshot_every``-th frame.
    """
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise EmptyInputError("no frames to stitch") from None
    every = cfg.snapshot_every if snapshot is not None else 0

    def maybe_snapshot(state: MosaicState) -> None:
        if every and state.frames_seen % every == 0:
            snapshot(state, state.frames_seen - 1)

    state = init(first, cfg)
    maybe_snapshot(state)
    for frame in it:
        stitch_next(state, frame)
        maybe_snapshot(state)
    return state, state.reports


def write_timing_csv(path, reports: Iterable[FrameReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow(r.csv_row())


def read_timing_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(CSV_COLUMNS) - set(rows[0]):
        raise PipelineError(f"{path}: missing columns {sorted(set(CSV_COLUMNS) - set(rows[0]))}")
    return rows


def to_original_units(h: Homography, scale: float) -> Homography:
    """Re-express a transform estimated on downscaled frames in full-size pixels.

    Area downscaling puts small pixel ``x`` at full-size ``(x + 0.5) / scale - 0.5``.
    """
    if scale == 1.0:
        return h
    c = 0.5 / scale - 0.5
    up = Homography.translation(c, c) @ Homography.similarity(1.0 / scale)
    return up @ h @ up.inverse()


def write_transforms(path, reports: Iterable[FrameReport], scale: float = 1.0) -> None:
    """One ``k h11 ... h33`` line per stitched frame (frame to mosaic)."""
    with open(path, "w") as fh:
        for r in reports:
            if r.stitched and r.homography is not None:
                fh.write(f"{r.frame_index} {to_original_units(r.homography, scale).to_text()}\n")


__all__ = ["CSV_COLUMNS", "ConfigError", "EmptyInputError", "FrameReport", "FrameTooSmallError",
           "MosaicState", "PipelineConfig", "PipelineError", "STAGES", "init",
           "read_timing_csv", "run_sequence", "sanity_gates", "stitch_next",
           "to_original_units", "write_timing_csv", "write_transforms"]
