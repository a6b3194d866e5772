"""Mosaic canvas, ROI extraction, inverse warping and edge-aware alpha blending."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy import ndimage

from .geometry import DegenerateProjectionError, Homography, apply_homography, invert
from .imaging import bilinear_sample, round_half_away, to_luma

DEFAULT_CANVAS_LIMIT = 20000


class CompositorError(ValueError):
    pass


class EmptyCanvasError(CompositorError):
    pass


class DegenerateHomographyError(CompositorError):
    pass


class CanvasLimitError(CompositorError):
    pass


@dataclass(frozen=True)
class Rect:
    """Half-open integer rectangle ``[x0, x1) x [y0, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def empty(self) -> bool:
        return self.x1 <= self.x0 or self.y1 <= self.y0

    def shifted(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def intersect(self, other: "Rect") -> "Rect":
        return Rect(max(self.x0, other.x0), max(self.y0, other.y0),
                    min(self.x1, other.x1), min(self.y1, other.y1))

    def contains(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def scaled(self, factor: float) -> "Rect":
        """Scale about the centre, rounding outwards."""
        cx, cy = (self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0
        hw, hh = self.width * factor / 2.0, self.height * factor / 2.0
        return Rect(int(math.floor(cx - hw + 1e-9)), int(math.floor(cy - hh + 1e-9)),
                    int(math.ceil(cx + hw - 1e-9)), int(math.ceil(cy + hh - 1e-9)))

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)


@dataclass
class MosaicCanvas:
    """Canvas raster plus bookkeeping.

    ``origin`` is where mosaic coordinate (0, 0) (the first frame's top-left)
    sits on the canvas; it moves when the canvas grows left or up.
    """

    image: np.ndarray
    valid: np.ndarray
    origin: tuple[int, int]
    last_frame_bbox: Rect

    @classmethod
    def from_frame(cls, frame: np.ndarray) -> "MosaicCanvas":
        rgb = as_rgb(frame)
        h, w = rgb.shape[:2]
        return cls(rgb.copy(), np.ones((h, w), dtype=bool), (0, 0), Rect(0, 0, w, h))

    @property
    def extent(self) -> Rect:
        return Rect(0, 0, self.image.shape[1], self.image.shape[0])

    def copy(self) -> "MosaicCanvas":
        return MosaicCanvas(self.image.copy(), self.valid.copy(), self.origin, self.last_frame_bbox)

    def valid_bbox(self) -> Rect:
        rows = np.flatnonzero(self.valid.any(axis=1))
        cols = np.flatnonzero(self.valid.any(axis=0))
        if len(rows) == 0:
            return Rect(0, 0, 0, 0)
        return Rect(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)

    def composite(self) -> np.ndarray:
        """Valid-area crop of the canvas, never-written pixels black."""
        r = self.valid_bbox()
        out = self.image[r.slices].copy()
        out[~self.valid[r.slices]] = 0
        return out


def as_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim == 2:
        return np.repeat(img[:, :, None], 3, axis=2)
    return img


class Roi(NamedTuple):
    image: np.ndarray
    offset: tuple[int, int]
    rect: Rect


def roi_extract(canvas: MosaicCanvas, factor: float = 3.0, trim_invalid: bool = False) -> Roi:
    """Copy of the canvas under the last frame's box grown ``factor`` times.

    The box is clipped to the canvas; never-written pixels come back zeroed.
    With ``trim_invalid`` the rectangle is further shrunk to the written area
    inside it.
    """
    if not canvas.valid.any():
        raise EmptyCanvasError("nothing stitched yet")
    if factor < 1.0:
        raise ValueError("ROI factor must be >= 1")
    rect = canvas.last_frame_bbox.scaled(factor).intersect(canvas.extent)
    if trim_invalid:
        sub = canvas.valid[rect.slices]
        rows = np.flatnonzero(sub.any(axis=1))
        cols = np.flatnonzero(sub.any(axis=0))
        if len(rows):
            rect = Rect(rect.x0 + int(cols[0]), rect.y0 + int(rows[0]),
                        rect.x0 + int(cols[-1]) + 1, rect.y0 + int(rows[-1]) + 1)
    img = canvas.image[rect.slices].copy()
    img[~canvas.valid[rect.slices]] = 0
    return Roi(img, (rect.x0, rect.y0), rect)


def warped_bbox(h: Homography, width: int, height: int) -> Rect:
    """Integer hull of the frame's pixel-centre corners under ``h``."""
    corners = np.array([[0.0, 0.0], [width - 1.0, 0.0],
                        [width - 1.0, height - 1.0], [0.0, height - 1.0]])
    try:
        p = apply_homography(h, corners)
    except DegenerateProjectionError as exc:
        raise DegenerateHomographyError(str(exc)) from exc
    if not np.all(np.isfinite(p)):
        raise DegenerateHomographyError("corner maps to infinity")
    return Rect(int(math.floor(p[:, 0].min() + 1e-9)), int(math.floor(p[:, 1].min() + 1e-9)),
                int(math.ceil(p[:, 0].max() - 1e-9)) + 1, int(math.ceil(p[:, 1].max() - 1e-9)) + 1)


def quad_area(points: np.ndarray) -> float:
    """Signed shoelace area (positive for clockwise order in y-down images)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def warp_frame(frame: np.ndarray, h: Homography) -> tuple[np.ndarray, np.ndarray, Rect]:
    """Inverse-map the frame into its bounding box in target coordinates.

    Returns the warped raster (same dtype/channels as ``frame``), a coverage
    mask, and the box. Pixels whose preimage falls outside the frame are zero
    with mask false.
    """
    fh, fw = frame.shape[:2]
    corners = np.array([[0.0, 0.0], [fw, 0.0], [fw, fh], [0.0, fh]])
    denom = h.matrix[2, 0] * corners[:, 0] + h.matrix[2, 1] * corners[:, 1] + h.matrix[2, 2]
    if not (np.all(denom > 0) or np.all(denom < 0)):
        raise DegenerateHomographyError("the line at infinity crosses the frame")
    try:
        area = abs(quad_area(apply_homography(h, corners)))
    except DegenerateProjectionError as exc:
        raise DegenerateHomographyError(str(exc)) from exc
    if not math.isfinite(area) or area <= 0 or area >= 16.0 * fw * fh:
        raise DegenerateHomographyError(f"warped area {area:.1f} out of range")
    box = warped_bbox(h, fw, fh)
    inv = invert(h).matrix
    ys, xs = np.mgrid[box.y0:box.y1, box.x0:box.x1]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    wq = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    if np.any(np.abs(wq) <= 1e-12):
        raise DegenerateHomographyError("bounding box crosses the line at infinity")
    qx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / wq
    qy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / wq
    vals, inside = bilinear_sample(frame, qx, qy)
    out = np.clip(round_half_away(vals), 0, 255).astype(frame.dtype)
    return out, inside, box


@njit(cache=True)
def chamfer34(mask):
    """3-4 chamfer distance (in thirds of a pixel) from every pixel to the nearest
    pixel outside ``mask``; the area beyond the array edge counts as outside."""
    h, w = mask.shape
    big = 1 << 30
    d = np.empty((h + 2, w + 2), dtype=np.int64)
    d[:, :] = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                d[y + 1, x + 1] = big
    for y in range(1, h + 1):
        for x in range(1, w + 1):
            v = d[y, x]
            if v == 0:
                continue
            v = min(v, d[y - 1, x - 1] + 4, d[y - 1, x] + 3, d[y - 1, x + 1] + 4, d[y, x - 1] + 3)
            d[y, x] = v
    for y in range(h, 0, -1):
        for x in range(w, 0, -1):
            v = d[y, x]
            if v == 0:
                continue
            v = min(v, d[y + 1, x + 1] + 4, d[y + 1, x] + 3, d[y + 1, x - 1] + 4, d[y, x + 1] + 3)
            d[y, x] = v
    return d[1:h + 1, 1:w + 1]


def distance_weight(mask: np.ndarray, feather_radius: float = 64.0) -> np.ndarray:
    """Feathering weight rising linearly from 0 on the mask boundary to 1 at
    ``min(max depth, feather_radius)`` pixels inside; 0 outside the mask."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise CompositorError("mask is empty")
    dist = np.maximum(chamfer34(mask) - 3, 0) / 3.0
    dist[~mask] = 0.0
    top = min(float(dist.max()), float(feather_radius))
    if top <= 0:
        return mask.astype(np.float64)
    return np.clip(dist / top, 0.0, 1.0)


def sobel_magnitude(luma: np.ndarray) -> np.ndarray:
    p = luma.astype(np.float64)
    gx = ndimage.sobel(p, axis=1, mode="nearest")
    gy = ndimage.sobel(p, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def edge_complexity_mask(region: np.ndarray, valid: np.ndarray | None = None,
                         rel_threshold: float = 0.25, close_size: int = 5) -> np.ndarray:
    """Edge-dense areas: thresholded Sobel magnitude closed with a square element.

    When ``valid`` is given, gradients touching invalid pixels are ignored so
    the raster border of a warped frame does not register as an edge.
    """
    region = np.asarray(region)
    if region.shape[0] < 3 or region.shape[1] < 3:
        raise CompositorError("region must be at least 3x3")
    mag = sobel_magnitude(to_luma(region))
    if valid is not None:
        interior = ndimage.binary_erosion(valid, structure=np.ones((3, 3), bool), border_value=0)
        mag[~interior] = 0.0
    top = mag.max()
    if top <= 0:
        return np.zeros(region.shape[:2], dtype=bool)
    edges = mag > rel_threshold * top
    se = np.ones((close_size, close_size), dtype=bool)
    pad = close_size
    dil = ndimage.binary_dilation(np.pad(edges, pad), structure=se)
    closed = ndimage.binary_erosion(dil, structure=se, border_value=0)[pad:-pad, pad:-pad]
    if valid is not None:
        closed &= valid
    return closed


def alpha_blend(canvas: MosaicCanvas, warped: np.ndarray, mask: np.ndarray, box: Rect,
                weights: np.ndarray, edge_mask: np.ndarray | None = None,
                edge_boost: float = 0.0) -> MosaicCanvas:
    """Blend a warped frame into ``canvas`` in place over ``box``.

    Frame-only pixels are copied, overlap pixels get
    ``w' = min(1, w + boost * edge)`` of the frame, canvas-only pixels stay.
    """
    if edge_boost < 0:
        raise ValueError("edge_boost must be >= 0")
    shape = (box.height, box.width)
    if (warped.shape[:2] != shape or mask.shape != shape or weights.shape != shape
            or (edge_mask is not None and edge_mask.shape != shape)):
        raise CompositorError("blend inputs disagree in shape")
    if not canvas.extent.contains(box):
        raise CompositorError("box exceeds the canvas; expand it first")
    frame = as_rgb(warped).astype(np.float64)
    dst = canvas.image[box.slices]
    valid = canvas.valid[box.slices]
    only = mask & ~valid
    both = mask & valid
    dst[only] = as_rgb(warped)[only]
    w = weights.astype(np.float64)
    if edge_mask is not None and edge_boost > 0:
        w = np.minimum(1.0, w + edge_boost * edge_mask)
    wb = w[both][:, None]
    blended = wb * frame[both] + (1.0 - wb) * dst[both].astype(np.float64)
    dst[both] = np.clip(round_half_away(blended), 0, 255).astype(np.uint8)
    valid |= mask
    return canvas


def expand_canvas(canvas: MosaicCanvas, needed: Rect, slack: float = 0.25,
                  limit: int = DEFAULT_CANVAS_LIMIT) -> tuple[MosaicCanvas, tuple[int, int]]:
    """Grow the canvas so ``needed`` fits, with ``slack`` of its size on each crossed side.

    Returns the (possibly new) canvas and the shift applied to old coordinates.
    """
    ext = canvas.extent
    if ext.contains(needed):
        return canvas, (0, 0)
    sx = int(math.ceil(slack * needed.width))
    sy = int(math.ceil(slack * needed.height))
    x0 = needed.x0 - sx if needed.x0 < 0 else 0
    y0 = needed.y0 - sy if needed.y0 < 0 else 0
    x1 = needed.x1 + sx if needed.x1 > ext.x1 else ext.x1
    y1 = needed.y1 + sy if needed.y1 > ext.y1 else ext.y1
    w, h = x1 - x0, y1 - y0
    if w > limit or h > limit:
        raise CanvasLimitError(f"canvas would grow to {w}x{h} (limit {limit})")
    dx, dy = -x0, -y0
    img = np.zeros((h, w, 3), dtype=np.uint8)
    valid = np.zeros((h, w), dtype=bool)
    img[dy:dy + ext.y1, dx:dx + ext.x1] = canvas.image
    valid[dy:dy + ext.y1, dx:dx + ext.x1] = canvas.valid
    grown = MosaicCanvas(img, valid, (canvas.origin[0] + dx, canvas.origin[1] + dy),
                         canvas.last_frame_bbox.shifted(dx, dy))
    return grown, (dx, dy)


def with_bbox(canvas: MosaicCanvas, box: Rect) -> MosaicCanvas:
    return replace(canvas, last_frame_bbox=box.intersect(canvas.extent))
