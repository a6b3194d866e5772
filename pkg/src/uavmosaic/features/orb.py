"""FAST-9 corners on a 1.2x pyramid with steered 256-bit binary descriptors."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from ..imaging import to_luma
from ._orb_pattern import PATTERN
from .base import BINARY256, FeatureSet, canonical_order

# Bresenham circle of radius 3, clockwise from the top
CIRCLE = np.array([
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
], dtype=np.int64)
PATCH_RADIUS = 15
BORDER = 19  # rotated tests reach 13 * sqrt(2) px
_PAIRS = np.array(PATTERN, dtype=np.float64)


@dataclass(frozen=True)
class OrbParams:
    fast_threshold: int = 20
    levels: int = 8
    scale_factor: float = 1.2
    max_keypoints: int = 5000
    harris_k: float = 0.04
    harris_block: int = 7


def _arc_table() -> np.ndarray:
    """``table[m]`` is true when the 16-bit circle mask ``m`` has 9 contiguous set bits."""
    m = np.arange(1 << 16, dtype=np.int64)
    mm = m | (m << 16)
    for _ in range(8):
        mm &= mm >> 1
    return mm != 0


ARC9 = _arc_table()


@njit(cache=True)
def fast9(img, threshold, border, circle, arc):
    """Segment-test corners (9 contiguous brighter or darker circle pixels).

    ``arc`` is the table from ``_arc_table``. Returns an (M, 2) array of
    (col, row) and the sum-of-excess corner score.
    """
    h, w = img.shape
    flags = np.zeros((h, w), dtype=np.bool_)
    scores = np.zeros((h, w))
    count = 0
    dx = circle[:, 0].copy()
    dy = circle[:, 1].copy()
    for r in range(border, h - border):
        for c in range(border, w - border):
            p = np.int32(img[r, c])
            hi = p + threshold
            lo = p - threshold
            # any 9-arc covers two neighbouring compass pixels on the same side
            a = np.int32(img[r - 3, c])
            b = np.int32(img[r, c + 3])
            d = np.int32(img[r + 3, c])
            e = np.int32(img[r, c - 3])
            ab, bb, db, eb = a > hi, b > hi, d > hi, e > hi
            ad, bd, dd, ed = a < lo, b < lo, d < lo, e < lo
            if not ((ab and bb) or (bb and db) or (db and eb) or (eb and ab)
                    or (ad and bd) or (bd and dd) or (dd and ed) or (ed and ad)):
                continue
            bright = 0
            dark = 0
            sb = 0
            sd = 0
            for q in range(16):
                v = np.int32(img[r + dy[q], c + dx[q]])
                up = max(v - hi, 0)
                down = max(lo - v, 0)
                bright |= np.int32(up > 0) << q
                dark |= np.int32(down > 0) << q
                sb += up
                sd += down
            if not (arc[bright] or arc[dark]):
                continue
            flags[r, c] = True
            scores[r, c] = max(sb, sd)
            count += 1
    pts = np.empty((count, 2), dtype=np.int64)
    score = np.empty(count)
    n = 0
    for r in range(border, h - border):
        for c in range(border, w - border):
            if flags[r, c]:
                pts[n, 0] = c
                pts[n, 1] = r
                score[n] = scores[r, c]
                n += 1
    return pts, score


@njit(cache=True)
def nonmax_3x3(pts, score, h, w):
    """Keep corners whose score is the 3x3 maximum; equal neighbours both survive."""
    grid = np.zeros((h, w))
    for n in range(pts.shape[0]):
        grid[pts[n, 1], pts[n, 0]] = score[n]
    keep = np.ones(pts.shape[0], dtype=np.bool_)
    for n in range(pts.shape[0]):
        c = pts[n, 0]
        r = pts[n, 1]
        v = score[n]
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                if grid[r + dy, c + dx] > v:
                    keep[n] = False
    return keep


@njit(cache=True)
def harris_at(level, cols, rows, block, k):
    """Harris response from Sobel gradients summed over a block x block window."""
    half = block // 2
    out = np.empty(cols.shape[0])
    for n in range(cols.shape[0]):
        c0 = cols[n]
        r0 = rows[n]
        sxx = 0.0
        syy = 0.0
        sxy = 0.0
        for y in range(r0 - half, r0 + half + 1):
            for x in range(c0 - half, c0 + half + 1):
                gx = (level[y - 1, x + 1] + 2.0 * level[y, x + 1] + level[y + 1, x + 1]
                      - level[y - 1, x - 1] - 2.0 * level[y, x - 1] - level[y + 1, x - 1])
                gy = (level[y + 1, x - 1] + 2.0 * level[y + 1, x] + level[y + 1, x + 1]
                      - level[y - 1, x - 1] - 2.0 * level[y - 1, x] - level[y - 1, x + 1])
                sxx += gx * gx
                syy += gy * gy
                sxy += gx * gy
        out[n] = sxx * syy - sxy * sxy - k * (sxx + syy) ** 2
    return out


@njit(cache=True)
def centroid_angles(level, cols, rows, radius):
    """Angle from each corner to the intensity centroid of its circular patch."""
    out = np.empty(cols.shape[0])
    r2 = radius * radius
    for n in range(cols.shape[0]):
        m10 = 0.0
        m01 = 0.0
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                if dx * dx + dy * dy > r2:
                    continue
                v = level[rows[n] + dy, cols[n] + dx]
                m10 += dx * v
                m01 += dy * v
        a = math.atan2(m01, m10)
        if a < 0.0:
            a += 2.0 * math.pi
        if a >= 2.0 * math.pi:
            a = 0.0
        out[n] = a
    return out


@njit(cache=True)
def steered_descriptors(smooth, cols, rows, angles, pairs):
    """Bit i is set when the rotated first test point is darker than the second."""
    out = np.zeros((cols.shape[0], 32), dtype=np.uint8)
    for n in range(cols.shape[0]):
        c = math.cos(angles[n])
        s = math.sin(angles[n])
        for i in range(pairs.shape[0]):
            x1 = int(round(c * pairs[i, 0] - s * pairs[i, 1])) + cols[n]
            y1 = int(round(s * pairs[i, 0] + c * pairs[i, 1])) + rows[n]
            x2 = int(round(c * pairs[i, 2] - s * pairs[i, 3])) + cols[n]
            y2 = int(round(s * pairs[i, 2] + c * pairs[i, 3])) + rows[n]
            if smooth[y1, x1] < smooth[y2, x2]:
                out[n, i >> 3] |= np.uint8(1 << (i & 7))
    return out


def _pyramid(luma: np.ndarray, params: OrbParams) -> list[np.ndarray]:
    levels = [luma]
    for _ in range(1, params.levels):
        prev = levels[-1]
        nh = int(round(luma.shape[0] / params.scale_factor ** len(levels)))
        nw = int(round(luma.shape[1] / params.scale_factor ** len(levels)))
        if min(nh, nw) < 2 * BORDER + 1:
            break
        zoom = (nh / prev.shape[0], nw / prev.shape[1])
        nxt = ndimage.zoom(prev.astype(np.float32), zoom, order=1, grid_mode=True, mode="nearest")
        levels.append(np.clip(np.rint(nxt), 0, 255).astype(np.uint8))
    return levels


def detect_orb(img: np.ndarray, params: OrbParams = OrbParams()) -> FeatureSet:
    t0 = time.perf_counter()
    luma = to_luma(img)
    h, w = luma.shape
    if min(h, w) < 32:
        return FeatureSet.empty(BINARY256, time.perf_counter() - t0)
    pyr = _pyramid(luma, params)
    parts = []
    for lv, level in enumerate(pyr):
        if min(level.shape) < 2 * BORDER + 1:
            break
        pts, score = fast9(level, int(params.fast_threshold), BORDER, CIRCLE, ARC9)
        if len(pts) == 0:
            continue
        keep = nonmax_3x3(pts, score, level.shape[0], level.shape[1])
        pts = pts[keep]
        harris = harris_at(level, pts[:, 0], pts[:, 1], params.harris_block, params.harris_k)
        pos = harris > 0
        pts, harris = pts[pos], harris[pos]
        if len(pts) == 0:
            continue
        sx = w / level.shape[1]
        sy = h / level.shape[0]
        xy = np.stack([(pts[:, 0] + 0.5) * sx - 0.5, (pts[:, 1] + 0.5) * sy - 0.5], axis=1)
        parts.append(dict(level=np.full(len(pts), lv, dtype=np.int32), cols=pts[:, 0],
                          rows=pts[:, 1], xy=xy, response=harris.astype(np.float64),
                          scale=np.full(len(pts), params.scale_factor ** lv)))
    if not parts:
        return FeatureSet.empty(BINARY256, time.perf_counter() - t0)
    allk = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    order = canonical_order(allk["xy"], allk["response"], np.zeros(len(allk["xy"])),
                            params.max_keypoints)
    allk = {k: v[order] for k, v in allk.items()}

    n = len(order)
    angles = np.zeros(n)
    desc = np.zeros((n, 32), dtype=np.uint8)
    for lv in np.unique(allk["level"]):
        sel = np.nonzero(allk["level"] == lv)[0]
        level = pyr[lv]
        cols, rows = allk["cols"][sel], allk["rows"][sel]
        angles[sel] = centroid_angles(level, cols, rows, PATCH_RADIUS)
        smooth = ndimage.gaussian_filter(level.astype(np.float32), 2.0, truncate=1.5, mode="reflect")
        desc[sel] = steered_descriptors(smooth, cols, rows, angles[sel], _PAIRS)
    return FeatureSet(
        xy=allk["xy"], scale=allk["scale"], orientation=angles, response=allk["response"],
        octave=allk["level"], descriptors=desc, kind=BINARY256,
        extraction_time=time.perf_counter() - t0,
    )
