"""Independent reference implementations used only by the tests.

Each oracle takes a different computational route from the library code it
checks: plain loops instead of vectorised kernels, SVD instead of the
library's solver, graph search instead of two-pass sweeps.
"""
from __future__ import annotations

import heapq
import math

import numpy as np


def random_homography(rng: np.random.Generator, perspective: float = 1e-3) -> np.ndarray:
    """Well-conditioned projective matrix near a similarity, h33 = 1."""
    ang = rng.uniform(-0.5, 0.5)
    s = rng.uniform(0.7, 1.4)
    m = np.array([[s * math.cos(ang), -s * math.sin(ang), rng.uniform(-200, 200)],
                  [s * math.sin(ang), s * math.cos(ang), rng.uniform(-200, 200)],
                  [0.0, 0.0, 1.0]])
    m[:2, :2] += rng.uniform(-0.1, 0.1, (2, 2))
    m[2, :2] = rng.uniform(-perspective, perspective, 2)
    return m


def project(m: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply a 3x3 matrix to points one at a time."""
    out = []
    for x, y in pts:
        u, v, w = m @ np.array([x, y, 1.0])
        out.append((u / w, v / w))
    return np.array(out)


def _dlt_rows(src, dst):
    rows = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    return np.array(rows, dtype=np.float64)


def dlt_svd(src, dst, normalize: bool = True) -> np.ndarray:
    """Textbook DLT: optional Hartley conditioning, SVD null vector, h33 = 1."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)

    def cond(p):
        c = p.mean(axis=0)
        s = math.sqrt(2) / np.mean(np.linalg.norm(p - c, axis=1))
        return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])

    ts = cond(src) if normalize else np.eye(3)
    td = cond(dst) if normalize else np.eye(3)
    a = _dlt_rows(project(ts, src), project(td, dst))
    h = np.linalg.svd(a)[2][-1].reshape(3, 3)
    m = np.linalg.inv(td) @ h @ ts
    return m / m[2, 2]


def nearest_two(query: np.ndarray, train: np.ndarray, metric: str):
    """O(n^2) rescan returning (best index, best distance, second distance)."""
    out = []
    for q in query:
        best = (math.inf, -1)
        second = math.inf
        for j, t in enumerate(train):
            if metric == "L2":
                d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(q, t)))
            else:
                d = int(np.unpackbits(np.bitwise_xor(q, t)).sum())
            if d < best[0]:
                second = best[0]
                best = (d, j)
            elif d < second:
                second = d
        out.append((best[1], best[0], second))
    return out


def chamfer_dijkstra(mask: np.ndarray) -> np.ndarray:
    """3-4 weighted shortest-path distance from each mask pixel to the nearest
    pixel outside the mask (the area beyond the array counts as outside)."""
    h, w = mask.shape
    inf = 1 << 40
    dist = np.full((h + 2, w + 2), inf, dtype=np.int64)
    heap = []
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    for y in range(h + 2):
        for x in range(w + 2):
            if not padded[y, x]:
                dist[y, x] = 0
                heap.append((0, y, x))
    heapq.heapify(heap)
    steps = [(-1, -1, 4), (-1, 0, 3), (-1, 1, 4), (0, -1, 3), (0, 1, 3), (1, -1, 4), (1, 0, 3),
             (1, 1, 4)]
    while heap:
        d, y, x = heapq.heappop(heap)
        if d > dist[y, x]:
            continue
        for dy, dx, c in steps:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h + 2 and 0 <= nx < w + 2 and d + c < dist[ny, nx]:
                dist[ny, nx] = d + c
                heapq.heappush(heap, (d + c, ny, nx))
    return dist[1:-1, 1:-1]


def dilate(mask: np.ndarray, size: int) -> np.ndarray:
    r = size // 2
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            out[y, x] = mask[max(0, y - r):y + r + 1, max(0, x - r):x + r + 1].any()
    return out


def erode(mask: np.ndarray, size: int) -> np.ndarray:
    """Erosion treating everything beyond the array as unset."""
    r = size // 2
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            if y - r < 0 or x - r < 0 or y + r >= h or x + r >= w:
                out[y, x] = False
            else:
                out[y, x] = mask[y - r:y + r + 1, x - r:x + r + 1].all()
    return out


def closing(mask: np.ndarray, size: int) -> np.ndarray:
    """Dilate then erode with a square element, on a margin-padded grid."""
    pad = size
    big = np.pad(mask, pad)
    return erode(dilate(big, size), size)[pad:-pad, pad:-pad]


def bilinear(img: np.ndarray, x: float, y: float) -> float:
    """Scalar bilinear interpolation on a 2-D array (pixel centres on integers)."""
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    fx, fy = x - x0, y - y0
    x1, y1 = min(x0 + 1, img.shape[1] - 1), min(y0 + 1, img.shape[0] - 1)
    top = (1 - fx) * float(img[y0, x0]) + fx * float(img[y0, x1])
    bot = (1 - fx) * float(img[y1, x0]) + fx * float(img[y1, x1])
    return (1 - fy) * top + fy * bot


def gaussian_2d(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1)
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2 * sigma * sigma))
    return g / g.sum()


def analytic_dog(r: np.ndarray, s_lo: float, s_hi: float) -> np.ndarray:
    """Continuous difference of two normalised 2-D Gaussians at radius ``r``."""
    def g(s):
        return np.exp(-r ** 2 / (2 * s * s)) / (2 * math.pi * s * s)
    return g(s_hi) - g(s_lo)


def round_half_away(v: float) -> int:
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def value_texture(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Small multi-scale random texture (uint8) for detector property tests."""
    from scipy import ndimage

    img = np.zeros((h, w))
    for cell in (2, 4, 8, 16):
        grid = rng.random((h // cell + 2, w // cell + 2))
        img += ndimage.zoom(grid, cell, order=3)[:h, :w] * math.sqrt(cell)
    img = (img - img.min()) / max(np.ptp(img), 1e-9) * 255
    return img.astype(np.uint8)
