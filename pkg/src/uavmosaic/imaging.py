"""Raster helpers shared by the detectors, compositor and harness.

Images are plain numpy arrays: ``uint8`` of shape ``(H, W)`` for grayscale or
``(H, W, 3)`` for RGB. Float planes used for pyramid math are ``float32``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy import ndimage, sparse


class ImageError(ValueError):
    pass


class OutputTooSmallError(ImageError):
    pass


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ImageError(f"expected (H, W) or (H, W, 3) image, got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ImageError("image must be at least 1x1")
    return img


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)


def to_luma(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma rounded to uint8; grayscale input is copied unchanged."""
    img = check_image(img)
    if img.ndim == 2:
        return img.copy()
    rgb = img.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return to_uint8(y)


def luma_float(img: np.ndarray) -> np.ndarray:
    """Luma scaled to [0, 1] as float32."""
    return to_luma(img).astype(np.float32) / 255.0


def _area_matrix(n_in: int, n_out: int) -> sparse.csr_matrix:
    """Row i averages input cells overlapping output cell i (box filter)."""
    ratio = n_in / n_out
    rows, cols, vals = [], [], []
    for i in range(n_out):
        a, b = i * ratio, (i + 1) * ratio
        j0, j1 = int(math.floor(a)), min(int(math.ceil(b)), n_in)
        for j in range(j0, j1):
            w = min(b, j + 1) - max(a, j)
            if w > 1e-12:
                rows.append(i)
                cols.append(j)
                vals.append(w / ratio)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))


def downscale(img: np.ndarray, factor: float, min_size: int = 16) -> np.ndarray:
    """Area-averaged resampling to ``floor(w*f) x floor(h*f)``."""
    img = check_image(img)
    if not 0.0 < factor <= 1.0:
        raise ValueError("factor must lie in (0, 1]")
    if factor == 1.0:
        return img.copy()
    h, w = img.shape[:2]
    oh, ow = int(math.floor(h * factor)), int(math.floor(w * factor))
    if oh < min_size or ow < min_size:
        raise OutputTooSmallError(f"downscaled size {ow}x{oh} below {min_size}x{min_size}")
    my = _area_matrix(h, oh)
    mx = _area_matrix(w, ow)
    planes = [img] if img.ndim == 2 else [img[..., c] for c in range(3)]
    out = []
    for p in planes:
        rows = my @ p.astype(np.float64)
        out.append((mx @ rows.T).T)
    res = np.stack(out, axis=-1) if img.ndim == 3 else out[0]
    return to_uint8(np.asarray(res))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return (k / k.sum()).astype(np.float32)


def gaussian_blur(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Two-pass separable blur, radius ceil(3 sigma), mirrored borders."""
    if sigma <= 0:
        return plane.astype(np.float32, copy=True)
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(plane.astype(np.float32, copy=False), k, axis=0, mode="mirror")
    return ndimage.correlate1d(out, k, axis=1, mode="mirror")


@njit(cache=True)
def _bilinear(img, xs, ys, tol):
    h, w, nc = img.shape
    n = xs.shape[0]
    vals = np.zeros((n, nc))
    inside = np.zeros(n, dtype=np.bool_)
    for k in range(n):
        x = xs[k]
        y = ys[k]
        if not (x >= -tol and x <= w - 1 + tol and y >= -tol and y <= h - 1 + tol):
            continue
        inside[k] = True
        xc = min(max(x, 0.0), w - 1.0)
        yc = min(max(y, 0.0), h - 1.0)
        x0 = min(int(math.floor(xc)), max(w - 2, 0))
        y0 = min(int(math.floor(yc)), max(h - 2, 0))
        fx = xc - x0
        fy = yc - y0
        x1 = min(x0 + 1, w - 1)
        y1 = min(y0 + 1, h - 1)
        for c in range(nc):
            top = img[y0, x0, c] * (1 - fx) + img[y0, x1, c] * fx
            bot = img[y1, x0, c] * (1 - fx) + img[y1, x1, c] * fx
            vals[k, c] = top * (1 - fy) + bot * fy
    return vals, inside


def bilinear_sample(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``img`` at float coordinates (pixel centers on integers).

    Returns ``(values, inside)``; values are float64 with trailing channel axis
    for colour input, and zero wherever the point falls outside the raster.
    """
    img = np.asarray(img)
    x = np.asarray(x, dtype=np.float64)
    y = np.broadcast_to(np.asarray(y, dtype=np.float64), x.shape)
    img3 = img if img.ndim == 3 else img[:, :, None]
    vals, inside = _bilinear(np.ascontiguousarray(img3), np.ascontiguousarray(x).ravel(),
                             np.ascontiguousarray(y).ravel(), 1e-9)
    inside = inside.reshape(x.shape)
    if img.ndim == 3:
        return vals.reshape(x.shape + (img.shape[2],)), inside
    return vals.reshape(x.shape), inside
