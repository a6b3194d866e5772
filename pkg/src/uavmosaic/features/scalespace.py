from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..imaging import gaussian_blur


class ImageTooSmallError(ValueError):
    pass


@dataclass
class ScaleSpace:
    """Gaussian and DoG stacks, one ``(levels, H, W)`` array per octave.

    Planes hold luma minus ``offset`` (the source mean), so a constant input
    produces exactly-zero planes.
    """

    gaussians: list[np.ndarray]
    dogs: list[np.ndarray]
    sigma0: float
    scales_per_octave: int
    offset: float
    requested_octaves: int

    @property
    def octaves(self) -> int:
        return len(self.gaussians)

    def level_sigma(self, level: float) -> float:
        """Blur of a level relative to its own octave's sampling grid."""
        return self.sigma0 * 2.0 ** (level / self.scales_per_octave)


def max_octaves(width: int, height: int) -> int:
    return int(math.floor(math.log2(min(width, height) / 16.0))) if min(width, height) >= 16 else 0


def build_scale_space(luma: np.ndarray, octaves: int = 4, scales_per_octave: int = 3,
                      sigma0: float = 1.6, input_blur: float = 0.5) -> ScaleSpace:
    """Gaussian pyramid with ``s + 3`` planes per octave and their differences.

    ``luma`` is a float plane in [0, 1] (or uint8, which is rescaled). Octaves
    are reduced automatically so the coarsest one is still >= 16 px.
    """
    plane = np.asarray(luma)
    if plane.dtype == np.uint8:
        plane = plane.astype(np.float32) / 255.0
    plane = plane.astype(np.float32)
    h, w = plane.shape
    n_oct = min(octaves, max_octaves(w, h))
    if n_oct < 1:
        raise ImageTooSmallError(f"{w}x{h} is too small for a scale space")
    offset = float(plane.mean(dtype=np.float64))
    base = plane - np.float32(offset)
    if np.ptp(plane) == 0:
        base = np.zeros_like(plane)
    s = scales_per_octave
    k = 2.0 ** (1.0 / s)
    sig = [sigma0 * k ** i for i in range(s + 3)]
    inc = [0.0] + [math.sqrt(sig[i] ** 2 - sig[i - 1] ** 2) for i in range(1, s + 3)]
    current = gaussian_blur(base, math.sqrt(max(sigma0 ** 2 - input_blur ** 2, 0.01)))
    gaussians, dogs = [], []
    for o in range(n_oct):
        if o > 0:
            current = np.ascontiguousarray(gaussians[-1][s][::2, ::2])
        stack = np.empty((s + 3,) + current.shape, dtype=np.float32)
        stack[0] = current
        for i in range(1, s + 3):
            stack[i] = gaussian_blur(stack[i - 1], inc[i])
        gaussians.append(stack)
        dogs.append(stack[1:] - stack[:-1])
    return ScaleSpace(gaussians, dogs, sigma0, s, offset, octaves)
