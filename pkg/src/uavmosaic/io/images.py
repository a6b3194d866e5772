"""Extension-dispatched image reading/writing and frame discovery."""
from __future__ import annotations

import glob
import os

import numpy as np

from .png import read_png, write_png
from .pnm import read_pnm, write_pnm

PNM_EXT = (".pgm", ".ppm", ".pnm")
PNG_EXT = (".png",)


class UnsupportedFormatError(ValueError):
    pass


def _ext(path) -> str:
    return os.path.splitext(str(path))[1].lower()


def read_image(path) -> np.ndarray:
    ext = _ext(path)
    if ext in PNM_EXT:
        return read_pnm(path)
    if ext in PNG_EXT:
        return read_png(path)
    raise UnsupportedFormatError(f"{path}: unsupported image format {ext!r}")


def write_image(path, img: np.ndarray) -> None:
    ext = _ext(path)
    if ext in PNM_EXT:
        write_pnm(path, img)
    elif ext in PNG_EXT:
        write_png(path, img)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported image format {ext!r}")


def list_frames(spec) -> list[str]:
    """Readable images in a directory (or matching a glob), sorted by filename."""
    spec = str(spec)
    paths = glob.glob(os.path.join(spec, "*")) if os.path.isdir(spec) else glob.glob(spec)
    frames = [p for p in paths if os.path.isfile(p) and _ext(p) in PNM_EXT + PNG_EXT]
    return sorted(frames, key=lambda p: (os.path.basename(p), p))
