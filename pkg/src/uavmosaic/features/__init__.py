"""Keypoint detectors: a DoG float-descriptor detector and a FAST/binary one."""
from __future__ import annotations

import numpy as np

from .base import BINARY256, FLOAT128, FeatureSet, Keypoint
from .orb import OrbParams, detect_orb
from .sift import SiftParams, detect_sift

DETECTORS = ("sift", "orb")


def detect(img: np.ndarray, kind: str = "sift") -> FeatureSet:
    """Run the named detector with default parameters."""
    if kind == "sift":
        return detect_sift(img)
    if kind == "orb":
        return detect_orb(img)
    raise ValueError(f"unknown detector {kind!r}; expected one of {DETECTORS}")


__all__ = ["BINARY256", "DETECTORS", "FLOAT128", "FeatureSet", "Keypoint", "OrbParams",
           "SiftParams", "detect", "detect_orb", "detect_sift"]
