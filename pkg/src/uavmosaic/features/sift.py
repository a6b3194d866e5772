"""Scale-invariant DoG keypoints with 128-float gradient-histogram descriptors."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..imaging import luma_float
from . import _sift_kernels as kern
from .base import FLOAT128, FeatureSet, canonical_order
from .scalespace import build_scale_space, max_octaves

BORDER = 5


@dataclass(frozen=True)
class SiftParams:
    octaves: int = 4
    scales_per_octave: int = 3
    sigma0: float = 1.6
    input_blur: float = 0.5
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    peak_ratio: float = 0.8
    max_keypoints: int = 8000


def _orientation_peaks(hists: np.ndarray, peak_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """(keypoint index, angle) for every histogram peak >= peak_ratio * max."""
    left = np.roll(hists, 1, axis=1)
    right = np.roll(hists, -1, axis=1)
    top = hists.max(axis=1, keepdims=True)
    is_peak = (hists > left) & (hists > right) & (hists >= peak_ratio * top) & (top > 0)
    kp, b = np.nonzero(is_peak)
    lv, cv, rv = left[kp, b], hists[kp, b], right[kp, b]
    denom = lv - 2.0 * cv + rv
    shift = np.where(denom != 0, 0.5 * (lv - rv) / np.where(denom != 0, denom, 1.0), 0.0)
    bins = kern.ORI_BINS
    ang = (2.0 * math.pi * (b + shift) / bins) % (2.0 * math.pi)
    ang = np.where(ang >= 2.0 * math.pi, 0.0, ang)
    return kp, ang


def detect_sift(img: np.ndarray, params: SiftParams = SiftParams()) -> FeatureSet:
    """Detect and describe DoG keypoints on the luma plane of ``img``.

    Images under 64 px on a side (or constant ones) give an empty set.
    """
    t0 = time.perf_counter()
    plane = luma_float(img) if img.dtype == np.uint8 else np.asarray(img, dtype=np.float32)
    h, w = plane.shape
    if min(h, w) < 64 or max_octaves(w, h) < 1:
        return FeatureSet.empty(FLOAT128, time.perf_counter() - t0)
    ss = build_scale_space(plane, params.octaves, params.scales_per_octave,
                           params.sigma0, params.input_blur)
    s = params.scales_per_octave
    pre = 0.5 * params.contrast_threshold

    cand = []
    for o in range(ss.octaves):
        dogs = ss.dogs[o]
        if min(dogs.shape[1:]) <= 2 * BORDER + 2:
            continue
        rows, resp = kern.find_extrema(dogs, s, BORDER, pre, params.contrast_threshold,
                                       params.edge_ratio)
        if len(rows) == 0:
            continue
        ci, ri, li = rows[:, 0].astype(np.int64), rows[:, 1].astype(np.int64), rows[:, 2].astype(np.int64)
        # neighbouring extrema can converge onto the same sample
        _, first = np.unique(np.stack([li, ri, ci], axis=1), axis=0, return_index=True)
        first = np.sort(first)
        rows, resp = rows[first], resp[first]
        ci, ri, li = ci[first], ri[first], li[first]
        level = li + rows[:, 5]
        sig_oct = params.sigma0 * 2.0 ** (level / s)
        hists = kern.orientation_histograms(ss.gaussians[o], ci, ri, li, sig_oct)
        kp_idx, ang = _orientation_peaks(hists, params.peak_ratio)
        scale = 2.0 ** o
        xy = np.stack([(ci + rows[:, 3]) * scale, (ri + rows[:, 4]) * scale], axis=1)
        cand.append(dict(
            octave=np.full(len(kp_idx), o, dtype=np.int32),
            xy=xy[kp_idx], ci=ci[kp_idx], ri=ri[kp_idx], li=li[kp_idx],
            sig_oct=sig_oct[kp_idx], scale=sig_oct[kp_idx] * scale,
            response=resp[kp_idx], orientation=ang,
        ))
    if not cand:
        return FeatureSet.empty(FLOAT128, time.perf_counter() - t0)
    allk = {k: np.concatenate([c[k] for c in cand]) for k in cand[0]}
    inside = ((allk["xy"][:, 0] >= 0) & (allk["xy"][:, 0] < w)
              & (allk["xy"][:, 1] >= 0) & (allk["xy"][:, 1] < h))
    allk = {k: v[inside] for k, v in allk.items()}
    order = canonical_order(allk["xy"], allk["response"], allk["orientation"], params.max_keypoints)
    allk = {k: v[order] for k, v in allk.items()}

    desc = np.zeros((len(order), 128), dtype=np.float32)
    for o in range(ss.octaves):
        sel = np.nonzero(allk["octave"] == o)[0]
        if len(sel) == 0:
            continue
        g = ss.gaussians[o]
        mags = np.zeros_like(g)
        angs = np.zeros_like(g)
        for layer in np.unique(allk["li"][sel]):
            mags[layer], angs[layer] = kern.gradient_polar(g[layer])
        desc[sel] = kern.descriptors(mags, angs, allk["ci"][sel], allk["ri"][sel],
                                     allk["li"][sel], allk["sig_oct"][sel],
                                     allk["orientation"][sel])
    return FeatureSet(
        xy=allk["xy"], scale=allk["scale"], orientation=allk["orientation"],
        response=allk["response"], octave=allk["octave"], descriptors=desc,
        kind=FLOAT128, extraction_time=time.perf_counter() - t0,
        meta={"octaves": ss.octaves},
    )
