"""Synthetic ground truth: textured source planes, lawnmower frame sequences,
transform evaluation and the seam gradient metric."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse

from .compositor import MosaicCanvas, sobel_magnitude
from .geometry import Homography, apply_homography, corner_transfer_error, frame_corners, invert
from .imaging import bilinear_sample, check_image, to_luma, to_uint8

MIN_SOURCE = 1024
# (cell size in px, amplitude) of the value-noise octaves
_OCTAVES = ((3, 0.6), (6, 0.8), (12, 1.0), (24, 1.0), (48, 1.0), (96, 1.2), (192, 1.2))


class HarnessError(ValueError):
    pass


class PoseEscapesSourceError(HarnessError):
    pass


class EmptyMaskError(HarnessError):
    pass


def _cubic_upsampler(n_out: int, cell: int, n_in: int) -> sparse.csr_matrix:
    """Sparse cubic-convolution (Keys, a = -0.5) interpolation, output j at input j / cell."""
    t = np.arange(n_out) / cell
    base = np.floor(t).astype(np.int64)
    frac = t - base
    rows, cols, vals = [], [], []
    for off in (-1, 0, 1, 2):
        d = np.abs(frac - off)
        w = np.where(d <= 1.0, 1.5 * d**3 - 2.5 * d**2 + 1.0,
                     -0.5 * d**3 + 2.5 * d**2 - 4.0 * d + 2.0)
        rows.append(np.arange(n_out))
        cols.append(np.clip(base + off, 0, n_in - 1))
        vals.append(w)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n_out, n_in))


def _value_noise(rng: np.random.Generator, width: int, height: int, cell: int) -> np.ndarray:
    grid = rng.random((height // cell + 4, width // cell + 4))
    my = _cubic_upsampler(height, cell, grid.shape[0])
    mx = _cubic_upsampler(width, cell, grid.shape[1])
    return np.asarray(my @ (mx @ grid.T).T)


def make_source(width: int, height: int, seed: int = 0, check_size: bool = True,
                min_cell: int = 3, disc_area: float = 600.0) -> np.ndarray:
    """Colour texture with structure at every scale from ``min_cell`` to ~200 px.

    Multi-octave value noise sets the luma; low-frequency tints colour it and
    scattered discs (one per ``disc_area`` px) add high-contrast blobs.
    Raising ``min_cell`` and ``disc_area`` gives a smooth, sparsely featured scene.
    """
    if check_size and (width < MIN_SOURCE or height < MIN_SOURCE):
        raise HarnessError(f"source must be at least {MIN_SOURCE}x{MIN_SOURCE}")
    rng = np.random.default_rng(seed)
    f = np.zeros((height, width))
    for cell, amp in _OCTAVES:
        noise = _value_noise(rng, width, height, cell)
        if cell >= min_cell:
            f += amp * noise
    f = (f - f.mean()) / f.std()
    luma = 128.0 + 55.0 * f
    tint = np.stack([_value_noise(rng, width, height, 256) for _ in range(3)], axis=2)
    tint = 40.0 * (tint - tint.mean(axis=(0, 1)))
    # keep the tint luma-neutral so texture contrast is unchanged
    tint -= (0.299 * tint[..., 0] + 0.587 * tint[..., 1] + 0.114 * tint[..., 2])[..., None]
    img = luma[..., None] + tint

    n = int(width * height / disc_area)
    cx = rng.uniform(0, width, n)
    cy = rng.uniform(0, height, n)
    rad = rng.uniform(2.0, 14.0, n)
    col = rng.uniform(0, 255, (n, 3))
    for k in range(n):
        x0, x1 = max(int(cx[k] - rad[k]), 0), min(int(cx[k] + rad[k]) + 1, width)
        y0, y1 = max(int(cy[k] - rad[k]), 0), min(int(cy[k] + rad[k]) + 1, height)
        yy, xx = np.ogrid[y0:y1, x0:x1]
        inside = (xx - cx[k]) ** 2 + (yy - cy[k]) ** 2 <= rad[k] ** 2
        patch = img[y0:y1, x0:x1]
        patch[inside] = 0.5 * patch[inside] + 0.5 * col[k]
    return to_uint8(img)


@dataclass
class GroundTruthSequence:
    """Frames plus their exact frame-to-source transforms."""

    frames: list
    gt: list
    source_size: tuple[int, int]
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.frames) != len(self.gt):
            raise HarnessError("frames and gt differ in length")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def frame_size(self) -> tuple[int, int]:
        h, w = self.frames[0].shape[:2]
        return w, h

    def mosaic_truth(self, k: int) -> Homography:
        """Frame ``k`` to mosaic (frame 0) coordinates."""
        return invert(self.gt[0]) @ self.gt[k]


def lawnmower_grid(n_frames: int, cols: int) -> list[tuple[int, int]]:
    """(column, row) of each frame along a boustrophedon path."""
    out = []
    for k in range(n_frames):
        row, pos = divmod(k, cols)
        out.append((pos if row % 2 == 0 else cols - 1 - pos, row))
    return out


def _steps(frame_size: tuple[int, int], overlap: float) -> tuple[int, int]:
    w, h = frame_size
    return int(round((1.0 - overlap) * w)), int(round((1.0 - overlap) * h))


def required_source_size(n_frames: int, frame_size=(800, 600), overlap: float = 0.7,
                         rot_jitter: float = 0.0, scale_jitter: float = 0.0,
                         cols: int | None = None, margin: int = 8) -> tuple[int, int]:
    """Smallest source that holds every pose under the worst-case jitter."""
    cols = cols or default_cols(n_frames)
    rows = math.ceil(n_frames / cols)
    w, h = frame_size
    sx, sy = _steps(frame_size, overlap)
    th = math.radians(rot_jitter)
    s = 1.0 + scale_jitter
    ext_w = s * (w * math.cos(th) + h * math.sin(th))
    ext_h = s * (w * math.sin(th) + h * math.cos(th))
    return (int(math.ceil((min(cols, n_frames) - 1) * sx + ext_w)) + 2 * margin,
            int(math.ceil((rows - 1) * sy + ext_h)) + 2 * margin)


def default_cols(n_frames: int) -> int:
    return max(1, math.ceil(math.sqrt(n_frames)))


def render_frame(source: np.ndarray, gt: Homography, frame_size: tuple[int, int]) -> np.ndarray:
    """Sample the source at ``gt(p)`` for every frame pixel ``p``."""
    w, h = frame_size
    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    q = apply_homography(gt, pts)
    vals, inside = bilinear_sample(source, q[:, 0].reshape(h, w), q[:, 1].reshape(h, w))
    if not inside.all():
        raise PoseEscapesSourceError("frame samples fall outside the source")
    return to_uint8(vals)


def generate_sequence(source: np.ndarray, n_frames: int, frame_size=(800, 600),
                      overlap: float = 0.7, rot_jitter: float = 0.0, scale_jitter: float = 0.0,
                      photometric_jitter: float = 0.0, noise_sigma: float = 0.0,
                      seed: int = 0, cols: int | None = None) -> GroundTruthSequence:
    """Lawnmower survey over ``source`` with seeded pose and photometric jitter.

    Poses are similarities about the frame centre. Brightness/contrast jitter
    and Gaussian noise are applied after rendering and draw from their own
    stream, so ground truth does not depend on them.
    """
    source = check_image(source)
    if n_frames < 1:
        raise HarnessError("n_frames must be >= 1")
    if not 0.0 <= overlap < 1.0:
        raise HarnessError("overlap must lie in [0, 1)")
    w, h = frame_size
    cols = min(cols or default_cols(n_frames), n_frames)
    rows = math.ceil(n_frames / cols)
    sx, sy = _steps(frame_size, overlap)
    H, W = source.shape[:2]
    # centre the grid, keeping unjittered frame corners on whole pixels
    cx0 = (W - ((cols - 1) * sx + w)) // 2 + (w - 1) / 2.0
    cy0 = (H - ((rows - 1) * sy + h)) // 2 + (h - 1) / 2.0

    pose_rng = np.random.default_rng([seed, 0])
    photo_rng = np.random.default_rng([seed, 1])
    frames, gts = [], []
    limit = np.array([W - 1.0, H - 1.0])
    for col, row in lawnmower_grid(n_frames, cols):
        ang = math.radians(pose_rng.uniform(-rot_jitter, rot_jitter)) if rot_jitter else 0.0
        scl = 1.0 + pose_rng.uniform(-scale_jitter, scale_jitter) if scale_jitter else 1.0
        cx, cy = cx0 + col * sx, cy0 + row * sy
        gt = (Homography.translation(cx, cy) @ Homography.similarity(scl, ang)
              @ Homography.translation(-(w - 1) / 2.0, -(h - 1) / 2.0))
        corners = apply_homography(gt, frame_corners(w - 1, h - 1))
        if np.any(corners < 0) or np.any(corners > limit):
            raise PoseEscapesSourceError(
                f"frame {len(frames)} leaves the {W}x{H} source; need at least "
                f"{required_source_size(n_frames, frame_size, overlap, rot_jitter, scale_jitter, cols)}")
        frame = render_frame(source, gt, frame_size).astype(np.float64)
        if photometric_jitter:
            gain = 1.0 + photo_rng.uniform(-1.0, 1.0) * photometric_jitter / 255.0
            offset = photo_rng.uniform(-photometric_jitter, photometric_jitter)
            frame = (frame - 128.0) * gain + 128.0 + offset
        if noise_sigma:
            frame = frame + photo_rng.normal(0.0, noise_sigma, frame.shape)
        frames.append(to_uint8(frame))
        gts.append(gt)
    params = dict(n_frames=n_frames, frame_size=(w, h), overlap=overlap, rot_jitter=rot_jitter,
                  scale_jitter=scale_jitter, photometric_jitter=photometric_jitter,
                  noise_sigma=noise_sigma, cols=cols)
    return GroundTruthSequence(frames, gts, (W, H), params, seed)


@dataclass
class EvalReport:
    errors: dict
    drift: float
    n_stitched: int
    n_rejected: int
    mean_total_time: float = float("nan")

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else float("nan")

    def rows(self) -> list[tuple[int, float]]:
        return sorted(self.errors.items())


def evaluate_transforms(estimates: dict, seq: GroundTruthSequence, n_rejected: int = 0,
                        mean_total_time: float = float("nan")) -> EvalReport:
    """Corner transfer error of each estimated frame-to-mosaic transform.

    ``estimates`` maps frame index to transform in full-size pixel units.
    """
    w, h = seq.frame_size
    errors = {}
    for k, est in sorted(estimates.items()):
        if not 0 <= k < len(seq):
            raise HarnessError(f"frame index {k} outside the {len(seq)}-frame sequence")
        errors[k] = corner_transfer_error(est, seq.mosaic_truth(k), w, h)
    drift = errors[max(errors)] if errors else float("nan")
    return EvalReport(errors, drift, len(errors), n_rejected, mean_total_time)


def evaluate(state, seq: GroundTruthSequence) -> EvalReport:
    """Evaluate a finished pipeline run against its ground-truth sequence."""
    from .pipeline import to_original_units

    if state.frames_seen != len(seq):
        raise HarnessError(f"run saw {state.frames_seen} frames, sequence has {len(seq)}")
    scale = state.config.scale
    est = {r.frame_index: to_original_units(r.homography, scale)
           for r in state.reports if r.stitched}
    rejected = sum(not r.stitched for r in state.reports)
    times = [r.timings["total"] for r in state.reports[1:]]
    return evaluate_transforms(est, seq, rejected, float(np.mean(times)) if times else float("nan"))


def seam_mask(previous_valid: np.ndarray, frame_mask: np.ndarray,
              final_valid: np.ndarray | None = None) -> np.ndarray:
    """Pixels on either side of the incoming frame's border where it meets old content."""
    se = np.ones((3, 3), dtype=bool)
    border = frame_mask & ~ndimage.binary_erosion(frame_mask, structure=se, border_value=0)
    seam = ndimage.binary_dilation(border, structure=se) & previous_valid
    if final_valid is not None:
        seam &= ndimage.binary_erosion(final_valid, structure=se, border_value=0)
    return seam


def seam_metric(canvas, mask: np.ndarray) -> float:
    """Mean Sobel gradient magnitude of the luma over the masked pixels."""
    img = canvas.image if isinstance(canvas, MosaicCanvas) else np.asarray(canvas)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2]:
        raise HarnessError("mask shape does not match the image")
    if not mask.any():
        raise EmptyMaskError("seam mask is empty")
    return float(sobel_magnitude(to_luma(img))[mask].mean())


def write_gt(path, gts: list) -> None:
    with open(path, "w") as fh:
        for k, g in enumerate(gts):
            fh.write(f"{k} {g.to_text()}\n")


def read_transforms(path) -> dict:
    """``k h11 ... h33`` lines to ``{k: Homography}``; blank and ``#`` lines skipped."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 10:
                raise HarnessError(f"{path}:{lineno}: expected index and 9 numbers")
            try:
                k = int(parts[0])
                out[k] = Homography.from_text(" ".join(parts[1:]))
            except ValueError as exc:
                raise HarnessError(f"{path}:{lineno}: {exc}") from exc
    return out


def save_sequence(seq: GroundTruthSequence, directory) -> None:
    from .io.pnm import write_pnm

    os.makedirs(directory, exist_ok=True)
    for k, frame in enumerate(seq.frames):
        write_pnm(os.path.join(directory, f"frame_{k:04d}.ppm"), frame)
    write_gt(os.path.join(directory, "gt.txt"), seq.gt)


def load_sequence(directory) -> GroundTruthSequence:
    from .io.images import list_frames, read_image

    paths = list_frames(directory)
    gt = read_transforms(os.path.join(directory, "gt.txt"))
    if sorted(gt) != list(range(len(paths))):
        raise HarnessError("gt.txt does not cover every frame")
    frames = [read_image(p) for p in paths]
    return GroundTruthSequence(frames, [gt[k] for k in range(len(paths))], (0, 0))
