"""Report figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STAGE_COLORS = {"features": "#4c72b0", "matching": "#dd8452", "ransac": "#55a868",
                 "warp": "#c44e52", "blend": "#8172b3"}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_frame_timings(rows: list[dict], path) -> None:
    """Stacked per-stage time for every frame of a build, rejected frames hatched."""
    frames = np.array([int(r["frame"]) for r in rows])
    fig, ax = plt.subplots(figsize=(9, 4))
    bottom = np.zeros(len(rows))
    for stage, color in _STAGE_COLORS.items():
        vals = np.array([float(r[f"t_{stage}"]) for r in rows])
        ax.bar(frames, vals, bottom=bottom, color=color, label=stage, width=0.8)
        bottom += vals
    total = np.array([float(r["t_total"]) for r in rows])
    ax.plot(frames, total, "k.-", lw=1, label="total")
    for f, r in zip(frames, rows):
        if not r["status"].startswith("stitched"):
            ax.axvspan(f - 0.5, f + 0.5, color="0.85", zorder=0)
    ax.set_xlabel("frame")
    ax.set_ylabel("seconds")
    ax.set_title("Per-frame stitching time")
    ax.legend(ncol=6, fontsize=8, loc="upper left")
    _save(fig, path)


def plot_bench(rows: list[dict], path) -> None:
    """First-stitch total time per detector against image scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for det in sorted({r["detector"] for r in rows}):
        sel = sorted((float(r["scale"]), float(r["t_total"]), float(r["t_features"]))
                     for r in rows if r["detector"] == det)
        xs = [s[0] for s in sel]
        ax.plot(xs, [s[1] for s in sel], "o-", label=f"{det} total")
        ax.plot(xs, [s[2] for s in sel], "x--", label=f"{det} features")
    ax.set_xlabel("image scale")
    ax.set_ylabel("seconds")
    ax.set_yscale("log")
    ax.set_title("First stitch time")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_errors(rows: list[dict], path) -> None:
    """Corner transfer error per stitched frame."""
    pts = [(int(r["frame"]), float(r["corner_error"])) for r in rows if r["corner_error"] != ""]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if pts:
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3)
    ax.set_xlabel("frame")
    ax.set_ylabel("corner error (px)")
    ax.set_title("Registration error against ground truth")
    ax.grid(alpha=0.3)
    _save(fig, path)
