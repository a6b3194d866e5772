from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

FLOAT128 = "float128"
BINARY256 = "binary256"


class Keypoint(NamedTuple):
    x: float
    y: float
    scale: float
    orientation: float
    response: float
    octave: int


@dataclass
class FeatureSet:
    """Keypoints stored column-wise with a parallel descriptor matrix.

    ``descriptors`` is ``(N, 128) float32`` for ``float128`` sets and
    ``(N, 32) uint8`` for ``binary256`` sets.
    """

    xy: np.ndarray
    scale: np.ndarray
    orientation: np.ndarray
    response: np.ndarray
    octave: np.ndarray
    descriptors: np.ndarray
    kind: str
    extraction_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.xy)
        for name in ("scale", "orientation", "response", "octave", "descriptors"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match keypoint count")
        if self.kind not in (FLOAT128, BINARY256):
            raise ValueError(f"unknown descriptor kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.xy)

    @property
    def keypoints(self) -> list[Keypoint]:
        return [
            Keypoint(float(x), float(y), float(s), float(o), float(r), int(k))
            for (x, y), s, o, r, k in zip(self.xy, self.scale, self.orientation,
                                          self.response, self.octave)
        ]

    @classmethod
    def empty(cls, kind: str, extraction_time: float = 0.0) -> "FeatureSet":
        width, dtype = (128, np.float32) if kind == FLOAT128 else (32, np.uint8)
        return cls(
            xy=np.zeros((0, 2)),
            scale=np.zeros(0),
            orientation=np.zeros(0),
            response=np.zeros(0),
            octave=np.zeros(0, dtype=np.int32),
            descriptors=np.zeros((0, width), dtype=dtype),
            kind=kind,
            extraction_time=extraction_time,
        )

    def dumps(self) -> str:
        """Debug dump: a header line, then ``x y scale orientation response octave``
        per keypoint followed by the descriptor (hex or 128 reals) on the same line."""
        out = io.StringIO()
        out.write(f"# {self.kind} {len(self)}\n")
        for i in range(len(self)):
            x, y = self.xy[i]
            head = (f"{x:.6f} {y:.6f} {self.scale[i]:.6f} {self.orientation[i]:.6f} "
                    f"{self.response[i]:.9g} {int(self.octave[i])}")
            if self.kind == BINARY256:
                desc = bytes(self.descriptors[i]).hex()
            else:
                desc = " ".join(f"{v:.9g}" for v in self.descriptors[i])
            out.write(f"{head} {desc}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "FeatureSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing feature dump header")
        kind = lines[0].split()[1]
        rows = [ln.split() for ln in lines[1:]]
        if not rows:
            return cls.empty(kind)
        head = np.array([[float(v) for v in r[:6]] for r in rows])
        if kind == BINARY256:
            desc = np.array([list(bytes.fromhex(r[6])) for r in rows], dtype=np.uint8)
        else:
            desc = np.array([[float(v) for v in r[6:]] for r in rows], dtype=np.float32)
        return cls(xy=head[:, :2], scale=head[:, 2], orientation=head[:, 3],
                   response=head[:, 4], octave=head[:, 5].astype(np.int32),
                   descriptors=desc, kind=kind)


def canonical_order(xy: np.ndarray, response: np.ndarray, orientation: np.ndarray,
                    limit: int | None) -> np.ndarray:
    """Indices sorted by response (desc), then y, x, orientation; truncated to ``limit``."""
    order = np.lexsort((orientation, xy[:, 0], xy[:, 1], -response))
    if limit is not None:
        order = order[:limit]
    return order
