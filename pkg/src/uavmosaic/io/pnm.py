"""Binary PGM (P5) and PPM (P6) with maxval 255."""
from __future__ import annotations

import numpy as np


class PnmError(ValueError):
    pass


class MalformedHeaderError(PnmError):
    pass


class TruncatedDataError(PnmError):
    pass


class UnsupportedMaxvalError(PnmError):
    pass


_SPACE = b" \t\r\n\x0b\x0c"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the single whitespace byte
    that ends the last one.
    """
    tokens = []
    i, n = 0, len(data)
    while len(tokens) < count:
        while i < n and data[i] in _SPACE:
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] not in b"\r\n":
                i += 1
            continue
        if i >= n:
            raise MalformedHeaderError("header ends early")
        start = i
        while i < n and data[i] not in _SPACE and data[i] != ord("#"):
            i += 1
        tokens.append(data[start:i])
    if i >= n or data[i] not in _SPACE:
        raise MalformedHeaderError("header must end with a whitespace byte")
    return tokens, i + 1


def decode_pnm(data: bytes) -> np.ndarray:
    """``(H, W)`` uint8 for P5, ``(H, W, 3)`` for P6."""
    data = bytes(data)
    if data[:2] not in (b"P5", b"P6"):
        raise MalformedHeaderError(f"unsupported magic {data[:2]!r}")
    tokens, offset = _header_tokens(data, 4)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"non-integer header field in {tokens[1:]}") from None
    if w <= 0 or h <= 0:
        raise MalformedHeaderError(f"bad dimensions {w}x{h}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} (only 255 is supported)")
    ch = 1 if tokens[0] == b"P5" else 3
    size = w * h * ch
    if len(data) - offset < size:
        raise TruncatedDataError(f"expected {size} sample bytes, found {len(data) - offset}")
    arr = np.frombuffer(data, dtype=np.uint8, count=size, offset=offset)
    return arr.reshape((h, w) if ch == 1 else (h, w, 3)).copy()


def encode_pnm(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.dtype != np.uint8 or img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise PnmError(f"need uint8 (H, W) or (H, W, 3), got {img.dtype} {img.shape}")
    magic = "P5" if img.ndim == 2 else "P6"
    header = f"{magic}\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def read_pnm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def write_pnm(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img))
