"""Minimal PNG codec: 8-bit grayscale or RGB, non-interlaced.

Alpha channels are dropped on decode. Palette, 16-bit and interlaced files
raise ``UnsupportedPngFeature``.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np
from numba import njit

SIGNATURE = b"\x89PNG\r\n\x1a\n"
_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}


class PngError(ValueError):
    pass


class UnsupportedPngFeature(PngError):
    pass


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def encode_png(img: np.ndarray, level: int = 6) -> bytes:
    img = np.asarray(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.dtype != np.uint8 or img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise PngError(f"need uint8 (H, W) or (H, W, 3), got {img.dtype} {img.shape}")
    h, w = img.shape[:2]
    ctype = 0 if img.ndim == 2 else 2
    rows = np.ascontiguousarray(img).reshape(h, -1)
    # filter type 0 on every scanline
    raw = np.concatenate([np.zeros((h, 1), np.uint8), rows], axis=1).tobytes()
    ihdr = struct.pack(">IIBBBBB", w, h, 8, ctype, 0, 0, 0)
    return (SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", zlib.compress(raw, level))
            + _chunk(b"IEND", b""))


@njit(cache=True)
def _unfilter(raw, h, stride, bpp):
    out = np.zeros((h, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.int32)
    pos = 0
    for y in range(h):
        ftype = raw[pos]
        pos += 1
        for x in range(stride):
            v = np.int32(raw[pos + x])
            a = np.int32(out[y, x - bpp]) if x >= bpp else 0
            b = prev[x]
            if ftype == 1:
                v += a
            elif ftype == 2:
                v += b
            elif ftype == 3:
                v += (a + b) >> 1
            elif ftype == 4:
                c = prev[x - bpp] if x >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    v += a
                elif pb <= pc:
                    v += b
                else:
                    v += c
            elif ftype != 0:
                return out, -1
            out[y, x] = v & 0xFF
        for x in range(stride):
            prev[x] = out[y, x]
        pos += stride
    return out, 0


def decode_png(data: bytes) -> np.ndarray:
    data = bytes(data)
    if not data.startswith(SIGNATURE):
        raise PngError("not a PNG file")
    pos = len(SIGNATURE)
    header = None
    idat = []
    while True:
        if pos + 8 > len(data):
            raise PngError("truncated chunk header")
        length, tag = struct.unpack(">I4s", data[pos:pos + 8])
        payload = data[pos + 8:pos + 8 + length]
        crc_bytes = data[pos + 8 + length:pos + 12 + length]
        if len(payload) != length or len(crc_bytes) != 4:
            raise PngError(f"truncated {tag!r} chunk")
        if zlib.crc32(tag + payload) & 0xFFFFFFFF != struct.unpack(">I", crc_bytes)[0]:
            raise PngError(f"CRC mismatch in {tag!r} chunk")
        pos += 12 + length
        if tag == b"IHDR":
            header = struct.unpack(">IIBBBBB", payload)
        elif tag == b"IDAT":
            idat.append(payload)
        elif tag == b"IEND":
            break
        elif tag != b"PLTE" and not tag[0] & 0x20:
            raise UnsupportedPngFeature(f"unknown critical chunk {tag!r}")
    if header is None:
        raise PngError("missing IHDR")
    w, h, depth, ctype, comp, filt, interlace = header
    if interlace:
        raise UnsupportedPngFeature("interlaced PNG")
    if depth != 8:
        raise UnsupportedPngFeature(f"bit depth {depth}")
    if ctype not in _CHANNELS:
        raise UnsupportedPngFeature(f"colour type {ctype}")
    if comp or filt:
        raise PngError("unknown compression or filter method")
    ch = _CHANNELS[ctype]
    stride = w * ch
    try:
        raw = np.frombuffer(zlib.decompress(b"".join(idat)), dtype=np.uint8)
    except zlib.error as exc:
        raise PngError(f"bad image data: {exc}") from exc
    if len(raw) < h * (stride + 1):
        raise PngError("image data too short")
    out, status = _unfilter(raw, h, stride, ch)
    if status:
        raise PngError("unknown scanline filter")
    img = out.reshape(h, w, ch)
    if ch <= 2:
        return img[:, :, 0].copy()
    return img[:, :, :3].copy()


def read_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def write_png(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))
