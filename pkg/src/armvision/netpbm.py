"""Binary PGM (P5) and PPM (P6) reading and writing, maxval 255 only.

Writers emit ``P5\\n<w> <h>\\n255\\n`` followed by raw bytes, so a write/read
cycle reproduces the file byte for byte. Readers accept comments and any
whitespace between header fields, then exactly one whitespace byte before
the raster.
"""
from __future__ import annotations

import os
from typing import BinaryIO, Tuple, Union

import numpy as np

PathLike = Union[str, "os.PathLike[str]"]

_WHITESPACE = b" \t\n\r\x0b\x0c"


class NetpbmError(ValueError):
    """Malformed or unsupported PGM/PPM data."""


def _header_tokens(data: bytes) -> Tuple[bytes, int, int, int, int]:
    pos = 0
    tokens = []
    while len(tokens) < 4:
        # skip whitespace and comments
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch in (b"#",):
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch and ch in _WHITESPACE:
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise NetpbmError("truncated header")
        tokens.append(data[start:pos])
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise NetpbmError("missing whitespace after maxval")
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise NetpbmError(f"non-integer header field: {exc}") from None
    return magic, width, height, maxval, pos + 1


def decode(data: bytes) -> np.ndarray:
    """Decode P5/P6 bytes to ``(h, w)`` or ``(h, w, 3)`` uint8."""
    magic, width, height, maxval, offset = _header_tokens(data)
    if magic not in (b"P5", b"P6"):
        raise NetpbmError(f"unsupported magic {magic!r}")
    if width < 1 or height < 1:
        raise NetpbmError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise NetpbmError(f"only maxval 255 is supported, got {maxval}")
    channels = 3 if magic == b"P6" else 1
    n = width * height * channels
    raster = data[offset:offset + n]
    if len(raster) != n:
        raise NetpbmError(f"expected {n} raster bytes, found {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8).copy()
    return arr.reshape((height, width, 3) if channels == 3 else (height, width))


def encode(arr: np.ndarray) -> bytes:
    """Encode a uint8 array as P5 (2-D) or P6 (3-D, 3 channels). Booleans map to {0, 255}."""
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = np.where(arr, 255, 0).astype(np.uint8)
    if arr.dtype != np.uint8:
        raise NetpbmError(f"expected uint8 pixels, got {arr.dtype}")
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise NetpbmError(f"cannot encode array of shape {arr.shape}")
    h, w = arr.shape[:2]
    return magic + b"\n" + f"{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(arr).tobytes()


def read(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode(fh.read())


def write(path: PathLike, arr: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(arr))


def write_stream(fh: BinaryIO, arr: np.ndarray) -> None:
    fh.write(encode(arr))
