"""Minimal 8-bit PGM reader (P2/P5) and writer (P5)."""
from __future__ import annotations

import os
import re

import numpy as np

from .errors import MFSRError
from .imaging import Image


class PGMError(MFSRError):
    """Base for PGM decoding failures."""


class PGMMissingFileError(PGMError, FileNotFoundError):
    pass


class PGMHeaderError(PGMError, ValueError):
    pass


class PGMUnsupportedError(PGMError, ValueError):
    pass


class PGMTruncatedError(PGMError, ValueError):
    pass


_TOKEN = re.compile(rb"#[^\n\r]*|(\S+)")


def _header_tokens(buf: bytes, count: int):
    """First ``count`` whitespace-separated tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens = []
    pos = 0
    for match in _TOKEN.finditer(buf):
        if match.group(1) is None:
            continue
        tokens.append(match.group(1))
        pos = match.end()
        if len(tokens) == count:
            return tokens, pos
    raise PGMHeaderError("incomplete PGM header")


def decode_pgm(buf: bytes) -> Image:
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"not a graymap: magic number {magic!r}")
    (_, w, h, maxval), pos = _header_tokens(buf, 4)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PGMHeaderError("non-integer width, height or maxval") from None
    if width < 1 or height < 1:
        raise PGMHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PGMUnsupportedError(f"only maxval 255 is supported, got {maxval}")
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = buf[pos + 1 : pos + 1 + n]
        if len(raster) < n:
            raise PGMTruncatedError(f"expected {n} raster bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", buf[pos:]).split()
        if len(body) < n:
            raise PGMTruncatedError(f"expected {n} samples, found {len(body)}")
        try:
            values = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise PGMHeaderError("non-integer sample in P2 raster") from None
        if values.min() < 0 or values.max() > maxval:
            raise PGMHeaderError("sample outside [0, maxval]")
    return Image(values.astype(np.float64).reshape(height, width))


def load_pgm(path) -> Image:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except FileNotFoundError:
        raise PGMMissingFileError(f"no such file: {path}") from None
    return decode_pgm(buf)


def quantize(img: Image) -> np.ndarray:
    """Clamp to [0, 255] and round half up to ``uint8``."""
    return np.floor(np.clip(img.data, 0.0, 255.0) + 0.5).astype(np.uint8)


def encode_pgm(img: Image) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + quantize(img).tobytes()


def save_pgm(img: Image, path) -> None:
    data = encode_pgm(img)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
