"""Grayscale image container and file I/O.

Pixels are stored as non-negative float64 so later arithmetic (shift,
top-hat differences, enhancement) runs at full precision; quantization to
integers happens only when an image is written to disk (round half up,
clamped to the bit-depth range).

Supported containers: binary portable graymap (P5, maxval up to 65535 with
big-endian 16-bit samples) and 8/16-bit single-channel grayscale PNG.
Color, paletted, and alpha inputs are rejected, never converted.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CorruptDataError, UnsupportedFormatError

__all__ = [
    "GrayImage",
    "load_image",
    "load_image_bytes",
    "save_image",
    "image_png_bytes",
    "min_max",
    "save_overlay",
]

_PGM_MAGIC = b"P5"
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class GrayImage:
    """2-D non-negative intensity matrix with bit-depth metadata.

    ``pixels`` is a read-only float64 array of shape (height, width),
    addressed as pixels[y, x].  ``bit_depth`` is 8 or 16 and defines
    ``max_range`` = 2**bit_depth - 1; every value lies in [0, max_range].
    Instances are immutable and safe to share across threads.
    """

    pixels: np.ndarray = field(repr=False)
    bit_depth: int = 8

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-D matrix, got shape {arr.shape}")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("pixels must be finite")
        top = float(2 ** self.bit_depth - 1)
        if arr.min() < 0.0 or arr.max() > top:
            raise ValueError(f"pixel values must lie in [0, {top}]")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def max_range(self) -> float:
        return float(2 ** self.bit_depth - 1)

    def with_pixels(self, pixels: np.ndarray) -> "GrayImage":
        """Same bit depth, new pixel matrix."""
        return GrayImage(pixels, self.bit_depth)

    def quantized(self) -> np.ndarray:
        """Pixels rounded half-up and clamped to the storage integer range."""
        q = np.floor(self.pixels + 0.5)
        np.clip(q, 0.0, self.max_range, out=q)
        return q.astype(np.uint8 if self.bit_depth == 8 else np.uint16)


def min_max(img: GrayImage) -> tuple[float, float]:
    """Exact intensity extrema over all pixels."""
    return float(img.pixels.min()), float(img.pixels.max())


# ---------------------------------------------------------------------------
# loading


def load_image(path: str | Path) -> GrayImage:
    """Load an 8- or 16-bit grayscale raster (P5 PGM or grayscale PNG).

    Raises FileNotFoundError, UnsupportedFormatError (color/paletted/unknown
    container) or CorruptDataError (recognized but malformed).
    """
    data = Path(path).read_bytes()
    return load_image_bytes(data)


def load_image_bytes(data: bytes) -> GrayImage:
    """Decode raster bytes; dispatches on the container magic."""
    if data[:2] == _PGM_MAGIC:
        return _decode_pgm(data)
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return _decode_png(data)
    raise UnsupportedFormatError("unknown container (expected P5 PGM or PNG)")


def _decode_pgm(data: bytes) -> GrayImage:
    # header: "P5" <ws> width <ws> height <ws> maxval <single ws> raster
    # '#' starts a comment running to end of line
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise CorruptDataError("PGM header comment never ends")
            pos = eol + 1
            continue
        m = re.match(rb"\d+", data[pos:])
        if not m:
            raise CorruptDataError("PGM header is malformed")
        fields.append(int(m.group()))
        pos += m.end()
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptDataError("PGM header is malformed")
    pos += 1

    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptDataError(f"PGM dimensions {width}x{height} invalid")
    if not 1 <= maxval <= 65535:
        raise CorruptDataError(f"PGM maxval {maxval} out of range")
    depth = 8 if maxval <= 255 else 16
    dtype = np.dtype(">u1") if depth == 8 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise CorruptDataError(f"PGM raster truncated: {len(raster)} of {expected} bytes")
    arr = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return GrayImage(arr.astype(np.float64), depth)


def _decode_png(data: bytes) -> GrayImage:
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except Exception as e:  # magic already matched, so any decode failure
        raise CorruptDataError(f"PNG decode failed: {e}") from e  # is corruption
    mode = im.mode
    if mode == "L":
        depth = 8
    elif mode in ("I;16", "I;16B", "I;16L", "I;16N", "I"):
        depth = 16
    else:
        raise UnsupportedFormatError(f"PNG mode {mode!r} is not plain 8/16-bit grayscale")
    arr = np.asarray(im, dtype=np.float64)
    if arr.ndim != 2:
        raise UnsupportedFormatError(f"PNG mode {mode!r} decoded to non-2D data")
    return GrayImage(arr, depth)


# ---------------------------------------------------------------------------
# saving


def save_image(img: GrayImage, path: str | Path) -> None:
    """Write an image so that loading it back reproduces the quantized
    pixels exactly at the same bit depth.  Format chosen by extension:
    .pgm/.pnm for P5, anything else is PNG.
    """
    path = Path(path)
    q = img.quantized()
    if path.suffix.lower() in (".pgm", ".pnm"):
        maxval = 255 if img.bit_depth == 8 else 65535
        header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
        body = q.astype(">u1" if img.bit_depth == 8 else ">u2").tobytes()
        path.write_bytes(header + body)
    else:
        Image.fromarray(q).save(path, format="PNG")


def image_png_bytes(img: GrayImage, *, display_8bit: bool = False) -> bytes:
    """Encode as PNG in memory.

    With ``display_8bit`` a 16-bit image is rescaled to 8 bits for browser
    display; otherwise the native depth is preserved.
    """
    q = img.quantized()
    if display_8bit and img.bit_depth == 16:
        q = np.floor(q.astype(np.float64) * (255.0 / 65535.0) + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q).save(buf, format="PNG")
    return buf.getvalue()


def save_overlay(rgb: np.ndarray, path: str | Path) -> None:
    """Write an annotated overlay as 8-bit-per-channel color PNG."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError("overlay must be an (H, W, 3) uint8 array")
    Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")
