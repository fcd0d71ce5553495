"""Grayscale morphology and rank filtering.

All operators use flat structuring elements, edge-replicated borders, and
are exact: results are bit-identical to the naive sliding-window
definitions (min/max/median over the footprint at every pixel).  The heavy
lifting is delegated to scipy.ndimage, which satisfies that contract for
the symmetric footprints used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage as ndi

from .errors import BadWindowError
from .raster import GrayImage

__all__ = [
    "StructuringElement",
    "disk",
    "square",
    "erode",
    "dilate",
    "open_image",
    "close_image",
    "top_hat",
    "bottom_hat",
    "median_filter",
]


@dataclass(frozen=True)
class StructuringElement:
    """Flat structuring element: a named shape plus its boolean footprint.

    The footprint is a (2r+1)-sided square array centered on the origin;
    ``offsets`` lists the covered (dx, dy) positions.  Disk(r) covers
    dx^2 + dy^2 <= r^2; Square(s) covers the full s x s block (s odd).
    Both are symmetric about the origin and always contain it.
    """

    shape: str
    size: int
    # shape + size fully determine the footprint, so it stays out of
    # equality and hashing (ndarray comparison would break both anyway)
    footprint: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        fp = np.asarray(self.footprint, dtype=bool)
        if fp.ndim != 2 or fp.shape[0] != fp.shape[1] or fp.shape[0] % 2 == 0:
            raise ValueError("footprint must be square with odd side")
        c = fp.shape[0] // 2
        if not fp[c, c]:
            raise ValueError("footprint must contain the origin")
        fp.setflags(write=False)
        object.__setattr__(self, "footprint", fp)

    @property
    def radius(self) -> int:
        return self.footprint.shape[0] // 2

    @property
    def offsets(self) -> list[tuple[int, int]]:
        """Covered (dx, dy) offsets, raster order."""
        r = self.radius
        ys, xs = np.nonzero(self.footprint)
        return [(int(x - r), int(y - r)) for y, x in zip(ys, xs)]

    def spec_string(self) -> str:
        return f"{self.shape}:{self.size}"

    @staticmethod
    def from_spec_string(text: str) -> "StructuringElement":
        try:
            shape, size = text.strip().split(":")
            size = int(size)
        except ValueError as e:
            raise ValueError(f"bad structuring element {text!r}, expected shape:size") from e
        if shape == "disk":
            return disk(size)
        if shape == "square":
            return square(size)
        raise ValueError(f"unknown structuring element shape {shape!r}")


def disk(radius: int) -> StructuringElement:
    """Flat disk of the given pixel radius."""
    if radius < 0:
        raise ValueError("disk radius must be >= 0")
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return StructuringElement("disk", radius, xx * xx + yy * yy <= radius * radius)


def square(side: int) -> StructuringElement:
    """Flat side x side square, side odd."""
    if side < 1 or side % 2 == 0:
        raise ValueError("square side must be odd and >= 1")
    return StructuringElement("square", side, np.ones((side, side), dtype=bool))


def _apply(img: GrayImage, out: np.ndarray) -> GrayImage:
    return img.with_pixels(out)


def erode(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Windowed minimum over the SE footprint, edge-replicated borders."""
    return _apply(img, ndi.grey_erosion(img.pixels, footprint=se.footprint, mode="nearest"))


def dilate(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Windowed maximum over the SE footprint, edge-replicated borders."""
    return _apply(img, ndi.grey_dilation(img.pixels, footprint=se.footprint, mode="nearest"))


def open_image(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Erosion then dilation; removes bright structures the SE cannot fit inside."""
    return dilate(erode(img, se), se)


def close_image(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Dilation then erosion; fills dark structures the SE cannot fit inside."""
    return erode(dilate(img, se), se)


def top_hat(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Image minus its opening: bright features smaller than the SE."""
    return _apply(img, img.pixels - open_image(img, se).pixels)


def bottom_hat(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Closing minus the image: dark features smaller than the SE."""
    return _apply(img, close_image(img, se).pixels - img.pixels)


def median_filter(img: GrayImage, window: int) -> GrayImage:
    """window x window median, edge-replicated borders; window odd, >= 3."""
    if window < 3 or window % 2 == 0:
        raise BadWindowError(f"median window must be odd and >= 3, got {window}")
    return _apply(img, ndi.median_filter(img.pixels, size=window, mode="nearest"))
