"""Band detection: binarize the filtered image, label connected components,
and measure per-band area, center of mass, bounding box and intensity.

Labels are assigned in raster-scan order of each component's first pixel,
so identical masks always produce identical label maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage as ndi

from .raster import GrayImage

__all__ = ["BandMask", "Band", "binarize", "connected_components", "measure_bands"]

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)
_STRUCTURE_8 = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class BandMask:
    """Boolean foreground mask, dimensions matching its source image."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.bits, dtype=bool))
        if b.ndim != 2:
            raise ValueError("mask must be 2-D")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class Band:
    """One detected connected component and its measurements.

    centroid is intensity-weighted (center of mass), sub-pixel, in (x, y)
    order; bbox is the inclusive (x_min, y_min, x_max, y_max) box.
    """

    label: int
    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    mean_intensity: float
    total_intensity: float


def binarize(img: GrayImage, epsilon: float = 0.0) -> BandMask:
    """Foreground = strictly above epsilon.  The filtered pipeline output has
    an exactly-zero background, so epsilon 0 keeps every band pixel."""
    return BandMask(img.pixels > epsilon)


def connected_components(mask: BandMask, connectivity: int = 8) -> np.ndarray:
    """Label maximal connected foreground regions 1..N, background 0.

    Labels follow raster-scan order of each component's first pixel; the
    scipy labeling is relabeled to guarantee that regardless of its
    internal order.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    labels, count = ndi.label(mask.bits, structure=structure)
    if count == 0:
        return labels.astype(np.int32)
    flat = labels.ravel()
    order = np.full(count + 1, -1, dtype=np.int64)
    present, first = np.unique(flat, return_index=True)
    for lab, idx in zip(present, first):
        if lab > 0:
            order[lab] = idx
    remap = np.zeros(count + 1, dtype=np.int32)
    for new, old in enumerate(np.argsort(order[1:]) + 1, start=1):
        remap[old] = new
    return remap[labels]


def measure_bands(labels: np.ndarray, img: GrayImage, min_area: int = 0) -> list[Band]:
    """Measure every labeled component with at least min_area pixels.

    area is the raw pixel count; centroid weights each pixel by its image
    value.  Components below min_area are dropped as residual noise.
    Output is sorted by label id (labels keep their original numbers, so the
    sequence may have gaps after filtering).
    """
    labels = np.asarray(labels)
    if labels.shape != img.pixels.shape:
        raise ValueError("label map and image dimensions differ")
    count = int(labels.max(initial=0))
    if count == 0:
        return []

    flat = labels.ravel()
    v = img.pixels.ravel()
    h, w = labels.shape
    ys, xs = np.divmod(np.arange(flat.size), w)

    areas = np.bincount(flat, minlength=count + 1)
    totals = np.bincount(flat, weights=v, minlength=count + 1)
    wx = np.bincount(flat, weights=v * xs, minlength=count + 1)
    wy = np.bincount(flat, weights=v * ys, minlength=count + 1)
    slices = ndi.find_objects(labels)

    bands: list[Band] = []
    for lab in range(1, count + 1):
        area = int(areas[lab])
        if area < min_area or area == 0:
            continue
        total = float(totals[lab])
        if total > 0.0:
            cx, cy = wx[lab] / total, wy[lab] / total
        else:
            # all-zero component: fall back to the geometric centroid
            inside = flat == lab
            cx, cy = float(xs[inside].mean()), float(ys[inside].mean())
        sl = slices[lab - 1]
        bbox = (sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1)
        bands.append(
            Band(
                label=lab,
                area=area,
                centroid=(float(cx), float(cy)),
                bbox=bbox,
                mean_intensity=total / area,
                total_intensity=total,
            )
        )
    return bands
