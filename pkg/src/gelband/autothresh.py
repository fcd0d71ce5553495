"""Automatic threshold selection from the standard-deviation profile.

The threshold level is derived in three steps: build a per-line standard
deviation profile of the image, place a cut on that profile between its
minimum and the smallest prominent peak, convert the cut into a weighting
value alpha, and map alpha onto the image's intensity range.  Applying the
threshold clamps every pixel from below, equalizing the background without
touching any pixel that already exceeds the level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstantImageError,
    DegenerateGeometryError,
    FlatProfileError,
    NoPeaksError,
)
from .raster import GrayImage, min_max

__all__ = [
    "Axis",
    "Source",
    "StdProfile",
    "ThresholdDecision",
    "std_profile",
    "find_profile_peaks",
    "profile_threshold",
    "compute_alpha",
    "compute_threshold_level",
    "apply_threshold",
]


class Axis(enum.Enum):
    """Which way the profile runs: one sigma per column, or one per row."""

    ACROSS_COLUMNS = "columns"
    ACROSS_ROWS = "rows"


class Source(enum.Enum):
    AUTOMATIC = "automatic"
    USER_OVERRIDE = "user_override"


@dataclass(frozen=True)
class StdProfile:
    """Per-line population standard deviations with their extrema."""

    axis: Axis
    values: np.ndarray = field(repr=False)
    sigma_min: float = field(init=False)
    sigma_max: float = field(init=False)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 1 or v.size == 0:
            raise ValueError("profile values must be a non-empty 1-D sequence")
        if v.min() < 0.0:
            raise ValueError("standard deviations cannot be negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sigma_min", float(v.min()))
        object.__setattr__(self, "sigma_max", float(v.max()))


@dataclass(frozen=True)
class ThresholdDecision:
    """Audit record of one threshold computation.

    th_level_std is the cut placed on the profile (sigma units), alpha the
    derived weighting in (0, 1), th_level the resulting intensity cut.
    """

    th_level_std: float
    alpha: float
    th_level: float
    source: Source = Source.AUTOMATIC


def std_profile(img: GrayImage, axis: Axis = Axis.ACROSS_COLUMNS) -> StdProfile:
    """Population sigma of each column (or row) of the image.

    Raises DegenerateGeometryError when the profiled lines have fewer than
    two samples each (a 1-pixel-thick image).
    """
    if axis is Axis.ACROSS_COLUMNS:
        if img.height < 2:
            raise DegenerateGeometryError("profiling columns needs image height >= 2")
        values = img.pixels.std(axis=0)
    else:
        if img.width < 2:
            raise DegenerateGeometryError("profiling rows needs image width >= 2")
        values = img.pixels.std(axis=1)
    return StdProfile(axis, values)


def find_profile_peaks(values: np.ndarray) -> list[tuple[int, float, float]]:
    """Local maxima of a 1-D sequence as (index, value, prominence).

    A plateau counts once, at its leftmost index, and only when the values
    drop strictly on both sides; endpoints are never peaks.  Prominence is
    the peak value minus the higher of the two interval minima, where each
    interval runs until the first strictly higher value or the sequence end.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    peaks: list[tuple[int, float, float]] = []
    i = 1
    while i < n - 1:
        if v[i] > v[i - 1]:
            j = i
            while j + 1 < n and v[j + 1] == v[i]:
                j += 1
            if j < n - 1 and v[j + 1] < v[i]:
                peaks.append((i, float(v[i]), _prominence(v, i, j)))
            i = j + 1
        else:
            i += 1
    return peaks


def _prominence(v: np.ndarray, left_edge: int, right_edge: int) -> float:
    val = v[left_edge]
    left_min = val
    k = left_edge - 1
    while k >= 0 and v[k] <= val:
        if v[k] < left_min:
            left_min = v[k]
        k -= 1
    right_min = val
    k = right_edge + 1
    while k < v.size and v[k] <= val:
        if v[k] < right_min:
            right_min = v[k]
        k += 1
    return float(val - max(left_min, right_min))


def profile_threshold(
    profile: StdProfile,
    prominence_frac: float = 0.05,
    bracket_position: float = 0.5,
) -> float:
    """Cut level on the profile, between sigma_min and the smallest prominent peak.

    A peak qualifies when its prominence is at least
    prominence_frac * (sigma_max - sigma_min); the cut sits at
    bracket_position of the way from sigma_min up to the smallest
    qualifying peak value (0.5 = midpoint).

    Raises FlatProfileError on a constant profile and NoPeaksError when no
    peak qualifies (callers should fall back to a user-supplied alpha).
    """
    if not 0.0 <= bracket_position <= 1.0:
        raise ValueError("bracket_position must lie in [0, 1]")
    if prominence_frac < 0.0:
        raise ValueError("prominence_frac must be >= 0")
    span = profile.sigma_max - profile.sigma_min
    if span <= 0.0:
        raise FlatProfileError("profile has no dynamic range")
    cut = prominence_frac * span
    qualifying = [val for _, val, prom in find_profile_peaks(profile.values) if prom >= cut]
    if not qualifying:
        raise NoPeaksError(
            "no profile peak passes the prominence test; set an alpha override"
        )
    p_min = min(qualifying)
    return profile.sigma_min + bracket_position * (p_min - profile.sigma_min)


def compute_alpha(profile: StdProfile, th_level_std: float) -> float:
    """Normalized position of the profile cut inside [sigma_min, sigma_max]."""
    span = profile.sigma_max - profile.sigma_min
    if span <= 0.0:
        raise FlatProfileError("profile has no dynamic range")
    if not profile.sigma_min <= th_level_std <= profile.sigma_max:
        raise ValueError(
            f"th_level_std {th_level_std} outside profile range "
            f"[{profile.sigma_min}, {profile.sigma_max}]"
        )
    return (th_level_std - profile.sigma_min) / span


def compute_threshold_level(img: GrayImage, alpha: float) -> float:
    """Map alpha onto the image's intensity range: alpha*(max-min) + min."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    lo, hi = min_max(img)
    if hi <= lo:
        raise ConstantImageError("image has no intensity range; threshold undefined")
    return alpha * (hi - lo) + lo


def apply_threshold(img: GrayImage, th_level: float) -> GrayImage:
    """Clamp every pixel from below: out = max(pixel, th_level).

    Pixels above the level are untouched, so thresholding never changes
    the size of anything brighter than the background.
    """
    return img.with_pixels(np.maximum(img.pixels, float(th_level)))
