"""Deterministic synthetic gel images with exact ground truth.

Generates lane-and-band test images: a directional gradient background,
anisotropic Gaussian bands laid out on a per-lane grid with seeded jitter,
an optional exponential smear tail on one lane, and salt-and-pepper
impulses.  Everything is a pure function of the spec; the pseudo-random
source is numpy's PCG64 stream seeded from spec.seed, with a frozen draw
order (per-band jitter in lane-major order, then two full-frame uniforms
for the impulse mask), so the same spec always yields the same image down
to the last bit.

Pixels are quantized to integers before the image is returned, which makes
an in-memory gel identical to its saved-and-reloaded copy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpecOverflowError
from .raster import GrayImage

__all__ = [
    "SyntheticSpec",
    "BandTruth",
    "GroundTruth",
    "band_layout",
    "background_field",
    "clean_field",
    "synth_gel",
    "impulse_noise_sigma",
    "write_truth",
    "read_truth",
]

# tail height relative to band amplitude where a smear is requested;
# kept below 0.5 so smears never touch half-max areas
_SMEAR_LEVEL = 0.25
_X_JITTER = 1.5
_Y_JITTER = 0.25


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic gel.

    bands_per_lane has one count per lane; band_amplitudes and band_sigmas
    list every band in lane-major order.  background is (gradient
    amplitude, direction in degrees); smear, when set, is (lane index,
    tail extent in pixels) and skews that lane's bands with an exponential
    tail.  Band positions are not listed: they derive from the seed.
    """

    seed: int
    width: int = 512
    height: int = 512
    lanes: int = 0
    bands_per_lane: tuple[int, ...] = ()
    band_amplitudes: tuple[float, ...] = ()
    band_sigmas: tuple[tuple[float, float], ...] = ()
    background: tuple[float, float] = (0.0, 0.0)
    salt_pepper_frac: float = 0.0
    smear: tuple[int, float] | None = None
    bit_depth: int = 8

    def __post_init__(self):
        object.__setattr__(self, "bands_per_lane", tuple(int(n) for n in self.bands_per_lane))
        object.__setattr__(self, "band_amplitudes", tuple(float(a) for a in self.band_amplitudes))
        object.__setattr__(
            self, "band_sigmas",
            tuple((float(sx), float(sy)) for sx, sy in self.band_sigmas),
        )
        object.__setattr__(self, "background",
                           (float(self.background[0]), float(self.background[1])))
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.lanes < 0 or len(self.bands_per_lane) != self.lanes:
            raise ValueError("bands_per_lane must list one count per lane")
        total = sum(self.bands_per_lane)
        if len(self.band_amplitudes) != total or len(self.band_sigmas) != total:
            raise ValueError("need one amplitude and one (sx, sy) per band")
        if any(a <= 0 for a in self.band_amplitudes):
            raise ValueError("band amplitudes must be positive")
        if any(sx <= 0 or sy <= 0 for sx, sy in self.band_sigmas):
            raise ValueError("band sigmas must be positive")
        if not 0.0 <= self.salt_pepper_frac <= 0.05:
            raise ValueError("salt_pepper_frac must lie in [0, 0.05]")
        if self.background[0] < 0:
            raise ValueError("background gradient amplitude must be >= 0")
        if self.smear is not None:
            lane, extent = self.smear
            if not 0 <= int(lane) < max(self.lanes, 1) or extent <= 0:
                raise ValueError("smear must name an existing lane with positive extent")
            object.__setattr__(self, "smear", (int(lane), float(extent)))
        if self.bit_depth not in (8, 16):
            raise ValueError("bit_depth must be 8 or 16")

    @property
    def max_range(self) -> float:
        return float(2 ** self.bit_depth - 1)


@dataclass(frozen=True)
class BandTruth:
    """One planted band: center, amplitude, and its noise-free pixel area
    at or above half the peak amplitude."""

    center: tuple[float, float]
    amplitude: float
    half_max_area: int


@dataclass(frozen=True)
class GroundTruth:
    bands: tuple[BandTruth, ...]


def _layout(spec: SyntheticSpec, rng: np.random.Generator) -> list[tuple[int, float, float]]:
    """(lane, xc, yc) per band, lane-major; consumes 2 draws per band.

    Lanes occupy the central half of the width, leaving side margins the
    way a physical gel does; bands sit on a per-lane slot grid with
    seeded jitter.
    """
    out = []
    y_lo, y_hi = 0.08 * spec.height, 0.95 * spec.height
    for lane in range(spec.lanes):
        n = spec.bands_per_lane[lane]
        lane_x = spec.width * (0.25 + 0.5 * (lane + 0.5) / spec.lanes)
        slot_h = (y_hi - y_lo) / n if n else 0.0
        for k in range(n):
            jx = rng.uniform(-_X_JITTER, _X_JITTER)
            jy = rng.uniform(-_Y_JITTER, _Y_JITTER)
            xc = lane_x + jx
            yc = y_lo + (k + 0.5) * slot_h + jy * slot_h
            out.append((lane, xc, yc))
    return out


def band_layout(spec: SyntheticSpec) -> list[tuple[int, float, float]]:
    """Deterministic (lane, xc, yc) placement for every band of the spec."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return _layout(spec, rng)


def _check_bounds(spec: SyntheticSpec, layout) -> None:
    for (lane, xc, yc), (sx, sy) in zip(layout, spec.band_sigmas):
        reach_y = 3.5 * sy
        if spec.smear is not None and spec.smear[0] == lane:
            reach_y = max(reach_y, 3.0 * spec.smear[1])
        if (xc - 3.5 * sx < 0 or xc + 3.5 * sx > spec.width - 1
                or yc - 3.5 * sy < 0 or yc + reach_y > spec.height - 1):
            raise SpecOverflowError(
                f"band at ({xc:.1f}, {yc:.1f}) sigma ({sx}, {sy}) exceeds "
                f"{spec.width}x{spec.height} bounds"
            )


def background_field(spec: SyntheticSpec) -> np.ndarray:
    """Planar gradient ramping from 0 to the given amplitude along the
    given direction (degrees, 0 = left-to-right)."""
    h, w = spec.height, spec.width
    amp, direction = spec.background
    if amp == 0.0:
        return np.zeros((h, w), dtype=np.float64)
    theta = math.radians(direction)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    proj = math.cos(theta) * xs[None, :] + math.sin(theta) * ys[:, None]
    lo, hi = proj.min(), proj.max()
    if hi <= lo:
        return np.zeros((h, w), dtype=np.float64)
    return amp * (proj - lo) / (hi - lo)


def _band_profiles(spec: SyntheticSpec, lane: int, xc: float, yc: float,
                   sx: float, sy: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-amplitude x and y profiles for one band (smear tail included)."""
    xs = np.arange(spec.width, dtype=np.float64)
    ys = np.arange(spec.height, dtype=np.float64)
    px = np.exp(-((xs - xc) ** 2) / (2.0 * sx * sx))
    py = np.exp(-((ys - yc) ** 2) / (2.0 * sy * sy))
    if spec.smear is not None and spec.smear[0] == lane:
        extent = spec.smear[1]
        below = ys > yc
        tail = np.zeros_like(py)
        tail[below] = _SMEAR_LEVEL * np.exp(-(ys[below] - yc) / extent)
        py = np.maximum(py, tail)
    return px, py


def clean_field(spec: SyntheticSpec) -> np.ndarray:
    """Noise-free continuous image: background plus every band, unclamped."""
    layout = band_layout(spec)
    _check_bounds(spec, layout)
    img = background_field(spec)
    for (lane, xc, yc), (sx, sy), amp in zip(layout, spec.band_sigmas, spec.band_amplitudes):
        px, py = _band_profiles(spec, lane, xc, yc, sx, sy)
        img = img + amp * np.outer(py, px)
    return img


def _ground_truth(spec: SyntheticSpec, layout) -> GroundTruth:
    bands = []
    for (lane, xc, yc), (sx, sy), amp in zip(layout, spec.band_sigmas, spec.band_amplitudes):
        px, py = _band_profiles(spec, lane, xc, yc, sx, sy)
        area = int(np.count_nonzero(np.outer(py, px) >= 0.5))
        bands.append(BandTruth(center=(xc, yc), amplitude=amp, half_max_area=area))
    return GroundTruth(bands=tuple(bands))


def synth_gel(spec: SyntheticSpec) -> tuple[GrayImage, GroundTruth]:
    """Render the spec into an integer-valued image plus its ground truth.

    Draw order is frozen: the per-band layout jitter first, then (only
    when salt_pepper_frac > 0) one uniform field selecting impulse sites
    and one deciding salt vs pepper.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    layout = _layout(spec, rng)
    _check_bounds(spec, layout)
    img = background_field(spec)
    for (lane, xc, yc), (sx, sy), amp in zip(layout, spec.band_sigmas, spec.band_amplitudes):
        px, py = _band_profiles(spec, lane, xc, yc, sx, sy)
        img = img + amp * np.outer(py, px)
    truth = _ground_truth(spec, layout)

    m = spec.max_range
    if spec.salt_pepper_frac > 0.0:
        sites = rng.random((spec.height, spec.width))
        flavor = rng.random((spec.height, spec.width))
        impulses = np.where(flavor < 0.5, m, 0.0)
        img = np.where(sites < spec.salt_pepper_frac, impulses, img)

    quantized = np.floor(np.clip(img, 0.0, m) + 0.5)
    return GrayImage(quantized, bit_depth=spec.bit_depth), truth


def impulse_noise_sigma(spec: SyntheticSpec) -> float:
    """Root-mean-square pixel deviation the impulse noise introduces.

    Averages, over the clamped noise-free image, the expected squared
    deviation of the salt-or-pepper replacement, times the impulse
    fraction: sqrt(frac * mean(0.5*(max_range - c)^2 + 0.5*c^2)).
    """
    if spec.salt_pepper_frac == 0.0:
        return 0.0
    c = np.clip(clean_field(spec), 0.0, spec.max_range)
    m = spec.max_range
    expected_sq = 0.5 * (m - c) ** 2 + 0.5 * c ** 2
    return float(math.sqrt(spec.salt_pepper_frac * float(expected_sq.mean())))


def _spec_to_dict(spec: SyntheticSpec) -> dict:
    return {
        "seed": spec.seed,
        "width": spec.width,
        "height": spec.height,
        "lanes": spec.lanes,
        "bands_per_lane": list(spec.bands_per_lane),
        "band_amplitudes": list(spec.band_amplitudes),
        "band_sigmas": [list(s) for s in spec.band_sigmas],
        "background": list(spec.background),
        "salt_pepper_frac": spec.salt_pepper_frac,
        "smear": None if spec.smear is None else list(spec.smear),
        "bit_depth": spec.bit_depth,
    }


def _spec_from_dict(d: dict) -> SyntheticSpec:
    return SyntheticSpec(
        seed=int(d["seed"]),
        width=int(d["width"]),
        height=int(d["height"]),
        lanes=int(d["lanes"]),
        bands_per_lane=tuple(d["bands_per_lane"]),
        band_amplitudes=tuple(d["band_amplitudes"]),
        band_sigmas=tuple((s[0], s[1]) for s in d["band_sigmas"]),
        background=(d["background"][0], d["background"][1]),
        salt_pepper_frac=float(d["salt_pepper_frac"]),
        smear=None if d.get("smear") is None else (d["smear"][0], d["smear"][1]),
        bit_depth=int(d.get("bit_depth", 8)),
    )


def write_truth(path: str | Path, spec: SyntheticSpec, truth: GroundTruth) -> None:
    """Ground-truth sidecar: the full spec plus every planted band."""
    doc = {
        "spec": _spec_to_dict(spec),
        "bands": [
            {
                "center": list(b.center),
                "amplitude": b.amplitude,
                "half_max_area": b.half_max_area,
            }
            for b in truth.bands
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_truth(path: str | Path) -> tuple[SyntheticSpec, GroundTruth]:
    doc = json.loads(Path(path).read_text())
    spec = _spec_from_dict(doc["spec"])
    bands = tuple(
        BandTruth(
            center=(b["center"][0], b["center"][1]),
            amplitude=float(b["amplitude"]),
            half_max_area=int(b["half_max_area"]),
        )
        for b in doc["bands"]
    )
    return spec, GroundTruth(bands=bands)
