"""Stage orchestration: optional enhancement, automatic threshold, shift,
top-hat + median filtering, and band detection, with every intermediate
image kept for inspection.

The whole chain is deterministic; running the same image with the same
configuration twice produces bit-identical stage images and band lists.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import morph
from .autothresh import (
    Axis,
    Source,
    ThresholdDecision,
    apply_threshold,
    compute_alpha,
    compute_threshold_level,
    profile_threshold,
    std_profile,
)
from .bands import Band, binarize, connected_components, measure_bands
from .errors import (
    BadWindowError,
    ConstantImageError,
    GelAnalysisError,
    NegativeResultError,
)
from .morph import StructuringElement, disk
from .raster import GrayImage, min_max

__all__ = [
    "PipelineConfig",
    "PipelineResult",
    "shift",
    "denoise",
    "enhance",
    "run_pipeline",
    "config_to_text",
    "config_from_text",
    "config_to_dict",
    "apply_config_deltas",
]


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the analysis chain, with the stock defaults.

    axis selects the profiling direction; prominence_frac and
    bracket_position control where the cut lands on the sigma profile;
    alpha_override, when set, bypasses profile-based selection entirely.
    se and median_window drive the post-shift filter; enhance/enhance_se
    the optional pre-stage.  roi, when set, crops (x, y, w, h) out of the
    input before anything else runs.
    """

    axis: Axis = Axis.ACROSS_COLUMNS
    prominence_frac: float = 0.05
    bracket_position: float = 0.5
    alpha_override: float | None = None
    se: StructuringElement = field(default_factory=lambda: disk(10))
    median_window: int = 5
    enhance: bool = False
    enhance_se: StructuringElement = field(default_factory=lambda: disk(10))
    binarize_epsilon: float = 0.0
    min_band_area: int = 20
    roi: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if self.prominence_frac < 0.0:
            raise ValueError("prominence_frac must be >= 0")
        if not 0.0 <= self.bracket_position <= 1.0:
            raise ValueError("bracket_position must lie in [0, 1]")
        if self.alpha_override is not None and not 0.0 < self.alpha_override < 1.0:
            raise ValueError("alpha_override must lie strictly between 0 and 1")
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise BadWindowError(f"median window must be odd and >= 3, got {self.median_window}")
        if self.binarize_epsilon < 0.0:
            raise ValueError("binarize_epsilon must be >= 0")
        if self.min_band_area < 0:
            raise ValueError("min_band_area must be >= 0")
        if self.roi is not None:
            x, y, w, h = self.roi
            if x < 0 or y < 0 or w < 1 or h < 1:
                raise ValueError("roi must be x >= 0, y >= 0, w >= 1, h >= 1")
            object.__setattr__(self, "roi", (int(x), int(y), int(w), int(h)))


@dataclass(frozen=True)
class PipelineResult:
    """Snapshots of every stage plus the decision, bands, and timings.

    stages holds input, enhanced (only when enabled), thresholded,
    shifted, and filtered images, all with identical dimensions.
    timings maps stage name to wall-clock seconds and is the one field
    excluded from determinism guarantees.
    """

    stages: dict[str, GrayImage]
    decision: ThresholdDecision
    bands: list[Band]
    timings: dict[str, float]


def shift(img: GrayImage, th_level: float) -> GrayImage:
    """Subtract the threshold level so the equalized background lands at 0.

    Expects the thresholded image (every pixel >= th_level); a pixel below
    the level means the caller ran stages out of order.
    """
    out = img.pixels - float(th_level)
    if out.size and float(out.min()) < 0.0:
        raise NegativeResultError(
            f"pixel below threshold level {th_level}; shift must follow apply_threshold"
        )
    return img.with_pixels(out)


def denoise(img: GrayImage, cfg: PipelineConfig) -> GrayImage:
    """Top-hat then median, applied exactly once.

    The top-hat flattens the residual background and smears wider than the
    structuring element; the median kills leftover impulse pixels.
    Repeating the chain would start eating into band sizes, so it never is.
    """
    return morph.median_filter(morph.top_hat(img, cfg.se), cfg.median_window)


def enhance(img: GrayImage, se: StructuringElement) -> GrayImage:
    """Boost bright-vs-dark contrast: img + top_hat - bottom_hat, clamped.

    An isolated bright impulse doubles in amplitude; broad structure the
    structuring element can contain is untouched.
    """
    top = morph.top_hat(img, se)
    bot = morph.bottom_hat(img, se)
    out = np.clip(img.pixels + top.pixels - bot.pixels, 0.0, img.max_range)
    return img.with_pixels(out)


def _crop(img: GrayImage, roi: tuple[int, int, int, int] | None) -> GrayImage:
    if roi is None:
        return img
    x, y, w, h = roi
    if x + w > img.width or y + h > img.height:
        raise ValueError(
            f"roi {roi} exceeds image bounds {img.width}x{img.height}"
        )
    return img.with_pixels(img.pixels[y : y + h, x : x + w])


def run_pipeline(img: GrayImage, cfg: PipelineConfig) -> PipelineResult:
    """Run the full chain and keep every intermediate.

    Errors raised inside a stage propagate with the stage name attached;
    a missing-peaks failure suggests setting alpha_override.
    """
    stages: dict[str, GrayImage] = {}
    timings: dict[str, float] = {}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        try:
            out = fn(*args)
        except GelAnalysisError as exc:
            if exc.stage is None:
                exc.stage = name
            raise
        timings[name] = time.perf_counter() - t0
        return out

    work = timed("input", _crop, img, cfg.roi)
    stages["input"] = work

    if cfg.enhance:
        work = timed("enhanced", enhance, work, cfg.enhance_se)
        stages["enhanced"] = work

    decision_box: list[ThresholdDecision] = []

    def threshold_stage(pre: GrayImage) -> GrayImage:
        lo, hi = min_max(pre)
        if hi <= lo:
            raise ConstantImageError("image has no intensity range; threshold undefined")
        profile = std_profile(pre, cfg.axis)
        if cfg.alpha_override is None:
            th_std = profile_threshold(profile, cfg.prominence_frac, cfg.bracket_position)
            alpha = compute_alpha(profile, th_std)
            source = Source.AUTOMATIC
        else:
            alpha = float(cfg.alpha_override)
            # record the profile cut this alpha corresponds to, for audit
            th_std = profile.sigma_min + alpha * (profile.sigma_max - profile.sigma_min)
            source = Source.USER_OVERRIDE
        th_level = compute_threshold_level(pre, alpha)
        decision_box.append(ThresholdDecision(th_std, alpha, th_level, source))
        return apply_threshold(pre, th_level)

    work = timed("thresholded", threshold_stage, work)
    stages["thresholded"] = work
    decision = decision_box[0]

    work = timed("shifted", shift, work, decision.th_level)
    stages["shifted"] = work

    work = timed("filtered", denoise, work, cfg)
    stages["filtered"] = work

    def detect(filtered: GrayImage) -> list[Band]:
        mask = binarize(filtered, cfg.binarize_epsilon)
        labels = connected_components(mask, connectivity=8)
        return measure_bands(labels, filtered, cfg.min_band_area)

    bands = timed("detect", detect, work)
    return PipelineResult(stages=stages, decision=decision, bands=bands, timings=timings)


# --- configuration text round-trip -------------------------------------
#
# One "key = value" line per field.  Blank lines and '#' comments are
# ignored; omitted keys keep their defaults.

def _axis_text(a: Axis) -> str:
    return a.value


def _parse_axis(raw: str) -> Axis:
    for a in Axis:
        if a.value == raw:
            return a
    raise ValueError(f"axis must be 'columns' or 'rows', got {raw!r}")


def _parse_bool(raw: str) -> bool:
    if raw in ("true", "false"):
        return raw == "true"
    raise ValueError(f"expected true/false, got {raw!r}")


def _parse_optional_float(raw: str) -> float | None:
    return None if raw == "none" else float(raw)


def _parse_roi(raw: str) -> tuple[int, int, int, int] | None:
    if raw == "none":
        return None
    parts = raw.split(",")
    if len(parts) != 4:
        raise ValueError(f"roi must be 'x,y,w,h' or 'none', got {raw!r}")
    return tuple(int(p) for p in parts)


def _roi_text(roi) -> str:
    return "none" if roi is None else ",".join(str(v) for v in roi)


_TO_TEXT = {
    "axis": _axis_text,
    "alpha_override": lambda v: "none" if v is None else repr(v),
    "se": lambda v: v.spec_string(),
    "enhance_se": lambda v: v.spec_string(),
    "enhance": lambda v: "true" if v else "false",
    "roi": _roi_text,
    "prominence_frac": repr,
    "bracket_position": repr,
    "binarize_epsilon": repr,
    "median_window": str,
    "min_band_area": str,
}

_FROM_TEXT = {
    "axis": _parse_axis,
    "alpha_override": _parse_optional_float,
    "se": StructuringElement.from_spec_string,
    "enhance_se": StructuringElement.from_spec_string,
    "enhance": _parse_bool,
    "roi": _parse_roi,
    "prominence_frac": float,
    "bracket_position": float,
    "binarize_epsilon": float,
    "median_window": int,
    "min_band_area": int,
}


def config_to_text(cfg: PipelineConfig) -> str:
    """Serialize a config as editable key = value lines, one per field."""
    lines = [f"{f.name} = {_TO_TEXT[f.name](getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def config_from_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse key = value lines back into a config.

    Starts from base (or all defaults) and overrides each key present.
    Unknown keys and malformed values raise ValueError.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FROM_TEXT:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _FROM_TEXT[key](raw)
    base = base if base is not None else PipelineConfig()
    return replace(base, **values)


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Config as plain JSON-ready values (enums and SEs become strings).

    apply_config_deltas accepts this dict unchanged, so
    apply_config_deltas(PipelineConfig(), config_to_dict(cfg)) == cfg.
    """
    return {
        "axis": cfg.axis.value,
        "prominence_frac": cfg.prominence_frac,
        "bracket_position": cfg.bracket_position,
        "alpha_override": cfg.alpha_override,
        "se": cfg.se.spec_string(),
        "median_window": cfg.median_window,
        "enhance": cfg.enhance,
        "enhance_se": cfg.enhance_se.spec_string(),
        "binarize_epsilon": cfg.binarize_epsilon,
        "min_band_area": cfg.min_band_area,
        "roi": None if cfg.roi is None else list(cfg.roi),
    }


def apply_config_deltas(cfg: PipelineConfig, deltas: dict) -> PipelineConfig:
    """Overlay a partial update (native or string values) onto a config.

    Accepts the same keys as the text format; values may arrive as their
    natural types (bool, int, float, None, 4-element list for roi) or as
    the text-format strings.  Unknown keys raise ValueError.
    """
    parsed = {}
    for key, raw in deltas.items():
        if key not in _FROM_TEXT:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(raw, str):
            parsed[key] = _FROM_TEXT[key](raw)
        elif key == "roi":
            if raw is not None:
                raw = tuple(int(v) for v in raw)
                if len(raw) != 4:
                    raise ValueError("roi must have 4 elements")
            parsed[key] = raw
        elif key == "axis":
            if not isinstance(raw, Axis):
                raise ValueError("axis must be 'columns' or 'rows'")
            parsed[key] = raw
        elif key in ("se", "enhance_se"):
            if not isinstance(raw, StructuringElement):
                raise ValueError(f"{key} must be a structuring element or 'shape:size'")
            parsed[key] = raw
        elif key == "enhance":
            if not isinstance(raw, bool):
                raise ValueError("enhance must be a boolean")
            parsed[key] = raw
        elif key == "alpha_override":
            if raw is not None and not isinstance(raw, (int, float)):
                raise ValueError("alpha_override must be a number or null")
            parsed[key] = None if raw is None else float(raw)
        elif key in ("median_window", "min_band_area"):
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ValueError(f"{key} must be an integer")
            parsed[key] = raw
        else:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ValueError(f"{key} must be a number")
            parsed[key] = float(raw)
    return replace(cfg, **parsed)
