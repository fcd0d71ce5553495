"""Derived band quantities and run persistence.

ratio_size compares a band's area against a chosen reference band;
relative_migration compares migration distances from the well line.  A
BandReport bundles the config, threshold decision, measured bands, and
those derived values; write_report persists it as a structured JSON
document, a flat CSV table, and an annotated overlay image.

All measurement floats are rounded to 6 significant digits when the
report is built, so the written document parses back field-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .autothresh import Source, ThresholdDecision
from .bands import Band
from .errors import ZeroAreaError, ZeroMigrationError
from .pipeline import PipelineConfig, PipelineResult, apply_config_deltas, config_to_dict
from .raster import GrayImage, save_overlay

__all__ = [
    "BandReport",
    "ratio_size",
    "relative_migration",
    "hash_source",
    "build_report",
    "report_to_doc",
    "report_from_doc",
    "report_json_text",
    "table_text",
    "write_overlay",
    "write_report",
    "read_report",
]

REPORT_NAME = "report.json"
TABLE_NAME = "bands.csv"
OVERLAY_NAME = "overlay.png"
TABLE_HEADER = "label,area,centroid_x,centroid_y,mean_intensity,ratio,rel_migration"


def _q6(x: float) -> float:
    """Round to 6 significant digits; the report's numeric resolution."""
    return float(f"{float(x):.6g}")


@dataclass(frozen=True)
class BandReport:
    """Complete record of one analysis run.

    source carries the input path and content hash; reference, ratios and
    migrations are present only when a reference band was chosen.
    """

    source: dict
    config: PipelineConfig
    decision: ThresholdDecision
    bands: list[Band]
    reference: int | None = None
    ratios: list[tuple[int, float]] | None = None
    migrations: list[tuple[int, float]] | None = None


def ratio_size(area_n: float, area_ref: float) -> float:
    """Fraction area_n / (area_ref + area_n), strictly inside (0, 1)."""
    if area_n <= 0 or area_ref <= 0:
        raise ZeroAreaError("ratio-size needs two positive band areas")
    return area_n / (area_ref + area_n)


def relative_migration(
    band: Band,
    ref: Band,
    axis: str = "vertical",
    origin: float = 0.0,
) -> float:
    """Band's migration distance divided by the reference band's.

    Distance is the signed centroid displacement from origin along the
    chosen axis (vertical = down the image from the well line at y =
    origin).  The reference maps to exactly 1.
    """
    if axis == "vertical":
        d_band = band.centroid[1] - origin
        d_ref = ref.centroid[1] - origin
    elif axis == "horizontal":
        d_band = band.centroid[0] - origin
        d_ref = ref.centroid[0] - origin
    else:
        raise ValueError(f"migration axis must be 'vertical' or 'horizontal', got {axis!r}")
    if d_ref == 0.0:
        raise ZeroMigrationError("reference band sits on the migration origin")
    return d_band / d_ref


def hash_source(data: bytes, path: str | Path | None = None) -> dict:
    """Source descriptor: original path (may be empty) plus content hash."""
    return {"path": "" if path is None else str(path),
            "sha256": hashlib.sha256(data).hexdigest()}


def _quantize_decision(d: ThresholdDecision) -> ThresholdDecision:
    return ThresholdDecision(_q6(d.th_level_std), _q6(d.alpha), _q6(d.th_level), d.source)


def _quantize_band(b: Band) -> Band:
    return Band(
        label=b.label,
        area=b.area,
        centroid=(_q6(b.centroid[0]), _q6(b.centroid[1])),
        bbox=b.bbox,
        mean_intensity=_q6(b.mean_intensity),
        total_intensity=_q6(b.total_intensity),
    )


def build_report(
    source: dict,
    cfg: PipelineConfig,
    result: PipelineResult,
    reference: int | None = None,
    migration_axis: str = "vertical",
    migration_origin: float = 0.0,
) -> BandReport:
    """Assemble a report from a pipeline run, with 6-digit numeric fields.

    When reference names a detected band, every band gets a ratio-size
    against it and a relative migration (the reference itself reads 0.5
    and 1.0 respectively).
    """
    bands = [_quantize_band(b) for b in result.bands]
    ratios = migrations = None
    if reference is not None:
        by_label = {b.label: b for b in bands}
        if reference not in by_label:
            raise ValueError(f"reference label {reference} not among detected bands")
        ref = by_label[reference]
        ratios = [(b.label, _q6(ratio_size(b.area, ref.area))) for b in bands]
        migrations = [
            (b.label, _q6(relative_migration(b, ref, migration_axis, migration_origin)))
            for b in bands
        ]
    return BandReport(
        source=dict(source),
        config=cfg,
        decision=_quantize_decision(result.decision),
        bands=bands,
        reference=reference,
        ratios=ratios,
        migrations=migrations,
    )


def report_to_doc(rep: BandReport) -> dict:
    """Plain-dict form of a report, ready for JSON serialization."""
    return {
        "source": dict(rep.source),
        "config": config_to_dict(rep.config),
        "decision": {
            "th_level_std": rep.decision.th_level_std,
            "alpha": rep.decision.alpha,
            "th_level": rep.decision.th_level,
            "source": rep.decision.source.value,
        },
        "bands": [
            {
                "label": b.label,
                "area": b.area,
                "centroid": list(b.centroid),
                "bbox": list(b.bbox),
                "mean_intensity": b.mean_intensity,
                "total_intensity": b.total_intensity,
            }
            for b in rep.bands
        ],
        "reference": rep.reference,
        "ratios": None if rep.ratios is None else [[l, v] for l, v in rep.ratios],
        "migrations": None if rep.migrations is None
        else [[l, v] for l, v in rep.migrations],
    }


def report_from_doc(doc: dict) -> BandReport:
    """Rebuild a report from its parsed JSON document."""
    cfg = apply_config_deltas(PipelineConfig(), doc["config"])
    d = doc["decision"]
    decision = ThresholdDecision(
        float(d["th_level_std"]), float(d["alpha"]), float(d["th_level"]),
        Source(d["source"]),
    )
    bands = [
        Band(
            label=int(b["label"]),
            area=int(b["area"]),
            centroid=(float(b["centroid"][0]), float(b["centroid"][1])),
            bbox=tuple(int(v) for v in b["bbox"]),
            mean_intensity=float(b["mean_intensity"]),
            total_intensity=float(b["total_intensity"]),
        )
        for b in doc["bands"]
    ]
    ratios = doc.get("ratios")
    migrations = doc.get("migrations")
    return BandReport(
        source=dict(doc["source"]),
        config=cfg,
        decision=decision,
        bands=bands,
        reference=None if doc.get("reference") is None else int(doc["reference"]),
        ratios=None if ratios is None else [(int(l), float(v)) for l, v in ratios],
        migrations=None if migrations is None
        else [(int(l), float(v)) for l, v in migrations],
    )


def _table_rows(rep: BandReport) -> list[str]:
    ratio_by = dict(rep.ratios) if rep.ratios is not None else {}
    mig_by = dict(rep.migrations) if rep.migrations is not None else {}
    rows = [TABLE_HEADER]
    for b in rep.bands:
        ratio = f"{ratio_by[b.label]:.6g}" if b.label in ratio_by else ""
        mig = f"{mig_by[b.label]:.6g}" if b.label in mig_by else ""
        rows.append(
            f"{b.label},{b.area},{b.centroid[0]:.6g},{b.centroid[1]:.6g},"
            f"{b.mean_intensity:.6g},{ratio},{mig}"
        )
    return rows


def _overlay_rgb(image: GrayImage, bands: list[Band]) -> np.ndarray:
    """Input rendered 8-bit with numbered boxes around each band."""
    scale = 255.0 / image.max_range
    g8 = np.clip(np.floor(image.pixels * scale + 0.5), 0, 255).astype(np.uint8)
    canvas = Image.fromarray(g8, mode="L").convert("RGB")
    draw = ImageDraw.Draw(canvas)
    for b in bands:
        x0, y0, x1, y1 = b.bbox
        draw.rectangle([x0, y0, x1, y1], outline=(255, 64, 64))
        draw.text((x0, max(0, y0 - 11)), str(b.label), fill=(255, 220, 0))
    return np.asarray(canvas)


def report_json_text(rep: BandReport) -> str:
    """The structured report document as JSON text."""
    return json.dumps(report_to_doc(rep), indent=2) + "\n"


def table_text(rep: BandReport) -> str:
    """The flat per-band CSV table as text."""
    return "\n".join(_table_rows(rep)) + "\n"


def write_overlay(rep: BandReport, path: str | Path, image: GrayImage) -> None:
    """Write the annotated overlay image for this report."""
    save_overlay(_overlay_rgb(image, rep.bands), path)


def write_report(rep: BandReport, out_dir: str | Path, image: GrayImage | None = None) -> None:
    """Write report.json, bands.csv and (when the input image is supplied)
    overlay.png into out_dir, creating it if needed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / REPORT_NAME).write_text(report_json_text(rep))
    (out / TABLE_NAME).write_text(table_text(rep))
    if image is not None:
        write_overlay(rep, out / OVERLAY_NAME, image)


def read_report(path: str | Path) -> BandReport:
    """Parse a written report.json back into a BandReport."""
    return report_from_doc(json.loads(Path(path).read_text()))
