"""Command-line frontend: batch analysis, synthetic gel generation, and
the local analysis service.

Every pipeline failure maps to a distinct documented exit code so batch
scripts can tell a flat profile from a corrupt file without parsing
stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report as report_mod
from .autothresh import Axis
from .errors import (
    BadWindowError,
    ConstantImageError,
    CorruptDataError,
    DegenerateGeometryError,
    FlatProfileError,
    GelAnalysisError,
    NegativeResultError,
    NoPeaksError,
    SpecOverflowError,
    UnsupportedFormatError,
    ZeroAreaError,
    ZeroMigrationError,
)
from .morph import StructuringElement
from .pipeline import PipelineConfig, run_pipeline
from .raster import load_image_bytes, save_image
from .synthgel import SyntheticSpec, synth_gel, write_truth

EXIT_CODES: dict[type, int] = {
    FileNotFoundError: 3,
    UnsupportedFormatError: 4,
    CorruptDataError: 5,
    ConstantImageError: 6,
    FlatProfileError: 7,
    NoPeaksError: 8,
    DegenerateGeometryError: 9,
    BadWindowError: 10,
    NegativeResultError: 11,
    ZeroAreaError: 12,
    ZeroMigrationError: 13,
    SpecOverflowError: 14,
}
EXIT_OTHER_ANALYSIS = 15
EXIT_IO = 16

_EPILOG = """exit codes:
  0 success                 8 no prominent profile peak (set --alpha)
  2 bad usage               9 image too thin to profile
  3 input not found        10 bad median window
  4 unsupported format     11 negative shift result
  5 corrupt input          12 zero band area in ratio
  6 constant image         13 reference band on migration origin
  7 flat sigma profile     14 synthetic bands out of bounds
                           15 other analysis error, 16 output I/O failure
"""


def _exit_code(exc: BaseException) -> int:
    for klass, code in EXIT_CODES.items():
        if isinstance(exc, klass):
            return code
    if isinstance(exc, GelAnalysisError):
        return EXIT_OTHER_ANALYSIS
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def _fail(exc: BaseException) -> int:
    stage = getattr(exc, "stage", None)
    where = f" [stage: {stage}]" if stage else ""
    print(f"error: {type(exc).__name__}: {exc}{where}", file=sys.stderr)
    return _exit_code(exc)


def _parse_ratio(text: str) -> tuple[int, int]:
    try:
        ref, n = text.split(":")
        return int(ref), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("expected REF:N with integer band labels")


def _parse_roi(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected X,Y,W,H")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("roi components must be integers")


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {what}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelband",
        description="Gel electrophoresis band analysis",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the analysis pipeline on one image")
    a.add_argument("--input", required=True, help="8/16-bit grayscale PGM or PNG")
    a.add_argument("--out", help="output directory for report files")
    a.add_argument("--axis", choices=["cols", "rows"], default="cols",
                   help="sigma profile direction (default cols)")
    a.add_argument("--alpha", type=float, default=None,
                   help="override the automatic weighting value (0 < a < 1)")
    a.add_argument("--prominence", type=float, default=0.05,
                   help="peak prominence fraction of the profile span")
    a.add_argument("--bracket", type=float, default=0.5,
                   help="cut position between sigma_min and the smallest peak")
    a.add_argument("--se-shape", choices=["disk", "square"], default="disk")
    a.add_argument("--se-size", type=int, default=10,
                   help="disk radius or square side (default 10)")
    a.add_argument("--median", type=int, default=5, help="median window (odd)")
    a.add_argument("--enhance", action="store_true",
                   help="pre-enhance contrast before thresholding")
    a.add_argument("--min-area", type=int, default=20,
                   help="discard components smaller than this many pixels")
    a.add_argument("--ratio", type=_parse_ratio, metavar="REF:N",
                   help="use band REF as reference and print band N's size ratio")
    a.add_argument("--roi", type=_parse_roi, metavar="X,Y,W,H",
                   help="crop this region before analysis")
    a.add_argument("--format", choices=["report", "table", "both"], default="both",
                   help="which files to write into --out (default both)")

    s = sub.add_parser("synth", help="generate a synthetic gel with ground truth")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--width", type=int, default=512)
    s.add_argument("--height", type=int, default=512)
    s.add_argument("--bands", default="", metavar="N,N,...",
                   help="band count per lane, comma separated")
    s.add_argument("--amplitude", type=float, default=100.0,
                   help="amplitude for every band")
    s.add_argument("--sigma", metavar="SX:SY", default="4:3.5",
                   help="gaussian half-widths for every band")
    s.add_argument("--gradient", metavar="AMP:DEG", default="0:0",
                   help="background gradient amplitude and direction")
    s.add_argument("--noise", type=float, default=0.0,
                   help="salt-and-pepper fraction in [0, 0.05]")
    s.add_argument("--smear", metavar="LANE:EXTENT", default=None,
                   help="add an exponential smear tail to one lane")
    s.add_argument("--depth", type=int, choices=[8, 16], default=8)
    s.add_argument("--out", required=True, help="image path (.pgm or .png)")
    s.add_argument("--truth", help="ground-truth sidecar path (JSON)")

    v = sub.add_parser("serve", help="start the local analysis service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8765)

    return parser


def _cmd_analyze(args) -> int:
    try:
        data = Path(args.input).read_bytes()
    except FileNotFoundError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(exc)

    try:
        img = load_image_bytes(data)
    except GelAnalysisError as exc:
        return _fail(exc)

    axis = Axis.ACROSS_COLUMNS if args.axis == "cols" else Axis.ACROSS_ROWS
    try:
        se = StructuringElement.from_spec_string(f"{args.se_shape}:{args.se_size}")
        cfg = PipelineConfig(
            axis=axis,
            prominence_frac=args.prominence,
            bracket_position=args.bracket,
            alpha_override=args.alpha,
            se=se,
            median_window=args.median,
            enhance=args.enhance,
            binarize_epsilon=0.0,
            min_band_area=args.min_area,
            roi=args.roi,
        )
    except (ValueError, GelAnalysisError) as exc:
        if isinstance(exc, GelAnalysisError):
            return _fail(exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_pipeline(img, cfg)
    except GelAnalysisError as exc:
        return _fail(exc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    reference = args.ratio[0] if args.ratio else None
    try:
        rep = report_mod.build_report(
            report_mod.hash_source(data, args.input), cfg, result, reference=reference
        )
    except (GelAnalysisError, ValueError) as exc:
        if isinstance(exc, GelAnalysisError):
            return _fail(exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    d = rep.decision
    print(f"{len(rep.bands)} bands  th_level {d.th_level:g}  alpha {d.alpha:g}  ({d.source.value})")
    if args.ratio:
        ref_label, n_label = args.ratio
        by_label = {label: value for label, value in rep.ratios}
        if n_label not in by_label:
            print(f"error: band {n_label} not among detected bands", file=sys.stderr)
            return 2
        print(f"ratio band {n_label} vs reference {ref_label}: {by_label[n_label]:.6g}")

    if args.out:
        try:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            if args.format in ("report", "both"):
                (out / report_mod.REPORT_NAME).write_text(
                    report_mod.report_json_text(rep))
            if args.format in ("table", "both"):
                (out / report_mod.TABLE_NAME).write_text(report_mod.table_text(rep))
            report_mod.write_overlay(rep, out / report_mod.OVERLAY_NAME,
                                     result.stages["input"])
        except OSError as exc:
            return _fail(exc)
    else:
        print(report_mod.table_text(rep), end="")
    return 0


def _cmd_synth(args) -> int:
    try:
        counts = tuple(int(n) for n in args.bands.split(",")) if args.bands else ()
        sx, sy = _parse_pair(args.sigma, "SX:SY")
        g_amp, g_dir = _parse_pair(args.gradient, "AMP:DEG")
        smear = None
        if args.smear is not None:
            lane, extent = _parse_pair(args.smear, "LANE:EXTENT")
            smear = (int(lane), extent)
        total = sum(counts)
        spec = SyntheticSpec(
            seed=args.seed,
            width=args.width,
            height=args.height,
            lanes=len(counts),
            bands_per_lane=counts,
            band_amplitudes=(args.amplitude,) * total,
            band_sigmas=((sx, sy),) * total,
            background=(g_amp, g_dir),
            salt_pepper_frac=args.noise,
            smear=smear,
            bit_depth=args.depth,
        )
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        img, truth = synth_gel(spec)
        save_image(img, args.out)
        if args.truth:
            write_truth(args.truth, spec, truth)
    except GelAnalysisError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(exc)
    print(f"wrote {args.out}: {spec.width}x{spec.height}, "
          f"{total} bands in {spec.lanes} lanes")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        return _cmd_analyze(args)
    if args.command == "synth":
        return _cmd_synth(args)
    return _cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
