"""Gel electrophoresis image analysis: automatic thresholding from the
standard-deviation profile, shift and morphological filtering, optional
contrast enhancement, connected-component band detection, and band
quantification (size ratios, relative migration)."""

from .autothresh import (
    Axis,
    Source,
    StdProfile,
    ThresholdDecision,
    apply_threshold,
    compute_alpha,
    compute_threshold_level,
    find_profile_peaks,
    profile_threshold,
    std_profile,
)
from .bands import Band, BandMask, binarize, connected_components, measure_bands
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
from .morph import (
    StructuringElement,
    bottom_hat,
    close_image,
    dilate,
    disk,
    erode,
    median_filter,
    open_image,
    square,
    top_hat,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    apply_config_deltas,
    config_from_text,
    config_to_dict,
    config_to_text,
    denoise,
    enhance,
    run_pipeline,
    shift,
)
from .raster import (
    GrayImage,
    image_png_bytes,
    load_image,
    load_image_bytes,
    min_max,
    save_image,
    save_overlay,
)
from .report import (
    BandReport,
    build_report,
    hash_source,
    ratio_size,
    read_report,
    relative_migration,
    report_from_doc,
    report_json_text,
    report_to_doc,
    table_text,
    write_overlay,
    write_report,
)
from .synthgel import (
    BandTruth,
    GroundTruth,
    SyntheticSpec,
    background_field,
    band_layout,
    clean_field,
    impulse_noise_sigma,
    read_truth,
    synth_gel,
    write_truth,
)

__version__ = "0.1.0"
