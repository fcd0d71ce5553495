"""Exception hierarchy for the gel analysis toolkit.

Every error raised by the library derives from GelAnalysisError so callers
can catch the whole family.  Pipeline execution attaches the failing stage
name to the exception's ``stage`` attribute before re-raising.
"""


class GelAnalysisError(Exception):
    """Base class for all toolkit errors."""

    #: name of the pipeline stage this error surfaced in, if any
    stage: str | None = None


class UnsupportedFormatError(GelAnalysisError):
    """Input file is color, paletted, or an unrecognized container."""


class CorruptDataError(GelAnalysisError):
    """Input file is recognized but truncated or malformed."""


class DegenerateGeometryError(GelAnalysisError):
    """Image is one pixel thick along the profiled dimension."""


class FlatProfileError(GelAnalysisError):
    """Standard-deviation profile has no dynamic range (sigma_max == sigma_min)."""


class NoPeaksError(GelAnalysisError):
    """No profile peak passes the prominence test; supply an alpha override."""


class ConstantImageError(GelAnalysisError):
    """Image has no intensity range (max == min); threshold undefined."""


class BadWindowError(GelAnalysisError):
    """Median window is even or smaller than 3."""


class NegativeResultError(GelAnalysisError):
    """Shift would produce negative pixels; caller sequenced stages wrong."""


class ZeroAreaError(GelAnalysisError):
    """Ratio-size requested for a band with zero area."""


class ZeroMigrationError(GelAnalysisError):
    """Reference band has zero migration distance from the origin."""


class SpecOverflowError(GelAnalysisError):
    """Synthetic-gel spec places bands outside the image bounds."""
