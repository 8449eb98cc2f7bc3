"""Exception types shared across the package."""


class DSketchError(Exception):
    """Base class for dsketch errors."""


class MergeError(DSketchError):
    """Two sketches cannot be merged; the message names the mismatched field."""


class FormatError(DSketchError):
    """Serialized sketch bytes are malformed, truncated, or corrupted."""
