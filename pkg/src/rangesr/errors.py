"""Exception types shared across the package."""


class RangeSrError(Exception):
    """Base class for all library errors."""


class FormatError(RangeSrError):
    """An image file could not be decoded (bad magic, header field, or payload)."""


class SizeMismatchError(RangeSrError):
    """Raster dimensions do not line up."""


class EmptyInputError(RangeSrError):
    """An operation needed at least one observed pixel and found none."""


class InsufficientDataError(RangeSrError):
    """A model fit was requested with fewer samples than the model needs."""


class DegenerateGeometryError(RangeSrError):
    """Every minimal RANSAC sample drawn was collinear."""


class NoConsensusError(RangeSrError):
    """RANSAC found no plane with enough inliers."""
