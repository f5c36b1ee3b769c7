"""Exception hierarchy shared by all archlab modules."""


class ArchlabError(Exception):
    """Base class for all archlab errors."""


class DimensionError(ArchlabError):
    """A requested dimension or count is out of range for the input."""


class ShapeError(ArchlabError):
    """Array shapes are inconsistent with each other or the model."""


class DegenerateError(ArchlabError):
    """The input carries no usable signal (e.g. zero variance everywhere)."""


class ParameterError(ArchlabError):
    """A configuration value violates its constraints."""


class NumericalError(ArchlabError):
    """A computation produced non-finite values."""


class GraphError(ArchlabError):
    """Invalid use of the autodiff graph (e.g. backward from a non-scalar)."""


class MissingGroundTruth(ArchlabError):
    """The dataset lacks the ground-truth fields the operation needs."""


class IoError(ArchlabError):
    """A file could not be read or written."""


class ParseError(ArchlabError):
    """A file's content is malformed; message names the offending location."""


class SchemaVersionError(ArchlabError):
    """A serialized model declares an unsupported schema version."""


class InsufficientPoints(ArchlabError):
    """Too few curve points for elbow detection."""
