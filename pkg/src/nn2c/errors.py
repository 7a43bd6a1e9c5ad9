"""Typed errors raised across the toolchain.

Every rejection path raises one of these; callers (and the CLI exit-code
mapping) never have to catch bare ValueError/KeyError from library code.
"""


class Nn2cError(Exception):
    """Base class for all nn2c errors."""


class InvalidLayer(Nn2cError):
    """A layer attribute violates its constraints (e.g. units < 1)."""


class ShapeMismatch(Nn2cError):
    """A tensor or layer cannot accept its input rank/extents."""


class ParseError(Nn2cError):
    """Malformed manifest or data file."""


class BlobMismatch(Nn2cError):
    """Weight blob inconsistent with the manifest (size, offsets, digest)."""


class NonFiniteWeight(Nn2cError):
    """A stored weight is NaN or infinite."""


class NonFiniteActivation(Nn2cError):
    """A kernel produced a NaN or infinite activation."""


class IncompleteWeights(Nn2cError):
    """WeightStore is missing tensors (or has wrong shapes) for a graph."""


class NegativeVariance(Nn2cError):
    """Batchnorm variance entry below zero."""


class UnsupportedLayer(Nn2cError):
    """Code generator hit a layer kind it cannot emit (defensive)."""


class InvalidIdentifier(Nn2cError):
    """Model name is not a valid C identifier."""


class VectorFileError(Nn2cError):
    """Malformed vector (.tnnv) file."""


class EmptyStream(Nn2cError):
    """CAN message stream contains no usable messages."""


class LengthMismatch(Nn2cError):
    """Paired sequences (flags/labels, predictions/targets) differ in length."""


class EmptyScores(Nn2cError):
    """Threshold selection received no scores."""


class ShortCycle(Nn2cError):
    """Discharge cycle has fewer measurements than the window needs."""


class NonPositiveRated(Nn2cError):
    """Rated capacity must be positive."""


class UnknownMcu(Nn2cError):
    """MCU name not present in the catalog."""


class CompileFailure(Nn2cError):
    """Host C compiler rejected generated sources or is unavailable."""


class UsageError(Nn2cError):
    """Bad command line."""


class DegenerateFeatureWarning(UserWarning):
    """A scaled feature has max == min and maps to 0."""
