"""Exception types shared across the toolkit.

Three branches matter to the command line: UsageError exits 2,
FileFormatError (and OSError) exits 3, NumericError exits 4.
"""


class GplabError(Exception):
    """Base class for every toolkit error."""


class UsageError(GplabError):
    """Bad arguments or environment configuration."""


class NumericError(GplabError):
    """Degenerate input or a numerically impossible request."""


class FileFormatError(GplabError):
    """Malformed or unreadable file content."""


# geometry / parameter validation

class NonPositiveAxis(NumericError):
    """A semi-axis is zero, negative, or not finite."""


class OutOfRangeValue(NumericError):
    """A mask or heatmap value falls outside its allowed range."""


class ShapeMismatch(NumericError):
    """Array shapes (or a declared shape) disagree with the data."""


# ellipse fitting

class EmptyMask(NumericError):
    """A mask with no foreground pixels where foreground is required."""


class DegenerateInput(NumericError):
    """Too few points, or a point scatter with no stable conic solution."""


class NoEllipseSolution(NumericError):
    """The conic solve produced no eigenvector on the ellipse branch."""


class NotAnEllipse(NumericError):
    """Conic coefficients describe a parabola, hyperbola, or worse."""


class ImaginaryEllipse(NumericError):
    """Conic coefficients describe an empty (imaginary or point) ellipse."""


# heatmaps

class InvalidSize(NumericError):
    """A grid size below the 2-pixel minimum."""


class DegenerateEllipse(NumericError):
    """An ellipse too thin to sample on the pixel grid."""


class IndexOutOfRange(NumericError):
    """A slice index outside the volume being assembled."""


class OutOfRangeThreshold(NumericError):
    """A threshold outside the open interval (0, 1)."""


# losses

class NonFiniteInput(NumericError):
    """NaN or infinity in a loss input."""


class NonFiniteLoss(NumericError):
    """A loss value diverged during optimization."""


# metrics

class EmptyGroundTruth(NumericError):
    """Sensitivity is undefined when the reference has no foreground."""


class EmptyVolume(NumericError):
    """A boundary-distance metric needs foreground on both sides."""


class BothEmpty(NumericError):
    """Volume similarity is undefined when both inputs are empty."""


class LengthMismatch(NumericError):
    """Paired case lists of different lengths (or no cases at all)."""


# phantom generation

class InvalidSpec(NumericError):
    """A phantom description that cannot be generated."""


# file formats

class UnreadableFile(FileFormatError):
    """File missing, unreadable, or with an unparseable header."""


class InconsistentDimensions(FileFormatError):
    """Slices of one stack with differing dimensions."""


class BadMagic(FileFormatError):
    """Wrong magic bytes or unsupported container version."""


class TruncatedFile(FileFormatError):
    """Payload size disagrees with the declared dimensions."""


class ParseError(FileFormatError):
    """Malformed tabular content; the message carries the line number."""
