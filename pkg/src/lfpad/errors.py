"""Exception types shared across the package."""


class CodecError(ValueError):
    """Base for binary container decode failures."""


class BadMagic(CodecError):
    """Payload does not start with the expected magic bytes."""


class VersionUnsupported(CodecError):
    """Container version byte is not one we can read."""


class SizeMismatch(CodecError):
    """Declared dimensions disagree with the payload length."""


class NonFiniteSample(CodecError):
    """Payload contains NaN or infinite values."""


class ShapeMismatch(ValueError):
    """Array shapes are inconsistent with the operation's contract."""


class WindowTooLarge(ValueError):
    """Sliding window exceeds the image dimensions."""


class DimsTooSmall(ValueError):
    """Requested output dimensions are below the supported minimum."""


class ConfigInvalid(ValueError):
    """A configuration value violates its invariants."""


class EmptyDataset(ValueError):
    """A training routine received no samples."""


class ClassTooSmall(ValueError):
    """A stratified split needs at least two samples per class."""


class LabelOutOfRange(IndexError):
    """Class label is outside the classifier's output range."""


class NoForwardState(RuntimeError):
    """backward() called before any forward pass populated activations."""


class NoNegatives(ValueError):
    """FAR is undefined: no spoof samples in the evaluation pool."""


class NoPositives(ValueError):
    """FRR is undefined: no real samples in the evaluation pool."""


class EmptyMatrix(ValueError):
    """Metric undefined on a confusion matrix with zero total count."""


class EmptyInput(ValueError):
    """Operation requires at least one element."""


class DatasetMissing(FileNotFoundError):
    """A pipeline stage needs a dataset that has not been generated."""


class CheckpointMissing(FileNotFoundError):
    """A pipeline stage needs a checkpoint that has not been trained."""


class DivergedNaN(ArithmeticError):
    """Training loss became NaN."""
