"""
Error types shared by every package. Library code raises these; only
main.cli_main turns them into exit codes.
"""


class FormalRLError(Exception):
    """
    Base class for every error raised on purpose by this project.
    """


class ShapeError(FormalRLError, ValueError):
    """
    Raised when tensor shapes do not conform to an operation's signature.
    """


class NumericsError(FormalRLError, ArithmeticError):
    """
    Raised when a NaN or an infinity reaches an operation, a reward or a loss.
    """


class DeterminismError(FormalRLError):
    """
    Raised when a function that must be deterministic returns two different
    values for the same input.
    """


class UnknownTokenError(FormalRLError, ValueError):
    """
    Raised when a sentence uses a token outside the synthetic grammar.
    """


class EmptySentenceError(FormalRLError, ValueError):
    """
    Raised when an operation receives a sentence without tokens.
    """


class AlignmentError(FormalRLError, ValueError):
    """
    Raised when line-aligned inputs (corpus files, hypotheses and references)
    have different lengths.
    """


class FormatError(FormalRLError, ValueError):
    """
    Raised when a corpus directory or a checkpoint file does not follow its
    documented layout.
    """


class IoError(FormalRLError, OSError):
    """
    Raised when a file or directory cannot be written or read.
    """


class ConfigError(FormalRLError, ValueError):
    """
    Raised for invalid configuration values or combinations.
    """


class DataError(FormalRLError, ValueError):
    """
    Raised when a dataset cannot support the requested operation (empty,
    single-class, missing references).
    """


class LengthError(FormalRLError, ValueError):
    """
    Raised when a sequence does not fit the model's context window.
    """


class RangeError(FormalRLError, ValueError):
    """
    Raised when a metric input lies outside its valid range.
    """
