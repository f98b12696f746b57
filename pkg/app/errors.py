"""Exception hierarchy for ResampleLab.

Every error carries the process exit code the CLI reports for it:
  2 -> the input or configuration is invalid
  3 -> the data is valid but too degenerate to work with
"""


class ResampleLabError(Exception):
    exit_code = 1


class ValidationError(ResampleLabError):
    exit_code = 2


class DegenerateDataError(ResampleLabError):
    exit_code = 3


class MissingValueError(ValidationError):
    pass


class NonBinaryError(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class BadVersionError(ValidationError):
    pass


class BadKError(ValidationError):
    pass


class BadSpecError(ValidationError):
    pass


class LengthMismatchError(ValidationError):
    pass


class NotTwoDimensionalError(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class TooFewSamplesError(DegenerateDataError):
    pass


class SingleClassError(DegenerateDataError):
    pass


class AllFoldsSkippedError(DegenerateDataError):
    pass


class EmptySelectionWarning(UserWarning):
    """A sampler kept no majority rows."""
