"""Exception hierarchy.

InputError maps to CLI exit code 2 (bad inputs), ComputeError to exit
code 3 (a computation failed on valid inputs).
"""


class XferBenchError(Exception):
    pass


class InputError(XferBenchError):
    pass


class ComputeError(XferBenchError):
    pass


# --- tensor container / manifest loading ---

class BadMagic(InputError):
    pass


class BadHeader(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class NonFinite(InputError):
    pass


class UnsupportedDtype(InputError):
    pass


class IoError(InputError):
    pass


class ManifestParse(InputError):
    pass


class MissingFile(InputError):
    pass


class CrossValidation(InputError):
    pass


class DuplicateModel(InputError):
    pass


# --- ground truth ---

class ParseError(InputError):
    pass


class RangeError(InputError):
    pass


class UnknownStrategy(InputError):
    pass


# --- metric computation ---

class DegenerateLabels(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotAProbability(InputError):
    pass


class EmptyInput(InputError):
    pass


class LengthMismatch(InputError):
    pass


class SingularCovariance(ComputeError):
    pass


# --- probe training / drift ---

class EmptyDistribution(InputError):
    pass


class StructureMismatch(InputError):
    pass


class NonFiniteLoss(ComputeError):
    pass


# --- evaluation harness ---

class TooFewModels(InputError):
    pass


class WindowTooLarge(InputError):
    pass


class BadLevel(InputError):
    pass


class MissingGroundTruth(InputError):
    pass


# --- synthetic hub ---

class BadSpec(InputError):
    pass
