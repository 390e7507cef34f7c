"""Exception hierarchy.

Everything raised on bad input derives from :class:`DataError`, which the
command-line front end maps to exit status 2.
"""


class DataError(ValueError):
    """Invalid input data (hierarchy, distribution, matrix or file)."""


class HierarchyError(DataError):
    pass


class MultipleRoots(HierarchyError):
    pass


class CycleDetected(HierarchyError):
    pass


class DuplicateChildEdge(HierarchyError):
    pass


class DisconnectedNode(HierarchyError):
    pass


class NotInternal(HierarchyError):
    pass


class UnknownNode(HierarchyError, KeyError):
    pass


class LengthMismatch(DataError):
    pass


class InvalidDistribution(DataError):
    pass


class SpaceMismatch(DataError):
    pass


class NotReasonable(DataError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InvalidParam(DataError):
    pass


class InvalidTau(InvalidParam):
    pass


class InvalidAlpha(InvalidParam):
    pass


class InvalidLambda(InvalidParam):
    pass


class TooLarge(DataError):
    pass


class FormatError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionMismatch(DataError):
    pass


class UnknownLabel(DataError):
    pass


class MissingLabels(DataError):
    pass


class WrongLeafCount(DataError):
    pass


class OracleMismatch(AssertionError):
    """A fast decoder disagreed with its brute-force reference."""
