"""Exception hierarchy shared by all modules."""


class DescriptorError(Exception):
    """Base class for every error raised by :mod:`descsys`."""


class DimensionMismatch(DescriptorError, ValueError):
    pass


class RankDeficient(DescriptorError):
    """A basis that must have full column rank does not, at the rank tolerance."""


class IllConditionedStructure(DescriptorError):
    """Rank decisions behind a Jordan structure are not numerically stable."""


class SingularPencil(DescriptorError):
    """``det(sF - G)`` vanishes at every probe point.

    Attributes
    ----------
    probes : list of (complex, float)
        Probe points and the ratio ``|det| / scale`` observed at each.
    """

    def __init__(self, message, probes=()):
        super().__init__(message)
        self.probes = list(probes)


class ReconstructionFailure(DescriptorError):
    """Canonical-form residuals exceed the acceptance threshold."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ParseError(DescriptorError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ShapeError(DescriptorError):
    def __init__(self, message, shapes=None):
        super().__init__(message)
        self.shapes = shapes or {}


class MissingInitialCondition(DescriptorError):
    pass
