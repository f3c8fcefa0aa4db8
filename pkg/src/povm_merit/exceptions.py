"""Exception types raised by povm_merit."""


class PovmMeritError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatch(PovmMeritError, ValueError):
    pass


class DegenerateModeSet(PovmMeritError, ValueError):
    pass


class DimensionCap(PovmMeritError, ValueError):
    pass


class InvalidWindow(PovmMeritError, ValueError):
    pass


class DimensionMismatch(PovmMeritError, ValueError):
    pass


class NumericalInconsistency(PovmMeritError, ArithmeticError):
    pass


class ZeroTraceElement(PovmMeritError, ValueError):
    pass


class NoSinglePhotonSector(PovmMeritError, ValueError):
    pass


class NoTwoPhotonSector(PovmMeritError, ValueError):
    pass


class ZeroBandwidth(PovmMeritError, ValueError):
    pass


class BinTooFine(PovmMeritError, ValueError):
    pass


class ResolutionUnresolvable(PovmMeritError, RuntimeError):
    pass


class EmptyNumberSupport(PovmMeritError, ValueError):
    pass


class ModeOutsideSpan(PovmMeritError, ValueError):
    pass


class InvalidDuration(PovmMeritError, ValueError):
    pass


class InsensitiveMode(PovmMeritError, ValueError):
    pass


class SpectralLeakage(PovmMeritError, ValueError):
    pass


class UnsupportedComposition(PovmMeritError, ValueError):
    pass


class ParseError(PovmMeritError, ValueError):
    """Malformed manifest or sidecar. ``offset`` is the byte position, if known."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ValidationFailed(PovmMeritError, ValueError):
    """A POVM failed validation; ``report`` carries per-element diagnostics."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TruncationWarning(UserWarning):
    """Fock-space truncation noticeably breaks a model's completeness."""
