"""Exception and warning types raised across the package."""


class QMLEError(Exception):
    """Base class for all package errors."""


class CutoffTooSmall(QMLEError, ValueError):
    """The Fock cutoff discards more probability than the leakage bound allows."""


class ZeroFactor(QMLEError, ValueError):
    pass


class DimensionMismatch(QMLEError, ValueError):
    pass


class QuadratureNotConverged(QMLEError, RuntimeError):
    pass


class NonFiniteObjective(QMLEError, ValueError):
    pass


class ZeroProbabilityRecord(QMLEError, ValueError):
    """A measurement record has (numerically) zero probability under the trial state."""

    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(f"record {self.index} has probability {self.value:.3e} < 1e-300")


class DegeneratePhases(QMLEError, ValueError):
    pass


class UnphysicalParams(QMLEError, ValueError):
    pass


class ReferenceUnidentifiable(QMLEError, ValueError):
    pass


class NonUniqueMaximum(UserWarning):
    """Independent maximizations disagree: the measured observables are not a quorum."""
