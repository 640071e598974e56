"""Exception hierarchy shared by all modules."""


class MBKdVError(Exception):
    """Base class for every error raised by :mod:`mbkdv`."""


class ConfigurationError(MBKdVError, ValueError):
    """Inconsistent inputs: length mismatch, grid mismatch, bad parameters."""


class UsageError(MBKdVError, ValueError):
    """A supported operation was called with an unsupported option."""


class NumericalDomainError(MBKdVError, ArithmeticError):
    """A multiplier produced a non-finite value.

    ``point`` carries the offending frequency tuple.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ResolutionCapError(MBKdVError, ValueError):
    """An O(n^3) lattice sum was requested above the configured cap."""


class RhoRefusal(MBKdVError, ValueError):
    """A routine that needs the cancelling scale rho = 2 got something else."""


class ProfileDefectError(MBKdVError, ArithmeticError):
    """A multiplier profile produced non-finite derivatives."""


class BlowUpError(MBKdVError, ArithmeticError):
    """Time stepping produced non-finite or runaway coefficients.

    ``snapshot`` holds the last finite state, when available.
    """

    def __init__(self, message, snapshot=None, time=None):
        super().__init__(message)
        self.snapshot = snapshot
        self.time = time
