"""Exception and warning types shared across the package."""


class SVRegError(Exception):
    """Base class for all errors raised by svreg."""


class InvalidInput(SVRegError, ValueError):
    """Malformed or non-finite input."""


class DataFormatError(InvalidInput):
    """A data file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidInterval(InvalidInput):
    """An interval [a, b] with b <= a."""


class EmptyDataset(SVRegError):
    """No samples left to work with."""


class EmptyBin(SVRegError):
    """A least-squares fit was requested on zero samples."""


class BinTooSmall(SVRegError):
    """A slice holds too few samples for the requested local statistic."""


class NoAdmissibleBins(SVRegError):
    """No slice passes the admissibility threshold; the level is too fine for n."""


class NumericalFailure(SVRegError, ArithmeticError):
    """An iterative routine did not converge or produced an unusable result."""


class SingularCovariance(NumericalFailure):
    """Covariance too close to singular to whiten (collinear predictors)."""


class SlopeUndefined(SVRegError):
    """Fewer than two finite points were available for a log-log slope fit."""


class DegenerateSpectrum(UserWarning):
    """The leading (or trailing) eigenvalue is not separated from its neighbour.

    The returned eigenvector is still deterministic (canonical tie-break),
    but it is not identified by the data.
    """
