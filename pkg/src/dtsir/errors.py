"""Exception hierarchy shared by the estimators, generators and CLI.

Each class carries an ``exit_code`` so the command-line layer can map
failures onto its documented status codes without string matching.
"""


class DtSirError(Exception):
    """Base class for every error raised by this package."""

    code = "error"
    exit_code = 2


class InvalidArgumentError(DtSirError, ValueError):
    code = "invalid-argument"
    exit_code = 1


class InsufficientDataError(DtSirError, ValueError):
    code = "insufficient-data"
    exit_code = 2


class NumericalError(DtSirError, ArithmeticError):
    """Raised when a linear-algebra routine cannot produce a trustworthy answer."""

    code = "numerical-failure"
    exit_code = 3


class EigenSolverError(NumericalError):
    def __init__(self, message, info=None):
        super().__init__(message)
        # LAPACK does not expose iteration counts, ``info`` is its status code.
        self.info = info


class SingularCovarianceError(NumericalError):
    code = "singular-covariance"

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class DegenerateSpectrumError(NumericalError):
    code = "degenerate-spectrum"


class ScreeningTooAggressiveError(DtSirError):
    code = "screening-too-aggressive"
    exit_code = 3

    def __init__(self, n_included, threshold, d):
        super().__init__(
            f"screening kept {n_included} coordinate(s) at threshold {threshold:.6g}, "
            f"fewer than the requested dimension d={d}"
        )
        self.n_included = n_included
        self.threshold = threshold
        self.d = d


class UndefinedTestError(DtSirError, ValueError):
    code = "undefined-test"
    exit_code = 2
