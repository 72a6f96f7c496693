"""Exception hierarchy shared by all modules."""


class MagstarkError(Exception):
    """Base class for library errors."""


class DomainError(MagstarkError, ValueError):
    """A complex continuation was requested outside its analyticity strip."""


class InvalidParameterError(MagstarkError, ValueError):
    pass


class ConvergenceError(MagstarkError, RuntimeError):
    """Dense eigensolver failure.

    ``indices`` holds the positions of the eigenvalues that did not converge
    (or whose residual check failed).
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class NotFoundError(MagstarkError, LookupError):
    """No resonance candidate in the search window."""


class InsufficientDataError(MagstarkError, ValueError):
    pass


class ConfigError(MagstarkError, ValueError):
    """Configuration could not be parsed or validated.

    ``problems`` lists every violated constraint.
    """

    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = list(problems)


class MalformedRowError(MagstarkError, ValueError):
    def __init__(self, message, row_number):
        super().__init__(f"row {row_number}: {message}")
        self.row_number = row_number
