"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class FeasibilityError(ValueError):
    """The reference parameters make the r-th likelihood-ratio moment infinite."""


class ConvergenceError(ArithmeticError):
    """A numerical integration did not reach its tolerance within its budget."""

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)
