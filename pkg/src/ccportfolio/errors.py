"""Exception types shared across the package."""


class PortfolioError(Exception):
    """Base class for data and domain failures (CLI exit code 1)."""


class ParseError(PortfolioError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IncompleteDataError(ParseError):
    pass


class DomainError(PortfolioError, ValueError):
    pass


class InfeasibleError(PortfolioError, ValueError):
    """Raised when bounds admit no weight vector summing to one."""
