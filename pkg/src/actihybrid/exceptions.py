"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented contract (shape, range, uniqueness, ...)."""


class ParseError(ValidationError):
    """A text row could not be parsed; ``line`` is 1-based and counts the header."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class DomainError(ValueError):
    """Argument outside a mathematical function's domain."""
