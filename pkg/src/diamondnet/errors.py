"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class InvalidDistribution(InvalidArgument):
    pass


class InvalidChannel(InvalidArgument):
    pass


class ResourceLimitError(RuntimeError):
    """Raised when a simulation would allocate more codeword symbols than allowed."""

    def __init__(self, message, sizes=None):
        super().__init__(message)
        self.sizes = dict(sizes or {})
