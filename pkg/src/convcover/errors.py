"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class EmptyCapError(InputError):
    """Cutting plane does not meet the interior of the body."""


class UnsupportedRepresentationError(TypeError):
    """No exact routine exists for this representation."""


class SamplingError(RuntimeError):
    """A rejection sampler ran out of budget."""

    def __init__(self, message, acceptance_rate=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class PreconditionError(RuntimeError):
    """A documented precondition of an algorithm does not hold."""


class VerificationError(RuntimeError):
    """A produced object failed its certificate check (CLI exit code 1)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
