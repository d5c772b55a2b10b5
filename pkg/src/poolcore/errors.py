"""Exception taxonomy shared across the library.

ValidationError covers bad arguments and malformed inputs (CLI exit 2);
NumericalError covers failures of the numerical machinery itself and
mathematically degenerate requests (CLI exit 3).
"""


class ValidationError(ValueError):
    """Arguments or input data violate a documented precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class UnreachableDivergenceError(NumericalError):
    """Requested KL divergence exceeds what representable beta parameters
    can express for the given w; carries the maximum attainable value."""

    def __init__(self, target, w, max_attainable):
        self.target = target
        self.w = w
        self.max_attainable = max_attainable
        super().__init__(
            f"divergence {target:g} unreachable for w={w:g}; "
            f"maximum attainable is {max_attainable:.6g}")


class NoRejectionRegionError(NumericalError):
    """The pooled p-value exceeds alpha even at the all-zeros corner, so no
    rejection level exists."""
