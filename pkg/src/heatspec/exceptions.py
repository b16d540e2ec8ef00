"""Exception types shared across the package."""


class TruncationOverflowError(RuntimeError):
    """Raised when a spectral truncation would exceed the hard mode cap."""

    def __init__(self, needed, cap):
        self.needed = needed
        self.cap = cap
        super().__init__(
            f"truncation needs more than {cap} basis modes "
            f"(requirement not met after {needed}); refusing to enumerate further"
        )


class CodeConstructionError(RuntimeError):
    """Raised when the randomized code search exhausts its draw budget."""

    def __init__(self, achieved, target, budget):
        self.achieved = achieved
        self.target = target
        self.budget = budget
        super().__init__(
            f"code search hit the draw budget ({budget}) with {achieved} of "
            f"{target} strings found"
        )


class QualificationError(ValueError):
    """Raised when an audit is requested outside a filter's qualification range."""
