class InvalidInput(ValueError):
    """Input violates a precondition or fails validation."""


class UnsupportedPrime(InvalidInput):
    """Prime divides the index of Z[theta] in the ring of integers."""


class SearchBoundError(RuntimeError):
    """A bounded search ran out of room; raise the bound and retry."""


class BudgetError(RuntimeError):
    """An enumeration would exceed the configured work budget."""
