"""Exception types shared across the package."""


class InfeasibleError(ValueError):
    """A request exceeds a hard feasibility cap (enumeration size, memory budget)."""


class HypothesisError(ValueError):
    """Inputs violate a structural precondition (length mismatch, negative values)."""


class TransferenceFailure(AssertionError):
    """The measured exceptional set is larger than allowed although every hypothesis passed."""
