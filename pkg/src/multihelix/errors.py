"""Exception types shared across the package."""


class InfeasibleError(ValueError):
    """The requested geometry cannot satisfy the non-overlap constraints."""


class SolverError(RuntimeError):
    """A numerical routine failed in a way that indicates a setup bug."""
