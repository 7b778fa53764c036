"""Exception types shared across the package."""


class NoFiniteCriticalPoint(Exception):
    """The critical-temperature equation has no finite root for this noise law."""


class BudgetExceeded(Exception):
    """A tree operation was requested beyond its generation cap.

    Exhaustive enumeration costs O(2^n) and Gibbs resampling O(n 2^n); the caps
    keep a single replica in the minutes range.  Pass ``force=True`` to override.
    """


class QuadratureError(Exception):
    """Adaptive quadrature failed to reach the requested tolerance."""
