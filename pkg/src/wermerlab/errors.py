"""Exception types shared across the package.

Every error that a module contract names lives here so that callers can catch
them without importing the module that raises them.
"""


class WermerlabError(Exception):
    """Base class for all package-specific errors."""


class BudgetExceeded(WermerlabError):
    """Required working precision exceeds the configured hard budget."""

    def __init__(self, bits, max_bits, detail=""):
        self.bits = bits
        self.max_bits = max_bits
        msg = f"needs {bits} bits but max_bits={max_bits}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ContainsZero(WermerlabError):
    """An interval that must exclude the origin may contain it."""


class InvalidSchedule(WermerlabError):
    """A schedule step violates est1 or est2."""

    def __init__(self, n, which, measured=None, bound=None):
        self.n = n
        self.which = which
        self.measured = measured
        self.bound = bound
        msg = f"{which} fails at step n={n}"
        if measured is not None and bound is not None:
            msg += f": measured {measured} vs bound {bound}"
        super().__init__(msg)


class NotOrdinary(WermerlabError):
    """Operation requires m identically 1."""


class GaugeTooWeak(WermerlabError):
    """The gauge grows or diverges too slowly for the requested construction."""


class DivergentGauge(WermerlabError):
    """The density integral of an h-gauge diverges at 0."""


class EnumerationCapExceeded(WermerlabError):
    """Exact signature enumeration would exceed the configured cap."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} signatures exceed the exact-mode cap {cap}")


class CertificationFailure(WermerlabError):
    """Interval certification could not isolate or include as required."""

    def __init__(self, reason, location=None, measured=None, bound=None):
        self.reason = reason
        self.location = location
        self.measured = measured
        self.bound = bound
        msg = reason if location is None else f"{reason} at {location}"
        super().__init__(msg)


class RangeError(WermerlabError, ValueError):
    """An argument lies outside the admissible range of the operation."""


class Inconclusive(WermerlabError):
    """The winding probe parameters sit exactly on the decision boundary."""


class DomainExit(WermerlabError):
    """A sample circle or grid leaves the bidisk domain."""


class ScaleOverlap(WermerlabError):
    """Plateau and quadratic radius ranges fail to separate at this scale."""


class BackendUnavailable(WermerlabError):
    """The requested arithmetic backend cannot be imported."""
