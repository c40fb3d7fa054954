"""Exception types shared across the package."""


class PhgridError(Exception):
    """Base class for all phgrid errors."""


class StructuralError(PhgridError):
    """Network violates a structural assumption (missing capacitor bus,
    undefined edge endpoint, invalid parameters)."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonFiniteError(PhgridError):
    """A state or derivative became NaN/Inf during evaluation."""


class GridError(PhgridError):
    """A trajectory grid does not satisfy an operation's requirements
    (too few samples, non-uniform spacing, mismatched time axes)."""


class StepFailure(PhgridError):
    """The adaptive integrator cannot satisfy the error tolerance at dt_min."""


class DimensionMismatch(PhgridError):
    """Matrix/vector dimensions are inconsistent."""


class DegenerateDirection(PhgridError):
    """The conservative field J(t,x)*grad H vanishes relative to grad H, so the
    horizontal projection is undefined at this point."""
