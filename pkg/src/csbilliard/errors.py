"""Exception hierarchy shared by all modules."""


class BilliardError(Exception):
    """Base class for every error raised by csbilliard."""


class TableError(BilliardError, ValueError):
    """Invalid billiard table description."""


class NotCentrallySymmetric(TableError):
    def __init__(self, harmonic, magnitude):
        self.harmonic = harmonic
        self.magnitude = magnitude
        super().__init__(
            f"odd harmonic k={harmonic} has magnitude {magnitude:.3e}; "
            "table is not centrally symmetric"
        )


class NotConvex(TableError):
    def __init__(self, psi, rho):
        self.psi = psi
        self.rho = rho
        super().__init__(f"radius of curvature h+h'' = {rho:.3e} <= 0 at psi={psi:.6f}")


class NonPositive(TableError):
    def __init__(self, psi, h):
        self.psi = psi
        self.h = h
        super().__init__(f"support function h = {h:.3e} <= 0 at psi={psi:.6f}")


class DegenerateChord(BilliardError, ValueError):
    """Chord too close to tangential (sin delta ~ 0) to be resolved."""


class RootNotBracketed(BilliardError, ArithmeticError):
    pass


class NoConvergence(BilliardError, ArithmeticError):
    pass


class OrbitError(BilliardError):
    """A reflection failed while iterating an orbit."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"reflection failed at step {step}: {cause}")


class CoincidentPoints(BilliardError, ValueError):
    pass


class NoFourPeriodicCurve(BilliardError):
    def __init__(self, variation, tolerance):
        self.variation = variation
        self.tolerance = tolerance
        super().__init__(
            f"h(psi)^2 + h(psi+pi/2)^2 varies by {variation:.3e} (relative), "
            f"above tolerance {tolerance:.1e}: no invariant curve of 4-periodic orbits"
        )


class ProfileSymmetryViolated(BilliardError, ValueError):
    pass


class PivotUnderflow(BilliardError, ArithmeticError):
    def __init__(self, index, pivot):
        self.index = index
        self.pivot = pivot
        super().__init__(f"pivot {pivot:.3e} at index {index} is below resolution")


class InconsistentInputs(BilliardError, ValueError):
    pass
