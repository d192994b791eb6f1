"""Exception hierarchy shared by every module of the package."""


class MahlerError(Exception):
    """Base class; ``invariant`` names the violated condition when known."""

    invariant = None

    def __init__(self, message, invariant=None):
        super().__init__(message)
        if invariant is not None:
            self.invariant = invariant


class InvalidBody(MahlerError):
    invariant = "body"


class NonConvex(InvalidBody):
    invariant = "convexity (h''+h >= 0)"


class PositivityViolated(InvalidBody):
    invariant = "positivity (h >= h_min)"


class EmptyBody(InvalidBody):
    invariant = "nonempty interior"


class GridMismatch(MahlerError):
    invariant = "matching grid size"


class UnsupportedPerturbation(MahlerError):
    invariant = "perturbation supported in (0, pi)"


class NotSymmetric(InvalidBody):
    invariant = "central symmetry h(t) = h(t + pi)"


class Resonance(MahlerError):
    invariant = "sin(subwindow length) != 0"


class NoAtomInSubwindow(MahlerError):
    invariant = "atom inside each subwindow"


class DegenerateSystem(MahlerError):
    invariant = "nonsingular boundary-slope system"


class NotConvexPosition(InvalidBody):
    invariant = "points in strictly convex counterclockwise position"


class OriginNotInterior(InvalidBody):
    invariant = "origin strictly interior"


class NotCritical(MahlerError):
    invariant = "first-order criticality residual <= tol"


class WideTriple(MahlerError):
    invariant = "normal triple spans at most pi"


class DegenerateGap(InvalidBody):
    invariant = "consecutive normal gaps in (0, pi)"


class NotBounded(MahlerError):
    invariant = "bounded translate objective"


class NonAdmissibleStart(MahlerError):
    invariant = "admissible starting body"


class Degenerate(InvalidBody):
    invariant = "affinely independent input"


class DimensionOverflow(MahlerError):
    invariant = "product dimension <= 3"


class ParseError(MahlerError):
    invariant = "parseable input file"
