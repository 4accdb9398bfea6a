"""Exception hierarchy.

Every error raised by the library derives from :class:`OptDesignError`.
The CLI maps the three intermediate classes onto exit codes:
:class:`InputError` -> 2, :class:`NumericalError` -> 3,
:class:`CertificationError` -> 1.  :class:`NoConvergence` -> 4.
"""

from __future__ import annotations


def _fmt_point(x) -> str:
    return "[" + ", ".join(f"{float(t):.9g}" for t in x) + "]"


class OptDesignError(Exception):
    """Base class for all library errors."""


class InputError(OptDesignError, ValueError):
    """Malformed or inconsistent input."""


class NumericalError(OptDesignError, ArithmeticError):
    """A computation hit a numerically singular configuration."""


class CertificationError(OptDesignError):
    """A transfer premise or optimality condition does not hold."""


# -- design-core ----------------------------------------------------------


class EmptyDesign(InputError):
    def __init__(self) -> None:
        super().__init__("design has no support points")


class PointOutsideRegion(InputError):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"support point {index} lies outside the experimental region")


class NonpositiveWeight(InputError):
    def __init__(self, index: int) -> None:
        self.index = index
        super().__init__(f"weight {index} is not strictly positive")


class OriginNotInSupport(InputError):
    def __init__(self) -> None:
        super().__init__("the origin is not a support point")


class OnlyOriginSupported(InputError):
    def __init__(self) -> None:
        super().__init__("design is supported on the origin only")


class WeightOutOfRange(InputError):
    def __init__(self, weight: float) -> None:
        self.weight = weight
        super().__init__(f"origin weight {weight!r} must lie strictly inside (0, 1)")


class OriginAlreadyPresent(InputError):
    def __init__(self) -> None:
        super().__init__("the origin is already a support point")


class OriginNotInRegion(InputError):
    def __init__(self) -> None:
        super().__init__("the origin is not contained in the experimental region")


class ResolutionTooSmall(InputError):
    def __init__(self, resolution: int) -> None:
        self.resolution = resolution
        super().__init__(f"grid resolution must be >= 2, got {resolution}")


# -- model-zoo ------------------------------------------------------------


class WrongDimension(InputError):
    def __init__(self, expected: int, actual: int, what: str = "point") -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} has dimension {actual}, expected {expected}")


class DimensionMismatch(WrongDimension):
    pass


class NonlinearFamily(InputError):
    def __init__(self, family: str) -> None:
        self.family = family
        super().__init__(f"{family} has no GLM regression vector / intensity; use weighted_regressor")


class SingularNonlinearParam(NumericalError):
    def __init__(self, message: str) -> None:
        super().__init__(message)


# -- infomat / equivalence ------------------------------------------------


class SingularInformation(NumericalError):
    def __init__(self, condition_number: float) -> None:
        self.condition_number = condition_number
        super().__init__(f"information matrix is singular (condition number {condition_number:.3e})")


class NonpositiveInput(InputError):
    def __init__(self, name: str, value: float) -> None:
        self.name = name
        self.value = value
        super().__init__(f"{name} must be positive, got {value!r}")


# -- transfer -------------------------------------------------------------


class PremiseViolated(CertificationError):
    def __init__(self, premise: str, detail: str = "") -> None:
        self.premise = premise
        msg = f"premise violated: {premise}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class NoNonOriginPoints(InputError):
    def __init__(self) -> None:
        super().__init__("design has no support point other than the origin")


class NotInXi0(CertificationError):
    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"design is not in the origin-plus-hyperplane class: {reason}")


class WrongOriginWeight(CertificationError):
    def __init__(self, expected: float, actual: float) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"origin weight is {actual!r}, expected {expected!r}")


class T1Negative(CertificationError):
    def __init__(self, minimum: float, argmin) -> None:
        self.minimum = minimum
        self.argmin = argmin
        super().__init__(f"T1 takes the negative value {minimum:.3e} at {_fmt_point(argmin)}")


class NotOptimalInput(CertificationError):
    def __init__(self, max_excess: float) -> None:
        self.max_excess = max_excess
        super().__init__(f"input design is not locally optimal (sensitivity excess {max_excess:.3e})")


class ConditionViolated(CertificationError):
    def __init__(self, margin: float, argmin) -> None:
        self.margin = margin
        self.argmin = argmin
        super().__init__(f"transfer condition fails: margin {margin:.3e} at {_fmt_point(argmin)}")


# -- oracle optimizer -----------------------------------------------------


class SingularCandidates(NumericalError):
    def __init__(self, condition_number: float) -> None:
        self.condition_number = condition_number
        super().__init__(
            f"candidate set cannot support a nonsingular information matrix "
            f"(condition number {condition_number:.3e})"
        )


class NoConvergence(OptDesignError):
    def __init__(self, max_excess: float, iterations: int) -> None:
        self.max_excess = max_excess
        self.iterations = iterations
        super().__init__(f"no convergence after {iterations} iterations (max sensitivity excess {max_excess:.3e})")
