"""Model families: regression vectors, intensities and weighted regressors.

Linear-predictor families (Poisson, logistic, linear-Gaussian) use the
first-order predictor ``f(x) = x`` or ``(1, x)``.  The per-point Fisher
information is ``u(x, beta) f(x) f(x)^T`` with the closed-form intensity of
the canonical link (unit dispersion).  The E-max and exponential families
are nonlinear regressions whose per-point information is ``g g^T`` for the
gradient ``g`` of the mean response with respect to the parameters.

The ``*_many`` functions work on an ``(N, dim)`` array of points and are
what the grid scans use; the scalar functions wrap them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .design import ParamPoint
from .errors import DimensionMismatch, InputError, NonlinearFamily, SingularNonlinearParam, WrongDimension

ETA_CLAMP = 700.0


class Family(str, enum.Enum):
    POISSON = "poisson"
    LOGISTIC = "logistic"
    LINEAR = "linear"
    EMAX = "emax"
    EXPONENTIAL = "exponential"

    @property
    def nonlinear(self) -> bool:
        return self in (Family.EMAX, Family.EXPONENTIAL)


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    with_intercept: bool
    dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.dim < 1:
            raise InputError(f"model dimension must be positive, got {self.dim}")
        if self.family.nonlinear and self.dim != 1:
            raise InputError(f"{self.family.value} models are one-dimensional")

    @property
    def n_tilde(self) -> int:
        """Number of parameters of the corresponding no-intercept model."""
        return 2 if self.family.nonlinear else self.dim

    @property
    def p(self) -> int:
        return self.n_tilde + int(self.with_intercept)

    def as_intercept(self) -> "ModelSpec":
        return ModelSpec(self.family, True, self.dim)

    def as_no_intercept(self) -> "ModelSpec":
        return ModelSpec(self.family, False, self.dim)

    def to_dict(self, beta: ParamPoint) -> dict:
        d: dict = {"family": self.family.value, "with_intercept": self.with_intercept}
        head = [beta.intercept if beta.intercept is not None else 0.0] if self.with_intercept else []
        if self.family.nonlinear:
            d["beta"] = head
            d["nonlinear_params"] = list(beta.slope)
        else:
            d["beta"] = head + list(beta.slope)
        return d


def check_beta(m: ModelSpec, beta: ParamPoint) -> None:
    if len(beta.slope) != m.n_tilde:
        raise DimensionMismatch(m.n_tilde, len(beta.slope), "slope parameter")
    if m.with_intercept and beta.intercept is None:
        raise DimensionMismatch(m.p, len(beta.slope), "parameter vector (missing intercept)")


def _points(m: ModelSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None] if m.dim == 1 and X.size != 1 else X[None, :]
    if X.shape[1] != m.dim:
        raise WrongDimension(m.dim, X.shape[1])
    return X


def _point(m: ModelSpec, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    if x.size != m.dim:
        raise WrongDimension(m.dim, x.size)
    return x[None, :]


def linear_predictor_many(m: ModelSpec, beta: ParamPoint, X) -> np.ndarray:
    X = _points(m, X)
    eta = X @ beta.slope_array
    if m.with_intercept:
        eta = eta + beta.intercept
    return eta


def regression_vectors_many(m: ModelSpec, X) -> np.ndarray:
    if m.family.nonlinear:
        raise NonlinearFamily(m.family.value)
    X = _points(m, X)
    if m.with_intercept:
        return np.hstack([np.ones((X.shape[0], 1)), X])
    return X.copy()


def intensity_many(m: ModelSpec, beta: ParamPoint, X) -> np.ndarray:
    if m.family.nonlinear:
        raise NonlinearFamily(m.family.value)
    check_beta(m, beta)
    X = _points(m, X)
    if m.family is Family.LINEAR:
        return np.ones(X.shape[0])
    eta = np.clip(linear_predictor_many(m, beta, X), -ETA_CLAMP, ETA_CLAMP)
    if m.family is Family.POISSON:
        return np.exp(eta)
    # logistic: e^eta / (1 + e^eta)^2, symmetric in eta
    e = np.exp(-np.abs(eta))
    return e / (1.0 + e) ** 2


def unit_intensity(m: ModelSpec, beta: ParamPoint, X) -> np.ndarray:
    """Intensities with nonlinear families mapped to the constant 1."""
    if m.family.nonlinear:
        return np.ones(_points(m, X).shape[0])
    return intensity_many(m, beta, X)


def nonlinear_mean(m: ModelSpec, beta: ParamPoint, x) -> np.ndarray:
    """Mean response h(x, beta) of the E-max / exponential models."""
    X = _points(m, x)[:, 0]
    b0 = beta.intercept if (m.with_intercept and beta.intercept is not None) else 0.0
    b1, b2 = beta.slope
    if m.family is Family.EMAX:
        return b0 + b1 * X / (X + b2)
    if m.family is Family.EXPONENTIAL:
        return b0 + b1 * np.exp(X / b2)
    raise InputError(f"{m.family.value} is not a nonlinear family")


def _gradients(m: ModelSpec, beta: ParamPoint, X: np.ndarray) -> np.ndarray:
    b1, b2 = beta.slope
    x = X[:, 0]
    if m.family is Family.EMAX:
        den = x + b2
        if np.any(den == 0):
            raise SingularNonlinearParam("x + beta2 = 0 in the E-max gradient")
        cols = [x / den, -b1 * x / den**2]
    else:
        if b2 == 0:
            raise SingularNonlinearParam("beta2 = 0 in the exponential gradient")
        e = np.exp(np.clip(x / b2, -ETA_CLAMP, ETA_CLAMP))
        cols = [e, -b1 * x * e / b2**2]
    if m.with_intercept:
        cols.insert(0, np.ones_like(x))
    return np.stack(cols, axis=1)


def base_regressors_many(m: ModelSpec, beta: ParamPoint, X) -> np.ndarray:
    """Regression vectors, or parameter gradients for nonlinear families."""
    X = _points(m, X)
    if m.family.nonlinear:
        check_beta(m, beta)
        return _gradients(m, beta, X)
    return regression_vectors_many(m, X)


def weighted_regressors_many(m: ModelSpec, beta: ParamPoint, X) -> np.ndarray:
    """Rows ``u^(1/2)(x) f(x)`` so that the per-point information is ``F_i F_i^T``."""
    X = _points(m, X)
    if m.family.nonlinear:
        return base_regressors_many(m, beta, X)
    return np.sqrt(intensity_many(m, beta, X))[:, None] * regression_vectors_many(m, X)


def regression_vector(m: ModelSpec, x) -> np.ndarray:
    return regression_vectors_many(m, _point(m, x))[0]


def intensity(m: ModelSpec, beta: ParamPoint, x) -> float:
    return float(intensity_many(m, beta, _point(m, x))[0])


def weighted_regressor(m: ModelSpec, beta: ParamPoint, x) -> np.ndarray:
    return weighted_regressors_many(m, beta, _point(m, x))[0]


def logistic_ustar_equation(u: float) -> float:
    return 2.0 + u + 2.0 * math.exp(u) - u * math.exp(u)


def solve_logistic_ustar() -> float:
    """Positive root of ``2 + u + 2 e^u - u e^u = 0`` (about 2.3994).

    Bisection on ``[2 + 1e-9, 10]`` followed by a Newton polish.
    """
    g = logistic_ustar_equation
    lo, hi = 2.0 + 1e-9, 10.0
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        gm = g(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    for _ in range(3):
        du = 1.0 + math.exp(u) * (1.0 - u)
        step = g(u) / du
        if abs(g(u - step)) >= abs(g(u)):
            break
        u -= step
    return u


__all__ = [
    "Family",
    "ModelSpec",
    "base_regressors_many",
    "check_beta",
    "intensity",
    "intensity_many",
    "logistic_ustar_equation",
    "nonlinear_mean",
    "regression_vector",
    "regression_vectors_many",
    "solve_logistic_ustar",
    "unit_intensity",
    "weighted_regressor",
    "weighted_regressors_many",
]
