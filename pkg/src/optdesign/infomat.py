"""Fisher information matrices, D/A criterion values and the block identities.

For designs that put weight ``omega`` on the origin and whose remaining
support lies on a hyperplane ``c^T f(x) = 1``, the inverse (and squared
inverse) of the intercept-model information has a closed form in terms of
the no-intercept information of the conditional design.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .design import Design, ParamPoint, strip_origin
from .errors import DimensionMismatch, InputError, NonpositiveInput, PremiseViolated, SingularInformation
from .models import ModelSpec, check_beta, weighted_regressors_many
from .premises import (
    HYPERPLANE_TOL,
    check_f_tilde_vanishes_at_origin,
    check_u_equals_u_tilde,
    hyperplane_residuals,
    origin_intensity,
    tilde_model,
)

#: Matrices at or above this condition number count as singular.
MAX_CONDITION = 1e12


class Criterion(str, enum.Enum):
    D = "D"
    A = "A"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InputError(f"unknown criterion {value!r}; expected 'D' or 'A'") from None


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    entries: np.ndarray
    param_dim: int

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=np.float64)
        if a.shape != (self.param_dim, self.param_dim):
            raise DimensionMismatch(self.param_dim, a.shape[0], "information matrix")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise InputError("information matrix is not symmetric")
        if np.linalg.eigvalsh(a)[0] < -1e-10 * scale:
            raise InputError("information matrix is not positive semidefinite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)


def _as_array(M) -> np.ndarray:
    return M.entries if isinstance(M, InfoMatrix) else np.asarray(M, dtype=np.float64)


def info_matrix(xi: Design, m: ModelSpec, beta: ParamPoint) -> InfoMatrix:
    """``sum_i w_i u(x_i) f(x_i) f(x_i)^T``."""
    if xi.dim != m.dim:
        raise DimensionMismatch(m.dim, xi.dim, "design")
    check_beta(m, beta)
    F = weighted_regressors_many(m, beta, xi.points)
    a = F.T @ (xi.weights[:, None] * F)
    return InfoMatrix(0.5 * (a + a.T), m.p)


def factor(M) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition ``(eigenvalues, eigenvectors)`` of a nonsingular matrix."""
    a = _as_array(M)
    lam, V = np.linalg.eigh(a)
    cond = lam[-1] / lam[0] if lam[0] > 0 else math.inf
    if not cond < MAX_CONDITION:
        raise SingularInformation(cond)
    return lam, V


def condition_number(M) -> float:
    lam = np.linalg.eigvalsh(_as_array(M))
    return float(lam[-1] / lam[0]) if lam[0] > 0 else math.inf


def inverse(M) -> np.ndarray:
    lam, V = factor(M)
    return (V / lam) @ V.T


def criterion_value(M, which) -> float:
    """``det(M^-1)`` for D, ``tr(M^-1)`` for A."""
    which = Criterion.parse(which)
    lam, _ = factor(M)
    if which is Criterion.D:
        return float(np.exp(-np.sum(np.log(lam))))
    return float(np.sum(1.0 / lam))


def log_det(M) -> float:
    lam, _ = factor(M)
    return float(np.sum(np.log(lam)))


@dataclass(frozen=True)
class _Xi0Parts:
    omega: float
    u0: float
    c: np.ndarray
    m_tilde: np.ndarray
    m_tilde_inv: np.ndarray


def _xi0_parts(xi: Design, m: ModelSpec, beta: ParamPoint, c) -> _Xi0Parts:
    m = m.as_intercept()
    check_beta(m, beta)
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != m.n_tilde:
        raise DimensionMismatch(m.n_tilde, c.size, "hyperplane vector")
    if xi.origin_index() is None:
        raise PremiseViolated("origin-in-support")
    check_f_tilde_vanishes_at_origin(m, beta)
    check_u_equals_u_tilde(m, beta)
    rest = strip_origin(xi)
    res = np.max(np.abs(hyperplane_residuals(m, beta, rest.points, c)))
    if not res < HYPERPLANE_TOL:
        raise PremiseViolated("hyperplane", f"max |c^T f(x) - 1| = {res:.3e}")
    mt = info_matrix(rest, tilde_model(m), beta.without_intercept())
    return _Xi0Parts(xi.origin_weight, origin_intensity(m, beta), c, mt.entries, inverse(mt))


def block_inverse(xi: Design, m: ModelSpec, beta: ParamPoint, c) -> np.ndarray:
    """Closed-form inverse of the intercept-model information of ``xi``."""
    q = _xi0_parts(xi, m, beta, c)
    a = 1.0 / (q.omega * q.u0)
    p = q.c.size + 1
    out = np.empty((p, p))
    out[0, 0] = a
    out[0, 1:] = out[1:, 0] = -a * q.c
    out[1:, 1:] = q.m_tilde_inv / (1.0 - q.omega) + a * np.outer(q.c, q.c)
    return out


def squared_inverse(xi: Design, m: ModelSpec, beta: ParamPoint, c) -> np.ndarray:
    """Closed-form square of :func:`block_inverse`.

    The lower-right block uses the symmetric form ``B c c^T + c c^T B`` of the
    cross term, which equals ``2 B c c^T`` inside quadratic forms.
    """
    q = _xi0_parts(xi, m, beta, c)
    w, u0, c = q.omega, q.u0, q.c
    k2 = c @ c + 1.0
    a2 = k2 / (w * u0) ** 2
    Bc = q.m_tilde_inv @ c / ((1.0 - w) * w * u0)
    p = c.size + 1
    out = np.empty((p, p))
    out[0, 0] = a2
    out[0, 1:] = out[1:, 0] = -a2 * c - Bc
    out[1:, 1:] = (
        a2 * np.outer(c, c)
        + np.outer(Bc, c)
        + np.outer(c, Bc)
        + q.m_tilde_inv @ q.m_tilde_inv / (1.0 - w) ** 2
    )
    return out


def a_trace_at_optimal_origin_weight(c, u0: float, tau: float) -> float:
    """``(1/u0) (sqrt(c^T c + 1) + sqrt(u0 tau))^2``.

    This is ``tr(M^-1)`` of the augmented design only when the origin carries
    the A-optimal weight; it is the minimum over the origin weight.
    """
    if not u0 > 0:
        raise NonpositiveInput("u0", u0)
    if not tau > 0:
        raise NonpositiveInput("tau", tau)
    c = np.asarray(c, dtype=np.float64).ravel()
    return (math.sqrt(c @ c + 1.0) + math.sqrt(u0 * tau)) ** 2 / u0


__all__ = [
    "Criterion",
    "InfoMatrix",
    "MAX_CONDITION",
    "a_trace_at_optimal_origin_weight",
    "block_inverse",
    "condition_number",
    "criterion_value",
    "factor",
    "info_matrix",
    "inverse",
    "log_det",
    "squared_inverse",
]
