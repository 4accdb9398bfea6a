"""Checks for the assumptions shared by the block identities and the transfers.

The transfers need three things at the parameter point: the intercept and
no-intercept intensities agree (``u = u~``), the weighted no-intercept
regressor vanishes at the origin, and the non-origin support lies on a
hyperplane ``c^T f(x) = 1``.
"""

from __future__ import annotations

import numpy as np

from .design import ParamPoint
from .errors import PremiseViolated
from .models import Family, ModelSpec, base_regressors_many, unit_intensity, weighted_regressors_many

#: Max residual of ``c^T f(x) = 1`` on the non-origin support.
HYPERPLANE_TOL = 1e-8
_ORIGIN_TOL = 1e-12

DIRECT = "direct"
POISSON_REDUCTION = "poisson-beta0-reduction"


def tilde_model(m: ModelSpec) -> ModelSpec:
    return m.as_no_intercept()


def origin_intensity(m: ModelSpec, beta: ParamPoint) -> float:
    """``u~(0, beta~)``; equal to 1 for linear and nonlinear families."""
    mt = tilde_model(m)
    return float(unit_intensity(mt, beta.without_intercept(), np.zeros((1, m.dim)))[0])


def hyperplane_residuals(m: ModelSpec, beta: ParamPoint, X: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``c^T f(x) - 1`` with ``f`` the unweighted no-intercept regressor (gradient for nonlinear)."""
    G = base_regressors_many(tilde_model(m), beta.without_intercept(), X)
    return G @ np.asarray(c, dtype=np.float64) - 1.0


def check_f_tilde_vanishes_at_origin(m: ModelSpec, beta: ParamPoint) -> None:
    f0 = weighted_regressors_many(tilde_model(m), beta.without_intercept(), np.zeros((1, m.dim)))[0]
    if np.max(np.abs(f0)) > _ORIGIN_TOL:
        raise PremiseViolated("f_tilde(0)=0", f"weighted regressor at the origin is {f0.tolist()}")


def check_u_equals_u_tilde(m: ModelSpec, beta: ParamPoint, allow_poisson_reduction: bool = False) -> str:
    """Return the route under which ``u = u~`` holds, or raise.

    Poisson intensities factor as ``exp(beta0) u~``, so optimal designs do not
    depend on ``beta0``; with ``allow_poisson_reduction`` the check then runs at
    ``beta0 = 0``.
    """
    b0 = beta.intercept or 0.0
    if m.family in (Family.LINEAR, Family.EMAX, Family.EXPONENTIAL) or b0 == 0.0:
        return DIRECT
    if m.family is Family.POISSON and allow_poisson_reduction:
        return POISSON_REDUCTION
    raise PremiseViolated("u=u_tilde", f"{m.family.value} model with intercept {b0!r} != 0")
