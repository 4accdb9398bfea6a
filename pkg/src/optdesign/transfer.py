"""Transfer of locally optimal designs between models with and without intercept.

A design ``xi`` on a region containing the origin is split as
``omega * (origin) + (1 - omega) * xi_0`` where ``xi_0`` is the conditional
design given ``x != 0``.  When the intercept and no-intercept intensities
agree, the weighted regressor vanishes at the origin and the support of
``xi_0`` lies on a hyperplane ``c^T f(x) = 1``:

* D: ``xi`` with ``omega = 1/(nu + 1)`` is D-optimal for the intercept model
  iff ``xi_0`` satisfies ``f~^T M~^-1 f~ <= nu (1 - (c^T f~ - u~^(1/2))^2 / u~0)``
  on the region, and D-optimality of ``xi`` implies D-optimality of ``xi_0``.
* A: the same with ``omega = sqrt(c^T c + 1) / (sqrt(c^T c + 1) + sqrt(u~0 tau))``
  and the quantities ``T1``/``T2`` below.

Here ``nu`` is the number of no-intercept parameters, ``M~`` the
no-intercept information of ``xi_0`` and ``tau = tr(M~^-1)``.  Nonlinear
regressions use the parameter gradient for ``f~`` and unit intensity.

``T2(x) = 2 sqrt(tau / (u~0 (c^T c + 1))) (f~^T M~^-1 c c^T f~ - u~^(1/2) c^T M~^-1 f~)``
and ``T1(x) = tau (c^T f~ - u~^(1/2))^2 / u~0 + T2(x)``.  With these, for the
A-weighted design ``(1 - omega)^2 (tr(M^-1) - psi_A(x)) = tau - f~^T M~^-2 f~ - T1(x)``
holds exactly, so the A-transfer condition reads
``f~^T M~^-2 f~ <= tau (1 - (c^T f~ - u~^(1/2))^2 / u~0) - T2(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import Design, Grid, ParamPoint, augment_origin, strip_origin
from .equivalence import DEFAULT_SLACK, SensitivityReport, quad_forms, verify_local_optimality
from .errors import (
    ConditionViolated,
    DimensionMismatch,
    NoNonOriginPoints,
    NonpositiveInput,
    NotInXi0,
    NotOptimalInput,
    PremiseViolated,
    T1Negative,
    WrongOriginWeight,
)
from .infomat import Criterion, info_matrix, inverse
from .models import ModelSpec, base_regressors_many, check_beta, unit_intensity, weighted_regressors_many
from .premises import (
    HYPERPLANE_TOL,
    check_f_tilde_vanishes_at_origin,
    check_u_equals_u_tilde,
    origin_intensity,
    tilde_model,
)

#: Tolerance on the origin weight of a design handed to transfer_to_no_intercept.
ORIGIN_WEIGHT_TOL = 1e-8

TO_NO_INTERCEPT = "to_no_intercept"
TO_INTERCEPT = "to_intercept"


@dataclass(frozen=True, eq=False)
class HyperplaneCertificate:
    c: np.ndarray
    residual: float
    rank_deficient: bool
    has_origin: bool

    @property
    def in_xi0(self) -> bool:
        """Origin in the support and non-origin support on the hyperplane."""
        return self.has_origin and self.residual < HYPERPLANE_TOL

    def to_dict(self) -> dict:
        return {
            "c": self.c.tolist(),
            "residual": self.residual,
            "rank_deficient": self.rank_deficient,
            "has_origin": self.has_origin,
        }


def find_hyperplane_c(xi: Design, m: ModelSpec, beta: ParamPoint) -> HyperplaneCertificate:
    """Least-squares (minimum-norm) ``c`` with ``c^T f(x) = 1`` on the non-origin support."""
    i0 = xi.origin_index()
    X = np.delete(xi.points, i0, axis=0) if i0 is not None else xi.points
    if X.shape[0] == 0:
        raise NoNonOriginPoints()
    G = base_regressors_many(tilde_model(m), beta.without_intercept(), X)
    c, _, rank, _ = np.linalg.lstsq(G, np.ones(G.shape[0]), rcond=None)
    residual = float(np.max(np.abs(G @ c - 1.0)))
    return HyperplaneCertificate(c, residual, bool(rank < G.shape[1]), i0 is not None)


def origin_weight(which, nu: int, c=None, u0: float = 1.0, tau: float | None = None) -> float:
    """Origin weight making the augmented design D- or A-optimal.

    Nonlinear regressions have unit intensity, so pass ``u0 = 1`` there.
    """
    which = Criterion.parse(which)
    if which is Criterion.D:
        if nu < 1:
            raise NonpositiveInput("nu", nu)
        return 1.0 / (nu + 1)
    if not u0 > 0:
        raise NonpositiveInput("u0", u0)
    if tau is None or not tau > 0:
        raise NonpositiveInput("tau", tau)
    c = np.asarray(c, dtype=np.float64).ravel()
    k = math.sqrt(c @ c + 1.0)
    return k / (k + math.sqrt(u0 * tau))


@dataclass(frozen=True, eq=False)
class _Tilde:
    """No-intercept quantities of a conditional design ``xi_0``."""

    m: ModelSpec
    beta: ParamPoint
    c: np.ndarray
    u0: float
    tau: float
    minv: np.ndarray

    @classmethod
    def build(cls, xi0: Design, m: ModelSpec, beta: ParamPoint, c, tau: float | None = None) -> "_Tilde":
        mt = tilde_model(m)
        bt = beta.without_intercept()
        check_beta(mt, bt)
        c = np.asarray(c, dtype=np.float64).ravel()
        if c.size != mt.n_tilde:
            raise DimensionMismatch(mt.n_tilde, c.size, "hyperplane vector")
        minv = inverse(info_matrix(xi0, mt, bt))
        if tau is None:
            tau = float(np.trace(minv))
        return cls(mt, bt, c, origin_intensity(m, beta), float(tau), minv)

    @property
    def k(self) -> float:
        return math.sqrt(self.c @ self.c + 1.0)

    def parts(self, X: np.ndarray) -> dict[str, np.ndarray]:
        F = weighted_regressors_many(self.m, self.beta, X)
        s = np.sqrt(unit_intensity(self.m, self.beta, X))
        cMf = F @ (self.minv @ self.c)
        # c^T f~ - s; for GLMs f~ = s x, and s (c^T x - 1) avoids cancelling two large terms
        gap = F @ self.c - s if self.m.family.nonlinear else s * (X @ self.c - 1.0)
        pen = gap**2 / self.u0
        t2 = 2.0 * math.sqrt(self.tau / (self.u0 * self.k**2)) * cMf * gap
        return {
            "lhs_d": quad_forms(F, self.minv),
            "lhs_a": quad_forms(F, self.minv @ self.minv),
            "pen": pen,
            "t1": self.tau * pen + t2,
            "t2": t2,
        }


def _points_2d(x, dim: int) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1, dim)


def compute_T1(x, xi0: Design, m: ModelSpec, beta: ParamPoint, c, tau: float | None = None):
    """``T1`` at ``x`` (scalar) or at each row of ``x`` (array)."""
    X = _points_2d(x, m.dim)
    out = _Tilde.build(xi0, m, beta, c, tau).parts(X)["t1"]
    return float(out[0]) if np.ndim(x) <= 1 and X.shape[0] == 1 else out


def compute_T2(x, xi0: Design, m: ModelSpec, beta: ParamPoint, c, tau: float | None = None):
    """``T2`` at ``x`` (scalar) or at each row of ``x`` (array)."""
    X = _points_2d(x, m.dim)
    out = _Tilde.build(xi0, m, beta, c, tau).parts(X)["t2"]
    return float(out[0]) if np.ndim(x) <= 1 and X.shape[0] == 1 else out


@dataclass(frozen=True, eq=False)
class ConditionScan:
    """Minimum of ``RHS - LHS`` of a transfer condition over the scanned points."""

    margin: float
    argmin: np.ndarray
    t1_min: float
    t1_argmin: np.ndarray
    n_points: int

    def __float__(self) -> float:
        return self.margin


def _scan_points(xi0: Design, grid: Grid) -> np.ndarray:
    pts = [grid.points, xi0.points]
    if xi0.region.contains_origin:
        pts.append(np.zeros((1, xi0.dim)))
    return np.vstack(pts)


def _condition_values(which: Criterion, t: _Tilde, X: np.ndarray) -> dict[str, np.ndarray]:
    q = t.parts(X)
    if which is Criterion.D:
        q["margin"] = t.m.n_tilde * (1.0 - q["pen"]) - q["lhs_d"]
    else:
        q["margin"] = t.tau * (1.0 - q["pen"]) - q["t2"] - q["lhs_a"]
    return q


def _check_condition(which, xi0: Design, m: ModelSpec, beta: ParamPoint, c, grid: Grid) -> ConditionScan:
    which = Criterion.parse(which)
    check_u_equals_u_tilde(m, beta, allow_poisson_reduction=True)
    check_f_tilde_vanishes_at_origin(m, beta)
    t = _Tilde.build(xi0, m, beta, c)
    X = _scan_points(xi0, grid)
    q = _condition_values(which, t, X)
    i = int(np.argmin(q["margin"]))
    j = int(np.argmin(q["t1"]))
    return ConditionScan(float(q["margin"][i]), X[i].copy(), float(q["t1"][j]), X[j].copy(), X.shape[0])


def check_condition_d(xi0: Design, m: ModelSpec, beta: ParamPoint, c, grid: Grid) -> ConditionScan:
    """Scan ``nu (1 - (c^T f~ - u~^(1/2))^2 / u~0) - f~^T M~^-1 f~`` over grid, support and origin."""
    return _check_condition(Criterion.D, xi0, m, beta, c, grid)


def check_condition_a(xi0: Design, m: ModelSpec, beta: ParamPoint, c, grid: Grid) -> ConditionScan:
    """Scan ``tau (1 - (c^T f~ - u~^(1/2))^2 / u~0) - T2 - f~^T M~^-2 f~``; also reports ``min T1``."""
    return _check_condition(Criterion.A, xi0, m, beta, c, grid)


@dataclass(eq=False)
class TransferReport:
    direction: str
    criterion: Criterion
    origin_weight: float
    certificate: HyperplaneCertificate
    tau_tilde: float
    condition_margin: float
    condition_argmin: np.ndarray
    t1_min: float
    t2_support_max: float
    result: Design
    verified: bool
    route: str
    grid_resolution: int
    truncated: bool
    verification: SensitivityReport = field(repr=False)
    slack: float = DEFAULT_SLACK

    def to_dict(self) -> dict:
        return {
            "certified": True,
            "direction": self.direction,
            "criterion": self.criterion.value,
            "origin_weight": self.origin_weight,
            "certificate": self.certificate.to_dict(),
            "tau_tilde": self.tau_tilde,
            "condition_margin": self.condition_margin,
            "condition_argmin": self.condition_argmin.tolist(),
            "t1_min": self.t1_min,
            "t2_support_max": self.t2_support_max,
            "result": self.result.to_dict(),
            "verified": self.verified,
            "route": self.route,
            "grid_resolution": self.grid_resolution,
            "truncated": self.truncated,
            "slack": self.slack,
            "verification": self.verification.to_dict(),
        }


def _intercept_beta(beta: ParamPoint) -> ParamPoint:
    return beta if beta.intercept is not None else beta.with_intercept(0.0)


def _common_premises(m: ModelSpec, beta: ParamPoint) -> tuple[ModelSpec, ParamPoint, ParamPoint, str]:
    mi = m.as_intercept()
    beta = _intercept_beta(beta)
    check_beta(mi, beta)
    route = check_u_equals_u_tilde(mi, beta, allow_poisson_reduction=True)
    check_f_tilde_vanishes_at_origin(mi, beta)
    # the Poisson route works at beta0 = 0, where u = u~ holds identically
    work = beta.with_intercept(0.0)
    return mi, beta, work, route


def transfer_to_no_intercept(
    xi: Design, m: ModelSpec, beta: ParamPoint, which, grid: Grid, slack: float = DEFAULT_SLACK
) -> TransferReport:
    """Strip the origin from an intercept-model optimal design in the origin-plus-hyperplane class."""
    which = Criterion.parse(which)
    mi, beta, work, route = _common_premises(m, beta)
    if xi.origin_index() is None:
        raise NotInXi0("the origin is not a support point")
    cert = find_hyperplane_c(xi, mi, work)
    if not cert.in_xi0:
        raise NotInXi0(f"non-origin support is off every hyperplane (residual {cert.residual:.3e})")
    xi0 = strip_origin(xi)
    t = _Tilde.build(xi0, mi, work, cert.c)
    expected = origin_weight(which, mi.n_tilde, cert.c, t.u0, t.tau)
    actual = xi.origin_weight
    if abs(actual - expected) > ORIGIN_WEIGHT_TOL:
        raise WrongOriginWeight(expected, actual)
    scan = _check_condition(which, xi0, mi, work, cert.c, grid)
    if which is Criterion.A and scan.t1_min < -slack:
        raise T1Negative(scan.t1_min, scan.t1_argmin)
    t2 = t.parts(xi0.points)["t2"]
    ver = verify_local_optimality(xi0, tilde_model(mi), beta.without_intercept(), which, grid, slack)
    return TransferReport(
        direction=TO_NO_INTERCEPT,
        criterion=which,
        origin_weight=actual,
        certificate=cert,
        tau_tilde=t.tau,
        condition_margin=scan.margin,
        condition_argmin=scan.argmin,
        t1_min=scan.t1_min,
        t2_support_max=float(np.max(np.abs(t2))),
        result=xi0,
        verified=ver.passed,
        route=route,
        grid_resolution=grid.resolution,
        truncated=ver.truncated,
        verification=ver,
        slack=slack,
    )


def transfer_to_intercept(
    xi0: Design, m: ModelSpec, beta: ParamPoint, which, grid: Grid, slack: float = DEFAULT_SLACK
) -> TransferReport:
    """Add the origin with its optimal weight to a no-intercept optimal design."""
    which = Criterion.parse(which)
    mi, beta, work, route = _common_premises(m, beta)
    if xi0.origin_index() is not None:
        raise PremiseViolated("origin-not-in-input", "a no-intercept design must not contain the origin")
    cert = find_hyperplane_c(xi0, mi, work)
    if cert.residual >= HYPERPLANE_TOL:
        raise PremiseViolated("hyperplane", f"max |c^T f(x) - 1| = {cert.residual:.3e}")
    mt, bt = tilde_model(mi), beta.without_intercept()
    ver_in = verify_local_optimality(xi0, mt, bt, which, grid, slack)
    if not ver_in.passed:
        raise NotOptimalInput(ver_in.max_excess)
    scan = _check_condition(which, xi0, mi, work, cert.c, grid)
    if scan.margin < -slack:
        raise ConditionViolated(scan.margin, scan.argmin)
    t = _Tilde.build(xi0, mi, work, cert.c)
    omega = origin_weight(which, mi.n_tilde, cert.c, t.u0, t.tau)
    xi = augment_origin(xi0, omega)
    ver = verify_local_optimality(xi, mi, beta, which, grid, slack)
    t2 = t.parts(xi0.points)["t2"]
    return TransferReport(
        direction=TO_INTERCEPT,
        criterion=which,
        origin_weight=omega,
        certificate=HyperplaneCertificate(cert.c, cert.residual, cert.rank_deficient, True),
        tau_tilde=t.tau,
        condition_margin=scan.margin,
        condition_argmin=scan.argmin,
        t1_min=scan.t1_min,
        t2_support_max=float(np.max(np.abs(t2))),
        result=xi,
        verified=ver.passed,
        route=route,
        grid_resolution=grid.resolution,
        truncated=ver.truncated,
        verification=ver,
        slack=slack,
    )


__all__ = [
    "ConditionScan",
    "HyperplaneCertificate",
    "TO_INTERCEPT",
    "TO_NO_INTERCEPT",
    "TransferReport",
    "check_condition_a",
    "check_condition_d",
    "compute_T1",
    "compute_T2",
    "find_hyperplane_c",
    "origin_weight",
    "transfer_to_intercept",
    "transfer_to_no_intercept",
]
