"""Sensitivity functions and grid-based equivalence-theorem checks.

A design is locally D-optimal iff ``u f^T M^-1 f <= p`` everywhere on the
region, and locally A-optimal iff ``u f^T M^-2 f <= tr(M^-1)``; the maximum
is attained on the support.  Here "everywhere" means every point of a
lattice plus the support itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from ._parallel import map_rows
from .design import Design, Grid, ParamPoint
from .errors import DimensionMismatch
from .infomat import Criterion, factor, info_matrix
from .models import ModelSpec, weighted_regressors_many

DEFAULT_SLACK = 1e-6
DEFAULT_RESOLUTION = 101


def quad_forms(F: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Row-wise ``F_i^T A F_i``."""
    return np.einsum("ij,ij->i", F @ A, F)


def sensitivity_function(
    xi: Design, m: ModelSpec, beta: ParamPoint, which
) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Vectorized sensitivity ``psi(X)`` of ``xi`` and its equivalence threshold."""
    which = Criterion.parse(which)
    factor(info_matrix(xi, m, beta))  # rejects singular designs
    # M = R^T R from the weighted regressors directly: forming M would square
    # the conditioning that the sensitivities inherit
    R = np.linalg.qr(weighted_regressors_many(m, beta, xi.points) * np.sqrt(xi.weights)[:, None], mode="r")
    Rinv = solve_triangular(R, np.eye(m.p))
    if which is Criterion.D:
        threshold = float(m.p)

        def rows(G: np.ndarray) -> np.ndarray:
            return G @ Rinv
    else:
        threshold = float(np.sum(Rinv**2))

        def rows(G: np.ndarray) -> np.ndarray:
            return (G @ Rinv) @ Rinv.T

    def psi(X: np.ndarray) -> np.ndarray:
        return map_rows(lambda B: np.sum(rows(weighted_regressors_many(m, beta, B)) ** 2, axis=1),
                        np.asarray(X, float))

    return psi, threshold


def sensitivity(xi: Design, m: ModelSpec, beta: ParamPoint, x, which) -> float:
    psi, _ = sensitivity_function(xi, m, beta, which)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64)).reshape(1, -1)
    return float(psi(x)[0])


@dataclass(eq=False)
class SensitivityReport:
    criterion: Criterion
    threshold: float
    max_value: float
    argmax: np.ndarray
    support_values: list[tuple[np.ndarray, float]]
    violations: list[tuple[np.ndarray, float]]
    slack: float
    grid_resolution: int
    truncated: bool
    grid_values: np.ndarray = field(repr=False)
    passed: bool = False

    @property
    def max_excess(self) -> float:
        return self.max_value - self.threshold

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"{status}: {self.criterion.value}-optimality, threshold {self.threshold:.12g}, "
            f"max sensitivity {self.max_value:.12g} at {np.round(self.argmax, 9).tolist()}",
            f"grid resolution {self.grid_resolution}, slack {self.slack:g}"
            + (", region TRUNCATED (pass/fail relative to the truncated box)" if self.truncated else ""),
        ]
        for x, v in self.support_values:
            lines.append(f"  support {np.round(x, 9).tolist()}: psi = {v:.12g}")
        if self.violations:
            lines.append(f"  {len(self.violations)} violation(s); largest:")
            for x, d in sorted(self.violations, key=lambda t: -t[1])[:10]:
                lines.append(f"    {np.round(x, 9).tolist()}: psi - threshold = {d:.6g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "threshold": self.threshold,
            "max_value": self.max_value,
            "argmax": self.argmax.tolist(),
            "passed": self.passed,
            "slack": self.slack,
            "grid_resolution": self.grid_resolution,
            "truncated": self.truncated,
            "support_values": [{"x": x.tolist(), "psi": v} for x, v in self.support_values],
            "n_violations": len(self.violations),
        }


def verify_local_optimality(
    xi: Design, m: ModelSpec, beta: ParamPoint, which, grid: Grid, slack: float = DEFAULT_SLACK
) -> SensitivityReport:
    """Check the equivalence inequality on ``grid`` plus the support of ``xi``.

    Passes iff the maximum sensitivity is at most ``threshold + slack`` and
    every support point reaches at least ``threshold - slack``.
    """
    which = Criterion.parse(which)
    if grid.points.shape[1] != xi.dim:
        raise DimensionMismatch(xi.dim, grid.points.shape[1], "grid")
    psi, threshold = sensitivity_function(xi, m, beta, which)
    grid_vals = psi(grid.points)
    sup_vals = psi(xi.points)
    pts = np.vstack([grid.points, xi.points])
    vals = np.concatenate([grid_vals, sup_vals])
    k = int(np.argmax(vals))
    bad = np.flatnonzero(vals > threshold + slack)
    passed = bool(vals[k] <= threshold + slack and np.all(sup_vals >= threshold - slack))
    return SensitivityReport(
        criterion=which,
        threshold=threshold,
        max_value=float(vals[k]),
        argmax=pts[k].copy(),
        support_values=[(x.copy(), float(v)) for x, v in zip(xi.points, sup_vals)],
        violations=[(pts[i].copy(), float(vals[i] - threshold)) for i in bad],
        slack=slack,
        grid_resolution=grid.resolution,
        truncated=grid.region.is_truncated or xi.region.is_truncated,
        grid_values=grid_vals,
        passed=passed,
    )


def write_sensitivity_csv(path, grid: Grid, report: SensitivityReport) -> None:
    """One row per grid point: ``x1,...,xnu,psi,threshold``."""
    dim = grid.points.shape[1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(dim)] + ["psi", "threshold"])
        thr = repr(report.threshold)
        for x, v in zip(grid.points.tolist(), report.grid_values.tolist()):
            w.writerow([repr(t) for t in x] + [repr(v), thr])


__all__ = [
    "DEFAULT_RESOLUTION",
    "DEFAULT_SLACK",
    "SensitivityReport",
    "quad_forms",
    "sensitivity",
    "sensitivity_function",
    "verify_local_optimality",
    "write_sensitivity_csv",
]
