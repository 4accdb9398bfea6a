"""Grid-based computation of locally D-/A-optimal designs.

The engine is the classical multiplicative weight update
(``w_i <- w_i psi_D(x_i) / p`` for D, ``w_i <- w_i sqrt(psi_A(x_i) / tr M^-1)``
for A).  Each multiplicative step is followed by a few vertex-exchange
steps that move weight from the weakest support point to the candidate of
largest sensitivity with an optimal step length.  The exchange steps are
what make convergence to ``tol`` practical when the optimum falls between
grid points.  For D, candidates that provably cannot carry weight in a
D-optimal design (Harman & Pronzato bound) are dropped from the
multiplicative update; exchange steps can bring any candidate back.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .design import Design, Grid, ParamPoint
from .errors import InputError, NoConvergence, SingularCandidates
from .infomat import MAX_CONDITION, Criterion
from .models import ModelSpec, check_beta, weighted_regressors_many

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OptimizerConfig:
    candidate_grid: Grid
    criterion: Criterion = Criterion.D
    max_iters: int = 50_000
    tol: float = 1e-5
    prune_threshold: float = 1e-8
    exchange_steps: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if not self.prune_threshold < 1.0 / len(self.candidate_grid):
            raise InputError("prune_threshold must be below 1 / (number of candidates)")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")


@dataclass(eq=False)
class OptimizationResult:
    design: Design
    iterations: int
    max_excess: float
    #: criterion value (det(M^-1) as log det(M^-1) for D, tr(M^-1) for A) after each iteration
    history: list[float] = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def monotone(self) -> bool:
        h = np.asarray(self.history)
        return bool(np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1]))))


def _solve(F: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = F.T @ (w[:, None] * F)
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    return lam, V


def _criterion(lam: np.ndarray, which: Criterion) -> float:
    if lam[0] <= 0:
        return math.inf
    return float(-np.sum(np.log(lam))) if which is Criterion.D else float(np.sum(1.0 / lam))


def _sensitivities(F: np.ndarray, lam: np.ndarray, V: np.ndarray, which: Criterion) -> tuple[np.ndarray, float]:
    G = F @ V
    if which is Criterion.D:
        return np.einsum("ij,ij->i", G / lam, G), float(F.shape[1])
    return np.einsum("ij,ij->i", G / lam**2, G), float(np.sum(1.0 / lam))


def _hp_bound(p: int, eps: float) -> float:
    # Harman & Pronzato (2007): D-optimal support points have psi >= this
    return p * (1.0 + eps / 2.0 - math.sqrt(eps * (4.0 + eps - 4.0 / p)) / 2.0)


def _exchange(F, w, j, k, lam, V, psi, which) -> float:
    """Optimal amount of weight to move from candidate ``k`` to ``j``."""
    if which is Criterion.D:
        Minv = (V / lam) @ V.T
        dj, dk = psi[j], psi[k]
        djk = F[j] @ Minv @ F[k]
        den = 2.0 * (dj * dk - djk**2)
        step = (dj - dk) / den if den > 0 else w[k]
        return float(min(max(step, 0.0), w[k]))
    M = (V * lam) @ V.T
    D = np.outer(F[j], F[j]) - np.outer(F[k], F[k])

    def trace_inv(d: float) -> float:
        ev = np.linalg.eigvalsh(M + d * D)
        return math.inf if ev[0] <= ev[-1] / MAX_CONDITION else float(np.sum(1.0 / ev))

    r = minimize_scalar(trace_inv, bounds=(0.0, float(w[k])), method="bounded", options={"xatol": 1e-15})
    return float(r.x) if r.fun < trace_inv(0.0) else 0.0


def run_optimizer(m: ModelSpec, beta: ParamPoint, cfg: OptimizerConfig) -> OptimizationResult:
    check_beta(m, beta)
    which = cfg.criterion
    X = cfg.candidate_grid.points
    F = weighted_regressors_many(m, beta, X)
    n, p = F.shape
    w = np.full(n, 1.0 / n)
    lam, V = _solve(F, w)
    # uniform weights span the widest range any weighting can reach
    cond = lam[-1] / lam[0] if lam[0] > 0 else math.inf
    if not cond < MAX_CONDITION:
        raise SingularCandidates(cond)

    history: list[float] = []
    excess = math.inf
    for it in range(cfg.max_iters):
        lam, V = _solve(F, w)
        history.append(_criterion(lam, which))
        psi, thr = _sensitivities(F, lam, V, which)
        excess = float(psi.max() - thr)
        if excess <= cfg.tol:
            break
        w = w * (psi / thr if which is Criterion.D else np.sqrt(psi / thr))
        w[w < cfg.prune_threshold] = 0.0
        if which is Criterion.D:
            w[psi < _hp_bound(p, psi.max() - thr)] = 0.0
        w /= w.sum()
        for _ in range(cfg.exchange_steps):
            lam, V = _solve(F, w)
            if lam[0] <= lam[-1] / MAX_CONDITION:
                break
            psi, thr = _sensitivities(F, lam, V, which)
            j = int(np.argmax(psi))
            support = np.flatnonzero(w > 0)
            k = int(support[np.argmin(psi[support])])
            if j == k or psi[j] - psi[k] <= 1e-14 * thr:
                break
            step = _exchange(F, w, j, k, lam, V, psi, which)
            if step <= 0.0:
                break
            w[j] += step
            w[k] -= step
            w[w < cfg.prune_threshold] = 0.0
            w /= w.sum()
    else:
        raise NoConvergence(excess, cfg.max_iters)

    keep = np.flatnonzero(w > 0)
    design = Design(X[keep], w[keep] / w[keep].sum(), cfg.candidate_grid.region)
    log.debug("optimizer converged after %d iterations (excess %.3e)", it, excess)
    return OptimizationResult(design, it, excess, history, w)


def optimize(m: ModelSpec, beta: ParamPoint, cfg: OptimizerConfig) -> Design:
    """Locally optimal design supported on a subset of the candidate grid."""
    return run_optimizer(m, beta, cfg).design


def _cluster_once(xi: Design, radius: float) -> Design:
    order = np.argsort(-xi.weights, kind="stable")
    seeds: list[int] = []
    label = np.empty(len(xi), dtype=int)
    for i in order:
        for c, s in enumerate(seeds):
            if np.max(np.abs(xi.points[i] - xi.points[s])) <= radius:
                label[i] = c
                break
        else:
            label[i] = len(seeds)
            seeds.append(int(i))
    pts, ws = [], []
    for c in range(len(seeds)):
        idx = np.flatnonzero(label == c)
        wc = xi.weights[idx]
        pts.append((wc[:, None] * xi.points[idx]).sum(axis=0) / wc.sum())
        ws.append(wc.sum())
    w = np.asarray(ws)
    return Design(np.vstack(pts), w / w.sum(), xi.region)


def cluster(xi: Design, radius: float) -> Design:
    """Merge support points lying within ``radius`` (max-norm) of a heavier point.

    Points are visited in order of decreasing weight; each joins the first
    cluster whose seed is within ``radius``, otherwise it seeds a new one.
    Merged points are replaced by their weight-weighted centroid, and the
    pass is repeated until no two centroids are within ``radius``.
    """
    if not radius > 0:
        raise InputError(f"cluster radius must be positive, got {radius}")
    while True:
        merged = _cluster_once(xi, radius)
        if len(merged) == len(xi):
            return xi
        xi = merged


def d_efficiency(M_design, M_reference) -> float:
    """``(det M(xi) / det M(xi_ref))^(1/p)``."""
    a = np.asarray(getattr(M_design, "entries", M_design))
    b = np.asarray(getattr(M_reference, "entries", M_reference))
    sa, la = np.linalg.slogdet(a)
    sb, lb = np.linalg.slogdet(b)
    if sa <= 0 or sb <= 0:
        raise InputError("D-efficiency needs positive definite information matrices")
    return float(np.exp((la - lb) / a.shape[0]))


__all__ = [
    "OptimizationResult",
    "OptimizerConfig",
    "cluster",
    "d_efficiency",
    "optimize",
    "run_optimizer",
]
