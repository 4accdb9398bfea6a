"""Designs, experimental regions, parameter points and evaluation grids.

An approximate design is a finite probability measure on the experimental
region.  All value types here are immutable after construction; array
fields are stored as read-only copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    EmptyDesign,
    InputError,
    NonpositiveWeight,
    OnlyOriginSupported,
    OriginAlreadyPresent,
    OriginNotInRegion,
    OriginNotInSupport,
    PointOutsideRegion,
    ResolutionTooSmall,
    WeightOutOfRange,
    WrongDimension,
)

#: Max-norm distance below which two support points are the same point.
MERGE_TOL = 1e-9
#: Tolerance on the weight sum of a constructed design.
WEIGHT_SUM_TOL = 1e-12
#: Slack used when testing region membership.
REGION_TOL = 1e-9

BOX = "box"
SIMPLEX = "simplex"
TRUNCATED_BOX = "box-with-truncation"
_KINDS = (BOX, SIMPLEX, TRUNCATED_BOX)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExperimentalRegion:
    """A box, a truncated stand-in for an unbounded box, or the unit simplex.

    Use the :meth:`box`, :meth:`simplex` and :meth:`truncated` constructors
    rather than calling the class directly.
    """

    dim: int
    kind: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    unbounded_axes: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InputError(f"region dimension must be positive, got {self.dim}")
        if self.kind not in _KINDS:
            raise InputError(f"unknown region kind {self.kind!r}")
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise WrongDimension(self.dim, len(self.lower), "region bounds")
        for lo, hi in zip(self.lower, self.upper):
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise InputError(f"invalid bounds [{lo}, {hi}]")
        if self.kind == TRUNCATED_BOX and not self.unbounded_axes:
            raise InputError("a truncated box must record at least one unbounded axis")
        if any(not 0 <= a < self.dim for a in self.unbounded_axes):
            raise InputError(f"unbounded axes {sorted(self.unbounded_axes)} out of range")

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "ExperimentalRegion":
        return cls(len(lower), BOX, tuple(map(float, lower)), tuple(map(float, upper)))

    @classmethod
    def unit_box(cls, dim: int) -> "ExperimentalRegion":
        return cls.box([0.0] * dim, [1.0] * dim)

    @classmethod
    def simplex(cls, dim: int) -> "ExperimentalRegion":
        return cls(dim, SIMPLEX, (0.0,) * dim, (1.0,) * dim)

    @classmethod
    def truncated(
        cls, lower: Sequence[float], upper: Sequence[float], unbounded_axes: Iterable[int]
    ) -> "ExperimentalRegion":
        return cls(
            len(lower), TRUNCATED_BOX, tuple(map(float, lower)), tuple(map(float, upper)),
            frozenset(int(a) for a in unbounded_axes),
        )

    @property
    def is_truncated(self) -> bool:
        return self.kind == TRUNCATED_BOX

    def contains_many(self, X: np.ndarray, tol: float = REGION_TOL) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise WrongDimension(self.dim, X.shape[1])
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        ok = np.all((X >= lo - tol) & (X <= hi + tol), axis=1)
        if self.kind == SIMPLEX:
            ok &= np.abs(X.sum(axis=1) - 1.0) <= tol
        return ok

    def contains(self, x: Sequence[float], tol: float = REGION_TOL) -> bool:
        return bool(self.contains_many(np.asarray(x, dtype=np.float64)[None, :], tol)[0])

    @property
    def contains_origin(self) -> bool:
        return self.contains(np.zeros(self.dim))

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "kind": self.kind, "lower": list(self.lower), "upper": list(self.upper)}
        if self.unbounded_axes:
            d["unbounded_axes"] = sorted(self.unbounded_axes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentalRegion":
        kind = d.get("kind", BOX)
        dim = int(d["dim"])
        if kind == SIMPLEX:
            return cls.simplex(dim)
        return cls(
            dim, kind, tuple(map(float, d["lower"])), tuple(map(float, d["upper"])),
            frozenset(int(a) for a in d.get("unbounded_axes", ())),
        )


@dataclass(frozen=True, eq=False)
class Design:
    """Support points (rows of ``points``) with positive weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    region: ExperimentalRegion

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise EmptyDesign()
        if pts.shape != (w.size, self.region.dim):
            raise WrongDimension(self.region.dim, pts.shape[-1], "support point")
        bad = np.flatnonzero(~(w > 0))
        if bad.size:
            raise NonpositiveWeight(int(bad[0]))
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InputError(f"weights sum to {w.sum()!r}, not 1")
        outside = np.flatnonzero(~self.region.contains_many(pts))
        if outside.size:
            raise PointOutsideRegion(int(outside[0]))
        if w.size > 1 and cKDTree(pts).query_pairs(MERGE_TOL, p=np.inf):
            raise InputError("support points are not mutually distinct")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    def __len__(self) -> int:
        return self.weights.size

    def __iter__(self) -> Iterator[tuple[np.ndarray, float]]:
        return iter(zip(self.points, self.weights.tolist()))

    def __repr__(self) -> str:
        pts = ", ".join(f"{tuple(np.round(x, 6).tolist())}: {w:.6g}" for x, w in self)
        return f"Design({{{pts}}})"

    @property
    def dim(self) -> int:
        return self.region.dim

    def origin_index(self) -> int | None:
        norms = np.max(np.abs(self.points), axis=1)
        hits = np.flatnonzero(norms <= MERGE_TOL)
        return int(hits[0]) if hits.size else None

    @property
    def origin_weight(self) -> float:
        i = self.origin_index()
        return 0.0 if i is None else float(self.weights[i])

    def allclose(self, other: "Design", atol: float = 1e-10) -> bool:
        """Same support (up to ordering) and weights, to ``atol``."""
        if len(self) != len(other) or self.dim != other.dim:
            return False
        used = np.zeros(len(other), dtype=bool)
        for x, w in self:
            d = np.max(np.abs(other.points - x), axis=1)
            d[used] = np.inf
            j = int(np.argmin(d))
            if d[j] > atol or abs(other.weights[j] - w) > atol:
                return False
            used[j] = True
        return True

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "points": [{"x": x.tolist(), "w": w} for x, w in self],
        }


def new_design(points: Sequence[tuple[Sequence[float], float]], region: ExperimentalRegion) -> Design:
    """Build a design, coalescing coincident points and renormalizing weights.

    Points closer than ``MERGE_TOL`` in max-norm are merged (first occurrence
    keeps its position, weights add up).
    """
    if len(points) == 0:
        raise EmptyDesign()
    xs: list[np.ndarray] = []
    ws: list[float] = []
    for i, (x, w) in enumerate(points):
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != region.dim:
            raise WrongDimension(region.dim, x.size, "support point")
        if not w > 0:
            raise NonpositiveWeight(i)
        if not region.contains(x):
            raise PointOutsideRegion(i)
        for j, y in enumerate(xs):
            if np.max(np.abs(x - y)) <= MERGE_TOL:
                ws[j] += float(w)
                break
        else:
            xs.append(x)
            ws.append(float(w))
    w = np.asarray(ws)
    return Design(np.vstack(xs), w / w.sum(), region)


def strip_origin(xi: Design) -> Design:
    """Conditional design given x != 0: drop the origin, rescale by 1/(1 - w0)."""
    i = xi.origin_index()
    if i is None:
        raise OriginNotInSupport()
    if len(xi) == 1:
        raise OnlyOriginSupported()
    keep = np.arange(len(xi)) != i
    return Design(xi.points[keep], xi.weights[keep] / (1.0 - xi.weights[i]), xi.region)


def augment_origin(xi: Design, omega: float) -> Design:
    """Mixture ``omega * (origin) + (1 - omega) * xi``, origin listed first."""
    if not 0.0 < omega < 1.0:
        raise WeightOutOfRange(omega)
    if xi.origin_index() is not None:
        raise OriginAlreadyPresent()
    if not xi.region.contains_origin:
        raise OriginNotInRegion()
    pts = np.vstack([np.zeros(xi.dim), xi.points])
    w = np.concatenate([[omega], (1.0 - omega) * xi.weights])
    return Design(pts, w, xi.region)


@dataclass(frozen=True)
class ParamPoint:
    """Parameter point ``(beta0, slope)``; ``intercept`` is None for no-intercept models.

    For GLM families ``slope`` has one entry per region axis.  For the E-max
    and exponential families it holds the two nonlinear parameters
    ``(beta1, beta2)``.
    """

    intercept: float | None
    slope: tuple[float, ...]

    def __init__(self, intercept: float | None, slope: Sequence[float]) -> None:
        object.__setattr__(self, "intercept", None if intercept is None else float(intercept))
        object.__setattr__(self, "slope", tuple(float(b) for b in np.ravel(slope)))

    @property
    def slope_array(self) -> np.ndarray:
        return np.asarray(self.slope, dtype=np.float64)

    @property
    def p(self) -> int:
        return len(self.slope) + (self.intercept is not None)

    @property
    def full(self) -> np.ndarray:
        head = [] if self.intercept is None else [self.intercept]
        return np.asarray(head + list(self.slope), dtype=np.float64)

    def without_intercept(self) -> "ParamPoint":
        return ParamPoint(None, self.slope)

    def with_intercept(self, beta0: float = 0.0) -> "ParamPoint":
        return ParamPoint(beta0, self.slope)


@dataclass(frozen=True, eq=False)
class Grid:
    """Deterministic lattice of evaluation points inside a region."""

    points: np.ndarray
    resolution: int
    region: ExperimentalRegion

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _frozen(self.points))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def spacing(self) -> float:
        """Smallest lattice step over all axes."""
        widths = np.asarray(self.region.upper) - np.asarray(self.region.lower)
        widths = widths[widths > 0]
        return float(widths.min() / (self.resolution - 1)) if widths.size else 0.0


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # lexicographic order of the leading coordinate first
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def make_grid(region: ExperimentalRegion, resolution: int) -> Grid:
    """Tensor lattice (boxes) or lattice of compositions (simplex), lexicographic."""
    if resolution < 2:
        raise ResolutionTooSmall(resolution)
    if region.kind == SIMPLEX:
        n = resolution - 1
        pts = np.array(list(_compositions(n, region.dim)), dtype=np.float64) / n
    else:
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(region.lower, region.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    return Grid(pts, resolution, region)


__all__ = [
    "BOX",
    "SIMPLEX",
    "TRUNCATED_BOX",
    "MERGE_TOL",
    "Design",
    "ExperimentalRegion",
    "Grid",
    "ParamPoint",
    "augment_origin",
    "make_grid",
    "new_design",
    "strip_origin",
]
