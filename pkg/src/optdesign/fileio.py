"""JSON design files.

Layout::

    {
      "region": {"dim": 2, "kind": "box", "lower": [0, 0], "upper": [1, 1]},
      "model":  {"family": "poisson", "with_intercept": true, "beta": [0, -2, -2]},
      "points": [{"x": [0, 0], "w": 0.3333333333333333}, ...]
    }

``model`` is optional.  For the E-max and exponential families ``beta``
holds only the intercept (or nothing) and ``nonlinear_params`` holds
``(beta1, beta2)``.  A ``null`` entry in ``region.upper`` marks an unbounded
axis; it is replaced by a truncation bound and the region is flagged as
truncated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import BOX, TRUNCATED_BOX, Design, ExperimentalRegion, ParamPoint, new_design
from .errors import InputError
from .models import Family, ModelSpec, check_beta

#: Accepted deviation of the weight sum from one in a design file.
LOAD_WEIGHT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DesignFile:
    region: ExperimentalRegion
    design: Design | None
    model: ModelSpec | None = None
    beta: ParamPoint | None = None

    def require_model(self) -> tuple[ModelSpec, ParamPoint]:
        if self.model is None or self.beta is None:
            raise InputError("the design file has no model block")
        return self.model, self.beta

    def require_design(self) -> Design:
        if self.design is None:
            raise InputError("the design file has no points")
        return self.design


def default_truncation(beta: ParamPoint | None, axis: int, family: Family | None = None) -> float:
    """``10 max(1/|beta_i|, 1)`` for GLM slopes; undefined for other cases."""
    if beta is None or family is None or family.nonlinear:
        raise InputError("unbounded region: pass an explicit truncation bound")
    b = beta.slope[axis]
    if b == 0:
        raise InputError(f"unbounded axis {axis} has zero slope: pass an explicit truncation bound")
    return 10.0 * max(1.0 / abs(b), 1.0)


def region_from_bounds(
    lower, upper, *, simplex: bool = False, truncate: float | None = None,
    beta: ParamPoint | None = None, family: Family | None = None,
) -> ExperimentalRegion:
    """Build a region, truncating axes whose upper bound is None or infinite."""
    if simplex:
        return ExperimentalRegion.simplex(len(lower))
    lo = [float(v) for v in lower]
    hi: list[float] = []
    unbounded = []
    for i, v in enumerate(upper):
        if v is None or math.isinf(float(v)):
            unbounded.append(i)
            hi.append(float(truncate) if truncate is not None else default_truncation(beta, i, family))
        else:
            hi.append(float(v))
    if any(not math.isfinite(v) for v in lo):
        raise InputError("lower bounds must be finite")
    if unbounded:
        return ExperimentalRegion.truncated(lo, hi, unbounded)
    return ExperimentalRegion.box(lo, hi)


def _floats(v, what: str) -> list[float]:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return [float(v)]
    if not isinstance(v, list):
        raise InputError(f"{what} must be a list of numbers")
    try:
        return [float(t) for t in v]
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what} must be a list of numbers") from exc


def parse_model(d: dict, dim: int) -> tuple[ModelSpec, ParamPoint]:
    if not isinstance(d, dict) or "family" not in d:
        raise InputError("model block needs a 'family'")
    try:
        family = Family(d["family"])
    except ValueError as exc:
        raise InputError(f"unknown family {d['family']!r}") from exc
    beta = _floats(d.get("beta", []), "model.beta")
    if family.nonlinear:
        nl = _floats(d.get("nonlinear_params", []), "model.nonlinear_params")
        if len(nl) != 2:
            raise InputError(f"{family.value} needs two nonlinear_params (beta1, beta2)")
        with_icpt = bool(d.get("with_intercept", len(beta) == 1))
        if len(beta) != int(with_icpt):
            raise InputError("model.beta must hold exactly the intercept (or nothing) for nonlinear families")
        m = ModelSpec(family, with_icpt, dim)
        bp = ParamPoint(beta[0] if with_icpt else None, nl)
    else:
        with_icpt = bool(d.get("with_intercept", len(beta) == dim + 1))
        need = dim + int(with_icpt)
        if len(beta) != need:
            raise InputError(f"model.beta has {len(beta)} entries, expected {need}")
        m = ModelSpec(family, with_icpt, dim)
        bp = ParamPoint(beta[0], beta[1:]) if with_icpt else ParamPoint(None, beta)
    check_beta(m, bp)
    return m, bp


def _parse_region(d: dict, beta: ParamPoint | None, family: Family | None, truncate: float | None):
    if not isinstance(d, dict) or "dim" not in d:
        raise InputError("region block needs 'dim'")
    dim = int(d["dim"])
    kind = d.get("kind", BOX)
    if kind == "simplex":
        return ExperimentalRegion.simplex(dim)
    if kind not in (BOX, TRUNCATED_BOX):
        raise InputError(f"unknown region kind {kind!r}")
    lower = d.get("lower", [0.0] * dim)
    upper = d.get("upper")
    if not isinstance(lower, list) or not isinstance(upper, list) or len(lower) != dim or len(upper) != dim:
        raise InputError("region.lower and region.upper must be lists of length dim")
    region = region_from_bounds(lower, upper, truncate=truncate, beta=beta, family=family)
    declared = frozenset(int(a) for a in d.get("unbounded_axes", ()))
    if declared:
        axes = declared | region.unbounded_axes
        region = ExperimentalRegion.truncated(region.lower, region.upper, axes)
    return region


def parse_design_file(doc: dict, truncate: float | None = None) -> DesignFile:
    try:
        return _parse_design_file(doc, truncate)
    except InputError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise InputError(f"malformed design file: {exc}") from exc


def _parse_design_file(doc: dict, truncate: float | None) -> DesignFile:
    if not isinstance(doc, dict) or "region" not in doc:
        raise InputError("design file needs a 'region' block")
    rd = doc["region"]
    dim = int(rd.get("dim", 0)) if isinstance(rd, dict) else 0
    model = beta = None
    if doc.get("model") is not None:
        model, beta = parse_model(doc["model"], dim)
    region = _parse_region(rd, beta, model.family if model else None, truncate)
    pts = doc.get("points")
    if pts is None:
        return DesignFile(region, None, model, beta)
    if not isinstance(pts, list):
        raise InputError("'points' must be a list")
    entries = []
    for i, p in enumerate(pts):
        if not isinstance(p, dict) or "x" not in p or "w" not in p:
            raise InputError(f"point {i} needs 'x' and 'w'")
        x = _floats(p["x"], f"points[{i}].x")
        w = p["w"]
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise InputError(f"points[{i}].w must be a number")
        entries.append((x, float(w)))
    total = math.fsum(w for _, w in entries)
    if entries and abs(total - 1.0) > LOAD_WEIGHT_TOL:
        raise InputError(f"weights sum to {total!r}, not 1 within {LOAD_WEIGHT_TOL:g}")
    return DesignFile(region, new_design(entries, region), model, beta)


def load_design_file(path, truncate: float | None = None) -> DesignFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_design_file(doc, truncate)


def design_document(xi: Design, model: ModelSpec | None = None, beta: ParamPoint | None = None) -> dict:
    doc = {"region": xi.region.to_dict()}
    if model is not None and beta is not None:
        doc["model"] = model.to_dict(beta)
    doc["points"] = [{"x": [float(t) for t in x], "w": float(w)} for x, w in xi]
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def save_design_file(path, xi: Design, model: ModelSpec | None = None, beta: ParamPoint | None = None) -> None:
    Path(path).write_text(dumps(design_document(xi, model, beta)))


def save_json(path, doc: dict) -> None:
    Path(path).write_text(dumps(_plain(doc)))


def _plain(v):
    # numpy scalars/arrays -> JSON-native values
    if isinstance(v, dict):
        return {str(k): _plain(t) for k, t in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(t) for t in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


__all__ = [
    "DesignFile",
    "LOAD_WEIGHT_TOL",
    "default_truncation",
    "design_document",
    "dumps",
    "load_design_file",
    "parse_design_file",
    "parse_model",
    "region_from_bounds",
    "save_design_file",
    "save_json",
]
