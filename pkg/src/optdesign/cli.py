"""Command-line front end.

Exit codes: 0 success or certified, 1 check failed, 2 input error,
3 numerical singularity, 4 no convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .design import make_grid
from .equivalence import DEFAULT_RESOLUTION, DEFAULT_SLACK, verify_local_optimality, write_sensitivity_csv
from .errors import (
    CertificationError,
    InputError,
    NoConvergence,
    NumericalError,
    OptDesignError,
    ResolutionTooSmall,
)
from .fileio import (
    design_document,
    dumps,
    load_design_file,
    parse_model,
    region_from_bounds,
    save_json,
)
from .infomat import Criterion, criterion_value, info_matrix
from .models import Family, logistic_ustar_equation, solve_logistic_ustar
from .optimizer import OptimizerConfig, cluster, run_optimizer
from .transfer import TO_INTERCEPT, TO_NO_INTERCEPT, transfer_to_intercept, transfer_to_no_intercept

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_SINGULAR, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4

log = logging.getLogger("optdesign")


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[Path, ...]
    outputs: tuple[Path, ...]
    criterion: Criterion
    grid_res: int
    slack: float
    truncate: float | None

    @classmethod
    def from_args(cls, a: argparse.Namespace) -> "RunConfig":
        inputs = tuple(Path(p) for p in (getattr(a, "design", None), getattr(a, "from_file", None)) if p)
        outputs = tuple(
            Path(p) for p in (getattr(a, k, None) for k in ("output", "report", "emit_sensitivity")) if p
        )
        return cls(
            command=a.command,
            inputs=inputs,
            outputs=outputs,
            criterion=Criterion.parse(getattr(a, "criterion", "d")),
            grid_res=getattr(a, "grid_res", DEFAULT_RESOLUTION),
            slack=getattr(a, "slack", DEFAULT_SLACK),
            truncate=getattr(a, "truncate", None),
        )

    def validate(self) -> None:
        for p in self.inputs:
            if not p.is_file():
                raise InputError(f"input file not found: {p}")
        for p in self.outputs:
            parent = p.parent if str(p.parent) else Path(".")
            if not parent.is_dir():
                raise InputError(f"output directory does not exist: {parent}")
        if self.grid_res < 2:
            raise ResolutionTooSmall(self.grid_res)
        if not self.slack >= 0:
            raise InputError(f"slack must be nonnegative, got {self.slack}")
        if self.truncate is not None and not self.truncate > 0:
            raise InputError(f"truncation bound must be positive, got {self.truncate}")


def _numbers(tokens: list[str] | None) -> list[float] | None:
    if tokens is None:
        return None
    out: list[float] = []
    for tok in tokens:
        for part in tok.replace(",", " ").split():
            try:
                out.append(float(part))
            except ValueError as exc:
                raise InputError(f"not a number: {part!r}") from exc
    return out


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
        print(f"wrote {path}")


def cmd_eval(a, cfg: RunConfig) -> int:
    df = load_design_file(a.design, cfg.truncate)
    m, beta = df.require_model()
    value = criterion_value(info_matrix(df.require_design(), m, beta), cfg.criterion)
    label = "det(M^-1)" if cfg.criterion is Criterion.D else "tr(M^-1)"
    print(f"{cfg.criterion.value}-criterion {label} = {value:.12g}")
    return EXIT_OK


def cmd_verify(a, cfg: RunConfig) -> int:
    df = load_design_file(a.design, cfg.truncate)
    m, beta = df.require_model()
    xi = df.require_design()
    grid = make_grid(xi.region, cfg.grid_res)
    rep = verify_local_optimality(xi, m, beta, cfg.criterion, grid, cfg.slack)
    print(rep.summary())
    if a.emit_sensitivity:
        write_sensitivity_csv(a.emit_sensitivity, grid, rep)
    if a.report:
        save_json(a.report, rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_transfer(a, cfg: RunConfig) -> int:
    df = load_design_file(a.design, cfg.truncate)
    m, beta = df.require_model()
    xi = df.require_design()
    direction = a.direction
    if direction is None:
        direction = "to-no-intercept" if xi.origin_index() is not None else "to-intercept"
    grid = make_grid(xi.region, cfg.grid_res)
    fn = transfer_to_no_intercept if direction == "to-no-intercept" else transfer_to_intercept
    try:
        rep = fn(xi, m, beta, cfg.criterion, grid, cfg.slack)
    except CertificationError as exc:
        print(f"NOT CERTIFIED ({type(exc).__name__}): {exc}")
        if a.report:
            save_json(a.report, {
                "certified": False,
                "direction": TO_NO_INTERCEPT if direction == "to-no-intercept" else TO_INTERCEPT,
                "criterion": cfg.criterion.value,
                "failed": type(exc).__name__,
                "message": str(exc),
            })
        return EXIT_FAILED
    if rep.direction == TO_NO_INTERCEPT:
        out_model, out_beta = m.as_no_intercept(), beta.without_intercept()
    else:
        out_model = m.as_intercept()
        out_beta = beta if beta.intercept is not None else beta.with_intercept(0.0)
    status = "CERTIFIED" if rep.verified else "CERTIFIED BUT NOT VERIFIED"
    print(f"{status}: {rep.direction}, {rep.criterion.value}-criterion, route {rep.route}")
    print(f"  origin weight {rep.origin_weight:.12g}, c = {[round(float(t), 12) for t in rep.certificate.c]}")
    print(f"  tau~ = {rep.tau_tilde:.12g}, condition margin {rep.condition_margin:.6g}, "
          f"max |T2| on support {rep.t2_support_max:.3g}")
    if rep.truncated:
        print(f"  region TRUNCATED; grid resolution {rep.grid_resolution}")
    for x, w in rep.result:
        print(f"  {[round(float(t), 12) for t in x]}: {w:.12g}")
    if a.report:
        d = rep.to_dict()
        d["certified"] = bool(rep.verified)
        save_json(a.report, d)
    _emit(dumps(design_document(rep.result, out_model, out_beta)), a.output)
    return EXIT_OK if rep.verified else EXIT_FAILED


def _optimize_problem(a, cfg: RunConfig):
    if a.from_file:
        df = load_design_file(a.from_file, cfg.truncate)
        m, beta = df.require_model()
        return m, beta, df.region
    if a.family is None:
        raise InputError("optimize needs --family (or --from FILE)")
    family = Family(a.family)
    if a.simplex is not None:
        dim = a.simplex
        lower, upper = [0.0] * dim, [1.0] * dim
    else:
        lower, upper = _numbers(a.lower), _numbers(a.upper)
        if lower is None or upper is None:
            raise InputError("optimize needs --lower and --upper (or --simplex DIM)")
        if len(lower) != len(upper):
            raise InputError("--lower and --upper differ in length")
        dim = len(lower)
    model = {"family": family.value, "with_intercept": not a.no_intercept, "beta": _numbers(a.beta) or []}
    if family.nonlinear:
        model["nonlinear_params"] = _numbers(a.nonlinear_params) or []
    m, beta = parse_model(model, dim)
    region = region_from_bounds(lower, upper, simplex=a.simplex is not None, truncate=cfg.truncate,
                                beta=beta, family=family)
    return m, beta, region


def cmd_optimize(a, cfg: RunConfig) -> int:
    m, beta, region = _optimize_problem(a, cfg)
    grid = make_grid(region, cfg.grid_res)
    res = run_optimizer(m, beta, OptimizerConfig(grid, cfg.criterion, max_iters=a.max_iters, tol=a.tol))
    xi = res.design
    if not a.no_cluster:
        radius = a.cluster_radius if a.cluster_radius is not None else 2.0 * grid.spacing
        xi = cluster(xi, radius)
    print(f"converged after {res.iterations} iterations, max sensitivity excess {res.max_excess:.3e}")
    for x, w in xi:
        print(f"  {[round(float(t), 12) for t in x]}: {w:.12g}")
    _emit(dumps(design_document(xi, m, beta)), a.output)
    return EXIT_OK


def cmd_ustar(a, cfg: RunConfig) -> int:
    u = solve_logistic_ustar()
    print(f"u* = {u:.12g}")
    print(f"residual |g(u*)| = {abs(logistic_ustar_equation(u))!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optdesign", description="Locally optimal designs with and without intercept.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--criterion", type=str.lower, choices=["d", "a"], default="d")
        sp.add_argument("--truncate", type=float, metavar="B", help="upper bound replacing unbounded axes")
        if grid:
            sp.add_argument("--grid-res", type=int, default=DEFAULT_RESOLUTION, metavar="N")
            sp.add_argument("--slack", type=float, default=DEFAULT_SLACK)

    sp = sub.add_parser("eval", help="criterion value of a design")
    sp.add_argument("design")
    common(sp, grid=False)

    sp = sub.add_parser("verify", help="grid check of the equivalence theorem")
    sp.add_argument("design")
    common(sp)
    sp.add_argument("--emit-sensitivity", metavar="PATH", help="CSV of the sensitivity on the grid")
    sp.add_argument("--report", metavar="PATH", help="JSON report")

    sp = sub.add_parser("transfer", help="move an optimal design between intercept and no-intercept models")
    sp.add_argument("design")
    common(sp)
    sp.add_argument("--direction", choices=["to-intercept", "to-no-intercept"],
                    help="default: to-no-intercept when the origin is a support point")
    sp.add_argument("--report", metavar="PATH", help="JSON report")
    sp.add_argument("-o", "--output", metavar="PATH", help="resulting design file (default: stdout)")

    sp = sub.add_parser("optimize", help="optimal design on a candidate grid")
    common(sp)
    sp.add_argument("--from", dest="from_file", metavar="FILE", help="take region and model from a design file")
    sp.add_argument("--family", choices=[f.value for f in Family])
    sp.add_argument("--beta", nargs="+", metavar="B", help="parameters, intercept first (comma or space separated)")
    sp.add_argument("--nonlinear-params", nargs="+", metavar="B", help="(beta1, beta2) for emax/exponential")
    sp.add_argument("--no-intercept", action="store_true")
    sp.add_argument("--lower", nargs="+")
    sp.add_argument("--upper", nargs="+", help="use 'inf' for unbounded axes")
    sp.add_argument("--simplex", type=int, metavar="DIM")
    sp.add_argument("--max-iters", type=int, default=50_000)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--cluster-radius", type=float, help="default: two grid spacings")
    sp.add_argument("--no-cluster", action="store_true")
    sp.add_argument("-o", "--output", metavar="PATH", help="resulting design file (default: stdout)")

    sub.add_parser("ustar", help="root of the logistic support equation")
    return p


COMMANDS = {
    "eval": cmd_eval,
    "verify": cmd_verify,
    "transfer": cmd_transfer,
    "optimize": cmd_optimize,
    "ustar": cmd_ustar,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    for attr in ("output", "report", "emit_sensitivity"):
        if getattr(a, attr, None):
            setattr(a, attr, Path(getattr(a, attr)))
    try:
        cfg = RunConfig.from_args(a)
        cfg.validate()
        return COMMANDS[a.command](a, cfg)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except CertificationError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (InputError, OptDesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
