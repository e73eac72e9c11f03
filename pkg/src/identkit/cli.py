"""Command-line front end: problem documents in, JSON reports out.

Commands follow the three steps of an identification analysis::

    identkit analyze FILE   # is each estimand identifiable?
    identkit region FILE    # its region at the given observation
    identkit refute FILE    # assumption verdicts and restricted regions
    identkit oracle FILE    # the region by brute-force enumeration only

``FILE`` may also name a bundled example (``identkit examples`` lists them).
Exit codes: 0 analyzed, 1 usage or parse error, 2 infeasible or refuted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from . import case_studies as cs
from .distributions import JointModel, Observation, bounded, fixed, independent, randomized
from .dsl import AssumeDecl, Expr, ProblemSpec, format_number, parse, render, render_expr
from .errors import (
    EmptyUniverse,
    EnumerationOverflow,
    IdentError,
    Infeasible,
    InconsistentObservation,
    InvalidPoint,
    NotLinearizable,
    OutOfRange,
    OutOfSupport,
    SpecError,
    UnreachableObservation,
)
from .regions import (
    Interval,
    ReducedForm,
    RefutabilityVerdict,
    estimand_image_interval,
    lp_feasible_at,
    materialize,
    refutability,
    region_enumerate,
    region_lp,
)
from .relation import induce
from .universe import (
    DEFAULT_CAP,
    DistributionGridUniverse,
    PolytopeUniverse,
    observation_image,
    polytope_feasible,
)
from .values import MISSING, Value, equality_tolerance

log = logging.getLogger("identkit")

COMMANDS = ("analyze", "region", "refute", "oracle")
METHODS = ("auto", "enumerate", "lp")
DEFAULT_GRID_STEP = Fraction(1, 10)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(IdentError):
    pass


# -- compiling a spec ------------------------------------------------------------


def _functional(model: JointModel, e: Expr):
    if e.kind == "expect":
        return model.expect(e.var, e.given)
    if e.kind == "prob":
        return model.prob(e.var, e.value, e.given)
    if e.kind == "dist":
        return model.dist(e.var, e.given)
    return model.mean_diff(e.var, e.other)


def _with_position(exc: IdentError, decl) -> IdentError:
    pos = getattr(decl, "pos", None)
    if pos and pos != (0, 0):
        exc.args = (f"{exc.args[0] if exc.args else exc} (line {pos[0]}, col {pos[1]})",)
    return exc


def _assumption(model: JointModel, a: AssumeDecl):
    args = a.args
    try:
        if a.builtin == "bounded":
            if args[1] > args[2]:
                raise SpecError(f"{a.name}: lower bound exceeds upper bound", *a.pos)
            return bounded(model, args[0], args[1], args[2])
        if a.builtin == "randomized":
            return randomized(model, args[0])
        if a.builtin == "independent":
            if args[0] == args[1]:
                raise SpecError(f"{a.name}: a variable cannot be independent of itself", *a.pos)
            return independent(model, args[0], args[1])
        if args[1] not in model.support(args[0]):
            raise SpecError(f"{a.name}: {format_number(args[1])} is not in the support of {args[0]}", *a.pos)
        if not 0 <= args[2] <= 1:
            raise SpecError(f"{a.name}: {format_number(args[2])} is not a probability", *a.pos)
        return fixed(model, args[0], args[1], args[2])
    except KeyError:  # pragma: no cover - variables are checked at parse time
        raise SpecError(f"{a.name}: unknown variable", *a.pos) from None


@dataclass
class Problem:
    """A checked spec compiled to a joint model, functionals and assumptions."""

    spec: ProblemSpec
    step: Fraction
    cap: int = DEFAULT_CAP
    model: JointModel = field(init=False)
    observation: Observation = field(init=False)
    estimands: dict = field(init=False)
    assumptions: list = field(init=False)

    def __post_init__(self):
        u = self.spec.universe
        self.model = JointModel([(v.name, v.support) for v in u.variables])
        self.observation = Observation([_functional(self.model, e) for e in self.spec.observe])
        self.estimands = {
            est.name: _functional(self.model, est.expr) for est in self.spec.estimands
        }
        self.assumptions = [(a, _assumption(self.model, a)) for a in self.spec.assumptions]
        self._check_given()

    def _check_given(self):
        for b in self.spec.given or ():
            e = b.expr
            if isinstance(b.value, tuple):
                if e.kind != "dist":
                    raise SpecError(f"{render_expr(e)} takes a number, not a list", *e.pos)
                if len(b.value) != len(self.model.support(e.var)):
                    raise SpecError(
                        f"{render_expr(e)} takes {len(self.model.support(e.var))} probabilities",
                        *e.pos,
                    )
            elif b.value is not MISSING and e.kind == "dist":
                raise SpecError(f"{render_expr(e)} takes a list of probabilities", *e.pos)
            elif b.value is MISSING and e.given is None:
                raise SpecError(f"{render_expr(e)} is never missing", *e.pos)

    @property
    def l0(self) -> Optional[tuple]:
        return self.spec.l0()

    @property
    def factor_on(self) -> Optional[str]:
        if self.spec.universe.kind == "population":
            return None
        conds = {e.given[0] for e in self.spec.observe if e.given}
        conds |= {a.margin_of for _, a in self.assumptions if a.margin_of}
        return next(iter(conds)) if len(conds) == 1 else None

    def grid(self, estimand, assumptions=()) -> DistributionGridUniverse:
        return DistributionGridUniverse(
            self.model,
            self.step,
            self.factor_on,
            estimand=estimand,
            observation=self.observation,
            assumptions=tuple(assumptions),
        )

    def polytope(self, estimand, assumptions=()) -> PolytopeUniverse:
        return PolytopeUniverse(self.model, estimand, self.observation, assumptions=tuple(assumptions))


def compile_spec(spec: ProblemSpec, grid_step=None, cap: int = DEFAULT_CAP) -> Problem:
    u = spec.universe
    if grid_step is not None:
        step = Fraction(str(grid_step)) if isinstance(grid_step, float) else Fraction(grid_step)
    elif u.kind == "population":
        step = Fraction(1, u.units)
    elif u.grid_step is not None:
        step = u.grid_step
    else:
        step = DEFAULT_GRID_STEP
    if step <= 0 or (1 / step).denominator != 1:
        raise UsageError(f"grid step {format_number(step)} is not 1/m for an integer m")
    return Problem(spec, step, cap)


# -- closed forms ------------------------------------------------------------------


def _binary_assignment(problem: Problem, z: str) -> bool:
    return tuple(problem.model.support(z)) == (0, 1)


def _bounds_for(problem: Problem, var: str, assumptions) -> tuple:
    """Smallest and largest support points of ``var`` allowed by bounded()."""
    lo_hi = [(d.args[1], d.args[2]) for d, _ in assumptions if d.builtin == "bounded" and d.args[0] == var]
    allowed = [y for y in problem.model.support(var) if all(lo <= y <= hi for lo, hi in lo_hi)]
    if not allowed:
        return None
    return min(allowed), max(allowed)


def _observed(problem: Problem, kind, var, given=None, value=None):
    """Index of a matching observed functional, or None."""
    for i, e in enumerate(problem.spec.observe):
        if e.kind == kind and e.var == var and e.given == given and e.value == value:
            return i
    return None


def closed_form(problem: Problem, name: str, decls) -> Optional[tuple]:
    """(Interval, ReducedForm) when the problem has a known closed form.

    Recognized: a mean with outcomes missing when Z = 0, and the average
    effect of a binary assignment Z on two potential outcomes, each under
    bounded() assumptions (plus randomized(Z) for the latter).
    """
    spec, l0 = problem.spec, problem.l0
    est = next(e.expr for e in spec.estimands if e.name == name)
    names = set(problem.model.names)
    kinds = {d.builtin for d, _ in decls}
    if l0 is None:
        return None

    if est.kind == "expect" and est.given is None and len(names) == 2 and kinds <= {"bounded"}:
        y = est.var
        (z,) = names - {y}
        if not _binary_assignment(problem, z) or len(spec.observe) != 2:
            return None
        i_m = _observed(problem, "expect", y, (z, 1))
        i_q = _observed(problem, "prob", z, None, 1)
        if i_m is None or i_q is None or any(d.args[0] != y for d, _ in decls):
            return None
        bounds = _bounds_for(problem, y, decls)
        point = cs.MissingDataPoint(l0[i_q], l0[i_m], bounds)
        return cs.manski_bounds(point), cs.manski_reduced_form(point)

    if est.kind == "mean_diff" and len(names) == 3 and kinds <= {"bounded", "randomized"}:
        y1, y0 = est.var, est.other
        (z,) = names - {y1, y0}
        if not _binary_assignment(problem, z) or len(spec.observe) != 3:
            return None
        i1 = _observed(problem, "expect", y1, (z, 1))
        i0 = _observed(problem, "expect", y0, (z, 0))
        iq = _observed(problem, "prob", z, None, 1)
        if None in (i1, i0, iq):
            return None
        if any(d.args[0] not in ((z,) if d.builtin == "randomized" else (y1, y0)) for d, _ in decls):
            return None
        point = cs.CausalPoint(
            l0[iq], l0[i1], l0[i0], _bounds_for(problem, y1, decls), _bounds_for(problem, y0, decls)
        )
        rand = "randomized" in kinds
        region = cs.causal_ate_bounds(point, randomized=rand)
        return region, None if rand else cs.causal_reduced_form(point)
    return None


# -- regions -----------------------------------------------------------------------


def _strong_interval(region: Interval, poly: PolytopeUniverse) -> Interval:
    img = estimand_image_interval(poly)
    strong = img is not None and img[0] < img[1] and img == (region.lo, region.hi)
    return Interval(region.lo, region.hi, strong, region.eps, region.witnesses)


def compute_region(problem: Problem, name: str, decls, method: str):
    """(region, method used, reduced form or None) under ``decls``."""
    theta = problem.estimands[name]
    assumptions = tuple(a for _, a in decls)
    l0 = problem.l0
    if method == "auto":
        try:
            found = closed_form(problem, name, decls)
        except InvalidPoint as exc:
            raise Infeasible(f"the given point is impossible: {exc}") from None
        if found is not None:
            region, rf = found
            region = _strong_interval(region, problem.polytope(theta, assumptions))
            return region, "closed_form", rf
    if method in ("auto", "lp") and theta.scalar:
        try:
            return region_lp(problem.polytope(theta, assumptions), l0), "lp", None
        except NotLinearizable as exc:
            if method == "lp":
                raise
            log.info("falling back to enumeration for %s: %s", name, exc)
    elif method == "lp":
        raise NotLinearizable(f"estimand {name} is not a scalar functional")
    grid = problem.grid(theta, assumptions)
    return region_enumerate(grid, _l0_value(l0), problem.cap), "enumeration", None


def _l0_value(l0):
    return Value(tuple(l0))


def check_universe(problem: Problem, method: str):
    """Raise EmptyUniverse naming the first assumption that empties it."""
    kept = []
    theta = next(iter(problem.estimands.values()))
    for decl, a in problem.assumptions:
        kept.append(a)
        if method == "enumerate":
            grid = problem.grid(theta, kept)
            empty = next(iter(grid.states(problem.cap)), None) is None
        else:
            empty = not polytope_feasible(problem.polytope(theta, kept))
        if empty:
            exc = EmptyUniverse(f"no distribution satisfies assumption {decl.name}", decl.name)
            if len(kept) > 1:
                exc = EmptyUniverse(
                    f"assumption {decl.name} contradicts the assumptions before it", decl.name
                )
            raise _with_position(exc, decl)


# -- refutability --------------------------------------------------------------------


def verdict(problem: Problem, decl: AssumeDecl, a, method: str) -> RefutabilityVerdict:
    """A priori verdict on the grid; refutation at l0 on the grid or by LP."""
    theta = next(iter(problem.estimands.values()))
    grid = problem.grid(theta)
    l0 = problem.l0
    if method == "lp":
        sample = [v.payload for v in sorted(observation_image(grid, problem.cap))]
        return refutability(problem.polytope(theta), a, l0, sample=sample)
    try:
        return refutability(grid, a, None if l0 is None else _l0_value(l0), problem.cap)
    except UnreachableObservation:
        if method == "enumerate":
            raise
    # l0 is off the grid: a priori verdict from the grid, refutation by LP
    base = refutability(grid, a, None, problem.cap)
    try:
        refuted = not lp_feasible_at(problem.polytope(theta, (a,)), l0)
    except NotLinearizable:
        refuted = None
    if base.a_priori == "irrefutable" and refuted:
        base = RefutabilityVerdict("refutable")
    return RefutabilityVerdict(base.a_priori, refuted)


# -- serialization -----------------------------------------------------------------------


def _plain(x):
    """JSON-ready form of a value snapped to the equality grid."""
    return _json(Value(x).to_python())


def _json(v):
    if v is MISSING:
        return None
    if isinstance(v, tuple):
        return [_json(x) for x in v]
    if isinstance(v, dict):
        return {k: _json(x) for k, x in v.items()}
    return v


def region_json(region) -> dict:
    if isinstance(region, ReducedForm):
        return {
            "kind": "reduced_form",
            "identified": {k: _json(v.to_python()) for k, v in region.identified.items()},
            "free": region_json(region.free_region),
            "combiner": region.combiner.name,
            "materialized": region_json(materialize(region)),
        }
    if isinstance(region, Interval):
        out = {"kind": "interval", "lo": _plain(region.lo), "hi": _plain(region.hi)}
        if region.eps:
            out["eps"] = region.eps
        return out
    vals = region.python_values()
    out = {"kind": "set", "values": [_json(v) for v in vals]}
    if region.values and all(v.is_scalar for v in region.values):
        out["hull"] = [_json(x) for x in region.hull()]
    return out


def _problem_json(problem: Problem) -> dict:
    spec = problem.spec
    return {
        "universe": spec.universe.kind,
        "variables": {v.name: [_plain(x) for x in v.support] for v in spec.universe.variables},
        "observe": [render_expr(e) for e in spec.observe],
        "given": None if spec.given is None else [_plain(x) for x in problem.l0],
        "assumptions": [d.name for d, _ in problem.assumptions],
    }


# -- commands ----------------------------------------------------------------------


def _everywhere(problem: Problem, theta, decls) -> bool:
    grid = problem.grid(theta, tuple(a for _, a in decls))
    return induce(grid, problem.cap).identifiable_everywhere()


def run(
    spec: ProblemSpec,
    command: str,
    *,
    method: str = "auto",
    grid_step=None,
    cap: int = DEFAULT_CAP,
) -> dict:
    """Run one command and return the report as an ordered dict.

    ``oracle`` always enumerates; the other commands use ``method``.
    """
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}")
    problem = compile_spec(spec, grid_step, cap)
    if command == "oracle":
        method = "enumerate"
    if command in ("region", "oracle") and problem.l0 is None:
        raise UsageError(f"{command} needs a given block with the observed point")

    t0 = time.perf_counter()
    check_universe(problem, method)
    decls = problem.assumptions
    report: dict = {"command": command, "problem": _problem_json(problem)}

    estimands = {}
    for name, theta in problem.estimands.items():
        entry: dict = {}
        if command in ("analyze", "oracle"):
            entry["identifiable_everywhere"] = _everywhere(problem, theta, decls)
        if problem.l0 is not None:
            try:
                region, used, rf = compute_region(problem, name, decls, method)
            except Infeasible:
                if command != "refute":
                    raise
                # the verdicts below say which assumption the data refute
                entry.update(identifiable_at_l0=None, region=None, strong=None, method=None)
                entry["unrestricted_region"] = region_json(compute_region(problem, name, [], method)[0])
                estimands[name] = entry
                continue
            entry["identifiable_at_l0"] = _is_singleton(region)
            entry["region"] = region_json(region)
            entry["strong"] = bool(region.strong)
            entry["method"] = used
            if rf is not None and command == "region":
                entry["reduced_form"] = region_json(rf)
            if command == "refute" and decls:
                free, _, _ = compute_region(problem, name, [], method)
                entry["unrestricted_region"] = region_json(free)
        estimands[name] = entry
    report["estimands"] = estimands

    verdicts = {}
    refuted_any = False
    for decl, a in decls:
        v = verdict(problem, decl, a, method)
        item: dict = {"a_priori": v.a_priori, "refuted_at_l0": v.refuted_at_l0}
        refuted_any |= bool(v.refuted_at_l0)
        if command == "refute" and problem.l0 is not None:
            restricted = {}
            for name in problem.estimands:
                if v.refuted_at_l0:
                    restricted[name] = None
                    continue
                region, _, _ = compute_region(problem, name, [(decl, a)], method)
                restricted[name] = region_json(region)
            item["restricted_regions"] = restricted
        verdicts[decl.name] = item
    report["assumptions"] = verdicts

    grid = problem.grid(next(iter(problem.estimands.values())))
    report["diagnostics"] = {
        "method": method,
        "grid_step": format_number(problem.step),
        "grid_states": grid.size(),
        "cap": cap,
        "refuted": refuted_any,
    }
    log.info("%s finished in %.3fs", command, time.perf_counter() - t0)
    return report


def _is_singleton(region) -> bool:
    if isinstance(region, ReducedForm):
        region = materialize(region)
    return region.is_singleton


# -- bundled examples ---------------------------------------------------------------------


def example_names() -> list:
    root = resources.files("identkit") / "examples"
    return sorted(p.name[: -len(".ident")] for p in root.iterdir() if p.name.endswith(".ident"))


def example_text(name: str) -> str:
    return (resources.files("identkit") / "examples" / f"{name}.ident").read_text(encoding="utf-8")


def load_spec(path_or_name: str) -> ProblemSpec:
    p = Path(path_or_name)
    if p.exists():
        return parse(p.read_text(encoding="utf-8"))
    if path_or_name in example_names():
        return parse(example_text(path_or_name))
    raise UsageError(f"no such file or bundled example: {path_or_name}")


# -- case studies from the command line ---------------------------------------------------


def _case(args) -> dict:
    if args.case == "manski":
        p = cs.MissingDataPoint(args.p_z1, args.mean_z1, tuple(args.bounds))
        return {"case": "manski", "region": region_json(cs.manski_bounds(p))}
    if args.case == "causal":
        c = cs.CausalPoint(args.p_z1, args.mean_z1, args.mean_z0, tuple(args.bounds))
        return {
            "case": "causal",
            "randomized": args.randomized,
            "region": region_json(cs.causal_ate_bounds(c, args.randomized)),
        }
    if args.case == "envelope":
        return {"case": "envelope", "region": region_json(cs.assignment_envelope(args.p_lo, args.p_hi))}
    if args.case == "frechet":
        w, m = cs.frechet_bounds(args.u, args.v)
        return {"case": "frechet", "w": _plain(w), "m": _plain(m)}
    if args.case == "mixture":
        regions = cs.mixture_region(cs.mixture_universe(), (args.mean, args.var))
        return {"case": "mixture", "regions": {k: region_json(r) for k, r in regions.items()}}
    observed = []
    for item in args.observed:
        y, z = item.split(":")
        observed.append((float(y), int(z)))
    region = cs.finite_pop_ate_region(len(observed), args.alphabet, observed)
    return {"case": "finite_population", "region": region_json(region)}


def _case_parser(sub):
    case = sub.add_parser("case", help="evaluate a closed-form case study")
    kinds = case.add_subparsers(dest="case", required=True)
    m = kinds.add_parser("manski", help="mean with outcomes missing when Z = 0")
    m.add_argument("--p-z1", type=Fraction, required=True)
    m.add_argument("--mean-z1", type=Fraction, required=True)
    m.add_argument("--bounds", type=Fraction, nargs=2, default=(0, 1))
    c = kinds.add_parser("causal", help="average treatment effect of a binary assignment")
    c.add_argument("--p-z1", type=Fraction, required=True)
    c.add_argument("--mean-z1", type=Fraction, required=True)
    c.add_argument("--mean-z0", type=Fraction, required=True)
    c.add_argument("--bounds", type=Fraction, nargs=2, default=(0, 1))
    c.add_argument("--randomized", action="store_true")
    e = kinds.add_parser("envelope", help="unobserved-arm range over P(Z=1) in [lo, hi]")
    e.add_argument("p_lo", type=Fraction)
    e.add_argument("p_hi", type=Fraction)
    f = kinds.add_parser("frechet", help="copula bounds W(u, v) and M(u, v)")
    f.add_argument("u", type=Fraction)
    f.add_argument("v", type=Fraction)
    x = kinds.add_parser("mixture", help="two-component mixture grid")
    x.add_argument("mean", type=float)
    x.add_argument("var", type=float)
    p = kinds.add_parser("finite-pop", help="population ATE over all completions")
    p.add_argument("--alphabet", type=float, nargs="+", default=[0.0, 1.0])
    p.add_argument("observed", nargs="+", help="y:z pairs, one per unit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="identkit", description="Identification analysis.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd, help=f"run the {cmd} step")
        p.add_argument("spec", help="problem file or bundled example name")
        p.add_argument("--grid-step", type=Fraction, default=None)
        p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration cap")
        p.add_argument("--eps", type=Fraction, default=None, help="equality tolerance")
        p.add_argument("--method", choices=METHODS, default="auto")
    pr = sub.add_parser("print", help="print a problem in canonical form")
    pr.add_argument("spec")
    sub.add_parser("examples", help="list bundled example problems")
    _case_parser(sub)
    return ap


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _error(exc: Exception, code: int) -> int:
    print(f"identkit: {type(exc).__name__}: {exc}", file=sys.stderr)
    err = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, EmptyUniverse) and exc.assumption:
        err["assumption"] = exc.assumption
    _emit({"error": err})
    return code


USAGE_ERRORS = (SpecError, UsageError, EnumerationOverflow, NotLinearizable, OutOfRange, OutOfSupport)
INFEASIBLE_ERRORS = (Infeasible, EmptyUniverse, UnreachableObservation, InvalidPoint, InconsistentObservation)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "examples":
            for name in example_names():
                print(name)
            return EXIT_OK
        if args.command == "case":
            _emit(_case(args))
            return EXIT_OK
        spec = load_spec(args.spec)
        if args.command == "print":
            sys.stdout.write(render(spec))
            return EXIT_OK
        scope = equality_tolerance(args.eps) if args.eps is not None else nullcontext()
        with scope:
            report = run(spec, args.command, method=args.method, grid_step=args.grid_step, cap=args.cap)
    except USAGE_ERRORS as exc:
        return _error(exc, EXIT_USAGE)
    except INFEASIBLE_ERRORS as exc:
        return _error(exc, EXIT_INFEASIBLE)
    except (ValueError, IdentError) as exc:
        return _error(exc, EXIT_USAGE)
    _emit(report)
    return EXIT_INFEASIBLE if report["diagnostics"]["refuted"] else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
