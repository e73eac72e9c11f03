"""Identification regions and the operations of identification analysis.

Regions come in three shapes: a finite set of estimand values (from
enumeration), a closed interval (from LP extremization or a closed form),
and a reduced form that combines identified components with one free,
strongly non-identifiable component.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence, Union

from .errors import (
    EmptyUniverse,
    Infeasible,
    NonMonotoneCombiner,
    NotLinearizable,
    UncertifiedInput,
    UnreachableObservation,
)
from .relation import induce
from .simplex import maximize, minimize, probability_simplex
from .distributions import complete_pins
from .universe import (
    DEFAULT_CAP,
    _margin_grid,
    pin_rows,
    PolytopeUniverse,
    observation_image,
    polytope_feasible,
    restrict,
)
from .values import MISSING, Value, get_eps, memo_value


# -- region types -----------------------------------------------------------


@dataclass(frozen=True)
class ExplicitSet:
    values: frozenset
    strong: bool = False

    kind = "set"

    def __post_init__(self):
        vals = frozenset(Value.of(v) for v in self.values)
        if not vals:
            raise ValueError("an identification region is never empty")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __contains__(self, v):
        return Value.of(v) in self.values

    def members(self) -> list:
        return sorted(self.values)

    @property
    def is_singleton(self) -> bool:
        return len(self.values) == 1

    def hull(self) -> tuple:
        xs = [v.to_python() for v in self.values]
        return min(xs), max(xs)

    def python_values(self) -> list:
        return [v.to_python() for v in self.members()]


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    strong: bool = False
    eps: float = 0.0  # certification tolerance of the endpoints (0 = exact)
    witnesses: tuple = field(default=(), compare=False, repr=False)

    kind = "interval"

    def __post_init__(self):
        if float(self.lo) > float(self.hi) + max(self.eps, float(get_eps())):
            raise ValueError(f"interval lower end {self.lo} exceeds upper end {self.hi}")

    @property
    def exact(self) -> bool:
        return self.eps == 0 and all(isinstance(x, (int, Fraction)) for x in (self.lo, self.hi))

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def is_singleton(self) -> bool:
        return Value(self.lo) == Value(self.hi)

    def __contains__(self, x):
        tol = max(self.eps, float(get_eps()))
        return float(self.lo) - tol <= float(x) <= float(self.hi) + tol

    def hull(self) -> tuple:
        return float(self.lo), float(self.hi)


@dataclass(frozen=True)
class Combiner:
    """``fn(identified: dict, free) -> value`` with its monotonicity in ``free``."""

    fn: Callable
    name: str = "f"
    monotone: Optional[str] = None  # "increasing", "decreasing" or None

    def __call__(self, identified, free):
        return self.fn(identified, free)


@dataclass(frozen=True)
class ReducedForm:
    identified: Mapping
    free_region: object
    combiner: Combiner
    strong: bool = False

    kind = "reduced_form"

    def __post_init__(self):
        ids = {str(k): _identified_value(v) for k, v in dict(self.identified).items()}
        object.__setattr__(self, "identified", ids)
        if not isinstance(self.free_region, (ExplicitSet, Interval, ReducedForm)):
            raise TypeError("free_region must be a Region")

    def materialize(self):
        return materialize(self)


Region = Union[ExplicitSet, Interval, ReducedForm]


@dataclass(frozen=True)
class RefutabilityVerdict:
    a_priori: str  # "refutable" or "irrefutable"
    refuted_at_l0: Optional[bool] = None

    def __post_init__(self):
        if self.a_priori not in ("refutable", "irrefutable"):
            raise ValueError(f"bad verdict {self.a_priori!r}")
        if self.a_priori == "irrefutable" and self.refuted_at_l0:
            raise ValueError("an a priori irrefutable assumption cannot be refuted")


def hull(region) -> tuple:
    if isinstance(region, ReducedForm):
        region = materialize(region)
    return region.hull()


def region_subset(inner, outer) -> bool:
    """Set inclusion for sets, containment for intervals, hull otherwise."""
    if isinstance(inner, ReducedForm):
        inner = materialize(inner)
    if isinstance(outer, ReducedForm):
        outer = materialize(outer)
    if isinstance(inner, ExplicitSet) and isinstance(outer, ExplicitSet):
        return inner.values <= outer.values
    if isinstance(outer, Interval):
        lo, hi = inner.hull()
        return lo in outer and hi in outer
    lo, hi = inner.hull()
    olo, ohi = outer.hull()
    tol = float(get_eps())
    return olo - tol <= lo and hi <= ohi + tol


def regions_agree(a, b) -> bool:
    """Equality of two regions; a set and an interval agree when hulls match."""
    if isinstance(a, ReducedForm):
        a = materialize(a)
    if isinstance(b, ReducedForm):
        b = materialize(b)
    if isinstance(a, ExplicitSet) and isinstance(b, ExplicitSet):
        return a.values == b.values
    (alo, ahi), (blo, bhi) = a.hull(), b.hull()
    tol = max(getattr(a, "eps", 0.0), getattr(b, "eps", 0.0), float(get_eps()))
    return abs(alo - blo) <= tol and abs(ahi - bhi) <= tol


# -- identifiability certificates ------------------------------------------


@dataclass(frozen=True)
class Identified:
    """A value known to be identified at ``l0``, with how that was shown."""

    value: Value
    provenance: str
    l0: Optional[Value] = None

    def __post_init__(self):
        object.__setattr__(self, "value", Value.of(self.value))
        if self.l0 is not None:
            object.__setattr__(self, "l0", Value.of(self.l0))

    @property
    def payload(self):
        return self.value.payload


def _identified_value(v) -> Value:
    return v.value if isinstance(v, Identified) else Value.of(v)


def identify_by_function(g: Callable, l0) -> Identified:
    """Certificate for theta = g(lambda): the value at l0 is g(l0)."""
    l0 = Value.of(l0)
    return Identified(Value(g(l0.payload)), "function-of-observation", l0)


def identify_by_enumeration(u, l0, cap=DEFAULT_CAP) -> Identified:
    """Certificate from a singleton identification region."""
    region = region_enumerate(u, l0, cap)
    if not region.is_singleton:
        raise UncertifiedInput(f"region at {Value.of(l0).to_python()!r} has {len(region)} values")
    (v,) = region.values
    return Identified(v, "singleton-region", Value.of(l0))


def compose_identifiable(parts: Sequence, f: Callable) -> Identified:
    """f applied to identified parts is identified at the same point."""
    l0 = None
    for p in parts:
        if not isinstance(p, Identified):
            raise UncertifiedInput(f"{p!r} carries no identifiability certificate")
        if p.l0 is not None:
            if l0 is not None and p.l0 != l0:
                raise UncertifiedInput("parts are certified at different observations")
            l0 = p.l0
    value = f(*(p.payload for p in parts))
    return Identified(Value(value), "composition", l0)


# -- reduced forms ----------------------------------------------------------


def reduced_form(identified: Mapping, free, f) -> ReducedForm:
    if not isinstance(f, Combiner):
        f = Combiner(f)
    return ReducedForm(identified, free, f)


def materialize(rf: ReducedForm):
    free = rf.free_region
    if isinstance(free, ReducedForm):
        free = materialize(free)
    ids = {k: v.payload for k, v in rf.identified.items()}
    f = rf.combiner
    if isinstance(free, ExplicitSet):
        return ExplicitSet(frozenset(Value(f(ids, v.payload)) for v in free.values), rf.strong)
    if free.is_singleton:
        x = f(ids, free.lo)
        return Interval(x, x, rf.strong, free.eps)
    if f.monotone not in ("increasing", "decreasing"):
        raise NonMonotoneCombiner(f"combiner {f.name} is not declared monotone; enumerate instead")
    a, b = f(ids, free.lo), f(ids, free.hi)
    lo, hi = (a, b) if float(a) <= float(b) else (b, a)
    return Interval(lo, hi, rf.strong, free.eps)


# -- regions by enumeration -------------------------------------------------


def region_enumerate(u, l0, cap: int = DEFAULT_CAP) -> ExplicitSet:
    """``{theta(S) : lambda(S) = l0}`` by a full scan of ``u``.

    ``strong`` is set when the region equals the image of theta over ``u``
    (grid-relative, defined values only); a one-point image never counts
    as strong.
    """
    l0 = Value.of(l0)
    theta, lam = u.estimand, u.observation
    key = memo_value()
    hits = set()
    image = set()
    for s in u.states(cap):
        t = key(theta(s))
        if t.payload is not MISSING:
            image.add(t)
        if key(lam(s)) == l0:
            hits.add(t)
    if not hits:
        raise UnreachableObservation(f"no state maps to {l0.to_python()!r}")
    return ExplicitSet(frozenset(hits), strong=len(image) > 1 and hits == image)


def is_strongly_nonidentifiable(u, cap: int = DEFAULT_CAP) -> bool:
    """Region equals Img(theta) at every observation (and |Img(theta)| > 1).

    Only defined estimand values count: states where a conditional estimand
    is undefined are left out of Img(theta).
    """
    r = induce(u, cap)
    undefined = Value(MISSING)
    image = r.theta_space - {undefined}
    if len(image) <= 1:
        return False
    # observations under which the estimand is undefined carry no verdict
    return all(
        r.preimage(l) - {undefined} == image
        for l in r.lambda_space
        if r.preimage(l) != {undefined}
    )


# -- regions by LP ----------------------------------------------------------


def _payload(l0):
    if isinstance(l0, Value):
        l0 = l0.payload
    return tuple(MISSING if v is None else v for v in l0)


def _pins(u: PolytopeUniverse, l0) -> dict:
    pins = dict(u.assumption_pins())
    pins.update(u.observation.pins_at(l0))
    return pins


def region_lp(u: PolytopeUniverse, l0, exact: Optional[bool] = None) -> Interval:
    """[min theta, max theta] over pmfs in ``u`` with lambda(p) = l0.

    Raises Infeasible when l0 cannot be produced under the assumptions.
    """
    l0 = _payload(l0)
    n = u.model.n_atoms
    pins = _pins(u, l0)
    system = [probability_simplex(n)]
    system += u.observation.constraints_at(l0, pins)
    system += u.linear_system(pins)
    objective = u.estimand.objective(pins)
    lo = minimize(n, system, objective, exact)
    hi = maximize(n, system, objective, exact)
    img = estimand_image_interval(u, exact)
    tol = max(lo.eps, float(get_eps()))
    strong = (
        img is not None
        and abs(float(img[0] - lo.value)) <= tol
        and abs(float(img[1] - hi.value)) <= tol
        and float(img[1] - img[0]) > tol
    )
    return Interval(lo.value, hi.value, strong, max(lo.eps, hi.eps), witnesses=(lo.x, hi.x))


def estimand_image_interval(u: PolytopeUniverse, exact: Optional[bool] = None):
    """(min, max) of a linear estimand over all of ``u``, ignoring l0.

    Conditional estimands and independence assumptions need a pinned
    margin; that margin is swept over a grid of step 1/10 (cells with zero
    conditioning mass skipped) and the hull is returned, so the result is
    grid-relative in that one margin.  None when nothing linearizes.
    """
    model = u.model
    n = model.n_atoms
    base = complete_pins(model, dict(u.assumption_pins()))
    given = getattr(u.estimand, "given", None)
    needs = {a.margin_of for a in u.assumptions if a.margin_of}
    if given is not None:
        needs.add(given[0])
    needs -= {var for var, _ in base}
    sweeps = [list(_margin_grid(model, v)) for v in sorted(needs)]
    lo = hi = None
    for combo in itertools.product(*sweeps):
        pins = dict(base)
        for d in combo:
            pins.update(d)
        if given is not None and pins.get(given) == 0:
            continue
        try:
            system = [probability_simplex(n), *u.linear_system(pins), *pin_rows(model, pins)]
            obj = u.estimand.objective(pins)
            a = minimize(n, system, obj, exact).value
            b = maximize(n, system, obj, exact).value
        except (NotLinearizable, Infeasible):
            continue
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    return None if lo is None else (lo, hi)


def lp_feasible_at(u: PolytopeUniverse, l0) -> bool:
    l0 = _payload(l0)
    pins = _pins(u, l0)
    extra = u.observation.constraints_at(l0, pins)
    return polytope_feasible(u, pins, extra)


# -- refutability -----------------------------------------------------------


def refutability(u, a, l0=None, cap: int = DEFAULT_CAP, sample=None) -> RefutabilityVerdict:
    """Classify ``a`` as a priori refutable or irrefutable on ``u``.

    Enumerable universes compare observation images exactly.  Polytopes
    check LP feasibility under ``a`` at every observation in ``sample``
    (points reachable without ``a``).
    """
    if isinstance(u, PolytopeUniverse):
        if sample is None:
            raise ValueError("polytope refutability needs a sample of observations")
        ru = PolytopeUniverse(
            u.model, u.estimand, u.observation, u.constraints, tuple(u.assumptions) + (a,)
        )
        irrefutable = all(lp_feasible_at(ru, ell) for ell in sample)
        refuted = None if l0 is None else not lp_feasible_at(ru, l0)
        return RefutabilityVerdict("irrefutable" if irrefutable else "refutable", refuted)

    image = observation_image(u, cap)
    try:
        restricted = observation_image(restrict(u, a, cap), cap)
    except EmptyUniverse:
        restricted = frozenset()
    verdict = "irrefutable" if restricted == image else "refutable"
    refuted = None
    if l0 is not None:
        l0 = Value.of(l0)
        if l0 not in image:
            raise UnreachableObservation(f"{l0.to_python()!r} is not in Img(lambda)")
        refuted = l0 not in restricted
    return RefutabilityVerdict(verdict, refuted)
