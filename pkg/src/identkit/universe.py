"""Statistical universes: enumerable state collections with estimand and
observation mappings, and their restriction by assumptions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Iterator, Optional, Sequence

from .distributions import JointModel, LinearConstraint, Observation, as_fraction
from .errors import (
    EmptyUniverse,
    EnumerationOverflow,
    Infeasible,
    InconsistentObservation,
    NotEnumerable,
    NotLinearizable,
)
from .values import MISSING, Value, get_eps

DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class Assumption:
    """A real-valued function on states, satisfied where it vanishes.

    ``linear_form(pins)`` returns equivalent linear constraints on probability
    vectors; ``pins`` maps ``(variable, value)`` to a fixed probability and is
    needed by forms that are bilinear in general (independence).
    """

    name: str
    constraint: Callable[[Any], float]
    linear_form: Optional[Callable[[dict], list]] = None
    margin_of: Optional[str] = None
    pins: tuple = ()

    def holds(self, state) -> bool:
        return abs(self.constraint(state)) < float(get_eps())

    def linear_constraints(self, pins: dict) -> list:
        if self.linear_form is None:
            raise NotLinearizable(f"assumption {self.name} has no linear form")
        return list(self.linear_form(pins))


ALWAYS = Assumption("always", lambda s: 0.0, lambda pins: [])


class Universe:
    """Base for enumerable universes.

    Subclasses are frozen dataclasses providing ``size`` (count of base
    states before assumption filtering) and ``_iter_base`` (lexicographic).
    """

    enumerable = True

    def size(self) -> int:
        raise NotImplementedError

    def _iter_base(self) -> Iterator:
        raise NotImplementedError

    def _admit(self, states):
        if not self.assumptions:
            return states
        checks = self.assumptions
        return (s for s in states if all(a.holds(s) for a in checks))

    def iter_range(self, start: int, stop: int) -> Iterator:
        base = self._iter_base()
        if start or stop < self.size():
            base = itertools.islice(base, start, stop)
        return self._admit(base)

    def states(self, cap: int = DEFAULT_CAP) -> Iterator:
        check_cap(self, cap)
        return self._admit(self._iter_base())

    def with_maps(self, estimand=None, observation=None) -> "Universe":
        changes = {}
        if estimand is not None:
            changes["estimand"] = estimand
        if observation is not None:
            changes["observation"] = observation
        return replace(self, **changes)


def check_cap(u, cap) -> int:
    if not getattr(u, "enumerable", False):
        raise NotEnumerable(f"{type(u).__name__} is extremized, not enumerated")
    size = u.size()
    if size > cap:
        raise EnumerationOverflow(size, cap)
    return size


@dataclass(frozen=True)
class ExplicitUniverse(Universe):
    items: tuple
    estimand: Callable = None
    observation: Callable = None
    assumptions: tuple = ()

    def size(self):
        return len(self.items)

    def _iter_base(self):
        return iter(self.items)


@dataclass(frozen=True)
class GridAxis:
    name: str
    lo: Any
    hi: Any
    step: Any

    def __post_init__(self):
        if as_fraction(self.step) <= 0:
            raise ValueError(f"axis {self.name}: step must be positive")
        if as_fraction(self.lo) > as_fraction(self.hi):
            raise ValueError(f"axis {self.name}: lo > hi")

    @property
    def points(self) -> tuple:
        lo, hi, step = as_fraction(self.lo), as_fraction(self.hi), as_fraction(self.step)
        n = math.floor((hi - lo) / step) + 1
        return tuple(float(lo + k * step) for k in range(n))


@dataclass(frozen=True)
class GridUniverse(Universe):
    """Parameter box; states are tuples of grid coordinates."""

    axes: tuple
    estimand: Callable = None
    observation: Callable = None
    assumptions: tuple = ()

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    def size(self):
        return math.prod(len(a.points) for a in self.axes)

    def _iter_base(self):
        return itertools.product(*(a.points for a in self.axes))


def compositions(m: int, k: int) -> Iterator[tuple]:
    """All k-tuples of nonnegative ints summing to m, lexicographic."""
    if k == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in compositions(m - first, k - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class DistributionGridUniverse(Universe):
    """Joint pmfs over ``model`` with masses on a grid of step ``step``.

    With ``factor_on`` set, a state is built as P(z) * P(rest | z), each
    factor on the grid, which is how missing-data and causal problems
    are usually parametrized.  States are joint probability tuples.
    """

    model: JointModel
    step: Any
    factor_on: Optional[str] = None
    estimand: Callable = None
    observation: Callable = None
    assumptions: tuple = ()

    def __post_init__(self):
        inv = 1 / as_fraction(self.step)
        if inv.denominator != 1 or inv <= 0:
            raise ValueError("grid step must be 1/m for a positive integer m")
        if self.factor_on is not None:
            self.model.position(self.factor_on)

    @property
    def m(self) -> int:
        return int(1 / as_fraction(self.step))

    def _factor_layout(self):
        jz = self.model.position(self.factor_on)
        zs = self.model.support(self.factor_on)
        rest_keys = []
        layout = []
        for a in self.model.atoms:
            rest = a[:jz] + a[jz + 1 :]
            if rest not in rest_keys:
                rest_keys.append(rest)
            layout.append((zs.index(a[jz]), rest_keys.index(rest)))
        return len(zs), len(rest_keys), layout

    def size(self):
        m, k = self.m, self.model.n_atoms
        if self.factor_on is None:
            return math.comb(m + k - 1, k - 1)
        kz, r, _ = self._factor_layout()
        return math.comb(m + kz - 1, kz - 1) * math.comb(m + r - 1, r - 1) ** kz

    def _iter_base(self):
        m, k = self.m, self.model.n_atoms
        if self.factor_on is None:
            for c in compositions(m, k):
                yield tuple(x / m for x in c)
            return
        kz, r, layout = self._factor_layout()
        mm = m * m
        conds = list(compositions(m, r))
        for cz in compositions(m, kz):
            for tables in itertools.product(conds, repeat=kz):
                yield tuple(cz[zi] * tables[zi][ri] / mm for zi, ri in layout)


@dataclass(frozen=True)
class PopulationState:
    """Potential outcomes and assignments of N labelled units.

    In the missing-data variant ``y0`` is None and ``y1`` holds the outcomes.
    """

    z: tuple
    y1: tuple
    y0: Optional[tuple] = None

    @property
    def n(self) -> int:
        return len(self.z)

    def observed(self) -> tuple:
        if self.y0 is None:
            return tuple(y if zi == 1 else MISSING for y, zi in zip(self.y1, self.z))
        return tuple(a if zi == 1 else b for a, b, zi in zip(self.y1, self.y0, self.z))


def population_observation(s: PopulationState):
    """The observed data (Y*, Z)."""
    return (s.observed(), s.z)


def population_mean(s: PopulationState):
    return sum(s.y1) / s.n


def population_ate(s: PopulationState):
    return (sum(s.y1) - sum(s.y0)) / s.n


def unit_outcome(i: int, arm: int = 1):
    def theta(s: PopulationState):
        if s.y0 is None:
            return s.y1[i]
        return s.y1[i] if arm == 1 else s.y0[i]

    return theta


@dataclass(frozen=True)
class FinitePopulationUniverse(Universe):
    """Outcome tables of ``n`` units over a finite alphabet.

    ``assignments`` lists the admissible Z vectors.  ``fixed`` maps cells
    ``(arm, unit)`` to known values; every other cell ranges over the
    alphabet.  ``arm`` is 1 or 0 (0 only in the causal variant).
    """

    n: int
    alphabet: tuple
    causal: bool = True
    assignments: tuple = None
    fixed: tuple = ()
    estimand: Callable = None
    observation: Callable = population_observation
    assumptions: tuple = ()

    def __post_init__(self):
        if self.assignments is None:
            object.__setattr__(
                self, "assignments", tuple(itertools.product((0, 1), repeat=self.n))
            )

    def _cells(self):
        arms = (1, 0) if self.causal else (1,)
        fixed = dict(self.fixed)
        free = [(arm, i) for arm in arms for i in range(self.n) if (arm, i) not in fixed]
        return arms, fixed, free

    def size(self):
        _, _, free = self._cells()
        return len(self.assignments) * len(self.alphabet) ** len(free)

    def _iter_base(self):
        arms, fixed, free = self._cells()
        for z in self.assignments:
            for fill in itertools.product(self.alphabet, repeat=len(free)):
                cells = dict(fixed)
                cells.update(zip(free, fill))
                y1 = tuple(cells[(1, i)] for i in range(self.n))
                y0 = tuple(cells[(0, i)] for i in range(self.n)) if self.causal else None
                yield PopulationState(tuple(z), y1, y0)


@dataclass(frozen=True)
class PolytopeUniverse:
    """All pmfs over ``model`` meeting linear ``constraints``.

    Not enumerable; regions over it are computed by LP extremization.
    ``estimand`` must be a scalar functional and ``observation`` an
    :class:`Observation` for that route.
    """

    model: JointModel
    estimand: Any = None
    observation: Optional[Observation] = None
    constraints: tuple = ()
    assumptions: tuple = ()

    enumerable = False

    def size(self):
        raise NotEnumerable("polytope universes are not enumerable")

    def with_maps(self, estimand=None, observation=None):
        changes = {}
        if estimand is not None:
            changes["estimand"] = estimand
        if observation is not None:
            changes["observation"] = observation
        return replace(self, **changes)

    def assumption_pins(self) -> dict:
        pins = {}
        for a in self.assumptions:
            pins.update(dict(a.pins))
        return pins

    def linear_system(self, pins: dict) -> list:
        """Constraints from the universe and its assumptions under ``pins``."""
        out = list(self.constraints)
        for a in self.assumptions:
            out.extend(a.linear_constraints(pins))
        return out


def enumerate_states(u, cap: int = DEFAULT_CAP) -> Iterator:
    """Deterministic stream of the states of an enumerable universe."""
    if isinstance(u, PolytopeUniverse):
        raise NotEnumerable("polytope universes are extremized, not enumerated")
    return u.states(cap)


def _margin_grid(model, var, steps=10):
    """Pin dictionaries sweeping the margin of ``var`` over a coarse grid."""
    sup = model.support(var)
    for c in compositions(steps, len(sup)):
        yield {(var, v): Fraction(k, steps) for v, k in zip(sup, c)}


def pin_rows(model, pins: dict) -> list:
    """Constraints P(var = val) = q for every pinned margin cell."""
    return [
        LinearConstraint(tuple((i, Fraction(1)) for i in model.event(var, val)), q, "=")
        for (var, val), q in pins.items()
    ]


def polytope_feasible(u: PolytopeUniverse, pins: Optional[dict] = None, extra=()) -> bool:
    """Whether some pmf meets every constraint of ``u`` (and ``extra``).

    Assumptions linear only under a pinned margin (independence) are tried
    over a coarse grid of that margin when it is not pinned already.
    """
    from .simplex import feasible_point, probability_simplex

    base_pins = dict(u.assumption_pins())
    if pins:
        base_pins.update(pins)
    needs = sorted(
        {a.margin_of for a in u.assumptions if a.margin_of}
        - {var for (var, _) in base_pins}
    )
    sweeps = [list(_margin_grid(u.model, v)) for v in needs]
    for combo in itertools.product(*sweeps) if sweeps else [()]:
        pins_k = dict(base_pins)
        for d in combo:
            pins_k.update(d)
        system = [probability_simplex(u.model.n_atoms), *extra, *u.linear_system(pins_k)]
        system += pin_rows(u.model, pins_k)
        try:
            feasible_point(u.model.n_atoms, system)
            return True
        except Infeasible:
            continue
    return False


def restrict(u, a: Assumption, cap: int = DEFAULT_CAP):
    """The sub-universe of states satisfying ``a``.

    Raises EmptyUniverse when nothing survives.
    """
    new = replace(u, assumptions=tuple(u.assumptions) + (a,))
    if isinstance(u, PolytopeUniverse):
        if not polytope_feasible(new):
            raise EmptyUniverse(f"no distribution satisfies assumption {a.name}", a.name)
        return new
    if next(iter(new.states(cap)), None) is None:
        raise EmptyUniverse(f"no state satisfies assumption {a.name}", a.name)
    return new


def observation_image(u, cap: int = DEFAULT_CAP) -> frozenset:
    """``{lambda(S) : S in u}`` as canonical values."""
    lam = u.observation
    return frozenset(Value(lam(s)) for s in enumerate_states(u, cap))


def estimand_image(u, cap: int = DEFAULT_CAP) -> frozenset:
    theta = u.estimand
    return frozenset(Value(theta(s)) for s in enumerate_states(u, cap))


def finite_population(
    n: int,
    alphabet: Sequence,
    observed: Sequence[tuple],
    variant: str = "causal",
    estimand: Optional[Callable] = None,
) -> FinitePopulationUniverse:
    """Universe of all completions of observed unit-level data.

    ``observed`` is a list of ``(y_star, z)`` pairs.  In the ``"missing"``
    variant y_star must be MISSING exactly when z == 0; in the ``"causal"``
    variant y_star is always observed and the counterfactual cell is free.
    """
    if variant not in ("causal", "missing"):
        raise ValueError("variant must be 'causal' or 'missing'")
    if len(observed) != n:
        raise InconsistentObservation(f"expected {n} observed units, got {len(observed)}")
    alphabet = tuple(alphabet)
    keys = {Value(a) for a in alphabet}
    fixed = []
    zs = []
    for i, (y, z) in enumerate(observed):
        if z not in (0, 1):
            raise InconsistentObservation(f"unit {i}: assignment must be 0 or 1, got {z!r}")
        zs.append(int(z))
        if y is MISSING or y is None:
            if variant == "causal" or z == 1:
                raise InconsistentObservation(f"unit {i}: outcome missing under Z={z}")
            continue
        if variant == "missing" and z == 0:
            raise InconsistentObservation(f"unit {i}: outcome observed although Z=0")
        if Value(y) not in keys:
            raise InconsistentObservation(f"unit {i}: observed value {y!r} not in alphabet")
        fixed.append(((z if variant == "causal" else 1, i), y))
    causal = variant == "causal"
    if estimand is None:
        estimand = population_ate if causal else population_mean
    return FinitePopulationUniverse(
        n=n,
        alphabet=alphabet,
        causal=causal,
        assignments=(tuple(zs),),
        fixed=tuple(fixed),
        estimand=estimand,
    )
