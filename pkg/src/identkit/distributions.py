"""Discrete joint distributions, their functionals, and builtin assumptions.

A :class:`JointModel` fixes finitely many variables with finite supports; a
state is a probability vector over the lexicographically ordered atoms of
the product support.  Functionals evaluate on such vectors (floats, for
enumeration) and also emit exact linear constraints at a given value (for
LP extremization).  Conditional functionals are linear only once the
probability of the conditioning event is pinned by the observation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import NotLinearizable
from .values import MISSING

_TINY = 1e-15


def as_fraction(x) -> Fraction:
    """Exact rational for a decimal literal or float (0.6 -> 3/5)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * p[i]) (sense) rhs`` with sparse coefficients."""

    coeffs: tuple  # ((atom index, Fraction), ...)
    rhs: Fraction
    sense: str = "="  # one of "=", "<=", ">="

    def residual(self, p) -> float:
        lhs = sum(float(c) * float(p[i]) for i, c in self.coeffs)
        gap = lhs - float(self.rhs)
        if self.sense == "=":
            return abs(gap)
        if self.sense == "<=":
            return max(gap, 0.0)
        return max(-gap, 0.0)


def _constraint(coeffs: dict, rhs, sense="=") -> LinearConstraint:
    items = tuple(sorted((i, Fraction(c)) for i, c in coeffs.items() if c != 0))
    return LinearConstraint(items, Fraction(rhs), sense)


CONTRADICTION = LinearConstraint((), Fraction(1), "=")


class JointModel:
    """Variables with finite supports and the atoms of their product."""

    def __init__(self, variables: Sequence[tuple[str, Sequence]]):
        names = [name for name, _ in variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable name")
        self.names = tuple(names)
        self.supports = tuple(tuple(as_fraction(v) for v in support) for _, support in variables)
        for name, sup in zip(self.names, self.supports):
            if not sup or len(set(sup)) != len(sup):
                raise ValueError(f"support of {name} must be nonempty and distinct")
        self.atoms = tuple(itertools.product(*self.supports))
        self.float_atoms = tuple(tuple(float(v) for v in a) for a in self.atoms)
        self._pos = {n: i for i, n in enumerate(self.names)}
        self._event_cache: dict = {}

    def __repr__(self):
        parts = ", ".join(f"{n}:{[str(v) for v in s]}" for n, s in zip(self.names, self.supports))
        return f"JointModel({parts})"

    def __eq__(self, other):
        return (
            isinstance(other, JointModel)
            and self.names == other.names
            and self.supports == other.supports
        )

    def __hash__(self):
        return hash((self.names, self.supports))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def position(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def support(self, name: str) -> tuple:
        return self.supports[self.position(name)]

    def event(self, name: str, value) -> tuple:
        """Atom indices where ``name == value``."""
        key = (name, as_fraction(value))
        if key not in self._event_cache:
            j = self.position(name)
            self._event_cache[key] = tuple(i for i, a in enumerate(self.atoms) if a[j] == key[1])
        return self._event_cache[key]

    def expect(self, var, given=None) -> "Expect":
        return Expect(self, var, given)

    def prob(self, var, value, given=None) -> "Prob":
        return Prob(self, var, value, given)

    def dist(self, var, given=None) -> "Dist":
        return Dist(self, var, given)

    def mean_diff(self, a, b) -> "MeanDiff":
        return MeanDiff(self, a, b)

    def margin(self, p, names: Sequence[str]) -> dict:
        """Marginal pmf over ``names`` as ``{value tuple: prob}``."""
        js = [self.position(n) for n in names]
        out: dict = {}
        for a, pi in zip(self.atoms, p):
            k = tuple(a[j] for j in js)
            out[k] = out.get(k, 0.0) + pi
        return out


def _given_key(model, given):
    if given is None:
        return None
    var, value = given
    model.position(var)
    return (var, as_fraction(value))


def complete_pins(model: JointModel, pins: dict) -> dict:
    """Fill in the last support value of any variable pinned on all others."""
    pins = dict(pins)
    for name, sup in zip(model.names, model.supports):
        known = [v for v in sup if (name, v) in pins]
        if len(known) == len(sup) - 1:
            rest = next(v for v in sup if (name, v) not in pins)
            pins[(name, rest)] = 1 - sum(pins[(name, v)] for v in known)
    return pins


class Functional:
    """A map from probability vectors to values, optionally linearizable."""

    model: JointModel
    scalar = True

    def __call__(self, p):
        raise NotImplementedError

    def constraints_at(self, value, pins: dict) -> list:
        raise NotLinearizable(f"{self.label} has no linear form")

    def objective(self, pins: dict) -> list:
        raise NotLinearizable(f"{self.label} is not a linear estimand")

    def pins_from(self, value) -> dict:
        return {}

    @property
    def label(self) -> str:
        return repr(self)


class _Conditional(Functional):
    """E[h(atom) | given] for a per-atom score h."""

    def __init__(self, model, given):
        self.model = model
        self.given = _given_key(model, given)

    def _scores(self) -> tuple:
        raise NotImplementedError

    def _cond_atoms(self):
        if self.given is None:
            return range(self.model.n_atoms)
        return self.model.event(*self.given)

    def __call__(self, p):
        h = self._float_scores
        idx = self._cond_atoms()
        num = sum(h[i] * p[i] for i in idx)
        if self.given is None:
            return num
        den = sum(p[i] for i in idx)
        if den <= _TINY:
            return MISSING
        return num / den

    @property
    def _float_scores(self):
        cached = getattr(self, "_fs", None)
        if cached is None:
            cached = self._fs = tuple(float(h) for h in self._scores())
        return cached

    def _cond_mass(self, pins):
        """Pinned probability of the conditioning event, or raise."""
        try:
            return pins[self.given]
        except KeyError:
            raise NotLinearizable(
                f"{self.label}: P({self.given[0]}={self.given[1]}) is not pinned by the observation"
            ) from None

    def constraints_at(self, value, pins):
        h = self._scores()
        if self.given is None:
            if value is MISSING:
                return [CONTRADICTION]
            return [_constraint({i: h[i] for i in range(len(h))}, as_fraction(value))]
        idx = self._cond_atoms()
        if value is MISSING:
            return [_constraint({i: 1 for i in idx}, 0)]
        if self.given in pins and pins[self.given] == 0:
            return [CONTRADICTION]
        self._cond_mass(pins)
        c = as_fraction(value)
        return [_constraint({i: h[i] - c for i in idx}, 0)]

    def objective(self, pins):
        h = self._scores()
        coef = [Fraction(0)] * self.model.n_atoms
        if self.given is None:
            return [Fraction(x) for x in h]
        q = self._cond_mass(pins)
        if q == 0:
            raise NotLinearizable(f"{self.label} is undefined: conditioning event has mass 0")
        for i in self._cond_atoms():
            coef[i] = h[i] / q
        return coef

    def _given_text(self):
        if self.given is None:
            return ""
        return f" | {self.given[0]}={_num(self.given[1])}"


class Expect(_Conditional):
    def __init__(self, model, var, given=None):
        super().__init__(model, given)
        self.var = var
        self._j = model.position(var)

    def _scores(self):
        return tuple(a[self._j] for a in self.model.atoms)

    def __repr__(self):
        return f"expect({self.var}{self._given_text()})"


class Prob(_Conditional):
    def __init__(self, model, var, value, given=None):
        super().__init__(model, given)
        self.var = var
        self.value = as_fraction(value)
        self._j = model.position(var)

    def _scores(self):
        return tuple(Fraction(1 if a[self._j] == self.value else 0) for a in self.model.atoms)

    def pins_from(self, value):
        if self.given is None and value is not MISSING:
            return {(self.var, self.value): as_fraction(value)}
        return {}

    def __repr__(self):
        return f"prob({self.var}={_num(self.value)}{self._given_text()})"


class Dist(Functional):
    """The (conditional) pmf of one variable, as a tuple over its support."""

    scalar = False

    def __init__(self, model, var, given=None):
        self.model = model
        self.var = var
        self.given = _given_key(model, given)
        self.parts = tuple(Prob(model, var, v, given) for v in model.support(var))

    def __call__(self, p):
        vals = tuple(f(p) for f in self.parts)
        return MISSING if any(v is MISSING for v in vals) else vals

    def constraints_at(self, value, pins):
        if value is MISSING:
            return self.parts[0].constraints_at(MISSING, pins)
        if len(value) != len(self.parts):
            raise ValueError(f"{self.label} expects {len(self.parts)} probabilities")
        out = []
        for f, v in zip(self.parts, value):
            out.extend(f.constraints_at(v, pins))
        return out

    def pins_from(self, value):
        if self.given is not None or value is MISSING:
            return {}
        return {(self.var, v): as_fraction(q) for v, q in zip(self.model.support(self.var), value)}

    def __repr__(self):
        g = "" if self.given is None else f" | {self.given[0]}={_num(self.given[1])}"
        return f"dist({self.var}{g})"


class MeanDiff(Functional):
    """E[a] - E[b] (an average treatment effect when a, b are potential outcomes)."""

    def __init__(self, model, a, b):
        self.model = model
        self.a = Expect(model, a)
        self.b = Expect(model, b)

    def __call__(self, p):
        return self.a(p) - self.b(p)

    def objective(self, pins):
        return [x - y for x, y in zip(self.a.objective(pins), self.b.objective(pins))]

    def constraints_at(self, value, pins):
        coef = self.objective(pins)
        return [_constraint(dict(enumerate(coef)), as_fraction(value))]

    def __repr__(self):
        return f"mean_diff({self.a.var}, {self.b.var})"


class Observation:
    """A tuple of functionals observed jointly; callable on states."""

    def __init__(self, functionals: Sequence[Functional]):
        self.functionals = tuple(functionals)

    def __call__(self, p):
        return tuple(f(p) for f in self.functionals)

    def __repr__(self):
        return f"Observation({', '.join(f.label for f in self.functionals)})"

    def pins_at(self, l0) -> dict:
        pins: dict = {}
        for f, v in zip(self.functionals, l0):
            pins.update(f.pins_from(v))
        if not self.functionals:
            return pins
        return complete_pins(self.functionals[0].model, pins)

    def constraints_at(self, l0, pins=None) -> list:
        if len(l0) != len(self.functionals):
            raise ValueError(f"observation has {len(self.functionals)} components, got {len(l0)}")
        pins = self.pins_at(l0) if pins is None else pins
        out = []
        for f, v in zip(self.functionals, l0):
            out.extend(f.constraints_at(v, pins))
        return out


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else repr(float(x))


# -- builtin assumptions ----------------------------------------------------


def total_variation(p: dict, q: dict) -> float:
    """Half the L1 distance between two pmfs given as dicts."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def bounded(model: JointModel, var: str, lo, hi):
    """All mass of ``var`` lies in ``[lo, hi]``."""
    from .universe import Assumption

    lo, hi = as_fraction(lo), as_fraction(hi)
    j = model.position(var)
    outside = tuple(i for i, a in enumerate(model.atoms) if not lo <= a[j] <= hi)

    def constraint(p):
        return sum(p[i] for i in outside)

    def linear_form(pins):
        return [_constraint({i: 1 for i in outside}, 0)] if outside else []

    return Assumption(f"bounded({var}, {_num(lo)}, {_num(hi)})", constraint, linear_form)


def fixed(model: JointModel, var: str, value, prob):
    """``P(var = value) = prob``."""
    from .universe import Assumption

    value, prob = as_fraction(value), as_fraction(prob)
    idx = model.event(var, value)
    fprob = float(prob)

    def constraint(p):
        return sum(p[i] for i in idx) - fprob

    def linear_form(pins):
        return [_constraint({i: 1 for i in idx}, prob)]

    return Assumption(
        f"fixed({var}, {_num(value)}, {_num(prob)})",
        constraint,
        linear_form,
        pins=(((var, value), prob),),
    )


def independent(model: JointModel, xs, z: str, name=None):
    """``xs`` (one name or several) jointly independent of ``z``.

    On states the constraint is the total-variation distance between the
    joint of (xs, z) and the product of its margins.  The linear form holds
    the margin of ``z`` fixed at its pinned value: p(x, z) = P(z) * p(x).
    """
    from .universe import Assumption

    xs = (xs,) if isinstance(xs, str) else tuple(xs)
    if z in xs:
        raise ValueError("a variable cannot be independent of itself")
    jx = [model.position(x) for x in xs]
    jz = model.position(z)
    cells: dict = {}
    for i, a in enumerate(model.atoms):
        cells.setdefault((tuple(a[j] for j in jx), a[jz]), []).append(i)
    x_vals = sorted({k[0] for k in cells})
    z_vals = model.support(z)

    def constraint(p):
        joint = {k: sum(p[i] for i in idx) for k, idx in cells.items()}
        px: dict = {}
        pz: dict = {}
        for (xv, zv), m in joint.items():
            px[xv] = px.get(xv, 0.0) + m
            pz[zv] = pz.get(zv, 0.0) + m
        prod = {(xv, zv): px[xv] * pz[zv] for xv in px for zv in pz}
        return total_variation(joint, prod)

    def linear_form(pins):
        missing = [v for v in z_vals if (z, v) not in pins]
        if missing:
            raise NotLinearizable(f"independence of {z} needs the margin of {z} pinned")
        out = []
        for xv in x_vals:
            across = [i for zv in z_vals for i in cells.get((xv, zv), ())]
            for zv in z_vals:
                c = pins[(z, zv)]
                coeffs = {i: -c for i in across}
                for i in cells.get((xv, zv), ()):
                    coeffs[i] = coeffs[i] + 1
                out.append(_constraint(coeffs, 0))
        return out

    label = name or f"independent({', '.join(xs)}, {z})"
    return Assumption(label, constraint, linear_form, margin_of=z)


def randomized(model: JointModel, z: str):
    """Assignment ``z`` independent of every other variable jointly."""
    others = tuple(n for n in model.names if n != z)
    return independent(model, others, z, name=f"randomized({z})")

