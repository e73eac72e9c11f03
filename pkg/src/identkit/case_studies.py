"""Worked identification problems: closed forms and oracle universes.

Each closed form here has an independent oracle elsewhere in the package
(LP extremization over a polytope universe, or brute-force enumeration of
a grid universe); the tests pair them up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .distributions import JointModel, Observation, as_fraction, bounded, randomized
from .errors import InvalidPoint, OutOfRange, OutOfSupport
from .regions import (
    Combiner,
    ExplicitSet,
    Interval,
    ReducedForm,
    region_enumerate,
)
from .simplex import maximize, minimize
from .distributions import LinearConstraint
from .universe import (
    DistributionGridUniverse,
    GridAxis,
    GridUniverse,
    PolytopeUniverse,
    finite_population,
)
from .values import MISSING, Value


def _exact(x):
    if x is None or x is MISSING:
        return x
    return as_fraction(x)


# -- missing data -------------------------------------------------------------


@dataclass(frozen=True)
class MissingDataPoint:
    """Identified quantities P(Z=1) and E[Y | Z=1] plus outcome bounds [a, b]."""

    p_z1: object
    e_y_given_z1: object
    outcome_bounds: tuple = (0, 1)

    def __post_init__(self):
        q, m = _exact(self.p_z1), _exact(self.e_y_given_z1)
        a, b = (as_fraction(x) for x in self.outcome_bounds)
        if not 0 <= q <= 1:
            raise InvalidPoint(f"P(Z=1) = {self.p_z1} is not a probability")
        if a > b:
            raise InvalidPoint("outcome bounds must satisfy a <= b")
        if q > 0 and (m is None or m is MISSING or not a <= m <= b):
            raise InvalidPoint(f"E[Y|Z=1] = {self.e_y_given_z1} outside [{a}, {b}]")
        object.__setattr__(self, "p_z1", q)
        object.__setattr__(self, "e_y_given_z1", m)
        object.__setattr__(self, "outcome_bounds", (a, b))


def manski_bounds(p: MissingDataPoint) -> Interval:
    """Sharp bounds on E[Y] when Y in [a, b] is missing whenever Z = 0."""
    a, b = p.outcome_bounds
    q = p.p_z1
    if q == 0:
        return Interval(a, b)
    known = p.e_y_given_z1 * q
    return Interval(known + a * (1 - q), known + b * (1 - q))


def manski_reduced_form(p: MissingDataPoint) -> ReducedForm:
    """E[Y] = E[Y|Z=1] P(Z=1) + t (1 - P(Z=1)) with t = E[Y|Z=0] free in [a, b]."""
    a, b = p.outcome_bounds

    def combine(ids, t):
        q = ids["p_z1"]
        known = 0 if q == 0 else ids["e_y_given_z1"] * q
        return known + t * (1 - q)

    ids = {"p_z1": p.p_z1, "e_y_given_z1": p.e_y_given_z1 if p.p_z1 else 0}
    return ReducedForm(
        ids, Interval(a, b, strong=True), Combiner(combine, "mean_from_parts", "increasing")
    )


def missing_data_grid(step=Fraction(1, 2), gamma_hi=1) -> GridUniverse:
    """Binary Y: states (alpha, beta, gamma) = (P(Y=1|Z=1), P(Y=1|Z=0), P(Z=1)).

    The observation is (alpha, gamma); the estimand defaults to E[Y].
    """
    axes = (
        GridAxis("alpha", 0, 1, step),
        GridAxis("beta", 0, 1, step),
        GridAxis("gamma", 0, gamma_hi, step),
    )
    return GridUniverse(axes, estimand=md_mean, observation=md_observation)


def md_observation(s):
    alpha, _, gamma = s
    return (alpha, gamma)


def md_mean(s):
    alpha, beta, gamma = s
    return alpha * gamma + beta * (1 - gamma)


def md_p_z1(s):
    return s[2]


def md_e_y_z1(s):
    return s[0]


def md_e_y_z0(s):
    return s[1]


def missing_data_model(support: Sequence) -> JointModel:
    return JointModel([("Y", support), ("Z", (0, 1))])


def missing_data_polytope(support: Sequence, bounds: Optional[tuple] = None) -> PolytopeUniverse:
    """All joint pmfs of (Y, Z); observe E[Y|Z=1] and P(Z=1); estimand E[Y]."""
    model = missing_data_model(support)
    obs = Observation([model.expect("Y", given=("Z", 1)), model.prob("Z", 1)])
    assumptions = () if bounds is None else (bounded(model, "Y", *bounds),)
    return PolytopeUniverse(model, model.expect("Y"), obs, assumptions=assumptions)


def missing_data_distribution_grid(support: Sequence, step) -> DistributionGridUniverse:
    model = missing_data_model(support)
    obs = Observation([model.expect("Y", given=("Z", 1)), model.prob("Z", 1)])
    return DistributionGridUniverse(model, step, "Z", estimand=model.expect("Y"), observation=obs)


# -- causal effects -----------------------------------------------------------


@dataclass(frozen=True)
class CausalPoint:
    """P(Z=1), E[Y*|Z=1], E[Y*|Z=0] and bounds on the potential outcomes.

    ``control_bounds`` bounds Y(0) when it differs from ``outcome_bounds``.
    """

    p_z1: object
    e_yobs_z1: object
    e_yobs_z0: object
    outcome_bounds: tuple = (0, 1)
    control_bounds: Optional[tuple] = None

    def __post_init__(self):
        q = _exact(self.p_z1)
        m1, m0 = _exact(self.e_yobs_z1), _exact(self.e_yobs_z0)
        b1 = tuple(as_fraction(x) for x in self.outcome_bounds)
        b0 = b1 if self.control_bounds is None else tuple(as_fraction(x) for x in self.control_bounds)
        if not 0 <= q <= 1:
            raise InvalidPoint(f"P(Z=1) = {self.p_z1} is not a probability")
        for lo, hi in (b1, b0):
            if lo > hi:
                raise InvalidPoint("outcome bounds must satisfy a <= b")
        if q > 0 and (m1 is None or m1 is MISSING or not b1[0] <= m1 <= b1[1]):
            raise InvalidPoint(f"E[Y*|Z=1] = {self.e_yobs_z1} outside the outcome bounds")
        if q < 1 and (m0 is None or m0 is MISSING or not b0[0] <= m0 <= b0[1]):
            raise InvalidPoint(f"E[Y*|Z=0] = {self.e_yobs_z0} outside the outcome bounds")
        object.__setattr__(self, "p_z1", q)
        object.__setattr__(self, "e_yobs_z1", m1 if q > 0 else None)
        object.__setattr__(self, "e_yobs_z0", m0 if q < 1 else None)
        object.__setattr__(self, "outcome_bounds", b1)
        object.__setattr__(self, "control_bounds", b0)


def _causal_identified(c: CausalPoint):
    q = c.p_z1
    treated = c.e_yobs_z1 * q if q > 0 else 0
    control = c.e_yobs_z0 * (1 - q) if q < 1 else 0
    return treated - control


def _unobserved_arm_range(c: CausalPoint, q):
    """Range of E[Y(1)|Z=0] P(Z=0) - E[Y(0)|Z=1] P(Z=1)."""
    (a1, b1), (a0, b0) = c.outcome_bounds, c.control_bounds
    return (1 - q) * a1 - q * b0, (1 - q) * b1 - q * a0


def causal_ate_bounds(c: CausalPoint, randomized: bool = False) -> Interval:
    """Sharp bounds on E[Y(1) - Y(0)] from the observed arms.

    Without assumptions the unobserved-arm term ranges over
    [(1-q) a - q b, (1-q) b - q a], so the width is b - a.  Under
    randomization both arms are identified when 0 < q < 1.
    """
    q = c.p_z1
    if randomized:
        (a1, b1), (a0, b0) = c.outcome_bounds, c.control_bounds
        if q == 1:
            return Interval(c.e_yobs_z1 - b0, c.e_yobs_z1 - a0)
        if q == 0:
            return Interval(a1 - c.e_yobs_z0, b1 - c.e_yobs_z0)
        d = c.e_yobs_z1 - c.e_yobs_z0
        return Interval(d, d)
    ident = _causal_identified(c)
    lo, hi = _unobserved_arm_range(c, q)
    return Interval(ident + lo, ident + hi)


def causal_reduced_form(c: CausalPoint) -> ReducedForm:
    """ATE = identified part + free unobserved-arm term."""
    lo, hi = _unobserved_arm_range(c, c.p_z1)
    ids = {
        "p_z1": c.p_z1,
        "e_yobs_z1": c.e_yobs_z1 or 0,
        "e_yobs_z0": c.e_yobs_z0 or 0,
    }
    ident = _causal_identified(c)
    return ReducedForm(
        ids,
        Interval(lo, hi, strong=True),
        Combiner(lambda _ids, t: ident + t, "identified_plus_free", "increasing"),
    )


def assignment_envelope(p_lo, p_hi, bounds=(0, 1)) -> Interval:
    """Union over P(Z=1) in [p_lo, p_hi] of the unobserved-arm term range.

    This is a pre-observation envelope: once P(Z=1) is observed the region
    is the narrower one from :func:`causal_ate_bounds`.
    """
    p_lo, p_hi = as_fraction(p_lo), as_fraction(p_hi)
    if not 0 <= p_lo <= p_hi <= 1:
        raise InvalidPoint("need 0 <= p_lo <= p_hi <= 1")
    a, b = (as_fraction(x) for x in bounds)
    lows = [(1 - q) * a - q * b for q in (p_lo, p_hi)]
    highs = [(1 - q) * b - q * a for q in (p_lo, p_hi)]
    return Interval(min(lows), max(highs))


def causal_model(support: Sequence = (0, 1)) -> JointModel:
    return JointModel([("Y1", support), ("Y0", support), ("Z", (0, 1))])


def _causal_observation(model):
    return Observation(
        [model.expect("Y1", given=("Z", 1)), model.expect("Y0", given=("Z", 0)), model.prob("Z", 1)]
    )


def causal_polytope(support: Sequence = (0, 1), randomize: bool = False) -> PolytopeUniverse:
    """All pmfs of (Y(1), Y(0), Z); observe both arms' means and P(Z=1)."""
    model = causal_model(support)
    assumptions = (randomized(model, "Z"),) if randomize else ()
    return PolytopeUniverse(
        model, model.mean_diff("Y1", "Y0"), _causal_observation(model), assumptions=assumptions
    )


def causal_grid(support: Sequence = (0, 1), step=Fraction(1, 4)) -> DistributionGridUniverse:
    """Grid over P(Z) and P(Y(1), Y(0) | Z); the causal enumeration oracle."""
    model = causal_model(support)
    return DistributionGridUniverse(
        model,
        step,
        "Z",
        estimand=model.mean_diff("Y1", "Y0"),
        observation=_causal_observation(model),
    )


# -- fixed margins ------------------------------------------------------------


def _prob(x, name="argument"):
    x = _exact(x) if not isinstance(x, float) else x
    if not 0 <= x <= 1:
        raise OutOfRange(f"{name} = {x} is not in [0, 1]")
    return x


def frechet_bounds(u, v) -> tuple:
    """(W(u, v), M(u, v)): the lower and upper copula bounds."""
    u, v = _prob(u, "u"), _prob(v, "v")
    return max(u + v - 1, 0), min(u, v)


def product_copula(u, v):
    return u * v


def upper_copula(u, v):
    return min(u, v)


def lower_copula(u, v):
    return max(u + v - 1, 0)


@dataclass(frozen=True)
class DiscreteCdf:
    support: tuple
    cdf_values: tuple

    def __post_init__(self):
        sup = tuple(as_fraction(x) for x in self.support)
        cdf = tuple(as_fraction(x) for x in self.cdf_values)
        if len(sup) != len(cdf) or not sup:
            raise ValueError("support and cdf_values must be nonempty and equally long")
        if any(b <= a for a, b in zip(sup, sup[1:])):
            raise ValueError("support must be strictly increasing")
        if any(not 0 <= f <= 1 for f in cdf) or any(b < a for a, b in zip(cdf, cdf[1:])):
            raise ValueError("cdf values must be nondecreasing in [0, 1]")
        if cdf[-1] != 1:
            raise ValueError("cdf must end at 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "cdf_values", cdf)

    @classmethod
    def from_pmf(cls, support, pmf) -> "DiscreteCdf":
        acc, vals = Fraction(0), []
        for p in pmf:
            acc += as_fraction(p)
            vals.append(acc)
        return cls(tuple(support), tuple(vals))

    def pmf(self) -> tuple:
        prev, out = Fraction(0), []
        for f in self.cdf_values:
            out.append(f - prev)
            prev = f
        return tuple(out)

    def __call__(self, x):
        x = as_fraction(x)
        if not self.support[0] <= x <= self.support[-1]:
            raise OutOfSupport(f"{x} outside [{self.support[0]}, {self.support[-1]}]")
        k = max(i for i, s in enumerate(self.support) if s <= x)
        return self.cdf_values[k]


def joint_cdf_region(fx: DiscreteCdf, fy: DiscreteCdf, x, y) -> Interval:
    """Region of F_XY(x, y) given the margins: [W(Fx, Fy), M(Fx, Fy)]."""
    w, m = frechet_bounds(fx(x), fy(y))
    return Interval(w, m)


def joint_cdf_lp(fx: DiscreteCdf, fy: DiscreteCdf, x, y) -> Interval:
    """The same region by extremizing P(X <= x, Y <= y) over contingency
    tables with the given margins.  Witness tables are kept on the result."""
    px, py = fx.pmf(), fy.pmf()
    nx, ny = len(px), len(py)
    fx(x), fy(y)  # range checks
    cons = [
        LinearConstraint(tuple((i * ny + j, Fraction(1)) for j in range(ny)), px[i])
        for i in range(nx)
    ] + [
        LinearConstraint(tuple((i * ny + j, Fraction(1)) for i in range(nx)), py[j])
        for j in range(ny)
    ]
    xq, yq = as_fraction(x), as_fraction(y)
    obj = [
        Fraction(1 if fx.support[i] <= xq and fy.support[j] <= yq else 0)
        for i in range(nx)
        for j in range(ny)
    ]
    lo = minimize(nx * ny, cons, obj)
    hi = maximize(nx * ny, cons, obj)
    return Interval(lo.value, hi.value, witnesses=(lo.x, hi.x))


# -- mixtures -----------------------------------------------------------------


def mixture_observation(s):
    """Mean and variance of the normal law attached to (pi, mu1, mu2)."""
    pi, mu1, mu2 = s
    return (pi * mu1 + (1 - pi) * mu2, pi**2 + (1 - pi) ** 2)


def mixture_swap(s):
    pi, mu1, mu2 = s
    return (1 - pi, mu2, mu1)


MIXTURE_ESTIMANDS = {
    "pi": lambda s: s[0],
    "mu1": lambda s: s[1],
    "mu2": lambda s: s[2],
}


def mixture_universe(pi_step=Fraction(1, 4), mu_lo=-1, mu_hi=1, mu_step=1) -> GridUniverse:
    axes = (
        GridAxis("pi", 0, 1, pi_step),
        GridAxis("mu1", mu_lo, mu_hi, mu_step),
        GridAxis("mu2", mu_lo, mu_hi, mu_step),
    )
    return GridUniverse(axes, estimand=MIXTURE_ESTIMANDS["pi"], observation=mixture_observation)


def mixture_region(grid: GridUniverse, l0) -> dict:
    """Regions of pi, mu1 and mu2 at the observed (mean, variance)."""
    return {
        name: region_enumerate(grid.with_maps(estimand=theta), l0)
        for name, theta in MIXTURE_ESTIMANDS.items()
    }


# -- finite populations -------------------------------------------------------


def finite_pop_ate_region(n: int, alphabet: Sequence, observed: Sequence[tuple]) -> ExplicitSet:
    """Values of the population ATE over all completions of the observed data."""
    u = finite_population(n, alphabet, observed, "causal")
    l0 = (tuple(y for y, _ in observed), tuple(z for _, z in observed))
    region = region_enumerate(u, l0)
    # u is already conditioned on the data, so its own image of the ATE is
    # the region itself.  Strongness is judged against the unconditioned
    # population, whose ATE image is every mean of n unit-level differences.
    diffs = {as_fraction(a) - as_fraction(b) for a in alphabet for b in alphabet}
    sums = {Fraction(0)}
    for _ in range(n):
        sums = {s + d for s in sums for d in diffs}
    image = {Value(float(s / n)) for s in sums}
    return ExplicitSet(region.values, strong=len(image) > 1 and set(region.values) == image)


# -- Gaussian copula grid -----------------------------------------------------

_PROBE = (-1.0, 0.0, 1.0)


def _phi(t):
    return 0.5 * (1 + math.erf(t / math.sqrt(2)))


def gaussian_margins(s):
    """The two normal margins, each summarized by its CDF at fixed probes."""
    mx, sx, my, sy, _ = s
    return (
        tuple(_phi((t - mx) / sx) for t in _PROBE),
        tuple(_phi((t - my) / sy) for t in _PROBE),
    )


GAUSSIAN_ESTIMANDS = {
    "tau": lambda s: s[:4],
    "rho": lambda s: s[4],
}


def gaussian_copula_grid(
    mus=(0, 1), sigmas=(1, 2), rho_step=Fraction(1, 10)
) -> GridUniverse:
    """Bivariate normals on a parameter grid; the observation is the margins."""
    mus, sigmas = tuple(mus), tuple(sigmas)

    def axis(name, vals):
        vals = sorted(as_fraction(v) for v in vals)
        step = min((b - a for a, b in zip(vals, vals[1:])), default=Fraction(1))
        ax = GridAxis(name, vals[0], vals[-1], step)
        if len(ax.points) != len(vals):
            raise ValueError(f"{name} values must be evenly spaced")
        return ax

    axes = (
        axis("mu_x", mus),
        axis("sigma_x", sigmas),
        axis("mu_y", mus),
        axis("sigma_y", sigmas),
        GridAxis("rho", -1, 1, rho_step),
    )
    return GridUniverse(axes, estimand=GAUSSIAN_ESTIMANDS["rho"], observation=gaussian_margins)


def gaussian_copula_regions(grid: GridUniverse, l0) -> dict:
    return {
        name: region_enumerate(grid.with_maps(estimand=theta), l0)
        for name, theta in GAUSSIAN_ESTIMANDS.items()
    }
