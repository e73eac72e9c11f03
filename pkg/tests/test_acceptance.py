"""The nine acceptance criteria, one test each.

Every test registers itself with the ``criterion`` fixture; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import itertools
import random
import subprocess
import sys
import time
from collections import defaultdict
from fractions import Fraction

from identkit.case_studies import (
    CausalPoint,
    DiscreteCdf,
    MissingDataPoint,
    causal_ate_bounds,
    causal_grid,
    causal_polytope,
    finite_pop_ate_region,
    frechet_bounds,
    joint_cdf_lp,
    lower_copula,
    manski_bounds,
    md_e_y_z0,
    missing_data_distribution_grid,
    missing_data_grid,
    missing_data_polytope,
    mixture_observation,
    mixture_region,
    mixture_swap,
    mixture_universe,
    product_copula,
    upper_copula,
)
from identkit.cli import compile_spec, compute_region, example_names, load_spec, run
from identkit.distributions import bounded, randomized
from identkit.dsl import parse, render
from identkit.errors import Infeasible
from identkit.regions import (
    compose_identifiable,
    identify_by_enumeration,
    is_strongly_nonidentifiable,
    refutability,
    region_enumerate,
    region_lp,
    region_subset,
    regions_agree,
)
from identkit.relation import identifiable_at, induce
from identkit.universe import ExplicitUniverse, GridAxis, GridUniverse, finite_population, population_mean
from identkit.values import MISSING, Value

from oracles import properties, snap
from strategies import Table

F = Fraction
GOOD_SPECS = [n for n in example_names() if n != "contradictory"]


def random_universes(rng, count):
    """Explicit tables of varied shape, plus a few large parameter grids."""
    for k in range(count):
        if k % 25 == 24:
            n = rng.choice([10, 20, 40])
            axes = tuple(GridAxis(f"a{i}", 0, 1, F(1, n)) for i in range(3))
            mod = rng.randint(2, 50)
            yield GridUniverse(
                axes,
                estimand=lambda s, m=mod: round(s[0] * 7 + s[1] * 3) % m,
                observation=lambda s: (round(s[0] + s[1], 1), s[2] > 0.5),
            )
            continue
        n = rng.randint(1, 400)
        nt, nl = rng.randint(1, 12), rng.randint(1, 12)
        yield ExplicitUniverse(
            items=tuple(range(n)),
            estimand=Table(rng.randrange(nt) for _ in range(n)),
            observation=Table(rng.randrange(nl) for _ in range(n)),
        )


def test_criterion_1_relation_laws(criterion):
    criterion.start(1, "injective iff identified, induced relations onto, singleton iff identified: >= 100 random universes in < 60 s")
    t0 = time.perf_counter()
    rng = random.Random(20261019)
    checked = 0
    for u in random_universes(rng, 120):
        states = list(u.states())
        assert len(states) <= 10**5
        pairs = {(snap(u.estimand(s)), snap(u.observation(s))) for s in states}
        thetas = {t for t, _ in pairs}
        lambdas = {l for _, l in pairs}
        by_lambda = defaultdict(set)
        for t, l in pairs:
            by_lambda[l].add(t)
        injective = all(len(ts) == 1 for ts in by_lambda.values())

        r = induce(u)
        report = r.check_properties()
        # everywhere identifiable <=> injective
        assert r.identifiable_everywhere() == injective == report.injective
        # induced relations are surjective and left-total on the images
        assert report.surjective and report.left_total
        if len(pairs) <= 150:
            assert (report.injective, report.surjective, report.functional, report.left_total) == properties(
                pairs, thetas, lambdas
            )
        # singleton region <=> identifiable at l0
        for l0 in r.lambda_space:
            region = region_enumerate(u, l0)
            assert region.is_singleton == identifiable_at(r, l0)
            assert {snap(v.payload) for v in region.values} == by_lambda[snap(l0.payload)]
        checked += 1
    elapsed = time.perf_counter() - t0
    assert checked >= 100 and elapsed < 60
    criterion.done()


def test_criterion_2_functions_of_identified(criterion):
    criterion.start(2, "functions of the observation and of identified parts are identified, 0 failures")
    rng = random.Random(4)
    failures = 0
    for _ in range(100):
        n, nl = rng.randint(1, 60), rng.randint(1, 8)
        lam = Table(rng.randrange(nl) for _ in range(n))
        base = ExplicitUniverse(items=tuple(range(n)), estimand=lam, observation=lam)
        g = [rng.randint(-3, 3) for _ in range(nl)]
        g1 = [rng.randint(0, 2) for _ in range(nl)]
        g2 = [rng.random() for _ in range(nl)]
        f = rng.choice([lambda a, b: a + b, lambda a, b: a * b, lambda a, b: max(a, b), lambda a, b: (a, b)])

        # g composed with the observation
        u = base.with_maps(estimand=lambda s, g=g: g[lam(s)])
        failures += not induce(u).identifiable_everywhere()

        # f of two identified parts, certified at every l0
        u1 = base.with_maps(estimand=lambda s, g=g1: g[lam(s)])
        u2 = base.with_maps(estimand=lambda s, g=g2: g[lam(s)])
        uf = base.with_maps(estimand=lambda s: f(g1[lam(s)], g2[lam(s)]))
        failures += not (
            induce(u1).identifiable_everywhere()
            and induce(u2).identifiable_everywhere()
            and induce(uf).identifiable_everywhere()
        )
        for l0 in {lam(s) for s in range(n)}:
            cert = compose_identifiable([identify_by_enumeration(u1, l0), identify_by_enumeration(u2, l0)], f)
            failures += region_enumerate(uf, l0).values != {cert.value}
    assert failures == 0
    criterion.done()


def test_criterion_3_missing_data(criterion):
    criterion.start(3, "Manski [0.45, 0.70]: LP within 1e-9, step-0.01 enumeration within one step, strong E[Y|Z=0], < 30 s")
    t0 = time.perf_counter()
    closed = manski_bounds(MissingDataPoint(F(3, 4), F(3, 5), (0, 1)))
    assert (closed.lo, closed.hi) == (F(9, 20), F(7, 10))

    lp = region_lp(missing_data_polytope([F(k, 100) for k in range(101)], (0, 1)), (F(3, 5), F(3, 4)))
    assert abs(float(lp.lo) - 0.45) <= 1e-9 and abs(float(lp.hi) - 0.70) <= 1e-9

    step = 0.01
    grid = missing_data_distribution_grid((0, 1), F(1, 100))
    lo, hi = region_enumerate(grid, (0.6, 0.75)).hull()
    assert abs(lo - 0.45) <= step + 1e-12 and abs(hi - 0.70) <= step + 1e-12

    coarse = missing_data_grid(F(1, 20), gamma_hi=F(19, 20)).with_maps(estimand=md_e_y_z0)
    assert is_strongly_nonidentifiable(coarse)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30, elapsed
    criterion.done()


def test_criterion_4_causal(criterion):
    criterion.start(4, "ATE [-0.30, 0.70], width 1 on 1000 points, randomization singleton and irrefutable, bounded refutable")
    c = CausalPoint(F(1, 2), F(7, 10), F(3, 10))
    closed = causal_ate_bounds(c)
    lp = region_lp(causal_polytope(), (F(7, 10), F(3, 10), F(1, 2)))
    for r in (closed, lp):
        assert abs(float(r.lo) + 0.3) <= 1e-9 and abs(float(r.hi) - 0.7) <= 1e-9

    rng = random.Random(11)
    for _ in range(1000):
        q = rng.uniform(1e-6, 1 - 1e-6)
        r = causal_ate_bounds(CausalPoint(q, rng.random(), rng.random()))
        assert abs(float(r.hi) - float(r.lo) - 1) <= 1e-12

    point = causal_ate_bounds(c, randomized=True)
    lp_point = region_lp(causal_polytope(randomize=True), (F(7, 10), F(3, 10), F(1, 2)))
    assert point.lo == point.hi == lp_point.lo == lp_point.hi == F(2, 5)

    grid = causal_grid((0, 1), F(1, 4))
    assert refutability(grid, randomized(grid.model, "Z")).a_priori == "irrefutable"
    wide = causal_grid((-1, 0, 1), F(1, 2))
    assert refutability(wide, bounded(wide.model, "Y1", 0, 1)).a_priori == "refutable"
    criterion.done()


def test_criterion_5_fixed_margins(criterion):
    criterion.start(5, "joint-CDF LP endpoints equal W and M exactly; Frechet inequality on a 0.1 grid")
    rng = random.Random(5)
    for n, m in [(2, 3), (4, 4), (6, 11), (11, 11)]:
        px = [F(rng.randint(0, 5), 1) for _ in range(n)]
        py = [F(rng.randint(1, 5), 1) for _ in range(m)]
        px[-1] += 1
        fx = DiscreteCdf.from_pmf(range(n), [p / sum(px) for p in px])
        fy = DiscreteCdf.from_pmf(range(m), [p / sum(py) for p in py])
        for x, y in itertools.product(range(n), range(m)):
            r = joint_cdf_lp(fx, fy, x, y)
            assert (r.lo, r.hi) == frechet_bounds(fx(x), fy(y))
    grid = [F(k, 10) for k in range(11)]
    for u, v in itertools.product(grid, grid):
        w, mm = frechet_bounds(u, v)
        assert all(w <= c(u, v) <= mm for c in (product_copula, upper_copula, lower_copula))
    criterion.done()


def test_criterion_6_mixture(criterion):
    criterion.start(6, "mixture pi-regions {0.25, 0.75} and {0.5}; swap symmetry on the full grid")
    g = mixture_universe()
    assert mixture_region(g, (-0.5, 0.625))["pi"].values == {Value(0.25), Value(0.75)}
    assert mixture_region(g, (0, 0.5))["pi"].values == {Value(0.5)}
    joint = g.with_maps(estimand=lambda s: s)
    for s in g.states():
        assert Value(mixture_observation(s)) == Value(mixture_observation(mixture_swap(s)))
    for l0 in {Value(mixture_observation(s)) for s in g.states()}:
        region = region_enumerate(joint, l0)
        assert {Value(mixture_swap(v.payload)) for v in region.values} == region.values
    criterion.done()


def test_criterion_7_finite_population(criterion):
    criterion.start(7, "N=2 region {0, 0.5, 1}; N <= 4 sweep: singleton iff no unobserved cells")
    region = finite_pop_ate_region(2, (0, 1), [(1, 1), (0, 0)])
    assert region.values == {Value(0), Value(0.5), Value(1)}
    for n in range(1, 5):
        for zs in itertools.product((0, 1), repeat=n):
            for ys in itertools.product((0, 1), repeat=n):
                # potential-outcome design: every unit hides one cell
                ate = finite_pop_ate_region(n, (0, 1), list(zip(ys, zs)))
                assert not ate.is_singleton
                # missing-outcome design: cells are hidden exactly where Z = 0
                obs = [(y if z else MISSING, z) for y, z in zip(ys, zs)]
                u = finite_population(n, (0, 1), obs, "missing", population_mean)
                l0 = next(iter(u.states())).observed(), zs
                hidden = zs.count(0)
                assert region_enumerate(u, l0).is_singleton == (hidden == 0)
    criterion.done()


def test_criterion_8_shrinkage(criterion):
    criterion.start(8, "H^A within H for every bundled problem and assumption")
    violations = 0
    for name in GOOD_SPECS:
        problem = compile_spec(load_spec(name))
        decls = problem.assumptions
        subsets = [[d] for d in decls] + ([decls] if len(decls) > 1 else [])
        for method in ("auto", "enumerate"):
            for est in problem.estimands:
                free = compute_region(problem, est, [], method)[0]
                for sub in subsets:
                    try:
                        restricted = compute_region(problem, est, sub, method)[0]
                    except Infeasible:
                        continue  # empty restricted region
                    violations += not region_subset(restricted, free)
    assert violations == 0
    criterion.done()


def cli_output(*argv):
    return subprocess.run([sys.executable, "-m", "identkit.cli", *argv], capture_output=True, check=False).stdout


def test_criterion_9_cli(criterion):
    criterion.start(9, "round-trip, oracle vs region agreement, byte-stable reports on bundled problems")
    for name in example_names():
        spec = load_spec(name)
        assert parse(render(spec)) == spec
    for name in GOOD_SPECS:
        spec = load_spec(name)
        region, oracle = run(spec, "region"), run(spec, "oracle")
        for est, entry in region["estimands"].items():
            a, b = entry["region"], oracle["estimands"][est]["region"]
            assert regions_agree(_region(a), _region(b)), (name, est)
    for name in example_names():
        first, second = cli_output("refute", name), cli_output("refute", name)
        assert first and first == second, name
    criterion.done()


def _region(r):
    from identkit.regions import ExplicitSet, Interval

    if r["kind"] == "reduced_form":
        r = r["materialized"]
    if r["kind"] == "interval":
        return Interval(r["lo"], r["hi"], eps=r.get("eps", 0.0))
    return ExplicitSet(frozenset(Value(v) for v in r["values"]))
