import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from identkit.case_studies import (
    CausalPoint,
    DiscreteCdf,
    MissingDataPoint,
    assignment_envelope,
    causal_ate_bounds,
    causal_grid,
    causal_polytope,
    causal_reduced_form,
    finite_pop_ate_region,
    frechet_bounds,
    gaussian_copula_grid,
    gaussian_copula_regions,
    gaussian_margins,
    joint_cdf_lp,
    joint_cdf_region,
    lower_copula,
    manski_bounds,
    missing_data_polytope,
    mixture_observation,
    mixture_region,
    mixture_swap,
    mixture_universe,
    product_copula,
    upper_copula,
)
from identkit.errors import InvalidPoint, OutOfRange, OutOfSupport
from identkit.regions import materialize, region_enumerate, region_lp, regions_agree
from identkit.values import Value

from oracles import finite_pop_ate, mixture_obs, mixture_states, snap

F = Fraction


def bounds(r):
    return r.lo, r.hi


# -- missing data ------------------------------------------------------------------


@pytest.mark.parametrize(
    "q, m, expected",
    [
        (F(3, 4), F(3, 5), (F(9, 20), F(7, 10))),
        (1, F(3, 5), (F(3, 5), F(3, 5))),
        (0, None, (0, 1)),
        (0, F(1, 3), (0, 1)),
    ],
)
def test_manski_examples(q, m, expected):
    assert bounds(manski_bounds(MissingDataPoint(q, m))) == expected


@pytest.mark.parametrize("q, m, b", [(F(5, 4), 0, (0, 1)), (F(1, 2), 2, (0, 1)), (F(1, 2), 0, (1, 0))])
def test_missing_data_point_validation(q, m, b):
    with pytest.raises(InvalidPoint):
        MissingDataPoint(q, m, b)


def test_manski_matches_lp_on_101_point_support():
    u = missing_data_polytope([F(k, 100) for k in range(101)], (0, 1))
    rng = random.Random(7)
    for _ in range(5):
        q, m = F(rng.randint(1, 100), 100), F(rng.randint(0, 100), 100)
        r = region_lp(u, (m, q))
        assert bounds(r) == bounds(manski_bounds(MissingDataPoint(q, m)))


# -- causal -----------------------------------------------------------------------------


def test_causal_examples():
    c = CausalPoint(F(1, 2), F(7, 10), F(3, 10))
    assert bounds(causal_ate_bounds(c)) == (F(-3, 10), F(7, 10))
    assert bounds(causal_ate_bounds(c, randomized=True)) == (F(2, 5), F(2, 5))
    assert bounds(materialize(causal_reduced_form(c))) == (F(-3, 10), F(7, 10))


@pytest.mark.parametrize("randomize", [False, True])
@pytest.mark.parametrize(
    "point",
    [(1, F(7, 10), None), (0, None, F(3, 10)), (F(1, 4), 1, 0), (F(9, 10), F(1, 3), F(2, 3))],
)
def test_causal_closed_form_matches_lp_including_degenerate_assignment(point, randomize):
    q, m1, m0 = point
    closed = causal_ate_bounds(CausalPoint(q, m1, m0), randomized=randomize)
    lp = region_lp(causal_polytope(randomize=randomize), (m1, m0, q))
    assert bounds(closed) == bounds(lp)


def test_causal_at_full_treatment():
    assert bounds(causal_ate_bounds(CausalPoint(1, F(7, 10), None))) == (F(-3, 10), F(7, 10))


def test_causal_closed_form_matches_grid_enumeration():
    u = causal_grid((0, 1), F(1, 4))
    r = region_enumerate(u, (0.75, 0.25, 0.5))
    assert regions_agree(r, causal_ate_bounds(CausalPoint(F(1, 2), F(3, 4), F(1, 4))))


def test_causal_separate_control_bounds():
    c = CausalPoint(F(1, 2), F(1, 2), 1, (0, 1), (0, 2))
    r = causal_ate_bounds(c)
    assert r.hi - r.lo == F(3, 2)


def test_assignment_envelope():
    assert bounds(assignment_envelope(F(2, 5), F(3, 5))) == (F(-3, 5), F(3, 5))
    with pytest.raises(InvalidPoint):
        assignment_envelope(F(3, 5), F(2, 5))


# -- fixed margins ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "u, v, expected", [(0.5, 0.7, (0.2, 0.5)), (1, 1, (1, 1)), (0.3, 0.4, (0, 0.3))]
)
def test_frechet_examples(u, v, expected):
    assert frechet_bounds(u, v) == pytest.approx(expected)


def test_frechet_range():
    with pytest.raises(OutOfRange):
        frechet_bounds(1.2, 0.5)


def test_frechet_inequality_on_grid():
    grid = [F(k, 10) for k in range(11)]
    for u, v in itertools.product(grid, grid):
        w, m = frechet_bounds(u, v)
        for c in (product_copula, upper_copula, lower_copula):
            assert w <= c(u, v) <= m


def test_discrete_cdf():
    f = DiscreteCdf.from_pmf((1, 2, 3, 4), (F(1, 4),) * 4)
    assert f.cdf_values == (F(1, 4), F(1, 2), F(3, 4), 1)
    assert f(F(5, 2)) == F(1, 2) and f.pmf() == (F(1, 4),) * 4
    with pytest.raises(OutOfSupport):
        f(5)
    for bad in [((1, 2), (F(1, 2),)), ((2, 1), (F(1, 2), 1)), ((1, 2), (F(1, 2), F(1, 3))), ((1, 2), (0, F(1, 2)))]:
        with pytest.raises(ValueError):
            DiscreteCdf(*bad)


@pytest.mark.parametrize("x, y, expected", [(2, 3, (F(1, 4), F(1, 2))), (4, 4, (1, 1)), (1, 2, (0, F(1, 4)))])
def test_joint_cdf_examples(x, y, expected):
    f = DiscreteCdf((1, 2, 3, 4), (F(1, 4), F(1, 2), F(3, 4), 1))
    assert bounds(joint_cdf_region(f, f, x, y)) == expected
    assert bounds(joint_cdf_lp(f, f, x, y)) == expected


def test_joint_cdf_zero_corner():
    f = DiscreteCdf((0, 1, 2), (0, F(1, 2), 1))
    assert bounds(joint_cdf_region(f, f, 0, 2)) == (0, 0)


def test_joint_cdf_witness_tables_have_the_margins():
    fx = DiscreteCdf.from_pmf((0, 1, 2), (F(1, 5), F(1, 2), F(3, 10)))
    fy = DiscreteCdf.from_pmf((0, 1), (F(2, 3), F(1, 3)))
    r = joint_cdf_lp(fx, fy, 1, 0)
    for table in r.witnesses:
        rows = [sum(table[i * 2 : i * 2 + 2]) for i in range(3)]
        cols = [sum(table[j::2]) for j in range(2)]
        assert rows == list(fx.pmf()) and cols == list(fy.pmf()) and min(table) >= 0


# -- mixtures ------------------------------------------------------------------------------


def test_mixture_regions():
    g = mixture_universe()
    r = mixture_region(g, (-0.5, 0.625))
    assert r["pi"].values == {Value(0.25), Value(0.75)}
    assert r["mu1"].values == {Value(-1), Value(1)}
    assert mixture_region(g, (0, 0.5))["pi"].values == {Value(0.5)}


def test_mixture_matches_naive_enumeration():
    states = mixture_states()
    for l0 in {snap(mixture_obs(s)) for s in states}:
        naive = {snap(s[0]) for s in states if snap(mixture_obs(s)) == l0}
        got = {snap(v.payload) for v in mixture_region(mixture_universe(), l0)["pi"].values}
        assert got == naive


def test_mixture_symmetry_on_full_grid():
    g = mixture_universe()
    joint = g.with_maps(estimand=lambda s: s)
    for l0 in {Value(mixture_observation(s)) for s in g.states()}:
        r = region_enumerate(joint, l0)
        assert {Value(mixture_swap(v.payload)) for v in r.values} == r.values
        per = mixture_region(g, l0)
        assert {Value(1 - v.payload) for v in per["pi"].values} == per["pi"].values
        assert per["mu1"].values == per["mu2"].values


# -- finite populations ------------------------------------------------------------------


@pytest.mark.parametrize(
    "observed, expected",
    [
        ([(1, 1), (0, 0)], {0, 0.5, 1}),
        ([(1, 1), (1, 1)], {0, 0.5, 1}),
    ],
)
def test_finite_pop_examples(observed, expected):
    r = finite_pop_ate_region(2, (0, 1), observed)
    assert r.values == {Value(x) for x in expected}


def test_finite_pop_singleton_alphabet():
    r = finite_pop_ate_region(3, (5,), [(5, 1), (5, 0), (5, 1)])
    assert r.values == {Value(0)} and not r.strong


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1)), min_size=1, max_size=3))
def test_finite_pop_matches_naive_fill(observed):
    r = finite_pop_ate_region(len(observed), (0, 1, 2), observed)
    assert {snap(v.payload) for v in r.values} == finite_pop_ate((0, 1, 2), observed)


# -- Gaussian copula grid ----------------------------------------------------------------


def test_gaussian_copula_grid():
    g = gaussian_copula_grid()
    assert g.size() == 2 * 2 * 2 * 2 * 21
    l0 = gaussian_margins((0.0, 1.0, 1.0, 2.0, 0.3))
    r = gaussian_copula_regions(g, l0)
    assert r["tau"].values == {Value((0.0, 1.0, 1.0, 2.0))}
    assert len(r["rho"]) == 21 and r["rho"].strong
