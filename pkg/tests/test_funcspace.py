import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from besselcmo.errors import InfiniteNormError, InvalidArgumentError
from besselcmo.funcspace import (
    GridFunction,
    bmo_norm_estimate,
    cmo_conditions,
    dyadic_intervals,
    interval_average,
    interval_averages,
    lebesgue_integral,
    lp_norm,
    median,
    median_oscillation,
    oscillation,
    oscillations,
    translate,
    weighted_integral,
)
from besselcmo.measure import Interval, measure, measure_between
from besselcmo.symbols import bump

from oracles import brute_abs_deviation

I02 = Interval.from_endpoints(0.0, 2.0)


def random_step(rng, n_max=12, top=4.0):
    n = int(rng.integers(1, n_max))
    bp = np.concatenate([[0.0], np.sort(rng.uniform(0, top, n))])
    bp = np.unique(bp)
    vals = rng.integers(-3, 4, len(bp) - 1).astype(float)
    return GridFunction(bp, vals)


# representation


def test_zero_padding_and_evaluation():
    f = GridFunction([1.0, 2.0], [5.0], tail_value=-1.0)
    assert list(f.breakpoints) == [0.0, 1.0, 2.0]
    assert f(0.5) == 0.0 and f(1.5) == 5.0 and f(2.0) == 5.0 and f(3.0) == -1.0


@pytest.mark.parametrize("bp, vals", [([0.0], []), ([0.0, 1.0], [1.0, 2.0]), ([1.0, 0.5], [1.0]), ([0, 1], [np.nan])])
def test_invalid_representations(bp, vals):
    with pytest.raises(InvalidArgumentError):
        GridFunction(bp, vals)


def test_arithmetic_on_merged_partition():
    f = GridFunction.indicator(0.0, 2.0)
    g = GridFunction.indicator(1.0, 3.0)
    h = f - g * 2.0
    assert list(h.breakpoints) == [0.0, 1.0, 2.0, 3.0]
    assert list(h.values) == [1.0, -1.0, -2.0]
    assert list((1.0 - f).values) == [0.0]
    assert (1.0 - f).tail_value == 1.0


def test_from_function_uses_midpoints():
    f = GridFunction.from_function(lambda x: x, [0.0, 1.0, 3.0])
    assert list(f.values) == [0.5, 2.0]


# norms and translation


def test_lp_norm_examples():
    assert_allclose(lp_norm(GridFunction.indicator(0.0, 1.0), 2, 0.5), 0.5 ** 0.5, rtol=1e-15)
    assert lp_norm(GridFunction([0.0, 1.0], [0.0]), 2, 1.0) == 0.0
    f = GridFunction.indicator(1.0, 3.0) - GridFunction.indicator(0.0, 1.0)
    # 26/3 + 1/3 = 9
    assert_allclose(lp_norm(f, 3, 1.0), 9.0 ** (1 / 3), rtol=1e-14)


def test_lp_norm_rejects_tail_and_bad_p():
    with pytest.raises(InfiniteNormError):
        lp_norm(GridFunction.constant(1.0), 2, 1.0)
    with pytest.raises(InvalidArgumentError):
        lp_norm(GridFunction.indicator(0, 1), 1.0, 1.0)


def test_lp_norm_lower_cut():
    f = GridFunction.indicator(0.0, 2.0)
    assert_allclose(lp_norm(f, 2, 1.0, lower=1.0), (7 / 3) ** 0.5, rtol=1e-14)
    assert lp_norm(f, 2, 1.0, lower=5.0) == 0.0


def test_translate_examples():
    g = translate(GridFunction.indicator(1.0, 2.0), 1.0)
    assert lp_norm(g - GridFunction.indicator(0.0, 1.0), 2, 1.0) == 0.0
    assert lp_norm(translate(GridFunction.indicator(0.0, 1.0), 2.0), 2, 1.0) == 0.0
    with pytest.raises(InvalidArgumentError):
        translate(g, 0.0)


def test_translation_continuity():
    f = GridFunction([0.0, 1.0, 2.5, 3.0], [1.0, -2.0, 0.5])
    d = [lp_norm(translate(f, y) - f, 2, 1.0) for y in 10.0 ** -np.arange(1, 7)]
    assert all(a > b for a, b in zip(d, d[1:])) and d[-1] < 1e-2


# averages, medians, oscillations


def test_worked_values_against_symbolic_integration():
    x = sp.symbols("x", positive=True)
    mass = sp.integrate(x, (x, 0, 2))
    avg = sp.integrate(x, (x, 0, 1)) / mass
    osc = (sp.integrate((1 - avg) * x, (x, 0, 1)) + sp.integrate(avg * x, (x, 1, 2))) / mass
    assert (avg, osc) == (sp.Rational(1, 4), sp.Rational(3, 8))
    f = GridFunction.indicator(0.0, 1.0)
    assert_allclose(interval_average(f, I02, 0.5), float(avg), rtol=1e-12)
    assert_allclose(oscillation(f, I02, 0.5), float(osc), rtol=1e-12)
    assert_allclose(bmo_norm_estimate(f, [I02], 0.5), float(osc), rtol=1e-12)


def test_average_examples():
    assert interval_average(GridFunction.constant(2.5), I02, 1.0) == 2.5
    assert interval_average(GridFunction.indicator(0.0, 1.0), Interval.from_endpoints(2.0, 3.0), 1.0) == 0.0
    assert_allclose(weighted_integral(GridFunction.constant(1.0), I02, 1.0), measure(I02, 1.0), rtol=1e-15)


def test_median_examples():
    assert median(GridFunction.constant(3.0), I02, 2.0).alpha == 3.0
    for lam in (0.1, 0.5, 1.0, 4.0):
        assert median(GridFunction.indicator(0.0, 1.0), I02, lam).alpha == 0.0
    f = GridFunction.indicator(1.0, 2.0) - GridFunction.indicator(0.0, 1.0)
    med = median(f, I02, 0.5)
    assert med.alpha == 1.0
    assert (med.above_mass, med.below_mass) == (0.0, 0.5)


def test_median_smallest_minimizer():
    # at lam = 1/2 both cells have mass 12, so every c in [0, 1] is optimal
    f = GridFunction([0.0, 1.0, 5.0, 7.0], [9.0, 0.0, 1.0])
    med = median(f, Interval.from_endpoints(1.0, 7.0), 0.5)
    assert med.alpha == 0.0
    assert (med.above_mass, med.total_mass) == (12.0, 24.0)


def test_oscillation_zero_iff_constant():
    assert oscillation(GridFunction.constant(4.0), I02, 1.0) == 0.0
    assert oscillation(GridFunction.indicator(0.0, 1.0), I02, 1.0) > 0.0
    assert oscillation(GridFunction.indicator(0.0, 1.0), Interval.from_endpoints(2.0, 3.0), 1.0) == 0.0


@pytest.mark.parametrize("lam", [0.25, 1.0, 2.5])
def test_median_properties_on_random_steps(lam):
    rng = np.random.default_rng(11)
    for _ in range(150):
        f = random_step(rng)
        lo, hi = np.sort(rng.uniform(0, 5, 2))
        I = Interval.from_endpoints(lo, hi + 1e-3)
        med = median(f, I, lam)
        assert med.above_mass <= med.total_mass / 2 and med.below_mass <= med.total_mass / 2
        a, b, v = f.pieces(I.lo, I.hi)
        m = measure_between(a, b, lam)
        best = brute_abs_deviation(v, m, med.alpha)
        for c in np.concatenate([v, rng.uniform(-4, 4, 20)]):
            assert best <= brute_abs_deviation(v, m, c) * (1 + 1e-12) + 1e-300
        mo = median_oscillation(f, I, lam)
        M = oscillation(f, I, lam)
        assert mo <= M * (1 + 1e-12) and M <= 2 * mo * (1 + 1e-12)


def test_average_is_best_l2_constant():
    rng = np.random.default_rng(12)
    for _ in range(50):
        f = random_step(rng)
        a, b, v = f.pieces(0.2, 3.0)
        m = measure_between(a, b, 1.0)
        avg = interval_average(f, Interval.from_endpoints(0.2, 3.0), 1.0)
        best = np.sum((v - avg) ** 2 * m)
        for c in rng.uniform(-4, 4, 20):
            assert best <= np.sum((v - c) ** 2 * m) * (1 + 1e-12)


def test_vectorized_functionals_match_scalar():
    rng = np.random.default_rng(13)
    f = random_step(rng, n_max=40)
    lo = rng.uniform(0, 4, 50)
    hi = lo + rng.uniform(1e-3, 2, 50)
    avg = interval_averages(f, lo, hi, 1.5)
    osc = oscillations(f, lo, hi, 1.5)
    for k in range(50):
        I = Interval.from_endpoints(lo[k], hi[k])
        assert_allclose(avg[k], interval_average(f, I, 1.5), rtol=1e-12, atol=1e-14)
        assert_allclose(osc[k], oscillation(f, I, 1.5), rtol=1e-12, atol=1e-14)


def test_lebesgue_integral():
    f = GridFunction([0.0, 1.0, 3.0], [2.0, -1.0], tail_value=0.5)
    assert_allclose(lebesgue_integral(f, [0.5, 0.0], [2.0, 5.0]), [0.0, 1.0], atol=1e-15)


# BMO estimates


def test_bmo_estimate_examples():
    fam = [Interval.from_endpoints(a, b) for a, b in zip(*dyadic_intervals(0.0, 4.0, 4))]
    assert bmo_norm_estimate(GridFunction.constant(7.0), fam, 1.0) == 0.0
    f = GridFunction.indicator(0.0, 1.0)
    assert bmo_norm_estimate(f, fam[:3], 1.0) <= bmo_norm_estimate(f, fam, 1.0)
    with pytest.raises(InvalidArgumentError):
        bmo_norm_estimate(f, [], 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_bmo_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    f, g = random_step(rng), random_step(rng)
    fam = [Interval.from_endpoints(a, b) for a, b in zip(*dyadic_intervals(0.0, 4.0, 3))]
    lhs = bmo_norm_estimate(f + g, fam, 1.0)
    assert lhs <= bmo_norm_estimate(f, fam, 1.0) + bmo_norm_estimate(g, fam, 1.0) + 1e-12


def test_dyadic_intervals_counts():
    lo, hi = dyadic_intervals(0.0, 1.0, 3)
    assert len(lo) == (1 + 2 + 4 + 8) + (1 + 3 + 7)
    assert np.all(lo >= 0) and np.all(hi <= 1.0)


# vanishing-oscillation functionals


def test_cmo_constant_is_zero():
    res = cmo_conditions(GridFunction.constant(2.0, 8.0), 1.0, [1e-3, 1e-2], [1.0, 4.0], depth=4)
    assert not np.any(res.cond_i) and not np.any(res.cond_ii) and not np.any(res.cond_iii)


def test_cmo_smooth_bump_decays():
    bp = np.linspace(0.0, 4.0, 2 ** 11 + 1)
    f = GridFunction.from_function(bump, bp)
    scales = 2.0 ** np.arange(-8, 1, 2)
    res = cmo_conditions(f, 1.0, scales, [0.5, 1.0, 2.0, 4.0], depth=5)
    assert res.cond_i[0] < res.cond_i[-1] / 10
    assert res.cond_ii[0] < res.cond_ii[-1]
    assert res.cond_iii[-1] == 0.0 and res.cond_iii[0] > 0


def test_cmo_log_keeps_far_oscillation():
    bp = np.concatenate([[0.0], np.geomspace(2.0 ** -12, 2.0 ** 10, 2 ** 11)])
    f = GridFunction.from_function(np.log, bp, tail_value=10 * np.log(2))
    res = cmo_conditions(f, 1.0, [1e-2, 1e-1], [1.0, 4.0, 16.0, 64.0], depth=5)
    assert np.min(res.cond_iii) > 0.5 * np.max(res.cond_iii) > 0


def test_cmo_validates_scales():
    f = GridFunction.indicator(0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        cmo_conditions(f, 1.0, [1e-1, 1e-2], [1.0], depth=2)
    with pytest.raises(InvalidArgumentError):
        cmo_conditions(f, 1.0, [1e-2], [0.0], depth=2)
