"""Acceptance criteria, one test each, printing one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from besselcmo.compactness import FamilyProbe, fk_modulus, fk_projection, fk_tail
from besselcmo.constructions import (
    ApproximationParams,
    TestFunctionParams,
    adapted_test_function,
    build_dyadic_family,
    build_g_eps,
    choose_m_eps,
    lemma52_profile,
)
from besselcmo.funcspace import (
    GridFunction,
    bmo_norm_estimate,
    dyadic_intervals,
    interval_average,
    lp_norm,
    median,
    median_oscillation,
    oscillation,
    weighted_integral,
)
from besselcmo.kernel import bound_upper_check, kernel_eval, near_diagonal_check, near_diagonal_leading
from besselcmo.measure import (
    Interval,
    doubling_check,
    doubling_ratios,
    measure,
    sharpness_lower_witness,
    sharpness_upper_witness,
)
from besselcmo.operators import (
    TruncationSpec,
    commutator_apply,
    discretize_commutator,
    geometric_grid,
    riesz_truncated,
    singular_values,
)
from besselcmo.symbols import bump, rasterize_symbol

sys.path.insert(0, str(Path(__file__).parent))
from oracles import brute_abs_deviation, exact_mass  # noqa: E402


def criterion_1():
    """Doubling band over random balls."""
    rng = np.random.default_rng(101)
    bad, mismatch = 0, 0
    for lam in (0.1, 0.25, 0.5, 1.0, 2.0, 5.0):
        x = np.exp(rng.uniform(-6, 6, 10 ** 4))
        r = np.exp(rng.uniform(-6, 6, 10 ** 4))
        ratio, lo, hi = doubling_ratios(x, r, lam)
        bad += int(np.sum(~(lo & hi)))
        # the scalar path through Interval objects on a subsample
        for a, b, q in zip(x[:200], r[:200], ratio[:200]):
            mismatch += abs(doubling_check(a, b, lam)[0] - q) > 1e-12 * q
    return bad == 0 and mismatch == 0, f"{bad} violations in 60000 balls, {mismatch} scalar mismatches", 1.0


def criterion_2():
    """Sharpness witnesses."""
    up = sharpness_upper_witness(0.5, 1.0)
    # k = 2 at lam = 1/2: the closed form in rationals
    exact = Fraction(1, 2) * (Fraction(2) ** 2 - 2 * (Fraction(3, 2) ** 2 - Fraction(1, 2) ** 2))
    lows = [sharpness_lower_witness(lam, x) for lam in (0.1, 0.3, 0.5) for x in (0.25, 1.0, 3.0)]
    ok = up == 2.25 and up > 2 and exact == 0 and sharpness_lower_witness(0.5, 1.0) == 0.0 and max(lows) <= 0.0
    return ok, f"ratio={up!r}, max lower gap={max(lows):.3e}", 1.0


def criterion_3():
    """Kernel homogeneity and sign."""
    rng = np.random.default_rng(103)
    worst, positive = 0.0, 0
    for lam in (0.25, 0.5, 1.0, 2.0):
        y = np.exp(rng.uniform(-4, 4, 1000))
        z = np.exp(rng.uniform(-4, 4, 1000))
        t = np.exp(rng.uniform(-3, 3, 1000))
        for a, b, s in zip(y, z, t):
            base = kernel_eval(a, b, lam).value
            scaled = kernel_eval(s * a, s * b, lam).value * s ** (2 * lam + 1)
            worst = max(worst, abs(scaled - base) / abs(base))
            if b < a and base >= 0 or b > a and base <= 0:
                positive += 1
    return worst <= 1e-8 and positive == 0, f"max rel homogeneity defect={worst:.2e}, sign errors={positive}", 120.0


def _bound_band(ny, ns):
    vals = np.array([[bound_upper_check(y, y * s, 1.0) for s in np.geomspace(1e-3, 0.999, ns)]
                     for y in np.geomspace(1e-2, 1e2, ny)])
    return vals.max(), vals.min()


def criterion_4():
    """Two-sided kernel bounds are stable under grid refinement."""
    sup1, inf1 = _bound_band(50, 50)
    sup2, inf2 = _bound_band(100, 100)
    ok = inf1 > 0 and inf2 > 0 and max(sup2 / sup1, sup1 / sup2) < 2 and max(inf1 / inf2, inf2 / inf1) < 2
    return ok, f"sup {sup1:.4f}->{sup2:.4f}, inf {inf1:.4f}->{inf2:.4f}", 300.0


def criterion_5():
    """Near-diagonal asymptotic: normalized defect and the lower estimate."""
    defects = {lam: near_diagonal_check(1.0, 0.999, lam) for lam in (0.5, 1.0, 2.0)}
    lower = all(-kernel_eval(1.0, s, lam).value >= near_diagonal_leading(1.0, s, lam) / 2
                for lam in (0.5, 1.0, 2.0) for s in (0.995, 0.999))
    ok = max(defects.values()) <= 0.05 and lower
    shown = ", ".join(f"lam={k}: {v:.3f}" for k, v in defects.items())
    return ok, f"defects {shown} (need <= 0.05); -R >= lead/2: {lower}", 30.0


def _random_step(rng):
    cells = int(rng.integers(2, 12))
    bp = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 8.0, cells))])
    vals = rng.integers(-3, 4, cells).astype(float) if rng.random() < 0.5 else rng.normal(size=cells)
    return GridFunction(bp, vals)


def criterion_6():
    """Median half-mass property, optimality and comparability."""
    rng = np.random.default_rng(106)
    fails = 0
    for trial in range(1000):
        lam = (0.5, 1.0, 1.5, 0.25)[trial % 4]
        f = _random_step(rng)
        lo, hi = np.sort(rng.uniform(0.0, f.support_bound + 1.0, 2))
        I = Interval.from_endpoints(lo, hi)
        med = median(f, I, lam)
        a, b, v = f.pieces(I.lo, I.hi)
        if float(2 * lam).is_integer():
            masses = [exact_mass(p, q, 2 * lam) for p, q in zip(a, b)]
            total = sum(masses)
            above = sum(m for m, x in zip(masses, v) if x > med.alpha)
            below = sum(m for m, x in zip(masses, v) if x < med.alpha)
            fails += not (2 * above <= total and 2 * below <= total)
        else:
            fails += not (2 * med.above_mass <= med.total_mass and 2 * med.below_mass <= med.total_mass)
        mass = np.array([measure(Interval.from_endpoints(p, q), lam) for p, q in zip(a, b)])
        best = brute_abs_deviation(v, mass, med.alpha)
        probes = np.concatenate([rng.uniform(v.min() - 1, v.max() + 1, 100 - len(v)), v])
        fails += any(best > brute_abs_deviation(v, mass, c) * (1 + 1e-12) + 1e-300 for c in probes)
        M, mo = oscillation(f, I, lam), median_oscillation(f, I, lam)
        fails += not (mo <= M * (1 + 1e-12) and M <= 2 * mo * (1 + 1e-12))
    return fails == 0, f"{fails} failures in 1000 step functions", 10.0


def criterion_7():
    """Worked value for the indicator of (0, 1) on (0, 2)."""
    f, I = GridFunction.indicator(0.0, 1.0), Interval.from_endpoints(0.0, 2.0)
    avg, osc = interval_average(f, I, 0.5), oscillation(f, I, 0.5)
    ok = abs(avg - 0.25) <= 1e-12 and abs(osc - 0.375) <= 1e-12
    return ok, f"average={avg!r}, oscillation={osc!r}", 1.0


def criterion_8():
    """Commutator nullity and fused versus two-term evaluation."""
    X = 8.0
    bp = geometric_grid(256, X)
    pts = 0.5 * (bp[:-1] + bp[1:])
    spec = TruncationSpec(0.5 * float(np.min(np.diff(bp))), X)
    f = GridFunction.from_function(lambda x: bump(x, 3.0, 2.0) + 0.5, bp)
    c = 2.5
    null = max(abs(commutator_apply(GridFunction.constant(c, X), f, x, spec, 1.0)) for x in pts)
    scale = abs(c) * float(np.max(np.abs(f.values)))
    M = discretize_commutator(GridFunction.constant(c, X), 256, X, None, 1.0)
    rng = np.random.default_rng(108)
    b = GridFunction(bp, rng.normal(size=256))
    worst = 0.0
    for x in rng.choice(pts, 40, replace=False):
        fused = commutator_apply(b, f, x, spec, 1.0)
        two = b(x) * riesz_truncated(f, x, spec, 1.0) - riesz_truncated(b * f, x, spec, 1.0)
        worst = max(worst, abs(fused - two) / max(abs(fused), abs(two)))
    ok = null <= 1e-8 * scale and np.abs(M.entries).max() <= 1e-8 * scale and worst <= 1e-8
    return ok, f"null max={null:.1e}, fused vs two-term rel={worst:.1e}", 60.0


def criterion_9():
    """Annular profile of the commutator test function."""
    I = Interval.from_endpoints(4.0, 6.0)
    b = GridFunction([0.0, 4.0, 5.0, 6.0], [0.0, -1.0, 1.0])
    ok, parts_txt = True, []
    for lam in (0.5, 1.0):
        params = TestFunctionParams(I, 2.0, lam, k_min=3, k_max=8)
        parts = adapted_test_function(b, params)
        mean = abs(weighted_integral(parts.f, I, lam))
        prof = lemma52_profile(b, params, TruncationSpec(1e-3, I.hi))
        lower = np.array([r[1] for r in prof])
        upper = np.array([r[2] for r in prof])
        ok &= bool(lower.min() > 0 and lower.max() / lower.min() <= 50)
        ok &= bool(upper.min() > 0 and upper.max() <= 50 * upper.min())
        ok &= abs(parts.a) <= 0.5 and mean <= 1e-10 * measure(I, lam) ** 0.5
        parts_txt.append(f"lam={lam}: lower {lower.max() / lower.min():.2f}x, upper {upper.max() / upper.min():.2f}x, "
                         f"a={parts.a:.4f}")
    return ok, "; ".join(parts_txt), 600.0


def criterion_10():
    """Dyadic family claims and decreasing distance of the approximant."""
    lam, X = 0.5, 16.0
    f = GridFunction.from_function(bump, np.linspace(0.0, X, 3 * 2 ** 14 + 1))
    claims, dist = True, []
    for i, j in ((1, 2), (2, 3), (3, 4)):
        base = ApproximationParams(i, j, j - 1, j + 1)
        m = max(choose_m_eps(f, base, lam, 1e-3), math.ceil(math.log2(X)) + 1)
        params = replace(base, m_eps=m, depth=m)
        claims &= all(build_dyadic_family(params, lam).check_claims(lam).values())
        g, _ = build_g_eps(f, params, lam)
        lo, hi = dyadic_intervals(0.0, 2.0 ** (m + 1), 10)
        dist.append(bmo_norm_estimate(f - g, [Interval.from_endpoints(a, c) for a, c in zip(lo, hi)], lam))
    ok = claims and dist[0] > dist[1] > dist[2]
    return ok, f"claims={claims}, distances=" + ", ".join(f"{d:.3e}" for d in dist), 120.0


def _smooth_member(rng, top=6.0, cells=3000):
    bp = np.linspace(0.0, top, cells + 1)
    params = [(rng.uniform(0.5, top - 1.5), rng.uniform(0.2, 1.0), rng.normal()) for _ in range(3)]
    return GridFunction.from_function(lambda x: sum(h * bump(x, c, w) for c, w, h in params), bp)


def criterion_11():
    """Projection error bound of Frechet-Kolmogorov shape."""
    rng = np.random.default_rng(111)
    worst = 0.0
    for lam, p, rho, N in ((1.0, 2.0, 0.125, 32), (0.5, 3.0, 0.25, 12)):
        for _ in range(20):
            f = _smooth_member(rng)
            F = FamilyProbe([f], p, lam)
            err = lp_norm(f - fk_projection(f, rho, N, lam), p, lam)
            bound = 3 * ((2 * (2 * lam + 1)) ** (1 / p) * fk_modulus(F, rho) + fk_tail(F, N * rho))
            worst = max(worst, err / bound)
    return worst <= 1.0, f"max error/bound={worst:.3f} over 40 members", 60.0


def criterion_12():
    """Singular value decay: smooth bump versus log."""
    n, X, lam = 512, 16.0, 1.0
    bp = geometric_grid(n, X)
    prof = {}
    for name in ("bump", "log"):
        s = singular_values(discretize_commutator(rasterize_symbol(name, bp), n, X, None, lam), 50)
        prof[name] = s / s[0]
    idx = [1, 5, 10, 20, 30, 40, 50]
    for name, s in prof.items():
        print(f"    sigma_k/sigma_1 ({name}): " + ", ".join(f"k={k}: {s[k - 1]:.3e}" for k in idx))
    rb, rl = prof["bump"][-1], prof["log"][-1]
    return rb * 10 <= rl, f"sigma50/sigma1 bump={rb:.3e}, log={rl:.3e}", 600.0


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def run_criterion(k):
    t0 = time.perf_counter()
    ok, detail, budget = CRITERIA[k - 1]()
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < budget
    title = CRITERIA[k - 1].__doc__.splitlines()[0]
    line = f"CRITERION {k:2d} {'PASS' if ok else 'FAIL'}: {title} [{detail}; {elapsed:.1f}s of {budget:.0f}s]"
    return ok, line


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    with capsys.disabled():
        ok, line = run_criterion(k)
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(k) for k in range(1, len(CRITERIA) + 1)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
