"""Pressure brackets, Legendre transforms, minimiser scans and the spectrum."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bcfldp.digitstats import IDENTITY, LOGARITHM, RECIPROCAL
from bcfldp.errors import BudgetExceededError
from bcfldp.exact import cylinder_length, distortion_budget
from bcfldp.measures import DigitMarkovMeasure, stats
from bcfldp.thermo import (MarkovPartition, default_q_grid, lambda_curve, lyapunov_spectrum,
                           minimizer_scan, pressure_bracket, rate_from_legendre, rate_table,
                           synthetic_curve)

COARSE_Q = default_q_grid(q_max=40.0, step=0.02, ratio=1.3)


def brute_partition_sum(B, n):
    return sum(cylinder_length(w) for w in itertools.product(range(2, B + 1), repeat=n))


@pytest.mark.parametrize("B", [2, 3, 7, 40, 1000])
def test_depth_one_partition_sum(B):
    br = pressure_bracket(IDENTITY, 0, 1, B, 1)
    assert br.partition_sum == 1 - Fraction(1, B)
    assert br.lower <= math.log(1 - 1 / B) <= br.upper


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_all_two_word(n):
    br = pressure_bracket(IDENTITY, 0, 1, 2, n)
    assert br.partition_sum == Fraction(1, n + 1)
    assert br.approximation == pytest.approx(math.log(1 / (n + 1)) / n, rel=1e-12)
    assert br.lower <= br.approximation <= br.upper <= 0


@pytest.mark.parametrize("B, n", [(3, 4), (4, 3), (6, 2)])
def test_partition_sum_matches_brute_force(B, n):
    assert pressure_bracket(IDENTITY, 0, 1, B, n).partition_sum == brute_partition_sum(B, n)


def test_partition_sums_increase_towards_one():
    sums = [pressure_bracket(IDENTITY, 0, 1, B, 3).partition_sum for B in range(2, 12)]
    assert all(a < b < 1 for a, b in zip(sums, sums[1:]))


@given(st.floats(-3, 3), st.floats(-2, 2), st.integers(2, 6), st.integers(1, 6))
def test_enumeration_bracket_width(q, t, B, n):
    br = pressure_bracket(LOGARITHM, q, t, B, n)
    assert br.lower <= br.approximation <= br.upper
    assert br.width <= 2 * abs(t) * float(distortion_budget(n)) / n + 1e-9


@pytest.mark.parametrize("psi, q, t", [(IDENTITY, 0.0, 1.0), (IDENTITY, -1.5, 1.0),
                                       (RECIPROCAL, 2.0, 1.0), (LOGARITHM, 0.7, 0.5),
                                       (IDENTITY, 0.0, -0.7)])
def test_transfer_and_enumeration_agree(psi, q, t):
    enum = pressure_bracket(psi, q, t, 4, 9, method="enumerate")
    tr = pressure_bracket(psi, q, t, 4, 9, method="transfer")
    assert tr.lower <= tr.upper
    assert tr.lower <= enum.upper and enum.lower <= tr.upper
    assert tr.width < enum.width


def test_brackets_at_successive_depths_are_consistent():
    prev = None
    for n in range(1, 9):
        br = pressure_bracket(IDENTITY, 0.3, 1, 3, n)
        if prev is not None:
            slack = 2 * float(distortion_budget(n)) / n
            assert br.lower <= prev.upper + slack and prev.lower - slack <= br.upper
        prev = br


def test_lower_end_monotone_in_cap():
    lows = [pressure_bracket(IDENTITY, 0.3, 1, B, 6, method="transfer").lower for B in range(3, 10)]
    assert all(a <= b + 1e-12 for a, b in zip(lows, lows[1:]))


def test_markov_partition_geometry():
    part = MarkovPartition(12, 50)
    # cells are capped cylinders; digits above the cap are missing from each parent
    assert (part.hi - part.lo).sum() < 1 - 1 / 12
    assert np.all(part.hi - part.lo <= 1 / 50 + 1e-15)
    order = np.argsort(part.lo)
    assert np.all(part.lo[order][1:] >= part.hi[order][:-1] - 1e-15)
    mids = 0.5 * (part.lo + part.hi)
    k = part.digit
    img = (mids[part.rows] + k - 2) / (mids[part.rows] + k - 1)
    assert np.all(part.lo[part.cols] <= img) and np.all(img < part.hi[part.cols])


def test_enumeration_budget():
    with pytest.raises(BudgetExceededError) as err:
        pressure_bracket(IDENTITY, 0, 1, 40, 8, method="enumerate")
    assert err.value.suggestion


def test_lambda_curve_monotone_convex_and_slope():
    curve = lambda_curve(IDENTITY, 8, 5, [-60, -50, -2, -1, -0.5, 0, 0.5, 1])
    for a, b in zip(curve, curve[1:]):
        assert a.lower <= b.upper
    mids = [b.mid for b in curve]
    qs = [b.q for b in curve]
    for i in range(1, len(curve) - 1):
        w = (qs[i] - qs[i - 1]) / (qs[i + 1] - qs[i - 1])
        chord = (1 - w) * mids[i - 1] + w * mids[i + 1]
        assert mids[i] <= chord + 2 * max(c.width for c in curve[i - 1:i + 2])
    slope = (curve[1].mid - curve[0].mid) / (qs[1] - qs[0])
    assert slope == pytest.approx(2.0, abs=0.02)


def test_legendre_of_quadratic():
    qs = np.linspace(-5, 5, 10001)
    curve = synthetic_curve(lambda q: q * q / 2, qs)
    for alpha in np.linspace(-4, 4, 33):
        r = rate_from_legendre(curve, alpha)
        assert r.finite
        assert r.lower == pytest.approx(alpha ** 2 / 2, abs=1e-3)
        assert r.upper == pytest.approx(alpha ** 2 / 2, abs=1e-3)
    assert not rate_from_legendre(curve, 6.0).finite


@pytest.fixture(scope="module")
def identity_curve():
    return lambda_curve(IDENTITY, 10, 6, COARSE_Q)


def test_identity_rate_at_two(identity_curve):
    r = rate_from_legendre(identity_curve, 2.0)
    assert r.contains_zero
    assert r.upper <= max(b.width for b in identity_curve) + 1e-9


def test_slope_range_consistency(identity_curve):
    assert not rate_from_legendre(identity_curve, 1.99).finite
    assert not rate_from_legendre(identity_curve, 10.01).finite
    assert rate_from_legendre(identity_curve, 10.0).finite


def test_rate_table_nonnegative_and_convex(identity_curve):
    table = rate_table(IDENTITY, 10, 6, np.linspace(2, 10, 41), curve=identity_curve)
    assert all(r.lower >= 0 and r.lower <= r.upper for r in table.rows)
    assert table.convexity_defects() == []


def test_reciprocal_rate_small_case():
    curve = lambda_curve(RECIPROCAL, 20, 6, COARSE_Q)
    assert rate_from_legendre(curve, 0.5).contains_zero
    assert rate_from_legendre(curve, 0.25).lower > 0
    assert not rate_from_legendre(curve, 0.51).finite


def _zero_set(rows):
    zs = [r.alpha for r in rows if r.is_zero]
    return min(zs), max(zs)


def test_reciprocal_zero_set_shrinks():
    alphas = np.linspace(0.3, 0.5, 41)
    coarse = minimizer_scan(RECIPROCAL, 8, 3, alphas, COARSE_Q)
    fine = minimizer_scan(RECIPROCAL, 30, 7, alphas, COARSE_Q)
    lo_c, hi_c = _zero_set(coarse)
    lo_f, hi_f = _zero_set(fine)
    assert hi_c == hi_f == 0.5
    assert lo_f > lo_c


def test_logarithm_zero_set_near_log2():
    alphas = np.linspace(math.log(2), 1.6, 40)
    rows = minimizer_scan(LOGARITHM, 20, 6, alphas, COARSE_Q)
    lo, hi = _zero_set(rows)
    assert lo == pytest.approx(math.log(2))
    assert hi < 1.0
    assert not rows[-1].is_zero


def test_identity_rates_decrease_with_cap():
    alphas = [3.0, 4.0, 5.0, 6.0]
    small = minimizer_scan(IDENTITY, 8, 5, alphas, COARSE_Q)
    large = minimizer_scan(IDENTITY, 16, 5, alphas, COARSE_Q)
    for a, b in zip(small, large):
        assert b.rate.upper <= a.rate.upper + 1e-9


def test_spectrum_properties():
    B = 12
    alphas = np.linspace(0.1, 2 * math.log(B) + 0.5, 25)
    table = lyapunov_spectrum(B, 5, alphas)
    rows = [r for r in table.rows if r.in_range]
    assert all(r.alpha < 2 * math.log(B) for r in rows)
    assert any(not r.in_range for r in table.rows)
    assert all(0.5 <= r.lower <= r.upper <= 1 for r in rows)
    assert table.monotonicity_defects() == []


def test_spectrum_at_mme_exponent():
    mme = DigitMarkovMeasure.uniform(3)
    s = stats(mme, IDENTITY, 12)
    alpha = 0.5 * (s.chi.lo + s.chi.hi)
    row = lyapunov_spectrum(3, 10, [alpha]).rows[0]
    # the equilibrium point: the spectrum equals h / alpha there
    assert row.lower - 0.02 <= s.h / alpha <= row.upper + 1e-9


def test_spectrum_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        lyapunov_spectrum(5, 3, [0.0])
