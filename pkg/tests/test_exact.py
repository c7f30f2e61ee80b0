"""Exact map, digits, branches and cylinders against independent oracles."""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bcfldp.exact import (MoebiusMap, DigitWord, cylinder, cylinder_length, derivative,
                          digit_at, digits, distortion_budget, inverse_branch, renyi_apply,
                          thaler_c, thaler_sequence, word_map)

unit_rationals = st.builds(lambda p, q: Fraction(p % q, q),
                           st.integers(0, 10**12), st.integers(1, 10**12))
digit_words = st.lists(st.integers(2, 40), min_size=1, max_size=12)


def floor_digit(x: Fraction) -> int:
    # textbook definition, independent of the integer recursion in the library
    return math.floor(1 / (1 - x)) + 1


@pytest.mark.parametrize("x, expected", [(0, 0), (Fraction(1, 2), 0), (Fraction(1, 3), Fraction(1, 2))])
def test_renyi_examples(x, expected):
    assert renyi_apply(x) == expected


@pytest.mark.parametrize("bad", [Fraction(1), Fraction(-1, 3), Fraction(5, 4)])
def test_renyi_rejects_outside_unit_interval(bad):
    with pytest.raises(ValueError):
        renyi_apply(bad)


def test_digit_examples():
    assert digit_at(0, 7) == 2
    assert digit_at(Fraction(1, 2), 1) == 3
    assert digit_at(Fraction(1, 2), 2) == 2
    assert digits(Fraction(1, 2), 4) == (3, 2, 2, 2)
    assert digits(Fraction(1, 3), 3) == (2, 3, 2)
    assert digits(0, 3) == (2, 2, 2)


@given(unit_rationals, st.integers(1, 25))
def test_digits_match_floor_definition(x, n):
    y, expected = x, []
    for _ in range(n):
        b = floor_digit(y)
        expected.append(b)
        y = 1 / (1 - y) - (b - 1)
    assert tuple(digits(x, n)) == tuple(expected)
    assert digit_at(x, n) == expected[-1]


def test_inverse_branch_examples():
    g2 = inverse_branch(2)
    assert (g2.a, g2.b, g2.c, g2.d) == (1, 0, 1, 1)
    assert inverse_branch(3)(0) == Fraction(1, 2)
    with pytest.raises(ValueError):
        inverse_branch(1)


@pytest.mark.parametrize("n", [1, 2, 5, 17, 300])
def test_g2_power_closed_form(n):
    gn = inverse_branch(2) ** n
    for y in (Fraction(0), Fraction(1, 3), Fraction(7, 9)):
        assert gn(y) == y / (n * y + 1)


def test_branch_inversion_small_k():
    rng = random.Random(5)
    for k in range(2, 51):
        g = inverse_branch(k)
        for _ in range(100):
            q = rng.randint(1, 10**6)
            y = Fraction(rng.randrange(q), q)
            assert renyi_apply(g(y)) == y


@given(st.lists(st.integers(2, 10**6), min_size=1, max_size=30))
def test_compositions_are_unimodular(word):
    assert word_map(word).det == 1


def test_cylinder_examples():
    c = cylinder([2])
    assert (c.lo, c.hi, c.length) == (0, Fraction(1, 2), Fraction(1, 2))
    c = cylinder([2, 3])
    assert (c.lo, c.hi, c.length) == (Fraction(1, 3), Fraction(2, 5), Fraction(1, 15))
    for b in range(2, 30):
        c = cylinder([b])
        assert c.lo == 1 - Fraction(1, b - 1)
        assert c.hi == 1 - Fraction(1, b)
        assert c.length == Fraction(1, b * (b - 1))


@given(digit_words)
def test_cylinder_points_carry_their_word(word):
    c = cylinder(word)
    assert 0 <= c.lo < c.hi <= 1
    assert c.length == cylinder_length(word)
    mid = (c.lo + c.hi) / 2
    assert tuple(digits(c.lo, len(word))) == tuple(word)
    assert tuple(digits(mid, len(word))) == tuple(word)


@given(digit_words, st.integers(2, 40), st.integers(2, 40))
def test_cylinder_nesting_and_disjointness(word, b1, b2):
    parent = cylinder(word)
    child1 = cylinder(word + [b1])
    child2 = cylinder(word + [b2])
    assert parent.contains_cylinder(child1)
    if b1 != b2:
        assert child1.disjoint_from(child2)


def test_depth1_partition_identity():
    total = Fraction(0)
    for B in range(2, 10**4 + 1):
        total += Fraction(1, B * (B - 1))
        assert total == 1 - Fraction(1, B)


def test_thaler_examples_and_closed_form():
    assert thaler_c(0) == Fraction(1, 2)
    assert thaler_c(1) == Fraction(1, 3)
    assert thaler_c(10) == Fraction(1, 12)
    seq = list(thaler_sequence(2000))
    for n, c in enumerate(seq):
        assert c == Fraction(1, n + 2)
        if n:
            assert renyi_apply(c) == seq[n - 1]
            assert abs(n * c - 1) <= Fraction(2, n + 2)


def test_derivative_examples():
    assert derivative(0) == 1
    assert derivative(Fraction(1, 2)) == 4
    assert derivative(Fraction(2, 3)) == 9


@given(unit_rationals)
def test_derivative_at_least_one(x):
    d = derivative(x)
    assert d >= 1
    assert (d == 1) == (x == 0)


def test_distortion_budget_is_twice_harmonic():
    for n in range(1, 60):
        H = sum(Fraction(1, j) for j in range(1, n + 1))
        assert distortion_budget(n) == 2 * H


@given(digit_words)
def test_distortion_budget_bounds_log_derivative_oscillation(word):
    # (T^n)' on the cylinder runs between d^2 and (c + d)^2
    m = word_map(word)
    spread = 2 * math.log((m.c + m.d) / m.d)
    assert spread <= float(distortion_budget(len(word))) + 1e-12


@given(unit_rationals.filter(lambda y: y > 0), st.integers(2, 300))
def test_transfer_identity_telescopes(y, B):
    total = sum(inverse_branch(b).derivative(y) / inverse_branch(b)(y) for b in range(2, B + 1))
    assert total == 1 / y - 1 / (y + B - 1)


def test_digit_word_validation():
    with pytest.raises(ValueError):
        DigitWord([])
    with pytest.raises(ValueError):
        DigitWord([2, 1])
    assert DigitWord([2, 3]).extend(4) == (2, 3, 4)


def test_moebius_power_matches_repeated_product():
    m = MoebiusMap(2, 1, 1, 1)
    acc = MoebiusMap.identity()
    for n in range(8):
        assert m ** n == acc
        acc = acc @ m
