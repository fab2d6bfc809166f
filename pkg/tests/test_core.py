import itertools
import random
from fractions import Fraction
from math import comb, factorial

import pytest

from hybridbell.core import (Behavior, BehaviorSpace, Scenario,
                             SymmetricInequality, SymmetryGroup, canonicalize,
                             evaluate, expand_symmetric, from_class_vector,
                             ineq_from_json, ineq_to_json, multiset_count,
                             orbit, render_text)


def svetlichny():
    # +4 + (111) - (112) - (122) + (222) >= 0
    return from_class_vector(3, 4, [1, -1, -1, 1])


def behavior_const(scenario, value):
    return Behavior(scenario, BehaviorSpace.FULL_CORRELATION,
                    {t: Fraction(value) for t in scenario.full_tuples()})


def test_scenario_dimensions():
    sc = Scenario(4, 2)
    assert sc.full_dim == 16
    assert sc.marginal_dim == 3 ** 4 - 1
    with pytest.raises(ValueError):
        Scenario(1, 2)
    with pytest.raises(ValueError):
        Scenario(3, 1)


def test_expand_counts_match_multinomial():
    # exhaustive: every multiset for n <= 6, m <= 3 expands to the multinomial count
    for n in range(2, 7):
        for m in (2, 3):
            sc = Scenario(n, m)
            seen = {}
            for t in itertools.product(range(1, m + 1), repeat=n):
                seen.setdefault(tuple(sorted(t)), 0)
                seen[tuple(sorted(t))] += 1
            for mu, count in seen.items():
                expect = factorial(n)
                for s in set(mu):
                    expect //= factorial(mu.count(s))
                assert count == expect == multiset_count(mu)
                ineq = SymmetricInequality(sc, 0, {mu: 1})
                assert len(expand_symmetric(ineq)) == expect


def test_expand_examples():
    sc = Scenario(4, 2)
    assert len(expand_symmetric(SymmetricInequality(sc, 0, {(1, 1, 2, 2): 1}))) == 6
    exp = expand_symmetric(SymmetricInequality(sc, 0, {(1, 1, 1, 2): 1}))
    assert sorted(exp) == [(1, 1, 1, 2), (1, 1, 2, 1), (1, 2, 1, 1), (2, 1, 1, 1)]
    sc3 = Scenario(3, 2)
    assert len(expand_symmetric(SymmetricInequality(sc3, 0, {(1, 1, 1): 1}))) == 1


def test_evaluate_svetlichny_on_deterministic_behaviors():
    ineq = svetlichny()
    sc = ineq.scenario
    assert evaluate(ineq, behavior_const(sc, 1)) == 0  # 4 + 1 - 3 - 3 + 1

    # hypercube vertex: corr(111) = -1, all (112)/(122) tuples +1, corr(222) = -1
    entries = {}
    for t in sc.full_tuples():
        ell = sum(1 for x in t if x == 2)
        entries[t] = Fraction(-1) if ell in (0, 3) else Fraction(1)
    b = Behavior(sc, BehaviorSpace.FULL_CORRELATION, entries)
    value = evaluate(ineq, b)
    assert value == -4

    # oracle: enumerate all 2^8 sign vectors; the minimum of 4 + sum c*corr is -4
    tuples = sc.full_tuples()
    coeffs = expand_symmetric(ineq)
    best = min(
        4 + sum(coeffs[t] * s for t, s in zip(tuples, signs))
        for signs in itertools.product((1, -1), repeat=len(tuples)))
    assert best == value == -4

    # zero behavior gives the constant
    assert evaluate(ineq, behavior_const(sc, 0)) == 4


def test_evaluate_is_linear_in_the_behavior():
    rng = random.Random(7)
    ineq = svetlichny()
    sc = ineq.scenario
    tuples = sc.full_tuples()
    for _ in range(25):
        b1 = {t: Fraction(rng.randint(-8, 8), 8) for t in tuples}
        b2 = {t: Fraction(rng.randint(-8, 8), 8) for t in tuples}
        alpha = Fraction(rng.randint(0, 10), 10)
        mix = {t: alpha * b1[t] + (1 - alpha) * b2[t] for t in tuples}
        v1 = evaluate(ineq, Behavior(sc, BehaviorSpace.FULL_CORRELATION, b1))
        v2 = evaluate(ineq, Behavior(sc, BehaviorSpace.FULL_CORRELATION, b2))
        vm = evaluate(ineq, Behavior(sc, BehaviorSpace.FULL_CORRELATION, mix))
        # evaluate includes the constant once, so the identity carries it through
        assert vm == alpha * v1 + (1 - alpha) * v2


def test_canonicalize_idempotent_and_orbit_invariant():
    g = SymmetryGroup()
    ineq = svetlichny()
    c1 = canonicalize(ineq, g)
    assert canonicalize(c1, g) == c1
    for img in orbit(ineq, g):
        assert canonicalize(img, g) == c1


def test_canonicalize_identifies_setting_swapped_twin():
    g = SymmetryGroup()
    ineq = svetlichny()
    swapped = SymmetricInequality(
        ineq.scenario, ineq.constant,
        {tuple(sorted(3 - s for s in mu)): c for mu, c in ineq.coeffs.items()})
    assert canonicalize(ineq, g) == canonicalize(swapped, g)


def test_canonicalize_family_f4_matches_paper_display_form():
    # family form: 16 - (1112) - 2(1122) + 3(1222) + 4(2222) >= 0 and the same
    # expression after a global outcome flip of setting 1 land in one class
    f4 = from_class_vector(4, 16, [0, -1, -2, 3, 4])
    flipped = from_class_vector(4, 16, [0, 1, -2, -3, 4])  # flip setting 1: sign (-1)^(4-l)
    g = SymmetryGroup()
    assert canonicalize(f4, g) == canonicalize(flipped, g)


def test_normalized_reduces_to_lowest_integer_terms():
    sc = Scenario(3, 2)
    ineq = SymmetricInequality(sc, Fraction(8, 3),
                               {(1, 1, 1): Fraction(2, 3), (1, 2, 2): Fraction(-4, 3)})
    nrm = ineq.normalized()
    assert nrm.constant == 4
    assert nrm.coeffs[(1, 1, 1)] == 1
    assert nrm.coeffs[(1, 2, 2)] == -2


def test_svetlichny_decomposes_into_two_chsh_expressions():
    """Grouping AB as one 4-setting party turns the Svetlichny form into the sum
    of two CHSH expressions on the (AB, C) scenario (exact coefficient identity)."""
    ineq = svetlichny()
    expansion = expand_symmetric(ineq)
    grouped = {}
    for (a, b, c), coef in expansion.items():
        key = (2 * (a - 1) + b, c)
        grouped[key] = grouped.get(key, 0) + coef
    chsh1 = {(1, 1): 1, (1, 2): -1, (2, 1): -1, (2, 2): -1}
    chsh2 = {(3, 1): -1, (4, 2): 1, (4, 1): -1, (3, 2): -1}
    total = {}
    for d in (chsh1, chsh2):
        for k, v in d.items():
            total[k] = total.get(k, 0) + v
    assert {k: v for k, v in grouped.items() if v} == total
    # constants: 4 = 2 + 2
    assert ineq.constant == 2 + 2


def test_json_roundtrip_and_text_rendering():
    f4 = from_class_vector(4, 16, [0, -1, -2, 3, 4])
    s = ineq_to_json(f4, bounds={"classical": 16}, model=(2, 2))
    back = ineq_from_json(s)
    assert back == f4
    text = render_text(f4)
    assert text == "+16 - (1112) -2 (1122) +3 (1222) +4 (2222) >= 0"


def test_render_marginal_terms_descending():
    sc = Scenario(3, 3)
    ineq = SymmetricInequality(sc, 13, {(0, 0, 1): 1, (1, 1, 1): -1, (0, 0, 3): 2})
    text = render_text(ineq)
    assert "(100)" in text and "(300)" in text and "(111)" in text
