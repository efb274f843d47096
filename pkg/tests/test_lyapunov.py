import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oddcoeffs.automaton import Automaton
from oddcoeffs.errors import ProofCheckError, RankConditionError, ZeroCornerError
from oddcoeffs.lyapunov import (CoordinateChange, LyapunovEstimate, closed_series_trinomial,
                                empirical_mean, enumerate_words, find_coordinate_change, log_abs, monte_carlo,
                                moshe_series, series_level_sums, trinomial_corner,
                                verify_rewording_quadrinomial, word_counts, wynn_epsilon)
from oddcoeffs.presets import automaton_for
from oddcoeffs.spectral import RationalMatrix

LN2 = math.log(2)
TRINOMIAL_LAMBDA = 0.4299474333424527


class TestWords:
    def test_small_cases(self):
        assert list(enumerate_words(1, 4)) == ["1111"]
        assert list(enumerate_words(2, 4)) == ["0101", "0111", "1011", "1101", "1111"]
        assert sorted(enumerate_words(3, 4)) == sorted(
            ["0101", "0111", "1011", "1101", "1111", "0011", "1001"])

    @pytest.mark.parametrize("q", [1, 2, 3, 4])
    def test_counts_follow_generalised_fibonacci(self, q):
        c = word_counts(q, 30)
        for k in range(1, 31):
            if k <= q:
                assert c[k - 1] == 2 ** (k - 1)
            else:
                assert c[k - 1] == sum(c[k - 1 - i] for i in range(1, q + 1))

    @pytest.mark.parametrize("q,k", [(1, 5), (2, 9), (3, 11)])
    def test_enumeration_matches_brute_force(self, q, k):
        brute = [format(i, f"0{k}b") for i in range(1 << k)]
        brute = [w for w in brute if w.endswith("1") and "0" * q not in w]
        assert list(enumerate_words(q, k)) == brute
        assert len(brute) == word_counts(q, k)[-1]

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            list(enumerate_words(0, 3))


@given(st.integers(min_value=1, max_value=1 << 3000))
def test_log_abs_big_ints(x):
    assert log_abs(x) == pytest.approx(math.log(x) if x < 1 << 1000 else
                                       math.log(x >> (x.bit_length() - 60)) +
                                       (x.bit_length() - 60) * LN2, rel=1e-14)
    assert log_abs(-x) == log_abs(x)


def test_log_abs_fraction_and_zero():
    assert log_abs(Fraction(3, 8)) == pytest.approx(math.log(3 / 8))
    with pytest.raises(ValueError):
        log_abs(0)


class TestCoordinateChange:
    def test_trinomial(self):
        cc = find_coordinate_change(automaton_for("trinomial"))
        assert cc.q == 1 and cc.v == (1, 2)
        assert cc.Q.to_int_lists() == [[1, -2], [0, 1]]
        assert cc.D0_prime.to_int_lists() == [[1, 0], [0, 0]]
        assert cc.D1_prime.to_int_lists() == [[3, -4], [1, -2]]

    @pytest.mark.parametrize("name,q", [("binomial", 1), ("trinomial", 1), ("quadrinomial", 2),
                                        ("trinomial2", 2), ("h4", 2), ("quintinomial", 2),
                                        ("sextinomial", 3), ("septinomial", 3)])
    def test_detected_q_and_normal_form(self, name, q):
        a = automaton_for(name)
        cc = find_coordinate_change(a)
        assert cc.q == q
        m = a.m
        e00 = RationalMatrix([[int(i == j == 0) for j in range(m)] for i in range(m)])
        assert cc.Q_inv @ (RationalMatrix(a.D0) ** q) @ cc.Q == e00
        assert cc.Q @ cc.Q_inv == RationalMatrix.identity(m)

    @pytest.mark.parametrize("name", ["stern", "rhombus"])
    def test_rank_condition_fails(self, name):
        with pytest.raises(RankConditionError, match="Monte Carlo"):
            find_coordinate_change(automaton_for(name))

    def test_q_max_validation(self):
        with pytest.raises(ValueError):
            find_coordinate_change(automaton_for("trinomial"), q_max=0)
        with pytest.raises(RankConditionError):
            find_coordinate_change(automaton_for("sextinomial"), q_max=2)


def brute_level_sums(cc, k_max):
    """Per-length sums of ln|D'_z(0,0)| by explicit rational word products."""
    out = []
    for k in range(1, k_max + 1):
        total = 0.0
        for w in enumerate_words(cc.q, k):
            P = RationalMatrix.identity(cc.m)
            for ch in w:
                P = P @ cc.D_prime(int(ch))
            total += math.log(abs(P[0, 0]))
        out.append(total)
    return out


@pytest.mark.parametrize("name,k", [("trinomial", 8), ("quadrinomial", 9), ("sextinomial", 8)])
def test_level_sums_against_explicit_products(name, k):
    cc = find_coordinate_change(automaton_for(name))
    got, diag = series_level_sums(cc, k)
    assert got == pytest.approx(brute_level_sums(cc, k), rel=1e-12, abs=1e-9)
    assert diag["skipped_terms"] == 0


def test_published_sextinomial_q_gives_same_terms():
    a = automaton_for("sextinomial")
    Q = RationalMatrix([[1, -1, -2, -2, -1, -2], [0, -1, 0, 0, 1, 0], [0, 0, 0, 1, 0, 0],
                        [0, 0, 0, 0, 0, 1], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, -1, 0]])
    Qi = Q.inverse()
    D0, D1 = RationalMatrix(a.D0), RationalMatrix(a.D1)
    theirs = CoordinateChange(3, (0,) * 6, Q, Qi, Qi @ D0 @ Q, Qi @ D1 @ Q)
    assert theirs.D1_prime.to_int_lists()[0] == [6, -8, -8, -10, -4, -6]
    ours = find_coordinate_change(a)
    assert ours.Q != Q
    # not just lambda: every per-length sum coincides
    assert series_level_sums(theirs, 10)[0] == pytest.approx(series_level_sums(ours, 10)[0],
                                                             abs=1e-12)


def test_level_sums_promote_to_exact_rows():
    # 1000^k leaves int64 after six letters; the sums must stay exact beyond that
    a = Automaton.from_matrices([[1]], [[1000]], [1])
    cc = find_coordinate_change(a)
    sums, diag = series_level_sums(cc, 12)
    assert diag["promoted_rows"] > 0
    assert sums == pytest.approx([k * math.log(1000) for k in range(1, 13)], rel=1e-14)


def test_zero_corner_strict_and_lenient():
    a = Automaton.from_matrices([[1, 0], [0, 0]], [[0, 1], [1, 0]], [1, 0])
    cc = find_coordinate_change(a)
    with pytest.raises(ZeroCornerError) as info:
        moshe_series(cc, 6)
    assert info.value.word == "1"
    est = moshe_series(cc, 6, strict=False)
    assert est.diagnostics["skipped_terms"] > 0


class TestWynn:
    def test_geometric_series(self):
        r = 0.8
        seq = [sum(r ** j for j in range(n + 1)) for n in range(8)]
        res = wynn_epsilon(seq)
        assert res.table[2][-1] == pytest.approx(1 / (1 - r), rel=1e-13)
        assert res.value == pytest.approx(5.0, rel=1e-13)

    def test_guard_marks_unusable(self):
        res = wynn_epsilon([1.0, 1.0, 1.0, 1.0])
        assert res.unusable > 0
        assert res.value == 1.0

    def test_alternating_log_series(self):
        seq = list(np.cumsum([(-1) ** (k + 1) / k for k in range(1, 14)]))
        assert wynn_epsilon(seq).value == pytest.approx(LN2, abs=1e-9)

    def test_empty(self):
        with pytest.raises(ValueError):
            wynn_epsilon([])


def test_closed_series_trinomial():
    cc = find_coordinate_change(automaton_for("trinomial"))
    assert trinomial_corner(1) == 3 and trinomial_corner(2) == 5
    est = closed_series_trinomial(60, cc=cc)
    assert est.lam == pytest.approx(TRINOMIAL_LAMBDA, abs=1e-15)
    assert est.method == "closed_series"
    assert est.diagnostics["checked_powers"] == 20


def test_series_trinomial_and_quadrinomial():
    cc = find_coordinate_change(automaton_for("trinomial"))
    est = moshe_series(cc, 30)
    assert abs(est.lam - TRINOMIAL_LAMBDA) < 1e-10
    assert est.exponent == est.lam / LN2
    raw = moshe_series(cc, 30, accelerate=False)
    assert raw.method == "word_series" and raw.lam < est.lam
    quad = moshe_series(find_coordinate_change(automaton_for("quadrinomial")), 24)
    assert abs(quad.lam - LN2 / 2) < 1e-9


def test_series_binomial_is_half_ln2():
    est = moshe_series(find_coordinate_change(automaton_for("binomial")), 50)
    assert est.lam == pytest.approx(LN2 / 2, abs=1e-12)


def test_series_needs_two_terms():
    with pytest.raises(ValueError):
        moshe_series(find_coordinate_change(automaton_for("trinomial")), 1)


def test_rewording_proof_check():
    rep = verify_rewording_quadrinomial(automaton_for("quadrinomial"))
    assert rep.passed and rep.two_lambda_over_ln2 == 1
    assert rep.lam == pytest.approx(LN2 / 2)
    assert len(rep.steps) == 11
    with pytest.raises(ProofCheckError) as info:
        verify_rewording_quadrinomial(automaton_for("quintinomial"))
    assert info.value.step == "shape"
    q = automaton_for("quadrinomial")
    broken = Automaton.from_matrices(q.D0, [[0, 0, 0], [2, 0, 0], [0, 1, 1]], q.w)
    with pytest.raises(ProofCheckError) as info:
        verify_rewording_quadrinomial(broken)
    assert info.value.step == "tilde_D0"


class TestMonteCarlo:
    def test_binomial(self):
        est = monte_carlo(automaton_for("binomial"), k=2000, samples=400, seed=5)
        assert abs(est.lam - LN2 / 2) < 4 * est.stderr
        assert est.diagnostics["generator"] == "numpy.PCG64"

    def test_agrees_with_series(self):
        est = monte_carlo(automaton_for("trinomial"), k=4000, samples=500, seed=11)
        assert abs(est.lam - TRINOMIAL_LAMBDA) < 3.5 * est.stderr

    def test_worker_independent(self):
        a = automaton_for("rhombus")
        one = monte_carlo(a, k=256, samples=300, seed=3, workers=1, block=100)
        three = monte_carlo(a, k=256, samples=300, seed=3, workers=3, block=100)
        assert one.lam == three.lam and one.stderr == three.stderr

    def test_raw_estimator(self):
        a = automaton_for("stern")
        raw = monte_carlo(a, k=256, samples=100, estimator="raw")
        assert raw.lam == raw.diagnostics["raw_mean"]
        with pytest.raises(ValueError):
            monte_carlo(a, estimator="median")
        with pytest.raises(ValueError):
            monte_carlo(a, k=4)


def test_empirical_mean():
    assert empirical_mean(automaton_for("binomial"), 20).exponent == pytest.approx(0.5, abs=1e-12)
    tri = empirical_mean(automaton_for("trinomial"), 20).exponent
    assert abs(tri - TRINOMIAL_LAMBDA / LN2) < 0.02
    # g3(n) = 2^#(3n), so the estimate is the mean binary digit sum of 3n over (K ln 2 / ln 2);
    # its O(1/K) bias is about 0.033 at K = 20
    K = 20
    quad = empirical_mean(automaton_for("quadrinomial"), K).exponent
    digits = sum(int(3 * n).bit_count() for n in range(1 << K)) / (1 << K)
    assert quad == pytest.approx(digits / K, rel=1e-12)
    assert abs(quad - 0.5) < 0.04
    assert abs(empirical_mean(automaton_for("quadrinomial"), 10).exponent - 0.5) > abs(quad - 0.5)
    with pytest.raises(ValueError):
        empirical_mean(automaton_for("binomial"), 25)


def test_estimate_serialisation():
    est = LyapunovEstimate(0.5, "monte_carlo", 10, stderr=0.1, seed=3)
    d = est.to_dict()
    assert d["exponent"] == 0.5 / LN2 and d["seed"] == 3 and d["stderr"] == 0.1
    with pytest.raises(ValueError):
        LyapunovEstimate(0.5, "guess", 1)
