import json
import math

import pytest

from oddcoeffs.catalog import (SuiteReport, carlitz_count, run_digitsum_suite,
                               run_dispersion_suite, run_extreme_suite, run_recursion_suite,
                               run_stern_suite, stern_table, stern_v, suites_for)
from oddcoeffs.errors import OddCoeffsError
from oddcoeffs.gf2poly import iter_rows, odd_count
from oddcoeffs.presets import PRESET_NAMES, automaton_for, preset


def test_preset_registry():
    assert set(PRESET_NAMES) == {"binomial", "trinomial", "quadrinomial", "trinomial2", "h4",
                                 "quintinomial", "sextinomial", "septinomial", "rhombus", "stern"}
    assert preset("trinomial").fixture.D0 == ((1, 2), (0, 0))
    assert preset("stern").direct.w == (1, 0)
    assert preset("h4").fixture is None and preset("h4").constants.lam == 0.45759385431410
    assert "A071053" in preset("trinomial").constants.oeis_ids
    with pytest.raises(OddCoeffsError, match="unknown preset"):
        preset("pentagon")


def test_stern_matrices_are_used_directly():
    a = automaton_for("stern")
    assert a.D0 == ((1, 0), (1, 1)) and a.D1 == ((1, 1), (0, 1)) and a.w == (1, 0)


def fibonacci_polynomial_odd_counts(n_max):
    """Odd coefficients of p_n = x p_{n-1} + p_{n-2} over the integers (test oracle)."""
    prev, cur = [1], [0, 1]
    out = [1, 1]
    for _ in range(2, n_max + 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] += c
        prev, cur = cur, nxt
        out.append(sum(c % 2 for c in cur))
    return out[: n_max + 1]


def test_stern_v():
    assert stern_v(0) == 1 and stern_v(4) == 3
    ref = fibonacci_polynomial_odd_counts(300)
    assert [stern_v(n) for n in range(301)] == ref
    assert stern_table(300).tolist() == ref
    with pytest.raises(ValueError):
        stern_v(-1)


def test_stern_matches_gf2_rows():
    spec = preset("stern").spec
    assert [r.bit_count() for r in iter_rows(spec, 200)] == [stern_v(n) for n in range(201)]


def test_carlitz():
    assert [carlitz_count(n) for n in range(8)] == [stern_v(n) for n in range(8)]


def test_stern_partial_sums():
    t = stern_table((1 << 16) - 1)
    for k in range(17):
        assert int(t[: 1 << k].sum()) == (3 ** k + 1) // 2


@pytest.mark.parametrize("name", ["trinomial", "quadrinomial", "trinomial2"])
def test_recursion_suites(name):
    rep = run_recursion_suite(name, 1 << 10)
    assert rep.passed, rep.failures
    assert rep.checked > 1 << 10


def test_recursion_examples():
    quad = preset("quadrinomial").spec
    assert odd_count(quad, 5) == 16 == 4 * odd_count(quad, 1)
    tri2 = preset("trinomial2").spec
    assert odd_count(tri2, 5) == 9 == 3 * odd_count(tri2, 1)


def test_recursion_suite_unknown():
    with pytest.raises(ValueError):
        run_recursion_suite("septinomial")


@pytest.mark.parametrize("name", ["binomial", "trinomial", "rhombus", "stern"])
def test_extreme_suites(name):
    rep = run_extreme_suite(name)
    assert rep.passed, rep.failures


def test_extreme_examples():
    u = automaton_for("rhombus")
    assert u.evaluate(5) == 6 and u.evaluate(37) == 45
    assert automaton_for("trinomial").evaluate(7) == 11
    assert stern_v(2) == 2


def test_rhombus_second_family_closed_form():
    # brute-force rows: u(5 * 2^(k+1) - 1) = 5 (2^(k+3) + (-1)^k) / 3
    spec = preset("rhombus").spec
    for k in range(5):
        n = 5 * 2 ** (k + 1) - 1
        assert odd_count(spec, n) == 5 * (2 ** (k + 3) + (-1) ** k) // 3
        # the variant without the factor 5 on (-1)^k is never an integer
        assert (5 * 2 ** (k + 3) + (-1) ** k) % 3 != 0


def test_rhombus_running_minimum_reported():
    rep = run_extreme_suite("rhombus", k_max=4, dominance_k=4)
    mins = rep.metrics["running_minimum"]
    assert mins[:4] == [2, 2, 3, 4]
    assert all(a <= b for a, b in zip(mins, mins[1:]))


def test_digitsum_suite():
    rep = run_digitsum_suite(1 << 12)
    assert rep.passed
    ratios = rep.metrics["ternary_ratios"]
    assert all(abs(v - 1) < 0.1 for v in ratios.values())
    with pytest.raises(ValueError):
        run_digitsum_suite(1 << 17)


def test_dispersion_binomial_is_exact():
    rep = run_dispersion_suite("binomial", 16)
    assert rep.passed
    assert rep.metrics["var_log_over_ln_n"] == pytest.approx(math.log(2) / 4, rel=1e-12)


def test_dispersion_is_report_only():
    rep = run_dispersion_suite("stern", 12)
    assert rep.passed and rep.checked == 0
    assert set(rep.metrics) >= {"log_var_over_ln_n", "log_var_slope", "variance_exponent"}


def test_stern_suite():
    rep = run_stern_suite(n_max=128, k_max=10)
    assert rep.passed and rep.checked == 2 * 129 + 11


def test_report_serialisation_and_failures():
    rep = SuiteReport("demo", "trinomial", {"n_max": 3})
    assert rep.check("one", 1, 1)
    assert not rep.check("two", (1, 2), (1, 3), n=2)
    doc = json.loads(rep.to_json())
    assert doc["passed"] is False
    assert doc["failures"] == [{"identity": "two", "n": 2, "lhs": [1, 2], "rhs": [1, 3]}]
    assert set(doc) >= {"suite", "preset", "range", "passed", "failures", "metrics"}


def test_suites_for():
    assert len(suites_for("stern")) == 3
    assert suites_for("h4") == []
