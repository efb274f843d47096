import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oddcoeffs.automaton import (Automaton, build, count_table, evaluate, oracle_counts,
                                 residue_vector, validate)
from oddcoeffs.catalog import stern_table
from oddcoeffs.errors import StateExplosionError, ValidationError
from oddcoeffs.gf2poly import RecurrenceSpec, odd_count
from oddcoeffs.presets import PRESET_NAMES, automaton_for, preset

WITH_FIXTURE = [n for n in PRESET_NAMES if preset(n).fixture and not preset(n).direct]


@pytest.mark.parametrize("name", WITH_FIXTURE)
def test_builder_reproduces_displayed_matrices(name):
    p = preset(name)
    a = build(p.spec)
    assert a.D0 == p.fixture.D0
    assert a.D1 == p.fixture.D1
    assert a.w == p.fixture.w


def test_trinomial_states():
    a = build(RecurrenceSpec.first_order("1,1,1"))
    assert [s.value for s in a.states] == [(1, 0), (1, 1)]
    assert a.states[1].row_base == 1 and a.states[1].stride == 2


def test_h4_has_eight_states():
    assert automaton_for("h4").m == 8


def test_stern_builder_agrees_with_recursion():
    # the window builder finds its own (3-state) representation of the same sequence
    a = build(preset("stern").spec)
    assert a.m == 3
    assert validate(a, a.spec, 1 << 12, reference=stern_table(1 << 12)).passed


@pytest.mark.parametrize("name", [n for n in PRESET_NAMES if n != "stern"])
def test_evaluate_matches_oracle(name):
    a = automaton_for(name)
    spec = preset(name).spec
    ref = oracle_counts(spec, 600)
    assert [evaluate(a, n) for n in range(601)] == ref.tolist()


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=4000))
def test_trinomial2_evaluate_property(n):
    spec = preset("trinomial2").spec
    assert evaluate(automaton_for("trinomial2"), n) == odd_count(spec, n)


@pytest.mark.parametrize("name", ["trinomial", "rhombus", "septinomial"])
def test_count_table_matches_evaluate(name):
    a = automaton_for(name)
    table = count_table(a, 10)
    assert table.tolist() == [evaluate(a, n) for n in range(1 << 10)]
    assert count_table(a, 0).tolist() == [a.w[0]]


def test_doubling_invariance():
    # appending a 0 digit below the LSB applies D0 to e0, which fixes e0 for order 1
    for name in ("trinomial", "quadrinomial", "quintinomial"):
        a = automaton_for(name)
        assert all(evaluate(a, 2 * n) == evaluate(a, n) for n in range(300))


def test_residue_vector():
    a = automaton_for("quadrinomial")
    assert residue_vector(a, "101") == (0, 8, 0)
    assert residue_vector(a, "") == (1, 0, 0)
    b = automaton_for("trinomial")
    assert residue_vector(b, "01") == tuple(np.array(b.D0) @ np.array(b.D1) @ [1, 0])
    with pytest.raises(ValueError):
        residue_vector(a, "012")


def test_evaluate_overflow_and_exact():
    a = Automaton.from_matrices([[1]], [[2]], [1])
    n = (1 << 64) - 1
    with pytest.raises(OverflowError):
        evaluate(a, n)
    assert evaluate(a, n, bound=None) == 1 << 64
    assert evaluate(a, (1 << 63) - 1) == 1 << 63
    with pytest.raises(ValueError):
        evaluate(a, -1)


def test_json_round_trip():
    a = automaton_for("rhombus")
    b = Automaton.from_json(a.to_json())
    assert b == a
    doc = json.loads(a.to_json())
    assert doc["m"] == 5 and len(doc["states"]) == 5
    assert doc["states"][0]["value"] == [[1, 0, 0, 0], [1, 1, 1, 0]]


def test_zero_children_account_for_all_four():
    a = automaton_for("trinomial2")
    for j, (z0, z1) in enumerate(a.zero_children):
        assert sum(r[j] for r in a.D0) + z0 == 2
        assert sum(r[j] for r in a.D1) + z1 == 2


def test_state_explosion():
    with pytest.raises(StateExplosionError) as info:
        build(preset("sextinomial").spec, max_states=3)
    assert len(info.value.states) == 3
    with pytest.raises(StateExplosionError):
        build(preset("trinomial").spec, max_depth=1)
    with pytest.raises(ValueError):
        build(preset("trinomial").spec, max_states=0)


def test_validate_reports_first_mismatch():
    good = automaton_for("trinomial")
    bad = Automaton.from_matrices(good.D0, good.D1, (1, 3))
    rep = validate(bad, preset("trinomial").spec, 64, raise_on_failure=False)
    assert not rep.passed
    assert rep.first_mismatch == (1, 3, 4)  # g(1) = 3; w . D1 e0 = 1 + 3
    with pytest.raises(ValidationError) as info:
        validate(bad, preset("trinomial").spec, 64)
    assert info.value.n == 1
