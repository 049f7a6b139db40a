from fractions import Fraction

import pytest

from special_cycles.display_sim import (
    check_parity_pattern,
    default_steps,
    dump_steps,
    expected_exponent,
    exponent_from_run,
    initial_state,
    leading_terms,
    obstruction_exponent,
    simulate,
    step_recursion,
)
from special_cycles.errors import BudgetExceededError, TruncationError
from special_cycles.padic_core import PrimeContext, TruncatedSeriesMatrix, fraction_valuation


def _const(rows, t_max):
    return TruncatedSeriesMatrix.constant(rows, t_max)


def test_expected_exponent():
    assert [expected_exponent(v, 3) for v in range(4)] == [1, 4, 13, 40]
    assert [expected_exponent(v, 5) for v in range(3)] == [1, 6, 31]
    assert default_steps(0) == 3
    assert default_steps(3) == 5


def test_initial_states():
    s0 = initial_state(0, 5, 3)
    assert s0.X == _const([[1, 0], [0, 0]], 5)
    assert s0.Y == _const([[0, 0], [0, 1]], 5)
    s1 = initial_state(1, 8, 3)
    assert s1.X == _const([[0, 0], [3, 0]], 8)
    assert s1.Y == _const([[0, 1], [0, 0]], 8)
    s2 = initial_state(2, 16, 3)
    assert s2.X == _const([[3, 0], [0, 0]], 16)
    assert s2.Y == _const([[0, 0], [0, 3]], 16)


def test_initial_state_rejects_short_truncation():
    with pytest.raises(ValueError):
        initial_state(2, 13, 3)
    with pytest.raises(ValueError):
        initial_state(-1, 5, 3)


def test_first_step_even():
    state = step_recursion(initial_state(0, 5, 3))
    assert state.X == _const([[1, 0], [0, 0]], 5)
    assert state.Y == TruncatedSeriesMatrix.from_rows([[{}, {1: Fraction(-1, 3)}], [{}, {0: 1}]], 5)


def test_first_step_odd():
    start = initial_state(3, 43, 3)
    state = step_recursion(start)
    assert state.Y == start.Y
    assert state.X == TruncatedSeriesMatrix.from_rows([[{1: 3}, {}], [{0: 9}, {}]], 43)


def test_v2_trajectory():
    run = simulate(2, 3)
    y1, x2 = run.states[1].Y, run.states[2].X
    assert y1 == TruncatedSeriesMatrix.from_rows([[{}, {1: -1}], [{}, {0: 3}]], 16)
    assert x2 == TruncatedSeriesMatrix.from_rows([[{0: 3, 4: -1}, {}], [{3: -3}, {}]], 16)
    assert fraction_valuation(run.states[3].Y.entry(0, 1)[13], 3) == -1
    assert run.first_nonintegral_degree() == 13


@pytest.mark.parametrize("v, expected", [(0, 1), (1, 4), (2, 13), (3, 40)])
def test_obstruction_exponent_p3(v, expected):
    assert obstruction_exponent(v, PrimeContext.create(3)) == expected


@pytest.mark.parametrize("v, expected", [(0, 1), (1, 6), (2, 31)])
def test_obstruction_exponent_p5(v, expected):
    assert obstruction_exponent(v, PrimeContext.create(5)) == expected


def test_too_few_steps_is_a_truncation_error():
    with pytest.raises(TruncationError):
        obstruction_exponent(2, PrimeContext.create(3), steps=1)


def test_exponent_from_an_existing_run():
    run = simulate(2, 3)
    assert exponent_from_run(run) == run.expected == 13
    with pytest.raises(TruncationError):
        exponent_from_run(simulate(2, 3, steps=1))


def test_budget():
    with pytest.raises(BudgetExceededError):
        simulate(3, 3, budget=10)


@pytest.mark.parametrize("v", [0, 1, 2, 3])
def test_parity_pattern(v):
    pattern = check_parity_pattern(simulate(v, 3))
    assert len(pattern) == default_steps(v)
    assert all(ok for _, ok in pattern)


def test_leading_terms_v2():
    terms = leading_terms(simulate(2, 3))
    assert [(t.step, t.matrix, t.degree) for t in terms] == [(0, "X", 0), (1, "Y", 1), (2, "X", 4), (3, "Y", 13)]
    assert [t.valuation for t in terms] == [1, 0, 0, -1]
    assert all(t.ok for t in terms)


def test_leading_terms_v3():
    terms = leading_terms(simulate(3, 3))
    assert [t.degree for t in terms] == [0, 1, 4, 13, 40]
    assert all(t.ok for t in terms)


def test_dump_steps():
    data = dump_steps(simulate(0, 3))
    assert (data["v"], data["p"], data["t_max"]) == (0, 3, 4)
    assert [s["step"] for s in data["steps"]] == [0, 1, 2, 3]
    assert data["steps"][1]["Y"][0][1] == {"1": {"num": -1, "den": 3}}
