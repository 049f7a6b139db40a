from fractions import Fraction

import numpy as np
import pytest

from special_cycles import densities
from special_cycles.densities import (
    DEFAULT_BUDGET,
    DensityRequest,
    alpha_derivative_binary,
    brute_count,
    closed_form_density,
    density_bruteforce,
    derivative_ratio,
    ell,
    evaluation_point,
    half_weighted_sum,
    interpolation_probe,
    nagaoka_poly,
    reduction_check,
    shimura_poly,
    stable_density,
)
from special_cycles.errors import (
    BudgetExceededError,
    ContextMismatchError,
    ParityError,
    PrecisionError,
    VerificationError,
)
from special_cycles.hermitian_forms import HermMatrix
from special_cycles.padic_core import PrimeContext
from special_cycles.verification import gl_invariance, method_agreement


@pytest.fixture
def ctx():
    return PrimeContext.create(3)


def _unit(ctx, n):
    return HermMatrix.identity(ctx, n)


def _diag(ctx, *exponents):
    return HermMatrix.from_exponents(ctx, exponents)


@pytest.mark.parametrize(
    "m, n, count, value",
    [
        (1, 1, 4, Fraction(4, 3)),
        (2, 2, 96, Fraction(32, 27)),
        (3, 1, 252, Fraction(28, 27)),
        (2, 1, 24, Fraction(8, 9)),
        (3, 2, 6048, Fraction(224, 243)),
    ],
)
def test_unimodular_counts_match_shimura(ctx, m, n, count, value):
    req = DensityRequest(_unit(ctx, m), _unit(ctx, n), 1)
    assert brute_count(req) == count
    assert density_bruteforce(req) == value
    assert closed_form_density(req.S, req.T) == value
    assert shimura_poly(n, 3)(evaluation_point(m - n, 3)) == value


def test_row_and_column_methods_agree(ctx):
    req = DensityRequest(_unit(ctx, 3), _unit(ctx, 2), 1)
    assert brute_count(req, method="rows") == brute_count(req, method="columns") == 6048
    assert brute_count(req, method="rows", workers=4) == 6048
    assert brute_count(req, method="columns", workers=4) == 6048


def test_hyperbolic_plane_counts_like_the_identity(ctx):
    hyperbolic = HermMatrix.from_rows(ctx, [[0, 1], [1, 0]])
    req = DensityRequest(hyperbolic, _unit(ctx, 2), 1)
    assert brute_count(req) == 96
    with pytest.raises(ValueError):
        brute_count(req, method="rows")


def test_k_must_exceed_ell(ctx):
    req = DensityRequest(_unit(ctx, 1), _diag(ctx, 1), 1)
    assert brute_count(req) == 1
    with pytest.raises(ValueError):
        density_bruteforce(req)


def test_parity_vanishing(ctx):
    T = _diag(ctx, 1)
    assert closed_form_density(_unit(ctx, 1), T) == 0
    assert density_bruteforce(DensityRequest(_unit(ctx, 1), T, 2)) == 0
    assert stable_density(_unit(ctx, 2), _diag(ctx, 0, 1)) == 0


def test_request_validation(ctx):
    with pytest.raises(ValueError):
        DensityRequest(_unit(ctx, 1), _unit(ctx, 2), 1)
    with pytest.raises(ValueError):
        DensityRequest(_unit(ctx, 1), _unit(ctx, 1), 0)
    other = PrimeContext.create(5)
    with pytest.raises(ContextMismatchError):
        DensityRequest(_unit(ctx, 1), _unit(other, 1), 1)
    low = PrimeContext.create(3, precision=2)
    with pytest.raises(PrecisionError):
        brute_count(DensityRequest(_unit(low, 1), _unit(low, 1), 3))


def test_budget_is_enforced(ctx):
    req = DensityRequest(_unit(ctx, 2), _unit(ctx, 2), 1)
    with pytest.raises(BudgetExceededError):
        brute_count(req, budget=10)


def test_ell(ctx):
    assert ell(_unit(ctx, 2)) == 0
    assert ell(_diag(ctx, 1, 2)) == 2


def test_epsilon_does_not_change_the_density():
    values = []
    for eps in (2, 3):
        ctx = PrimeContext.create(5, epsilon=eps)
        values.append(density_bruteforce(DensityRequest(_unit(ctx, 2), _unit(ctx, 1), 1)))
    assert values == [Fraction(24, 25), Fraction(24, 25)]


def test_nagaoka_polynomial():
    assert nagaoka_poly(0, 0, 3) == shimura_poly(2, 3)
    assert nagaoka_poly(0, 1, 3)(1) == 0
    assert nagaoka_poly(1, 2, 3)(1) == 0
    assert nagaoka_poly(0, 1, 3).degree == 3
    with pytest.raises(ValueError):
        nagaoka_poly(2, 1, 3)


def test_binary_derivative():
    d = alpha_derivative_binary(0, 1, 3)
    assert d.normalized == 1
    assert d.alpha_prime == Fraction(32, 27)
    assert alpha_derivative_binary(2, 1, 3).normalized == 5
    assert alpha_derivative_binary(2, 3, 3).normalized == 18
    with pytest.raises(ParityError):
        alpha_derivative_binary(1, 1, 3)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_half_weighted_sum_matches_derivative(p):
    for a in range(4):
        for b in range(a + 1, 6, 2):
            assert alpha_derivative_binary(a, b, p).normalized == half_weighted_sum(a, b, p)


def test_derivative_ratio_through_reduction():
    assert derivative_ratio(2, 0, 1, 3) == 1
    assert derivative_ratio(3, 1, 2, 3) == 5
    assert derivative_ratio(4, 2, 3, 5) == half_weighted_sum(2, 3, 5)
    with pytest.raises(ValueError):
        derivative_ratio(1, 0, 1, 3)


def test_binary_closed_form_against_brute_force(ctx):
    S, T = _unit(ctx, 3), _diag(ctx, 0, 1)
    assert closed_form_density(S, T) == Fraction(896, 729)
    assert stable_density(S, T) == Fraction(896, 729)


def test_reduction_splits_off_the_unimodular_part(ctx):
    check = reduction_check([1], n=2, r=1, ctx=ctx)
    assert check.unimodular_factor == Fraction(28, 27)
    assert check.lhs == Fraction(896, 729)
    assert check.holds


def test_interpolation_probe(ctx):
    report = interpolation_probe(0, 1, ctx, ranks=(0, 1))
    assert report.computed == [(Fraction(1), Fraction(0)), (Fraction(-1, 3), Fraction(896, 729))]
    assert report.matches_closed_form
    assert not report.determined
    assert report.interpolated is None


def test_probe_records_budget_refusals(ctx):
    report = interpolation_probe(0, 1, ctx, ranks=(0,), budget=10)
    assert report.computed == []
    assert report.notes


@pytest.mark.parametrize(
    "exponents, value",
    [
        ((0, 2), Fraction(2912, 2187)),
        ((1, 2), Fraction(896, 6561)),
    ],
)
def test_binary_brute_force_at_the_default_budget(ctx, exponents, value):
    S, T = _unit(ctx, 3), _diag(ctx, *exponents)
    assert stable_density(S, T, budget=DEFAULT_BUDGET) == value
    assert nagaoka_poly(*exponents, 3)(evaluation_point(1, 3)) == value


def test_fft_and_shift_convolutions_agree():
    rng = np.random.default_rng(0)
    h1 = rng.integers(0, 50, size=(9, 9)).astype(np.int64)
    h2 = rng.integers(0, 50, size=(9, 9)).astype(np.int64)
    fft = densities._fft_convolve(h1, h2)
    assert fft is not None
    assert np.array_equal(fft, densities._shift_convolve(h1, h2, 9, workers=2))


def test_memory_cap_is_reported_as_such(ctx):
    req = DensityRequest(_unit(ctx, 3), _diag(ctx, 1, 2), 4)
    with pytest.raises(BudgetExceededError, match="memory cap") as info:
        brute_count(req, budget=None, method="columns")
    assert info.value.limit == "memory cap"


def test_stabilization_check_runs(ctx):
    assert stable_density(_unit(ctx, 3), _diag(ctx, 0, 1), check_stability=True) == Fraction(896, 729)


def test_unstable_density_is_reported(ctx, monkeypatch):
    monkeypatch.setattr(densities, "brute_count", lambda *args, **kwargs: 1)
    with pytest.raises(VerificationError, match="not stable"):
        stable_density(_unit(ctx, 2), _unit(ctx, 2), check_stability=True)


def test_conjugation_keeps_nonzero_counts(ctx):
    got, want = gl_invariance(ctx, DEFAULT_BUDGET, workers=1, seed=3, trials=4)
    assert 0 not in want
    assert want[0] == 52907904
    assert want[-1] == 7776
    assert got == want


def test_method_agreement_on_nonzero_counts(ctx):
    rows, columns = method_agreement(ctx, DEFAULT_BUDGET, workers=2)
    assert rows[:2] == [7776, 6048]
    assert all(rows)
    assert rows == columns
