import logging
from fractions import Fraction

import pytest

from special_cycles.densities import half_weighted_sum
from special_cycles.errors import ParityError, PrecisionError
from special_cycles.lifting import (
    QuatValuationDatum,
    coset_valuation_l,
    deformation_locus_degree,
    e_s_table,
    gl2_correction_sums,
    is_extrapolated,
    lifting_bound_n0s,
    lifting_bound_nrr,
    lifting_bound_nrs,
    mu_matrix_l,
    onestep_holds,
    ramification_index,
    relabel_even_odd,
    special_fiber_sums,
    stratum_intersection,
    stratum_pair_intersection,
    total_degree,
)
from special_cycles.padic_core import OkElement, PrimeContext, QuatElement


def test_ramification_index():
    assert ramification_index(0, 3) == 1
    assert ramification_index(1, 3) == 4
    assert ramification_index(3, 3) == 36
    assert ramification_index(2, 5, ramified=True) == 50
    assert e_s_table(3, 4) == [(0, 1), (1, 4), (2, 12), (3, 36), (4, 108)]
    with pytest.raises(ValueError):
        ramification_index(-1, 3)


def test_coset_valuation_of_powers_of_pi():
    pi_b = QuatValuationDatum(ord_alpha=None, ord_beta=1)
    assert coset_valuation_l(pi_b, 0, 2) == 3
    pi_a = QuatValuationDatum(ord_alpha=1, ord_beta=None)
    assert coset_valuation_l(pi_a, 0, 1) == 2
    unit = QuatValuationDatum(ord_alpha=0, ord_beta=None)
    assert coset_valuation_l(unit, 0, 1) == 0
    assert coset_valuation_l(unit, 0, 2) == 0
    assert coset_valuation_l(QuatValuationDatum(None, None), 0, 4) is None


def test_coset_valuation_with_level():
    ctx = PrimeContext.create(3, precision=6)
    alpha = OkElement(ctx, 1, 3)
    psi = QuatValuationDatum.from_quat(QuatElement(alpha, OkElement.zero(ctx)))
    with pytest.raises(PrecisionError):
        coset_valuation_l(psi, 1, 1)
    psi = QuatValuationDatum.from_quat(QuatElement(alpha, OkElement.from_int(ctx, 3)))
    assert coset_valuation_l(psi, 1, 1) == 3
    assert coset_valuation_l(psi, 1, 2) == 0
    with pytest.raises(ValueError):
        coset_valuation_l(QuatValuationDatum(0, 0), 1, 2)
    with pytest.raises(ValueError):
        coset_valuation_l(psi, 3, 2)


def test_d_valuation():
    assert QuatValuationDatum(0, None).v_D == 0
    assert QuatValuationDatum(None, 1).v_D == 3
    assert QuatValuationDatum(2, 1).v_D == 3


def test_lifting_bound_n0s():
    assert lifting_bound_n0s(4, 0, 3) == Fraction(5, 2)
    assert lifting_bound_n0s(0, 2, 3) == 1
    assert lifting_bound_n0s(2, 1, 3) == 5
    assert lifting_bound_n0s(3, 2, 3) == 16
    assert lifting_bound_n0s(2, 3, 3) == 13


@pytest.mark.parametrize("l, expected", [(0, 1), (1, 2), (2, 5), (3, 6), (4, 8)])
def test_lifting_bound_nrr(l, expected):
    assert lifting_bound_nrr(l, 1, 3) == expected


def test_lifting_bound_nrs():
    assert lifting_bound_nrs(2, 1, 1, 3) == 5
    assert lifting_bound_nrs(0, 1, 2, 3) == 4
    assert lifting_bound_nrs(0, 0, 3, 3) == lifting_bound_n0s(0, 3, 3)
    with pytest.raises(ValueError):
        lifting_bound_nrs(1, 3, 2, 3)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_onestep_identity(p):
    for s in range(5):
        for r in range(s + 1):
            for l in range(8):
                assert onestep_holds(l, r, s, p), (l, r, s)


def test_mu_matrix_valuations():
    assert mu_matrix_l(2, 3, 0) == (3, 3, 3, 3)
    assert mu_matrix_l(2, 3, 2) == (3, 3, 3, 3)
    assert mu_matrix_l(2, 3, 1) == (2, 2, 2, 2)
    assert mu_matrix_l(2, 3, 3) == (2, 2, 2, 2)
    with pytest.raises(ParityError):
        mu_matrix_l(3, 2, 0)


def test_stratum_intersection():
    assert stratum_intersection(2, 3, 0, 3) == 2
    assert stratum_intersection(2, 3, 1, 3) == 5
    assert stratum_intersection(2, 3, 2, 3) == 16
    assert stratum_intersection(2, 3, 3, 3) == 13
    with pytest.raises(ValueError):
        stratum_intersection(2, 3, 4, 3)
    with pytest.raises(ParityError):
        stratum_intersection(3, 2, 0, 3)


def test_extrapolated_branch_is_logged(caplog):
    assert is_extrapolated(2, 1, 2)
    assert not is_extrapolated(2, 3, 2)
    with caplog.at_level(logging.WARNING, logger="special_cycles.lifting"):
        assert stratum_intersection(2, 1, 2, 3) == 4
    assert "unordered" in caplog.text


def test_stratum_pair_intersection():
    assert stratum_pair_intersection(0, 5, 3) == 1
    assert stratum_pair_intersection(1, 2, 3) == 4
    assert stratum_pair_intersection(3, 7, 3) == 36
    with pytest.raises(ValueError):
        stratum_pair_intersection(2, 2, 3)


def test_relabel_even_odd():
    assert relabel_even_odd(1, 2) == (2, 1)
    assert relabel_even_odd(0, 3) == (0, 3)
    with pytest.raises(ParityError):
        relabel_even_odd(1, 1)


@pytest.mark.parametrize("a, b, total", [(0, 1, 1), (1, 2, 5), (2, 3, 18), (0, 3, 2)])
def test_total_degree(a, b, total):
    ledger = total_degree(a, b, 3)
    assert ledger.total == total
    assert ledger.formula_total == total
    assert sum(ledger.per_stratum.values()) == sum(ledger.per_stratum_odd.values()) == total


def test_ledger_json():
    ledger = total_degree(1, 2, 3)
    data = ledger.to_json()
    assert (data["a"], data["b"]) == (2, 1)
    assert data["extrapolated"] == [2]
    assert data["per_stratum"] == {"0": 1, "2": 4}
    assert data["per_stratum_odd"] == {"1": 5}


@pytest.mark.parametrize("p", [3, 5, 7])
def test_grand_identity_grid(p):
    for a in range(10):
        for b in range(10):
            if (a + b) % 2:
                assert total_degree(a, b, p).total == half_weighted_sum(a, b, p)


def test_special_fiber_sums():
    assert special_fiber_sums(0, "even", 3) == 1
    assert special_fiber_sums(2, "even", 3) == 13
    assert special_fiber_sums(1, "odd", 3) == 4
    with pytest.raises(ParityError):
        special_fiber_sums(1, "even", 3)
    with pytest.raises(ValueError):
        special_fiber_sums(1, "both", 3)


def test_gl2_corrections():
    assert gl2_correction_sums(0, False, 3) == 1
    assert gl2_correction_sums(1, False, 3) == 5
    assert gl2_correction_sums(1, True, 3) == 8
    assert deformation_locus_degree(2, 3) == 5
    assert deformation_locus_degree(3, 3) == 8
