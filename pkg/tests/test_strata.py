import pytest

from special_cycles.errors import BudgetExceededError
from special_cycles.hermitian_forms import JordanProfile
from special_cycles.padic_core import PrimeContext
from special_cycles.strata import (
    build_D,
    duality_involution,
    enumerate_grD,
    enumerate_profiles,
    in_grd,
    inclusion_poset,
    isotropic_submodules,
    orthogonal,
    poset_to_dot,
    verify_stratum_theorems,
    vertex_type,
    whole_module,
)


@pytest.fixture
def ctx():
    return PrimeContext.create(3)


def _D(exponents, ctx):
    return build_D(JordanProfile.from_exponents(exponents), ctx)


def test_build_D_drops_unimodular_part(ctx):
    D = _D((0, 0, 1, 2), ctx)
    assert D.exponents == (1, 2)
    assert D.length == 3
    with pytest.raises(ValueError):
        _D((-1, 1), ctx)
    with pytest.raises(BudgetExceededError):
        _D((3, 3), ctx)


def test_single_line_has_one_vertex(ctx):
    D = _D((1,), ctx)
    entries = enumerate_grD(D)
    assert len(entries) == 1
    assert vertex_type(entries[0], D) == 1
    assert entries[0].B == whole_module(D)


def test_cyclic_module_of_length_three(ctx):
    D = _D((3,), ctx)
    entries = enumerate_grD(D)
    assert len(entries) == 1
    assert entries[0].type == 1
    assert entries[0].B.pivot_exponents() == (1,)


def test_unimodular_profile_gives_a_superspecial_point(ctx):
    D = _D((0, 0), ctx)
    entries = enumerate_grD(D)
    assert len(entries) == 1
    assert vertex_type(entries[0], D) == 1


def test_three_dimensional_hermitian_space(ctx):
    D = _D((1, 1, 1), ctx)
    entries = enumerate_grD(D)
    types = [e.type for e in entries]
    assert len(entries) == 29
    assert types.count(3) == 1
    assert types.count(1) == 28
    assert all(in_grd(D, e.B) for e in entries)


def test_isotropic_lines_are_their_own_orthogonal(ctx):
    D = _D((1, 1), ctx)
    lines = [c for c in isotropic_submodules(D) if c.length == 1]
    assert len(lines) == 4
    for c in lines:
        assert orthogonal(c, D) == c


def test_duality_involution_lands_in_grd(ctx):
    D = _D((1, 1, 1), ctx)
    whole = whole_module(D)
    for entry in enumerate_grD(D):
        image = duality_involution(entry.B, D)
        assert image == whole
        assert in_grd(D, image)


def test_mixed_exponents_agree_with_membership_test(ctx):
    D = _D((1, 2), ctx)
    entries = enumerate_grD(D)
    assert [e.type for e in entries] == [1]
    assert entries[0].B.pivot_exponents() == (0, 1)
    assert all(in_grd(D, e.B) for e in entries)


def test_grd_budget(ctx):
    with pytest.raises(BudgetExceededError):
        enumerate_grD(_D((1, 1, 1), ctx), budget=10)


def test_poset_and_dot(ctx):
    D = _D((1, 1, 1), ctx)
    entries = enumerate_grD(D)
    edges = inclusion_poset(D, entries)
    assert len(edges) == 28
    assert all(j == 0 for _, j in edges)
    dot = poset_to_dot(entries, edges)
    assert dot.startswith("digraph GrD {")
    assert dot.count("->") == 28


@pytest.mark.parametrize(
    "exponents, t0, max_type, irreducible",
    [
        ((1,), 1, 1, True),
        ((3,), 1, 1, True),
        ((0, 1, 1, 1), 3, 3, True),
        ((1, 2), 1, 1, True),
    ],
)
def test_stratum_checks_pass(ctx, exponents, t0, max_type, irreducible):
    report = verify_stratum_theorems(JordanProfile.from_exponents(exponents), ctx)
    assert report.status == "PASS"
    assert report.t0 == t0
    assert report.max_type == max_type
    assert report.irreducible_observed == irreducible


@pytest.mark.parametrize("exponents", [(1, 2, 2), (0, 1, 2, 2)])
def test_reducible_odd_determinant_profiles(ctx, exponents):
    report = verify_stratum_theorems(JordanProfile.from_exponents(exponents), ctx)
    assert report.applicable
    assert report.status == "PASS"
    assert report.max_type == report.t0 == 3
    assert report.maximal_count == 4
    assert report.irreducible_predicted is False
    assert report.irreducible_observed is False


def test_even_determinant_is_skipped(ctx):
    report = verify_stratum_theorems(JordanProfile.from_exponents((1, 1)), ctx)
    assert report.status == "SKIPPED"
    assert report.max_type == 2
    assert report.to_json()["grd_size"] == 5
    assert report.to_json()["parity_ok"] is False


def test_enumerate_profiles():
    assert [p.exponents for p in enumerate_profiles(max_n=1, max_exponent=2)] == [(0,), (1,), (2,)]
    assert all(p.weight <= 3 for p in enumerate_profiles(max_n=3, max_exponent=3, max_weight=3))


@pytest.mark.slow
def test_stratum_grid(ctx):
    for profile in enumerate_profiles(max_n=4, max_exponent=3, max_weight=5):
        report = verify_stratum_theorems(profile, ctx)
        assert report.status == ("PASS" if report.applicable else "SKIPPED")
