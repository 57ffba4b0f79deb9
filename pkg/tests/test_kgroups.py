from math import comb

import pytest
from hypothesis import given, strategies as st

from z2kit import kgroups
from z2kit.errors import NotCoveredError
from z2kit.kgroups import (AbelianGroup, Point, SpaceDescriptor, Sphere, Torus, Z, Z2, ZERO,
                           direct_sum, kq_from_kr, kq_torus, kr_sphere, ko_point)

# Bott table typed independently: KO^{-n}(pt) as (rank, number of Z2)
BOTT = {0: (1, 0), 1: (0, 1), 2: (0, 1), 3: (0, 0), 4: (1, 0), 5: (0, 0), 6: (0, 0), 7: (0, 0)}


def _ko(n):
    rank, twos = BOTT[n % 8]
    return rank, twos


def _oracle_torus(j, d, reduced=False):
    """Stable splitting of T^d: sum_k C(d, k) KO^{-(j + 4 - k)}(pt)."""
    rank = twos = 0
    for k in range(1 if reduced else 0, d + 1):
        r, t = _ko(j + 4 - k)
        rank += comb(d, k) * r
        twos += comb(d, k) * t
    return AbelianGroup(rank, (2,) * twos)


def test_ko_table_and_periodicity():
    assert [ko_point(n).pretty() for n in range(8)] == ["Z", "Z2", "Z2", "0", "Z", "0", "0", "0"]
    for n in range(-16, 16):
        assert ko_point(n) == ko_point(n + 8)
    assert kgroups.ko_upper(-2) == Z2
    assert kgroups.ksp_point(0) == Z


def test_group_arithmetic():
    g = Z + Z2 + Z2
    assert g == AbelianGroup(1, (2, 2))
    assert (3 * Z2).pretty() == "3Z2"
    assert direct_sum([]) == ZERO and ZERO.is_trivial
    assert (Z + 4 * Z2).contains_summand(Z2 * 4)
    assert not Z2.contains_summand(Z)
    assert AbelianGroup.from_record((Z + Z2).to_record()) == Z + Z2
    with pytest.raises(ValueError):
        AbelianGroup(-1)
    with pytest.raises(ValueError):
        AbelianGroup(0, (1,))


@pytest.mark.parametrize("name", sorted(kgroups.GROUP_FIXTURES))
def test_group_fixtures(name):
    compute, expected = kgroups.GROUP_FIXTURES[name]
    assert compute() == expected


@given(st.integers(0, 15), st.integers(0, 4), st.booleans())
def test_torus_matches_binomial_splitting(j, d, reduced):
    assert kq_torus(j, d, reduced) == _oracle_torus(j, d, reduced)


@given(st.integers(0, 15), st.integers(1, 6))
def test_sphere_matches_oracle(i, d):
    r0, t0 = _ko(i)
    r1, t1 = _ko(i - d)
    assert kr_sphere(i, d) == AbelianGroup(r0 + r1, (2,) * (t0 + t1))
    assert kr_sphere(i, d, reduced=True) == AbelianGroup(r1, (2,) * t1)


@given(st.integers(0, 15), st.integers(0, 4))
def test_unreduced_is_point_plus_reduced(j, d):
    assert kq_torus(j, d) == kq_torus(j, d, reduced=True) + kq_from_kr(Point(), j)


def test_summand_provenance_adds_up():
    for space in (Torus(3), Sphere(3), Torus(2, reduced=True)):
        for j in range(8):
            terms = kgroups.kq_from_kr_summands(space, j)
            assert direct_sum(t.multiplicity * t.group for t in terms) == kq_from_kr(space, j)
            for t in terms:
                assert t.group == ko_point(t.ko_degree)
                assert set(t.to_record()) >= {"label", "multiplicity", "ko_degree"}


def test_space_parse():
    assert SpaceDescriptor.parse("T3") == Torus(3)
    assert SpaceDescriptor.parse("s2", reduced=True) == Sphere(2, reduced=True)
    assert SpaceDescriptor.parse("pt") == Point()
    assert str(Torus(3, reduced=True)) == "T3~"
    for bad in ("X3", "T", "torus"):
        with pytest.raises(ValueError):
            SpaceDescriptor.parse(bad)


def test_cell_counts():
    assert kgroups.fkmm_cell_counts(Sphere(1)) == {(0, "fix"): 2, (1, "+"): 1, (1, "-"): 1}
    assert kgroups.fkmm_cell_counts(Sphere(2)) == {(0, "fix"): 2, (1, "+"): 2, (1, "-"): 2,
                                                   (2, "+"): 2, (2, "-"): 2}
    assert kgroups.fkmm_cell_counts(Torus(2)) == {(0, "fix"): 4, (1, "+"): 4, (1, "-"): 4,
                                                  (2, "+"): 2, (2, "-"): 2}
    # the '+' part of S^{1,3} is 3 R u 6 R^2 u 4 R^3
    counts = kgroups.fkmm_cell_counts(Sphere(3))
    assert [counts[(n, "+")] for n in (1, 2, 3)] == [3, 6, 4]


@pytest.mark.parametrize("fixture", kgroups.EXACT_SEQUENCE_FIXTURES, ids=lambda f: f["name"])
def test_exact_sequence_terms(fixture):
    for term, compute in zip(fixture["terms"], fixture["computed"]):
        if compute is not None:
            assert compute() == term


def test_bulk_boundary():
    assert kgroups.boundary_group(2) == Z2
    assert kgroups.bulk_boundary_check(2, 0)
    assert kgroups.bulk_boundary_check(3, 1)
    with pytest.raises(NotCoveredError, match="not covered"):
        kgroups.bulk_boundary_check(4, 0)


@pytest.mark.parametrize("space, fixed", [(Torus(1), 2), (Torus(2), 4), (Torus(3), 8),
                                          (Torus(4), 16), (Sphere(2), 2), (Sphere(4), 2)])
def test_cell_counts_fixed_points_and_symmetry(space, fixed):
    counts = kgroups.fkmm_cell_counts(space)
    assert counts[(0, "fix")] == fixed
    for (dim, label), n in counts.items():
        if label == "+":
            assert counts[(dim, "-")] == n
