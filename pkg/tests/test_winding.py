import numpy as np
import pytest

from z2kit.errors import FieldNotResolvable
from z2kit.winding import (constant_map, max_neighbor_distance, quaternion_s3_map, wzw_estimate,
                           wzw_mod2, wzw_winding)


def _central_difference_degree(g):
    """(1/8 pi^2) sum tr(Lx [Ly, Lz]) with plain second-order differences."""
    N = g.shape[0]
    h = 2 * np.pi / N
    ginv = np.conj(np.swapaxes(g, -1, -2))
    L = [ginv @ (np.roll(g, -1, axis=a) - np.roll(g, 1, axis=a)) / (2 * h) for a in range(3)]
    comm = L[1] @ L[2] - L[2] @ L[1]
    total = np.trace(L[0] @ comm, axis1=-2, axis2=-1).sum() * h ** 3
    return float((total / (8 * np.pi ** 2)).real)


def _preimage_degree(offset=-2.0):
    """Signed count of preimages of (0, 0, 0, -1) under f; they sit at the TRIM."""
    deg = 0
    for bits in np.ndindex(2, 2, 2):
        k = np.pi * np.array(bits)
        if offset + np.cos(k).sum() < 0:
            deg += int(np.sign(np.prod(np.cos(k))))
    return deg


def test_s3_map_is_special_unitary():
    g = quaternion_s3_map(8)
    eye = np.eye(2)
    assert np.allclose(np.conj(np.swapaxes(g, -1, -2)) @ g, eye)
    assert np.allclose(np.linalg.det(g), 1)


def test_s3_winding_matches_oracles():
    g = quaternion_s3_map(32)
    est = wzw_estimate(g)
    assert round(est) == _preimage_degree() == -1
    assert round(est) == round(_central_difference_degree(quaternion_s3_map(48)))
    n, _ = wzw_winding(g)
    assert n == round(est)
    assert wzw_mod2(g) == 1


def test_inverse_and_product():
    g = quaternion_s3_map(32)
    n, _ = wzw_winding(g)
    inverse = np.conj(np.swapaxes(g, -1, -2))
    assert wzw_winding(inverse)[0] == -n
    assert wzw_winding(g @ g)[0] == 2 * n
    assert wzw_mod2(g @ g) == 0


def test_constant_maps_are_zero():
    assert wzw_estimate(constant_map(12)) == 0.0
    g0 = np.array([[np.exp(0.3j), 0], [0, np.exp(-0.3j)]])
    assert wzw_estimate(constant_map(12, g0)) == 0.0
    assert wzw_winding(constant_map(12)) == (0, 0.0)


def test_trivial_offset_gives_zero():
    # with offset -4 the fourth component never changes sign: degree 0
    assert _preimage_degree(-4.0) == 0
    assert wzw_winding(quaternion_s3_map(24, offset=-4.0))[0] == 0


def test_coarse_field_is_refused():
    g = quaternion_s3_map(8)
    assert max_neighbor_distance(g) >= 0.5
    with pytest.raises(FieldNotResolvable):
        wzw_estimate(g)
    with pytest.raises(ValueError):
        wzw_estimate(np.zeros((4, 4, 2, 2)))
