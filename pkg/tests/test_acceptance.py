"""Acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL
line per criterion at the end of the run. Tolerances and runtime limits
are pinned here and must not be loosened.
"""
import time

import numpy as np
import pytest

from z2kit import invariants, kgroups
from z2kit.brillouin import make_grid
from z2kit.cli import main, sweep_rows
from z2kit.errors import Z2KitError
from z2kit.model import (diagonalize, effective_hamiltonian, kramers_residual,
                         mod2_kernel, random_trs_model, zero_mode_parity)
from z2kit.models import bhz, build, kane_mele, kane_mele_critical_lambda_v, strong_ti_3d
from z2kit.pfaffian import pfaffian
from z2kit.winding import constant_map, quaternion_s3_map, wzw_estimate


def _family_model(rng):
    """Random gapped TRS model: BHZ base with a random symmetric perturbation."""
    base = bhz(M=rng.uniform(-2, 6))
    return random_trs_model(rng, reach=1, scale=0.4, base=base)


def _gap_filtered(rng, grid, count, ratio=0.15):
    out = []
    while len(out) < count:
        m = _family_model(rng)
        try:
            frames = diagonalize(m, grid)
        except Z2KitError:
            continue
        if frames.gap >= ratio * frames.scale:
            out.append((m, frames))
    return out


def _triple(model, grid, frames=None):
    rep = invariants.equivalence_report(model, grid, methods=("km", "obstruction", "wannier"),
                                        frames=frames)
    return rep.nu_kane_mele, rep.upsilon_obstruction, rep.upsilon_wannier, rep.agreement


@pytest.mark.criterion(1, "K-group fixtures reproduce exactly")
def test_criterion_01_kgroup_fixtures():
    t0 = time.perf_counter()
    expected = {
        "KQ(S^{1,2})": "Z ⊕ Z2",
        "KQ(S^{1,3})": "Z ⊕ Z2",
        "KQ(T^2)": "Z ⊕ Z2",
        "KQ(T^3)": "Z ⊕ 4Z2",
        "KQ~^{-1}(T^3)": "3Z ⊕ Z2",
        "KQ^{-1}(S^{1,3})": "Z2",
        "boundary KO^{-2}(x0)": "Z2",
    }
    for name, text in expected.items():
        compute, group = kgroups.GROUP_FIXTURES[name]
        assert compute() == group
        assert compute().pretty() == text
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2, "Pfaffian squares to det; 2x2 exact")
def test_criterion_02_pfaffian():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(1000):
        n = 2 * (1 + i % 6)
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = X - X.T
        pf = pfaffian(A)
        det = np.linalg.det(A)
        worst = max(worst, abs(pf * pf - det) / abs(det))
    assert worst < 1e-9
    for a in (1.0, -2.5, 3 + 4j, 1e-200, 7.123456789e150j):
        assert pfaffian(np.array([[0, a], [-a, 0]])) == a
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.criterion(3, "sewing-matrix laws on Kane-Mele 32x32")
def test_criterion_03_sewing_laws():
    t0 = time.perf_counter()
    model = kane_mele()
    grid = make_grid(2, 32)
    sewing = invariants.sewing_field(diagonalize(model, grid), model.tr_op, grid)
    assert sewing.skew_residual() < 1e-8
    trim = sewing.trim_skew_residuals()
    assert len(trim) == 4
    assert max(trim) < 1e-10
    assert time.perf_counter() - t0 < 10.0


@pytest.mark.criterion(4, "three-way Z2 agreement, zero disagreements")
def test_criterion_04_cross_method_agreement():
    t0 = time.perf_counter()
    grid = make_grid(2, 24)
    lam_c = kane_mele_critical_lambda_v(0.06)
    disagreements = []
    nus = set()
    # (a) Kane-Mele across both phases
    for lv in (0.0, 0.1, 0.2, 0.45, 0.6, 1.0):
        nu, uo, uw, ok = _triple(kane_mele(lambda_v=lv), grid)
        nus.add(nu)
        assert nu == (-1 if lv < lam_c else 1)
        if not ok:
            disagreements.append(("km", lv))
    assert nus == {-1, 1}
    # (b) BHZ at +-M
    for M, want in ((1.0, -1), (-1.0, 1)):
        nu, uo, uw, ok = _triple(bhz(M=M), grid)
        assert nu == want
        if not ok:
            disagreements.append(("bhz", M))
    # (c) 50 random gapped TRS models
    rng = np.random.default_rng(2024)
    nus = []
    for model, frames in _gap_filtered(rng, grid, 50):
        nu, uo, uw, ok = _triple(model, grid, frames)
        nus.append(nu)
        if not ok:
            disagreements.append(("random", nu, uo, uw))
    assert set(nus) == {-1, 1}
    assert disagreements == []
    assert time.perf_counter() - t0 < 300.0


@pytest.mark.criterion(5, "random U(2) frame rotations leave invariants unchanged")
def test_criterion_05_gauge_invariance():
    t0 = time.perf_counter()
    grid = make_grid(2, 24)
    rng = np.random.default_rng(5)
    for model in (kane_mele(), kane_mele(lambda_v=0.6)):
        frames = diagonalize(model, grid)
        ref = _triple(model, grid, frames)
        for _ in range(10):
            assert _triple(model, grid, invariants.rotate_frames(frames, rng)) == ref
    assert time.perf_counter() - t0 < 60.0


@pytest.mark.criterion(6, "chern_total = 0 under TRS; Hopf projection gives +-1")
def test_criterion_06_two_torsion():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    models = [kane_mele(), kane_mele(lambda_v=0.6), bhz(M=1.0), bhz(M=-1.0),
              build("atomic")]
    models += [m for m, _ in _gap_filtered(rng, make_grid(2, 16), 5)]
    for model in models:
        grid = make_grid(2, 16)
        total, _ = invariants.chern_total(diagonalize(model, grid), grid)
        assert isinstance(total, int) and total == 0
    grid3 = make_grid(3, 10)
    total, per = invariants.chern_total(diagonalize(strong_ti_3d(), grid3), grid3)
    assert total == 0 and set(per.values()) == {0}

    estimates = {}
    for N in (16, 32):
        grid = make_grid(2, N)
        proj = invariants.hopf_projection(grid)
        estimates[N] = invariants.chern_estimate(proj.frames(), grid)
    c16 = round(estimates[16])
    assert abs(c16) == 1
    assert abs(estimates[16] - c16) < 0.05
    assert round(estimates[32]) == c16
    assert abs(estimates[32] - c16) < 0.05
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(7, "WZW winding of the S^3 map is +-1; constant maps 0")
def test_criterion_07_wzw_calibration():
    t0 = time.perf_counter()
    w24 = wzw_estimate(quaternion_s3_map(24))
    w32 = wzw_estimate(quaternion_s3_map(32))
    n = round(w24)
    assert abs(n) == 1
    assert abs(w24 - n) < 0.1
    assert round(w32) == n
    assert abs(w32 - n) < abs(w24 - n)
    assert wzw_estimate(constant_map(16)) == 0.0
    g0 = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    assert wzw_estimate(constant_map(16, g0)) == 0.0
    assert time.perf_counter() - t0 < 120.0


@pytest.mark.criterion(8, "sweep brackets the Kane-Mele flip with a gap-closing row")
def test_criterion_08_phase_boundary():
    t0 = time.perf_counter()
    lam_so = 0.06
    lam_c = kane_mele_critical_lambda_v(lam_so)
    base = kane_mele(lambda_so=lam_so, lambda_r=0.0)
    rows = sweep_rows(base, "lambda_v", 0.0, 1.0, 101, make_grid(2, 24))
    grid_rows = [r for r in rows if r["kind"] == "grid" and r["nu"] != ""]
    flips = [(a, b) for a, b in zip(grid_rows[:-1], grid_rows[1:]) if a["nu"] != b["nu"]]
    assert len(flips) == 1
    a, b = flips[0]
    lo, hi = a["value"], b["value"]
    assert hi - lo <= 0.01 * base.parameters["t"] + 1e-12
    assert lo < lam_c < hi
    closing = [r for r in rows if r["status"] == "gap-closing"]
    assert closing and all(lo <= r["value"] <= hi for r in closing)
    assert time.perf_counter() - t0 < 300.0


@pytest.mark.criterion(9, "even multiplicities at every TRIM")
def test_criterion_09_kramers():
    rng = np.random.default_rng(9)
    models = [build(name) for name in ("kane_mele", "bhz", "strong_ti_3d", "atomic", "chain")]
    models += [random_trs_model(rng, n_orbitals=n, dim=d) for n in (2, 3, 4) for d in (1, 2, 3)]
    for model in models:
        grid = make_grid(model.dim, 8)
        assert kramers_residual(model, grid) < 1e-8


def _flips(make, lo, hi, grid):
    nus = []
    for value in (lo, hi):
        m = make(value)
        nus.append(invariants.kane_mele(invariants.sewing_field(diagonalize(m, grid), m.tr_op, grid)))
    return int(nus[0] != nus[1])


@pytest.mark.criterion(10, "effective Hamiltonian real structure and kernel parity")
def test_criterion_10_effective_hamiltonian():
    rng = np.random.default_rng(10)
    for model in (kane_mele(), bhz(), strong_ti_3d(), random_trs_model(rng, n_orbitals=3)):
        for _ in range(5):
            k = rng.uniform(0, 2 * np.pi, model.dim)
            assert effective_hamiltonian(model, k).real_structure_residual() < 1e-10

    grid = make_grid(2, 24)
    lam_c = kane_mele_critical_lambda_v(0.06)
    fixtures = [
        (lambda v: kane_mele(lambda_r=0.0, lambda_v=v), lam_c, 0.05),
        (lambda v: bhz(M=v), 0.0, 0.5),
        (lambda v: bhz(M=v), 4.0, 0.5),
    ]
    results = []
    for make, critical, delta in fixtures:
        parity = zero_mode_parity(make(critical), grid)
        flip = _flips(make, critical - delta, critical + delta, grid)
        assert parity == flip
        results.append(parity)
    assert results == [1, 1, 0]
    # kernel parity at the closing point itself, BHZ M = 0 at Gamma
    assert mod2_kernel(effective_hamiltonian(bhz(M=0.0), [0.0, 0.0])) == 1


@pytest.mark.criterion(11, "cmd_compute output is byte-identical across runs")
def test_criterion_11_determinism(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        rc = main(["compute", "--model", "builtin:kane_mele", "--grid", "24",
                   "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) > 0
