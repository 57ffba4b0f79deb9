"""Built-in model generators.

Every generator takes keyword parameters and returns a ``BlochModel``;
``build(name, **overrides)`` merges overrides into the defaults.
"""
from __future__ import annotations

import numpy as np

from .model import (SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z, BlochModel, TimeReversalOp,
                    spin_tr)


def _hop(hops, delta, block):
    """Add ``block`` at ``delta`` and its Hermitian partner at ``-delta``."""
    delta = tuple(delta)
    minus = tuple(-x for x in delta)
    hops[delta] = hops.get(delta, 0) + block
    hops[minus] = hops.get(minus, 0) + np.conj(block).T


def _onsite(hops, dim, block):
    zero = (0,) * dim
    hops[zero] = hops.get(zero, 0) + block


def kane_mele(t=1.0, lambda_so=0.06, lambda_r=0.05, lambda_v=0.1):
    """Honeycomb model with spin-orbit, Rashba and staggered potential.

    Basis (A up, A down, B up, B down); a1 = (1, 0), a2 = (1/2, sqrt3/2).
    B sits at (a1 + a2)/3, so the A-B bonds reach cells 0, -a1, -a2.
    At K = (4pi/3, 2pi/3) (reduced) the gap is 2|lambda_v - 3 sqrt3 lambda_so|
    for lambda_r = 0.
    """
    a1 = np.array([1.0, 0.0])
    a2 = np.array([0.5, np.sqrt(3) / 2])
    rb = (a1 + a2) / 3
    sub_a = np.diag([1.0, 0.0])
    ab = np.array([[0, 1], [0, 0]], dtype=complex)
    hops: dict = {}
    _onsite(hops, 2, lambda_v * np.kron(SIGMA_Z, SIGMA_0))
    for cell in ((0, 0), (-1, 0), (0, -1)):
        bond = rb + cell[0] * a1 + cell[1] * a2
        d = bond / np.linalg.norm(bond)
        rashba = 1j * lambda_r * (SIGMA_X * d[1] - SIGMA_Y * d[0])
        block = np.kron(ab, t * SIGMA_0 + rashba)
        if cell == (0, 0):
            _onsite(hops, 2, block + block.conj().T)
        else:
            _hop(hops, cell, block)
    # second neighbours: a1, a2 - a1, -a2 all turn the same way around A
    for cell in ((1, 0), (-1, 1), (0, -1)):
        block = 1j * lambda_so * np.kron(sub_a - np.diag([0.0, 1.0]), SIGMA_Z)
        _hop(hops, cell, block)
    return BlochModel("kane_mele", 2, 2, hops, spin_tr(2),
                      parameters=dict(t=t, lambda_so=lambda_so, lambda_r=lambda_r,
                                      lambda_v=lambda_v),
                      lattice_vectors=np.array([a1, a2]), generator="kane_mele")


def kane_mele_critical_lambda_v(lambda_so):
    return 3 * np.sqrt(3) * lambda_so


def bhz(A=1.0, B=1.0, M=1.0):
    """Square-lattice quantum-well model, two spin blocks h(k) and h(-k)^*.

    Basis (E up, H up, E down, H down) with spin as the slow index. The
    mass is M - 2B(2 - cos kx - cos ky), inverted for 0 < M/B < 8, M/B != 4.
    """
    up: dict = {}
    up[(0, 0)] = (M - 4 * B) * SIGMA_Z
    up[(1, 0)] = A / 2j * SIGMA_X + B * SIGMA_Z
    up[(-1, 0)] = up[(1, 0)].conj().T
    up[(0, 1)] = A / 2j * SIGMA_Y + B * SIGMA_Z
    up[(0, -1)] = up[(0, 1)].conj().T
    hops = {}
    P_up = np.diag([1.0, 0.0])
    P_dn = np.diag([0.0, 1.0])
    for d, T in up.items():
        hops[d] = np.kron(P_up, T) + np.kron(P_dn, T.conj())
    U = np.kron(1j * SIGMA_Y, np.eye(2))
    return BlochModel("bhz", 2, 2, hops, TimeReversalOp(U),
                      parameters=dict(A=A, B=B, M=M), generator="bhz")


def strong_ti_3d(A=1.0, B=1.0, m1=1.0, m2=-1.0, g=0.2):
    """Eight bands: two cubic-lattice Dirac models coupled by g.

    Each copy is A sum_i sin k_i alpha_i + (m - B sum_i (1 - cos k_i)) beta
    with alpha_i = tau_x ⊗ sigma_i, beta = tau_z ⊗ 1. A copy is a strong
    topological insulator for 0 < m/B < 2 or 4 < m/B < 6.
    """
    alphas = [np.kron(SIGMA_X, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    beta = np.kron(SIGMA_Z, SIGMA_0)
    hops: dict = {}
    for copy, m in enumerate((m1, m2)):
        P = np.zeros((2, 2))
        P[copy, copy] = 1.0
        _onsite(hops, 3, np.kron(P, (m - 3 * B) * beta))
        for axis in range(3):
            delta = [0, 0, 0]
            delta[axis] = 1
            block = A / 2j * alphas[axis] + B / 2 * beta
            _hop(hops, delta, np.kron(P, block))
    _onsite(hops, 3, g * np.kron(SIGMA_X, beta))
    return BlochModel("strong_ti_3d", 3, 4, hops, spin_tr(4),
                      parameters=dict(A=A, B=B, m1=m1, m2=m2, g=g), generator="strong_ti_3d")


def atomic(m=1.0, n_orbitals=2):
    """k-independent insulator: orbital 0 at -m, the others at +m."""
    energies = np.full(n_orbitals, m)
    energies[0] = -m
    T0 = np.kron(np.diag(energies), SIGMA_0).astype(complex)
    return BlochModel("atomic", 2, 2, {(0, 0): T0}, spin_tr(n_orbitals),
                      parameters=dict(m=m), generator="atomic")


def chain(t=1.0, m=0.0):
    """One-dimensional two-band (Kramers pair) chain, H = m + t cos k."""
    hops = {(0,): m * SIGMA_0, (1,): t / 2 * SIGMA_0, (-1,): t / 2 * SIGMA_0}
    hops = {d: np.kron(np.diag([1.0, 0.0]), T) + np.kron(np.diag([0.0, 1.0]), -T)
            for d, T in hops.items()}
    return BlochModel("chain", 1, 2, hops, spin_tr(2), parameters=dict(t=t, m=m),
                      generator="chain")


BUILTINS = {
    "kane_mele": kane_mele,
    "bhz": bhz,
    "strong_ti_3d": strong_ti_3d,
    "atomic": atomic,
    "chain": chain,
}


def build(name, **params) -> BlochModel:
    try:
        gen = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown built-in model {name!r}; choose from {sorted(BUILTINS)}") from None
    return gen(**params)
