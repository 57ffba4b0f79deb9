"""Time-reversal-symmetric tight-binding models.

A model is a finite set of hopping blocks ``T_delta`` on the lattice Z^d,
with Bloch Hamiltonian ``H(k) = sum_delta T_delta exp(i k.delta)`` where k
is in reduced coordinates (period 2*pi per axis). Time reversal acts as
``Theta = U K`` (K complex conjugation) and symmetry means
``U H(k)^* U^dagger = H(-k)``.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .brillouin import InvolutiveGrid
from .errors import (AmbiguousKernel, GapClosing, KramersViolation, TRSViolation,
                     ValidationError)

UNITARY_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRS_TOL = 1e-10
GAP_TOL = 1e-8
KRAMERS_RTOL = 1e-8
ORTHONORMAL_TOL = 1e-10

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class TimeReversalOp:
    """Antiunitary operator Theta = U K with Theta^2 = -1."""

    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        object.__setattr__(self, "U", U)
        n = U.shape[0]
        if U.shape != (n, n):
            raise ValidationError("time-reversal unitary must be square")
        if np.linalg.norm(U @ U.conj().T - np.eye(n)) >= UNITARY_TOL * max(1, n):
            raise ValidationError("time-reversal matrix U is not unitary")
        if np.linalg.norm(U.T + U) >= UNITARY_TOL * max(1, n):
            raise ValidationError("U is not skew-symmetric, so Theta^2 != -1")

    @property
    def size(self):
        return self.U.shape[0]

    def apply(self, vecs):
        """Theta acting on column vectors (batched over leading axes)."""
        return self.U @ np.conj(vecs)

    def conjugate(self, H):
        """Matrix of Theta H Theta^{-1} = U H^* U^dagger."""
        return self.U @ np.conj(H) @ self.U.conj().T

    def square(self):
        """Matrix of Theta^2 = U U^*; equals -1 for a valid operator."""
        return self.U @ self.U.conj()

    def grading(self):
        """Linear part of gamma = i Theta, i.e. the matrix i U.

        For a real U (all built-in models) this matrix is Hermitian and
        squares to the identity.
        """
        return 1j * self.U

    def real_structure(self):
        """Matrix part of the antilinear real structure on C^n ⊕ C^n.

        The operator is ``J_mat @ conj(.)`` with ``J_mat = [[0, U^T], [U, 0]]``
        i.e. ``[[0, Theta^{-1}], [Theta, 0]]``.
        """
        n = self.size
        J = np.zeros((2 * n, 2 * n), dtype=complex)
        J[:n, n:] = self.U.T
        J[n:, :n] = self.U
        return J


def spin_tr(n_orbitals: int) -> TimeReversalOp:
    """U = I_orbitals ⊗ i sigma_y, spin as the fastest index."""
    return TimeReversalOp(np.kron(np.eye(n_orbitals), 1j * SIGMA_Y))


@dataclass(eq=False)
class BlochModel:
    name: str
    dim: int
    n_occupied: int
    hoppings: dict
    tr_op: TimeReversalOp
    parameters: dict = field(default_factory=dict)
    lattice_vectors: np.ndarray | None = None
    generator: str | None = None

    def __post_init__(self):
        hops = {}
        for delta, T in self.hoppings.items():
            delta = tuple(int(x) for x in delta)
            if len(delta) != self.dim:
                raise ValidationError(f"hopping displacement {delta} has wrong dimension")
            hops[delta] = np.array(T, dtype=complex)
        self.hoppings = dict(sorted(hops.items()))
        nb = self.tr_op.size
        for delta, T in self.hoppings.items():
            if T.shape != (nb, nb):
                raise ValidationError(f"hopping block {delta} has shape {T.shape}, expected {(nb, nb)}")
        if self.n_occupied % 2 or not 0 < self.n_occupied < nb:
            raise ValidationError("n_occupied must be even and strictly between 0 and the band count")
        if self.lattice_vectors is None:
            self.lattice_vectors = np.eye(self.dim)
        self.check_hermitian()

    @property
    def bands(self):
        return self.tr_op.size

    def check_hermitian(self):
        worst = 0.0
        for delta, T in self.hoppings.items():
            partner = self.hoppings.get(tuple(-x for x in delta))
            if partner is None:
                worst = max(worst, np.linalg.norm(T))
            else:
                worst = max(worst, np.linalg.norm(partner - T.conj().T))
        if worst >= HERMITIAN_TOL * max(1.0, self.scale):
            raise ValidationError(f"hoppings are not Hermitian: residual {worst:.3e}")
        return worst

    @property
    def scale(self):
        return max((np.linalg.norm(T) for T in self.hoppings.values()), default=1.0)

    def hamiltonian(self, ks):
        """H(k) for an array of momenta of shape (..., dim)."""
        ks = np.asarray(ks, dtype=float)
        H = np.zeros(ks.shape[:-1] + (self.bands, self.bands), dtype=complex)
        for delta, T in self.hoppings.items():
            phase = np.exp(1j * (ks @ np.asarray(delta, dtype=float)))
            H += phase[..., None, None] * T
        return H


def bloch_at(model: BlochModel, k) -> np.ndarray:
    k = np.asarray(k, dtype=float).reshape(model.dim)
    return model.hamiltonian(k)


def trs_residuals(model: BlochModel, ks):
    """Spectral-norm residual ||U H(k)^* U^dagger - H(-k)|| for each k."""
    H = model.hamiltonian(ks)
    Hm = model.hamiltonian(-np.asarray(ks))
    diff = model.tr_op.conjugate(H) - Hm
    return np.linalg.norm(diff, ord=2, axis=(-2, -1))


def validate_trs(model: BlochModel, grid: InvolutiveGrid, raise_on_fail=True) -> float:
    if grid.dim != model.dim:
        raise ValidationError("grid dimension does not match the model")
    res = trs_residuals(model, grid.points)
    worst = int(np.argmax(res))
    if raise_on_fail and res[worst] >= TRS_TOL:
        raise TRSViolation(float(res[worst]), grid.points[worst])
    return float(res[worst])


@dataclass(eq=False)
class BandFrame:
    """Sorted eigensystems on a grid.

    ``vectors[i]`` holds all eigenvectors at grid point i as columns; the
    first ``n_occupied`` columns span the occupied space.
    """
    grid: InvolutiveGrid
    energies: np.ndarray
    vectors: np.ndarray
    n_occupied: int
    gap: float
    gap_index: int
    scale: float = 1.0

    @property
    def occupied(self):
        return self.vectors[:, :, : self.n_occupied]

    def select(self, bands):
        return self.vectors[:, :, list(bands)]

    def with_frames(self, occupied):
        """Copy with the occupied columns replaced (e.g. after a gauge change)."""
        vecs = self.vectors.copy()
        vecs[:, :, : self.n_occupied] = occupied
        return BandFrame(self.grid, self.energies, vecs, self.n_occupied,
                         self.gap, self.gap_index, self.scale)

    def orthonormality_residual(self):
        occ = self.occupied
        eye = np.eye(self.n_occupied)
        return float(np.max(np.linalg.norm(np.conj(np.swapaxes(occ, -1, -2)) @ occ - eye, axis=(-2, -1))))


def _worker_count():
    try:
        return max(1, int(os.environ.get("Z2KIT_THREADS", "1")))
    except ValueError:
        return 1


def _eigh_batched(H):
    workers = _worker_count()
    if workers == 1 or len(H) < 2 * workers:
        return np.linalg.eigh(H)
    chunks = np.array_split(np.arange(len(H)), workers)
    E = np.empty(H.shape[:-1])
    V = np.empty(H.shape, dtype=complex)

    def run(idx):
        E[idx], V[idx] = np.linalg.eigh(H[idx])

    with ThreadPoolExecutor(workers) as pool:
        list(pool.map(run, chunks))
    return E, V


def fix_phases(vecs):
    """Make the largest-magnitude component of every column real and positive."""
    idx = np.argmax(np.abs(vecs) - 1e-9 * np.arange(vecs.shape[-2])[:, None], axis=-2)
    comp = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    return vecs * (np.abs(comp) / comp)


def kramers_basis(frame, tr_op: TimeReversalOp):
    """Rebuild a basis of a Theta-invariant subspace as (v1, Theta v1, v3, Theta v3, ...)."""
    n = frame.shape[1]
    out = []
    remaining = frame.copy()
    for _ in range(n // 2):
        P = np.column_stack(out) if out else np.zeros((frame.shape[0], 0))
        proj = remaining - P @ (P.conj().T @ remaining)
        norms = np.linalg.norm(proj, axis=0)
        j = int(np.argmax(norms))
        v = proj[:, j] / norms[j]
        out.extend([v, tr_op.apply(v)])
    return np.column_stack(out)


def _degenerate_clusters(energies, tol):
    clusters = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            clusters.append((start, i))
            start = i
    return clusters


def diagonalize(model: BlochModel, grid: InvolutiveGrid, check_gap=True) -> BandFrame:
    H = model.hamiltonian(grid.points)
    E, V = _eigh_batched(H)
    V = fix_phases(V)
    scale = float(max(np.max(np.linalg.norm(H, ord=2, axis=(-2, -1))), 1e-300))
    n = model.n_occupied
    gaps = E[:, n] - E[:, n - 1]
    gi = int(np.argmin(gaps))
    if check_gap and gaps[gi] < GAP_TOL:
        raise GapClosing(float(gaps[gi]), grid.points[gi])
    tol = KRAMERS_RTOL * scale
    for t in grid.trim:
        for a, b in _degenerate_clusters(E[t], tol):
            if (b - a) % 2:
                raise KramersViolation(
                    f"odd degeneracy {b - a} at TRIM k = {grid.points[t].tolist()}")
            if not a < n < b:
                V[t][:, a:b] = kramers_basis(V[t][:, a:b], model.tr_op)
    return BandFrame(grid, E, V, n, float(gaps[gi]), gi, scale)


def kramers_residual(model: BlochModel, grid: InvolutiveGrid):
    """Largest mismatch inside eigenvalue pairs at the TRIM, relative to ||H||."""
    H = model.hamiltonian(grid.points[grid.trim])
    E = np.linalg.eigvalsh(H)
    scale = np.max(np.linalg.norm(H, ord=2, axis=(-2, -1)))
    return float(np.max(np.abs(E[:, 0::2] - E[:, 1::2])) / max(scale, 1e-300))


@dataclass(eq=False)
class EffectiveHamiltonian:
    k: np.ndarray
    matrix: np.ndarray
    tr_op: TimeReversalOp
    at_fixed_point: bool

    def real_structure_residual(self):
        """|| J Htilde + Htilde J || with J antilinear."""
        J = self.tr_op.real_structure()
        Ht = self.matrix
        return float(np.linalg.norm(J @ np.conj(Ht) + Ht @ J, ord=2))


def _is_fixed(k):
    k = np.mod(np.asarray(k, dtype=float), 2 * np.pi)
    return bool(np.all(np.isclose(np.minimum(k, np.abs(k - np.pi)), 0, atol=1e-12)
                       | np.isclose(k, 2 * np.pi, atol=1e-12)))


def effective_hamiltonian(model: BlochModel, k) -> EffectiveHamiltonian:
    H = bloch_at(model, k)
    n = model.bands
    Ht = np.zeros((2 * n, 2 * n), dtype=complex)
    Ht[:n, n:] = model.tr_op.conjugate(H)
    Ht[n:, :n] = H
    return EffectiveHamiltonian(np.asarray(k, dtype=float), Ht, model.tr_op, _is_fixed(k))


def mod2_kernel(h: EffectiveHamiltonian, tol=GAP_TOL) -> int:
    """Parity of zero-energy band inversions seen by the effective Hamiltonian.

    ker Htilde(k) = ker H(k) ⊕ ker H(-k). A Kramers pair (phi at k,
    Theta phi at -k) adds 2 kernel dimensions away from a fixed point and
    4 at one, where both members sit at k. An inversion brings one
    occupied and one empty pair to zero together, so it adds 4 (8 at a
    fixed point). A lone pair at zero is not a gapped-to-gapped
    transition and is reported as ambiguous.
    """
    ev = np.abs(np.linalg.eigvalsh(h.matrix))
    if np.any((ev >= tol) & (ev <= 10 * tol)):
        raise AmbiguousKernel(f"eigenvalue within [{tol:g}, {10 * tol:g}] at k = {h.k.tolist()}")
    count = int(np.sum(ev < tol))
    per_pair = 4 if h.at_fixed_point else 2
    if count % (2 * per_pair):
        raise AmbiguousKernel(f"kernel dimension {count} holds {count / per_pair:g} Kramers pairs;"
                              " an inversion needs them in twos")
    return (count // (2 * per_pair)) % 2


def kernel_dimension(h: EffectiveHamiltonian, tol=GAP_TOL) -> int:
    return int(np.sum(np.abs(np.linalg.eigvalsh(h.matrix)) < tol))


def zero_mode_parity(model: BlochModel, grid: InvolutiveGrid, tol=GAP_TOL) -> int:
    """Kramers-pair zero modes summed over one representative per orbit {k, -k}."""
    labels = grid.domain_label
    inv = grid.involution
    total = 0
    for i, k in enumerate(grid.points):
        if labels[i] == "-" or (labels[i] == "fix" and inv[i] < i):
            continue
        total += mod2_kernel(effective_hamiltonian(model, k), tol)
    return total % 2


def symmetrize_trs(hoppings: dict, tr_op: TimeReversalOp) -> dict:
    """Project hoppings onto the TRS subspace: T <- (T + U T^* U^dagger)/2."""
    return {d: 0.5 * (T + tr_op.conjugate(T)) for d, T in hoppings.items()}


def random_trs_model(rng, n_orbitals=2, reach=1, dim=2, n_occupied=None, scale=1.0,
                     base: BlochModel | None = None, name="random") -> BlochModel:
    """Random Hermitian TRS model; optionally added on top of ``base``."""
    tr = base.tr_op if base is not None else spin_tr(n_orbitals)
    nb = tr.size
    hops = {}
    for delta in itertools.product(range(-reach, reach + 1), repeat=dim):
        if delta in hops:
            continue
        A = rng.normal(size=(nb, nb)) + 1j * rng.normal(size=(nb, nb))
        A *= scale / np.sqrt(nb)
        if not any(delta):
            hops[delta] = 0.5 * (A + A.conj().T)
        else:
            hops[delta] = A
            hops[tuple(-x for x in delta)] = A.conj().T
    hops = symmetrize_trs(hops, tr)
    if base is not None:
        for d, T in base.hoppings.items():
            hops[d] = hops.get(d, 0) + T
        n_occupied = base.n_occupied
    if not n_occupied:
        n_occupied = max(2, nb // 2 - (nb // 2) % 2)
    return BlochModel(name, dim, n_occupied, hops, tr)
