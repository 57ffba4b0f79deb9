"""Sewing matrices and the Z2 invariant by three independent routes.

* ``kane_mele``: product over TRIM of pf[w]/sqrt(det w), with the square
  root continued along the TRIM tree in a globally smooth gauge of the
  determinant line bundle.
* ``z2_obstruction``: lattice obstruction on the effective Brillouin zone,
  (boundary link phases - plaquette fluxes)/2pi mod 2, with the boundary
  frames tied together by time reversal.
* ``wannier_flow``: parity of crossings of a reference line by Wilson-loop
  eigenphases over half the transverse cycle.

Conventions: plaquettes are oriented counterclockwise in (k_a, k_b);
Wilson loops run along +k_a; link variables are det(u(k)^dagger u(k+e)).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .brillouin import InvolutiveGrid, PlaneZone, effective_bz, trim_tree
from .errors import (AccidentalDegeneracy, GridTooCoarse, NotTRClosed, ValidationError)
from .model import BandFrame, BlochModel, TimeReversalOp, diagonalize, kramers_basis, validate_trs
from .pfaffian import pfaffian

SEWING_UNITARY_TOL = 1e-8
SEWING_SKEW_TOL = 1e-8
TRIM_SKEW_TOL = 1e-10
PF_MIN = 1e-6
BRANCH_STEP_MAX = np.pi / 2
LINK_DET_MIN = 1e-3
PLAQUETTE_FLUX_MAX = 0.9 * np.pi
WANNIER_STEP_MAX = 0.75 * np.pi
WANNIER_REF_TOL = 1e-6
WANNIER_RETRIES = 5
CHERN_ROUND_TOL = 0.1

CONVENTIONS = {
    "orientation": "plaquettes counterclockwise in (k_a, k_b); Wilson loops along +k_a",
    "chern_normalization": "1/(2*pi*i) * integral tr(p dp dp)  (FHS lattice form)",
    "wzw_normalization": "1/(24*pi^2) * integral tr(g^-1 dg)^3",
    "ebz": "0 <= k_last <= pi",
    "wannier_reference": "theta = pi, shifted on near-hits",
}


def _dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _occupied(frames):
    if isinstance(frames, BandFrame):
        return frames.occupied
    return np.asarray(frames)


# ---------------------------------------------------------------- sewing


@dataclass(eq=False)
class SewingField:
    grid: InvolutiveGrid
    w: np.ndarray
    frames: np.ndarray
    tr_op: TimeReversalOp
    gauge: str = "eigh + largest-component phase, Kramers basis at TRIM"

    def unitarity_residual(self):
        n = self.w.shape[-1]
        return float(np.max(np.linalg.norm(_dagger(self.w) @ self.w - np.eye(n), axis=(-2, -1))))

    def skew_residual(self):
        """max_k || w^T(-k) + w(k) ||."""
        wt = np.swapaxes(self.w[self.grid.involution], -1, -2)
        return float(np.max(np.linalg.norm(wt + self.w, axis=(-2, -1))))

    def trim_skew_residuals(self):
        return [float(np.linalg.norm(self.w[t] + self.w[t].T)) for t in self.grid.trim]


def sewing_field(frames, tr: TimeReversalOp, grid: InvolutiveGrid | None = None) -> SewingField:
    """w_pq(k) = <u_p(-k), Theta u_q(k)> on every grid point."""
    if grid is None:
        grid = frames.grid
    occ = _occupied(frames)
    w = _dagger(occ[grid.involution]) @ tr.apply(occ)
    field_ = SewingField(grid, w, occ, tr)
    res = field_.unitarity_residual()
    if res >= SEWING_UNITARY_TOL:
        raise NotTRClosed(f"occupied space not TR-closed: sewing unitarity residual {res:.3e}")
    return field_


# ----------------------------------------------------------- det gauge


def det_links(occ, grid: InvolutiveGrid, axis: int):
    """Unit-modulus det(u(k)^dagger u(k+e_axis)) for every k."""
    M = _dagger(occ) @ occ[grid.shift(axis)]
    d = np.linalg.det(M)
    mag = np.abs(d)
    if np.min(mag) < LINK_DET_MIN:
        i = int(np.argmin(mag))
        raise GridTooCoarse(
            f"nearly singular overlap |det| = {mag[i]:.2e} at k = {grid.points[i].tolist()}")
    return d / mag


def _wrap(x):
    return np.angle(np.exp(1j * x))


def coulomb_links(a, sizes):
    """Smallest real link field b with the same plaquette fluxes as ``a``.

    ``a[axis]`` holds principal link phases on the grid. Returns b with
    curl b = (principal plaquette fluxes of a), div b = 0, and constant
    parts chosen so that b and a have equal holonomies mod 2 pi.
    """
    d = len(sizes)
    F = {}
    for i in range(d):
        for j in range(i + 1, d):
            F[i, j] = _wrap(a[i] + np.roll(a[j], -1, axis=i) - np.roll(a[i], -1, axis=j) - a[j])
    totals = {key: float(np.sum(f)) for key, f in F.items()}
    for (i, j), tot in totals.items():
        n_planes = np.prod(sizes) / (sizes[i] * sizes[j])
        if abs(tot) / n_planes > np.pi:
            raise GridTooCoarse(f"occupied bundle carries Berry flux {tot / n_planes / (2 * np.pi):.2f}"
                                f" x 2pi in the ({i},{j}) planes")
    if d == 3:
        div = (np.roll(F[1, 2], -1, axis=0) - F[1, 2] - np.roll(F[0, 2], -1, axis=1) + F[0, 2]
               + np.roll(F[0, 1], -1, axis=2) - F[0, 1])
        if np.max(np.abs(div)) > 1e-6:
            raise GridTooCoarse("Berry flux is not conserved through a grid cube")
    q = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n) for n in sizes], indexing="ij")
    D = [np.exp(1j * qa) - 1 for qa in q]
    norm = sum(np.abs(x) ** 2 for x in D)
    norm.flat[0] = 1.0
    Fh = {key: np.fft.fftn(f) for key, f in F.items()}

    def fh(i, j):
        if i == j:
            return 0
        return Fh[i, j] if i < j else -Fh[j, i]

    b = []
    for j in range(d):
        bh = sum(np.conj(D[i]) * fh(i, j) for i in range(d)) / norm
        bh.flat[0] = 0.0
        bj = np.fft.ifftn(bh).real
        # constant part: match the holonomy of the loop through the origin
        origin = tuple(slice(None) if k == j else 0 for k in range(d))
        hol = _wrap(np.sum(a[j][origin]) - np.sum(bj[origin]))
        b.append(bj + hol / sizes[j])
    return b


def smooth_det_gauge(occ, grid: InvolutiveGrid):
    """Phases phi(k) that turn the det links into a smooth (Coulomb) field.

    After multiplying one frame column by exp(i phi), the link phases equal
    the divergence-free field with the same Berry fluxes, which is the
    smoothest gauge the bundle admits. Returns (phi, largest link phase).
    """
    shape = grid.sizes
    d = grid.dim
    a = [np.angle(grid.reshape(det_links(occ, grid, ax))) for ax in range(d)]
    b = coulomb_links(a, shape)
    # integrate d phi = b - a axis by axis from the origin
    phi = np.zeros(shape)
    for ax in range(d):
        step = b[ax] - a[ax]
        for m in range(1, shape[ax]):
            dst = tuple(slice(None) if i < ax else (m if i == ax else 0) for i in range(d))
            src = tuple(slice(None) if i < ax else (m - 1 if i == ax else 0) for i in range(d))
            phi[dst] = phi[src] + step[src]
    mismatch = max(float(np.max(np.abs(_wrap(a[ax] + np.roll(phi, -1, axis=ax) - phi - b[ax]))))
                   for ax in range(d))
    if mismatch > 1e-6:
        raise GridTooCoarse(f"determinant gauge could not be closed (mismatch {mismatch:.2e})")
    resid = max(float(np.max(np.abs(x))) for x in b)
    return phi.ravel(), resid


def det_gauge_frames(occ, phi):
    """Frames with the first column multiplied by exp(i phi(k))."""
    out = np.array(occ, dtype=complex, copy=True)
    out[:, :, 0] *= np.exp(1j * phi)[:, None]
    return out


# ----------------------------------------------------------- Kane-Mele


@dataclass
class KaneMeleResult:
    nu: int
    deltas: list
    branch_log: list
    max_link_phase: float

    def to_record(self):
        return {
            "nu": self.nu,
            "trim_signs": [int(np.sign(d.real)) for d in self.deltas],
            "trim_deltas": [[float(d.real), float(d.imag)] for d in self.deltas],
            "branch_log": self.branch_log,
            "max_link_phase": self.max_link_phase,
        }


def kane_mele_details(sewing: SewingField, tree=None) -> KaneMeleResult:
    """Pfaffian formula with the square root continued along ``tree``."""
    grid = sewing.grid
    if grid.dim not in (2, 3):
        raise ValueError("kane_mele needs d = 2 or d = 3")
    if tree is None:
        tree = trim_tree(grid)
    phi, resid = smooth_det_gauge(sewing.frames, grid)
    inv = grid.involution
    d_tilde = np.linalg.det(sewing.w) * np.exp(-1j * (phi + phi[inv]))
    root = grid.trim[0]
    branch = {root: float(np.angle(d_tilde[root]))}
    log = []
    pending = list(tree)
    while pending:
        progressed = False
        for path in list(pending):
            if path.start not in branch:
                continue
            L = branch[path.start]
            worst = 0.0
            for a, b in zip(path.indices[:-1], path.indices[1:]):
                step = float(np.angle(d_tilde[b] / d_tilde[a]))
                worst = max(worst, abs(step))
                if abs(step) > BRANCH_STEP_MAX:
                    raise GridTooCoarse(
                        f"branch step |d arg det w| = {abs(step):.3f} > pi/2 at "
                        f"k = {grid.points[b].tolist()}")
                L += step
            branch[path.end] = L
            log.append({"from": grid.points[path.start].tolist(),
                        "to": grid.points[path.end].tolist(),
                        "max_step": worst, "arg_det": L})
            pending.remove(path)
            progressed = True
        if not progressed:
            raise ValueError("tree does not connect every TRIM to the root")
    deltas = []
    nu = 1
    for t in grid.trim:
        wt = sewing.w[t]
        skew = float(np.linalg.norm(wt + wt.T))
        if skew >= SEWING_SKEW_TOL:
            raise NotTRClosed(f"sewing matrix not skew at TRIM: residual {skew:.3e}")
        pf = pfaffian(0.5 * (wt - wt.T))
        if abs(pf) < PF_MIN:
            raise AccidentalDegeneracy(
                f"|pf w| = {abs(pf):.2e} at TRIM k = {grid.points[t].tolist()}")
        delta = pf * np.exp(-1j * phi[t]) * np.exp(-0.5j * branch[t]) / np.sqrt(abs(d_tilde[t]))
        deltas.append(complex(delta))
        nu *= 1 if delta.real > 0 else -1
    return KaneMeleResult(nu, deltas, log, resid)


def kane_mele(sewing: SewingField, tree=None) -> int:
    """nu = prod over TRIM of pf w / sqrt(det w), in {+1, -1}."""
    return kane_mele_details(sewing, tree).nu


# ---------------------------------------------------------- obstruction


def _link_phases(frames_a, frames_b):
    """Principal arg det(u_a^dagger u_b) along matching rows."""
    d = np.linalg.det(_dagger(frames_a) @ frames_b)
    if np.min(np.abs(d)) < LINK_DET_MIN:
        raise GridTooCoarse(f"nearly singular overlap |det| = {np.min(np.abs(d)):.2e}")
    return np.angle(d)


def trs_boundary_frames(occ, circle, grid: InvolutiveGrid, tr: TimeReversalOp):
    """Frames on a TR-invariant circle with u(-k) = Theta u(k) built in.

    Kramers bases at the two fixed points, raw frames on the first open
    half, their time-reversed partners on the second half.
    """
    n = len(circle)
    half = n // 2
    inv = grid.involution
    out = np.array(occ[circle], dtype=complex, copy=True)
    out[0] = kramers_basis(out[0], tr)
    out[half] = kramers_basis(out[half], tr)
    for i in range(1, half):
        j = n - i
        assert inv[circle[i]] == circle[j]
        out[j] = tr.apply(out[i])
    return out


def _circle_phase(u):
    """Sum of link phases around a TR-constrained circle.

    Mirrored links are equal exactly, so the sum is taken as twice the
    half-circle sum; this keeps links at arg = +-pi on the same branch.
    """
    half = len(u) // 2
    return 2 * np.sum(_link_phases(u[:half], u[1: half + 1]))


def _plane_obstruction(occ, zone: PlaneZone, grid: InvolutiveGrid, tr: TimeReversalOp):
    u = np.array(occ, dtype=complex, copy=True)
    for circle in zone.boundary:
        u[circle] = trs_boundary_frames(occ, circle, grid, tr)
    P = zone.plaquettes
    links = [_link_phases(u[P[:, c]], u[P[:, (c + 1) % 4]]) for c in range(4)]
    flux = np.angle(np.exp(1j * np.sum(links, axis=0)))
    fmax = float(np.max(np.abs(flux)))
    if fmax > PLAQUETTE_FLUX_MAX:
        raise GridTooCoarse(f"plaquette flux {fmax:.3f} exceeds 0.9 pi in {zone.label}")
    bottom, top = zone.boundary
    a_bottom = _circle_phase(u[bottom])
    a_top = _circle_phase(u[top])
    raw = (a_bottom - a_top - np.sum(flux)) / (2 * np.pi)
    n = int(np.rint(raw))
    return n % 2, {"label": zone.label, "raw": float(raw), "integrality": float(abs(raw - n)),
                   "max_flux": fmax}


def z2_obstruction_details(frames, sewing: SewingField, ebz=None):
    """Return (upsilon, diagnostics); for d = 3 upsilon is the strong value."""
    grid = sewing.grid
    occ = _occupied(frames)
    if ebz is None:
        ebz = effective_bz(grid)
    if isinstance(ebz, PlaneZone):
        ups, diag = _plane_obstruction(occ, ebz, grid, sewing.tr_op)
        return ups, {"planes": {ebz.label: diag}}
    planes = {}
    values = {}
    for label in sorted(ebz):
        values[label], planes[label] = _plane_obstruction(occ, ebz[label], grid, sewing.tr_op)
    strong = (values["kz=0"] + values["kz=pi"]) % 2
    return strong, {"planes": planes, "plane_values": values}


def z2_obstruction(frames, sewing: SewingField, ebz=None) -> int:
    return z2_obstruction_details(frames, sewing, ebz)[0]


# ---------------------------------------------------------- Wannier flow


@dataclass
class WannierSpectrum:
    """Wilson-loop eigenphases, one sorted row per transverse momentum."""
    k_perp: np.ndarray
    phases: np.ndarray
    reference: float = np.pi
    crossings: int = 0
    log: list = field(default_factory=list)
    unitarity_residual: float = 0.0

    def to_csv(self, fh):
        import csv
        writer = csv.writer(fh, lineterminator="\n")
        n = self.phases.shape[1]
        writer.writerow(["k_perp"] + [f"theta_{j + 1}" for j in range(n)])
        for k, row in zip(self.k_perp, self.phases):
            writer.writerow([f"{k:.12g}"] + [f"{t:.12g}" for t in row])


def _unitary_part(M):
    X, _, Yh = np.linalg.svd(M)
    return X @ Yh


def wilson_loops(occ, plane):
    """Wilson loop along +a for every column b of ``plane`` (na x nb indices)."""
    na, nb = plane.shape
    out = []
    for j in range(nb):
        u = occ[plane[:, j]]
        W = np.eye(u.shape[-1], dtype=complex)
        for i in range(na):
            W = W @ _unitary_part(_dagger(u[i]) @ u[(i + 1) % na])
        out.append(W)
    return np.array(out)


def _strip_fluxes(occ, rows):
    """Summed plaquette flux between consecutive columns of ``rows`` (na x nr)."""
    na, nr = rows.shape
    out = np.zeros(nr - 1)
    i = np.arange(na)
    for r in range(nr - 1):
        corners = [rows[i, r], rows[(i + 1) % na, r], rows[(i + 1) % na, r + 1], rows[i, r + 1]]
        prod = np.ones(na, dtype=complex)
        for c in range(4):
            prod *= np.linalg.det(_dagger(occ[corners[c]]) @ occ[corners[(c + 1) % 4]])
        out[r] = np.sum(np.angle(prod))
    return out


def _track(phases, totals=None):
    """Match eigenphases row to row; returns the continuous increments per band.

    ``totals`` (optional) are the exact summed displacements per step; the
    2pi branch of the matched increments is corrected to reproduce them.
    """
    n_rows, n = phases.shape
    order = np.arange(n)
    steps = np.zeros((n_rows - 1, n))
    for r in range(n_rows - 1):
        a = phases[r, order]
        b = phases[r + 1]
        dist = np.abs(np.angle(np.exp(1j * (b[None, :] - a[:, None]))))
        _, cols = linear_sum_assignment(dist)
        d = np.angle(np.exp(1j * (b[cols] - a)))
        if totals is not None:
            m = int(np.rint((totals[r] - d.sum()) / (2 * np.pi)))
            for _ in range(abs(m)):
                j = int(np.argmin(d)) if m > 0 else int(np.argmax(d))
                d[j] += 2 * np.pi * np.sign(m)
        steps[r] = d
        order = cols
    return steps


def _count_crossings(start, steps, ref):
    """Crossings of ref (mod 2pi) by bands starting at ``start`` with increments ``steps``."""
    pos = start.copy()
    total = 0
    for s in steps:
        new = pos + s
        total += int(np.sum(np.abs(np.floor((new - ref) / (2 * np.pi))
                                   - np.floor((pos - ref) / (2 * np.pi)))))
        pos = new
    return total


def _sorted_phases(W):
    ev = np.linalg.eigvals(W)
    return np.sort(np.angle(ev), axis=-1), float(np.max(np.abs(np.abs(ev) - 1)))


def wannier_flow(frames, grid: InvolutiveGrid, direction=0, plane=None):
    """Wannier charge centres along ``direction`` over half the transverse cycle.

    For d = 3 pass ``plane`` (a ``PlaneZone``); its first axis is the loop
    direction. Returns (WannierSpectrum, upsilon).
    """
    occ = _occupied(frames)
    if plane is not None:
        idx = plane.plane
    else:
        if grid.dim != 2:
            raise ValueError("wannier_flow needs a 2d grid or an explicit plane")
        full = grid.reshape(np.arange(grid.npoints))
        idx = full if direction == 0 else full.T
    nb = idx.shape[1]
    rows = idx[:, : nb // 2 + 1]
    W = wilson_loops(occ, rows)
    phases, unit_res = _sorted_phases(W)
    # the summed phase moves by minus the Berry flux of the strip in between
    steps = _track(phases, -_strip_fluxes(occ, rows))
    big = float(np.max(np.abs(steps))) if steps.size else 0.0
    if big > WANNIER_STEP_MAX:
        raise GridTooCoarse(f"Wannier centre moved {big:.3f} > 3pi/4 between samples")
    k_perp = np.arange(nb // 2 + 1) * 2 * np.pi / nb
    log = []
    ref = np.pi
    for attempt in range(WANNIER_RETRIES + 1):
        near = np.abs(np.angle(np.exp(1j * (phases - ref))))
        if np.min(near) >= WANNIER_REF_TOL:
            break
        log.append(f"eigenphase within {np.min(near):.1e} of reference {ref:.6f}; shifting")
        ref = np.pi - 0.05 * (attempt + 1) * (1 if attempt % 2 == 0 else -1)
    else:
        raise GridTooCoarse("eigenphases keep hitting the reference line after "
                            f"{WANNIER_RETRIES} shifts")
    crossings = _count_crossings(phases[0], steps, ref)
    spec = WannierSpectrum(k_perp, phases, float(ref), crossings, log, unit_res)
    return spec, crossings % 2


def wannier_flow_3d(frames, grid: InvolutiveGrid):
    """Strong value from the kz = 0 and kz = pi planes; all six planes logged."""
    zones = effective_bz(grid)
    values = {}
    for label in sorted(zones):
        _, values[label] = wannier_flow(frames, grid, plane=zones[label])
    return (values["kz=0"] + values["kz=pi"]) % 2, values


# ---------------------------------------------------------------- Chern


@dataclass(eq=False)
class ProjectionField:
    grid: InvolutiveGrid
    p: np.ndarray

    @classmethod
    def from_frames(cls, grid, frames):
        return cls(grid, frames @ _dagger(frames))

    @property
    def rank(self):
        return int(round(float(np.trace(self.p[0]).real)))

    def residuals(self):
        p = self.p
        return {
            "idempotent": float(np.max(np.linalg.norm(p @ p - p, axis=(-2, -1)))),
            "hermitian": float(np.max(np.linalg.norm(p - _dagger(p), axis=(-2, -1)))),
            "trace": float(np.max(np.abs(np.trace(p, axis1=-2, axis2=-1) - self.rank))),
        }

    def frames(self):
        _, V = np.linalg.eigh(self.p)
        return V[:, :, -self.rank:]


def chern_estimate(frames, grid: InvolutiveGrid, plane=None) -> float:
    """Unrounded FHS lattice Chern number of the frames on a 2d (sub)torus."""
    if plane is None:
        if grid.dim != 2:
            raise ValueError("chern_number needs a 2d grid or an explicit plane")
        plane = grid.reshape(np.arange(grid.npoints))
    na, nb = plane.shape
    i, j = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
    corners = [plane[i, j], plane[(i + 1) % na, j], plane[(i + 1) % na, (j + 1) % nb],
               plane[i, (j + 1) % nb]]
    corners = [c.ravel() for c in corners]
    prod = np.ones(len(corners[0]), dtype=complex)
    for c in range(4):
        d = np.linalg.det(_dagger(frames[corners[c]]) @ frames[corners[(c + 1) % 4]])
        prod *= d
    return float(np.sum(np.angle(prod)) / (2 * np.pi))


def chern_number(proj_or_frames, grid: InvolutiveGrid | None = None, band_subset=None,
                 plane=None, tol=CHERN_ROUND_TOL) -> int:
    """First Chern number with the 1/(2 pi i) integral tr(p dp dp) normalisation."""
    if isinstance(proj_or_frames, ProjectionField):
        grid = grid or proj_or_frames.grid
        frames = proj_or_frames.frames()
    elif isinstance(proj_or_frames, BandFrame):
        grid = grid or proj_or_frames.grid
        frames = (proj_or_frames.occupied if band_subset is None
                  else proj_or_frames.select(band_subset))
    else:
        frames = np.asarray(proj_or_frames)
        if band_subset is not None:
            frames = frames[:, :, list(band_subset)]
    est = chern_estimate(frames, grid, plane)
    c = int(np.rint(est))
    if abs(est - c) >= tol:
        raise GridTooCoarse(f"Chern estimate {est:.4f} is not near an integer")
    return c


def hopf_projection(grid: InvolutiveGrid, m=1.0) -> ProjectionField:
    """p = (1 + r.sigma/|r|)/2 with r = (sin kx, sin ky, m + cos kx + cos ky)."""
    k = grid.points
    r = np.stack([np.sin(k[:, 0]), np.sin(k[:, 1]), m + np.cos(k[:, 0]) + np.cos(k[:, 1])], -1)
    r /= np.linalg.norm(r, axis=-1, keepdims=True)
    sig = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    p = 0.5 * (np.eye(2) + np.einsum("ka,aij->kij", r, sig))
    return ProjectionField(grid, p)


def chern_total(frames, grid: InvolutiveGrid) -> tuple:
    """Chern number of the full occupied bundle; for d = 3 summed over the
    three planes through k = 0. Returns (total, per-plane dict)."""
    occ = _occupied(frames)
    if grid.dim == 2:
        c = chern_number(occ, grid)
        return c, {"k-plane": c}
    zones = effective_bz(grid)
    per = {}
    for label in ("kx=0", "ky=0", "kz=0"):
        per[label] = chern_number(occ, grid, plane=zones[label].plane)
    return int(sum(per.values())), per


# ------------------------------------------------------------ gauge tools


def random_unitaries(rng, count, n):
    """Haar-random U(n) matrices via QR with phase correction."""
    Z = (rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[:, None, :]


def rotate_frames(frames: BandFrame, rng) -> BandFrame:
    """Apply an independent random U(n_occ) rotation at every k."""
    occ = frames.occupied
    R = random_unitaries(rng, occ.shape[0], occ.shape[-1])
    return frames.with_frames(occ @ R)


# --------------------------------------------------------------- report

METHODS = ("km", "obstruction", "wannier", "chern")


@dataclass
class Z2Report:
    nu_kane_mele: int | None
    upsilon_obstruction: int | None
    upsilon_wannier: int | None
    chern_total: int | None
    agreement: bool
    diagnostics: dict

    def to_record(self):
        return {
            "nu_kane_mele": self.nu_kane_mele,
            "upsilon_obstruction": self.upsilon_obstruction,
            "upsilon_wannier": self.upsilon_wannier,
            "chern_total": self.chern_total,
            "agreement": self.agreement,
            "diagnostics": self.diagnostics,
        }


def agreement_of(nu, ups_obs, ups_wan) -> bool:
    signs = []
    if nu is not None:
        signs.append(nu)
    for u in (ups_obs, ups_wan):
        if u is not None:
            signs.append((-1) ** u)
    return len(set(signs)) <= 1


def equivalence_report(model: BlochModel, grid: InvolutiveGrid, methods=METHODS,
                       frames: BandFrame | None = None) -> Z2Report:
    """Run the selected methods and compare nu with (-1)^upsilon."""
    if grid.dim == 1:
        raise ValidationError("Z2 methods need d = 2 or d = 3")
    if grid.dim != model.dim:
        raise ValidationError(f"grid dimension {grid.dim} does not match model dimension {model.dim}")
    methods = tuple(METHODS) if methods in ("all", None) else tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    trs = validate_trs(model, grid)
    if frames is None:
        frames = diagonalize(model, grid)
    sewing = sewing_field(frames, model.tr_op, grid)
    diag = {
        "grid": list(grid.sizes),
        "gap": frames.gap,
        "gap_k": grid.points[frames.gap_index].tolist(),
        "trs_residual": trs,
        "sewing_unitarity_residual": sewing.unitarity_residual(),
        "sewing_skew_residual": sewing.skew_residual(),
        "trim_skew_residuals": sewing.trim_skew_residuals(),
    }
    nu = ups_obs = ups_wan = chern = None
    if "km" in methods:
        km = kane_mele_details(sewing)
        nu = km.nu
        diag["kane_mele"] = km.to_record()
    if "obstruction" in methods:
        ups_obs, diag["obstruction"] = z2_obstruction_details(frames, sewing)
    if "wannier" in methods:
        if grid.dim == 2:
            spec, ups_wan = wannier_flow(frames, grid)
            diag["wannier"] = {"crossings": spec.crossings, "reference": spec.reference,
                               "log": spec.log, "unitarity_residual": spec.unitarity_residual}
        else:
            ups_wan, planes = wannier_flow_3d(frames, grid)
            diag["wannier"] = {"plane_values": planes}
    if "chern" in methods:
        chern, per = chern_total(frames, grid)
        diag["chern_planes"] = per
    return Z2Report(nu, ups_obs, ups_wan, chern, agreement_of(nu, ups_obs, ups_wan), diag)
