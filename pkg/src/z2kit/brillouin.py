"""Uniform momentum grids on T^d with the involution k -> -k.

Points are stored in C order over the integer multi-index ``n`` with
``k_i = 2*pi*n_i/N_i``. The grid always contains k = 0, so every
time-reversal-invariant momentum (TRIM) is a grid point when N_i is even.
The fundamental domain of the involution is the half-zone
0 <= k_last <= pi; points on the invariant hyperplanes k_last in {0, pi}
carry the label ``"fix"``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

PLUS, MINUS, FIX = "+", "-", "fix"


@dataclass(frozen=True)
class InvolutiveGrid:
    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if not 1 <= len(sizes) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        for n in sizes:
            if n % 2:
                raise ValueError(f"grid size {n} is odd; TRIM would fall off the grid")
            if n < 4:
                raise ValueError("grid sizes must be >= 4")
        object.__setattr__(self, "sizes", sizes)

    @property
    def dim(self):
        return len(self.sizes)

    @property
    def npoints(self):
        return int(np.prod(self.sizes))

    @property
    def shape(self):
        return self.sizes

    def multi_index(self):
        """Integer coordinates, shape (npoints, dim)."""
        grids = np.meshgrid(*[np.arange(n) for n in self.sizes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def points(self):
        return self.multi_index() * (2 * np.pi / np.asarray(self.sizes, dtype=float))

    def flat(self, n):
        """Flat index of an integer coordinate tuple (taken modulo the sizes)."""
        n = np.mod(np.asarray(n), self.sizes)
        return int(np.ravel_multi_index(tuple(n), self.sizes))

    def k_of(self, idx):
        n = np.unravel_index(idx, self.sizes)
        return np.array(n, dtype=float) * 2 * np.pi / np.asarray(self.sizes)

    @property
    def involution(self):
        """Index permutation realising k -> -k."""
        n = np.mod(-self.multi_index(), self.sizes)
        return np.ravel_multi_index(tuple(n.T), self.sizes)

    @property
    def trim(self):
        """Flat indices of the 2^d fixed points, ordered by their 0/pi pattern."""
        out = []
        for bits in itertools.product((0, 1), repeat=self.dim):
            out.append(self.flat([b * n // 2 for b, n in zip(bits, self.sizes)]))
        return out

    def is_trim(self, idx):
        return idx in set(self.trim)

    @property
    def domain_label(self):
        last = self.multi_index()[:, -1]
        half = self.sizes[-1] // 2
        labels = np.full(self.npoints, PLUS, dtype=object)
        labels[last > half] = MINUS
        labels[(last == 0) | (last == half)] = FIX
        return labels

    def shift(self, axis, step=1):
        """Flat index of the neighbour k + step*e_axis for every point."""
        n = self.multi_index()
        n[:, axis] += step
        n = np.mod(n, self.sizes)
        return np.ravel_multi_index(tuple(n.T), self.sizes)

    def reshape(self, arr):
        """View a per-point array with the grid axes unfolded."""
        arr = np.asarray(arr)
        return arr.reshape(self.sizes + arr.shape[1:])


def make_grid(d: int, N) -> InvolutiveGrid:
    sizes = tuple(N) if np.iterable(N) else (int(N),) * d
    if len(sizes) != d:
        raise ValueError("need one size per axis")
    return InvolutiveGrid(sizes)


@dataclass
class Path:
    indices: list
    start: int = field(init=False)
    end: int = field(init=False)

    def __post_init__(self):
        self.indices = [int(i) for i in self.indices]
        self.start = self.indices[0]
        self.end = self.indices[-1]

    def __len__(self):
        return len(self.indices)

    def check_connected(self, grid: InvolutiveGrid):
        coords = np.array([np.unravel_index(i, grid.sizes) for i in self.indices])
        steps = np.diff(coords, axis=0)
        sizes = np.asarray(grid.sizes)
        steps = (steps + sizes // 2) % sizes - sizes // 2
        return bool(np.all(np.abs(steps).sum(axis=1) == 1))


@dataclass
class PlaneZone:
    """Half of a two-dimensional (sub)torus, 0 <= k_b <= pi.

    ``plaquettes`` holds the four corner indices of each plaquette in
    counterclockwise order (k, k+a, k+a+b, k+b); ``boundary`` holds the two
    invariant circles, each as an ordered loop in the +a direction.
    ``plane`` maps the local (a, b) coordinates to flat indices of the
    parent grid.
    """
    label: str
    axes: tuple
    plane: np.ndarray
    plaquettes: np.ndarray
    boundary: list

    @property
    def shape(self):
        return self.plane.shape


def _plane_indices(grid, axes, fixed):
    na, nb = grid.sizes[axes[0]], grid.sizes[axes[1]]
    out = np.empty((na, nb), dtype=int)
    for i in range(na):
        for j in range(nb):
            n = list(fixed)
            n[axes[0]] = i
            n[axes[1]] = j
            out[i, j] = grid.flat(n)
    return out


def _half_zone(grid, axes, fixed, label):
    plane = _plane_indices(grid, axes, fixed)
    na, nb = plane.shape
    half = nb // 2
    plaq = []
    for j in range(half):
        for i in range(na):
            i1 = (i + 1) % na
            plaq.append((plane[i, j], plane[i1, j], plane[i1, j + 1], plane[i, j + 1]))
    boundary = [plane[:, 0].copy(), plane[:, half].copy()]
    return PlaneZone(label, tuple(axes), plane, np.array(plaq), boundary)


_AXIS_NAMES = "xyz"


def effective_bz(grid: InvolutiveGrid):
    """Effective Brillouin zone.

    For d = 2 returns a single ``PlaneZone`` (the cylinder 0 <= k_y <= pi).
    For d = 3 returns the six invariant planes k_i in {0, pi}, each with its
    own half-zone, keyed by labels such as ``"kz=0"``.
    """
    if grid.dim == 1:
        raise ValueError("effective_bz needs d = 2 or d = 3")
    if grid.dim == 2:
        return _half_zone(grid, (0, 1), [0, 0], "k-plane")
    zones = {}
    for fixed_axis in range(3):
        axes = tuple(a for a in range(3) if a != fixed_axis)
        for value, name in ((0, "0"), (grid.sizes[fixed_axis] // 2, "pi")):
            fixed = [0, 0, 0]
            fixed[fixed_axis] = value
            label = f"k{_AXIS_NAMES[fixed_axis]}={name}"
            zones[label] = _half_zone(grid, axes, fixed, label)
    return zones


def plane_grid_zone(grid: InvolutiveGrid, label: str) -> PlaneZone:
    """Half-zone of one invariant plane by label (d = 2: ``"k-plane"``)."""
    zones = effective_bz(grid)
    if isinstance(zones, PlaneZone):
        return zones
    return zones[label]


def trim_tree(grid: InvolutiveGrid) -> list:
    """Spanning tree of straight paths joining the TRIM inside 0 <= k_last <= pi.

    Each non-root TRIM is joined to its parent, the TRIM obtained by
    resetting its highest pi-coordinate to 0, along that axis.
    """
    paths = []
    for bits in itertools.product((0, 1), repeat=grid.dim):
        if not any(bits):
            continue
        axis = max(i for i, b in enumerate(bits) if b)
        parent = list(bits)
        parent[axis] = 0
        base = [b * n // 2 for b, n in zip(parent, grid.sizes)]
        idx = []
        for step in range(grid.sizes[axis] // 2 + 1):
            n = list(base)
            n[axis] = step
            idx.append(grid.flat(n))
        paths.append(Path(idx))
    return paths
