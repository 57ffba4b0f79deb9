"""Degree of U(2)-valued maps on the 3-torus.

The winding is (1/24 pi^2) integral tr(g^-1 dg)^3, evaluated as
(1/8 pi^2) integral tr(L_x [L_y, L_z]) with L_a = g^-1 d_a g from
fourth-order periodic central differences.
"""
from __future__ import annotations

import numpy as np

from .errors import FieldNotResolvable

SMOOTHNESS_MAX = 0.5
WINDING_ROUND_TOL = 0.1
# the odd-index prefactor 1/(4 pi^2) times this factor gives 1/(24 pi^2)
WZW_CALIBRATION = 1.0 / 6.0


def _derivative(g, axis, h):
    def sh(s):
        return np.roll(g, -s, axis=axis)
    return (-sh(2) + 8 * sh(1) - 8 * sh(-1) + sh(-2)) / (12 * h)


def max_neighbor_distance(g):
    """Largest spectral-norm distance between grid neighbours."""
    worst = 0.0
    for axis in range(3):
        diff = np.roll(g, -1, axis=axis) - g
        worst = max(worst, float(np.max(np.linalg.norm(diff, ord=2, axis=(-2, -1)))))
    return worst


def wzw_estimate(g) -> float:
    """Unrounded winding of a field of shape (N0, N1, N2, n, n)."""
    g = np.asarray(g, dtype=complex)
    if g.ndim != 5 or g.shape[-1] != g.shape[-2]:
        raise ValueError("expected a field of shape (N0, N1, N2, n, n)")
    dist = max_neighbor_distance(g)
    if dist >= SMOOTHNESS_MAX:
        raise FieldNotResolvable(f"neighbour distance {dist:.3f} >= {SMOOTHNESS_MAX}")
    sizes = g.shape[:3]
    hs = [2 * np.pi / n for n in sizes]
    ginv = np.linalg.inv(g)
    L = [ginv @ _derivative(g, a, hs[a]) for a in range(3)]
    comm = L[1] @ L[2] - L[2] @ L[1]
    density = np.trace(L[0] @ comm, axis1=-2, axis2=-1)
    integral = np.sum(density) * np.prod(hs)
    return float((integral / (8 * np.pi ** 2)).real)


def wzw_winding(g, tol=WINDING_ROUND_TOL):
    """Return (integer winding, unrounded estimate)."""
    est = wzw_estimate(g)
    n = int(np.rint(est))
    if abs(est - n) >= tol:
        raise FieldNotResolvable(f"winding estimate {est:.4f} is not near an integer")
    return n, est


def wzw_mod2(g) -> int:
    return wzw_winding(g)[0] % 2


def quaternion_s3_map(N, offset=-2.0):
    """The quaternion map w(alpha, beta) = [[beta, alpha], [-conj alpha, conj beta]].

    (alpha, beta) run over S^3 through the degree-one map
    f(k) = (sin kx, sin ky, sin kz, offset + cos kx + cos ky + cos kz)/|.|,
    alpha = f4 + i f3, beta = f1 + i f2.
    """
    k = 2 * np.pi * np.arange(N) / N
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
    f = np.stack([np.sin(kx), np.sin(ky), np.sin(kz),
                  offset + np.cos(kx) + np.cos(ky) + np.cos(kz)], axis=-1)
    f /= np.linalg.norm(f, axis=-1, keepdims=True)
    alpha = f[..., 3] + 1j * f[..., 2]
    beta = f[..., 0] + 1j * f[..., 1]
    g = np.empty((N, N, N, 2, 2), dtype=complex)
    g[..., 0, 0] = beta
    g[..., 0, 1] = alpha
    g[..., 1, 0] = -np.conj(alpha)
    g[..., 1, 1] = np.conj(beta)
    return g


def constant_map(N, g0=None):
    g0 = np.eye(2, dtype=complex) if g0 is None else np.asarray(g0, dtype=complex)
    return np.broadcast_to(g0, (N, N, N) + g0.shape).copy()
