"""Pfaffian of complex skew-symmetric matrices.

Parlett-Reid elimination with partial pivoting: the matrix is reduced to
skew-tridiagonal form by congruence transforms L A L^T (unit lower
triangular L), and the Pfaffian is the product of the leading super-
diagonal entries, with a sign flip for every row/column interchange.
"""
import numpy as np

SKEW_RTOL = 1e-8


def pfaffian(A) -> complex:
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("pfaffian needs a square matrix")
    n = A.shape[0]
    if n % 2:
        raise ValueError(f"pfaffian of odd-size ({n}) matrix is undefined")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A + A.T) >= SKEW_RTOL * max(scale, np.finfo(float).tiny):
        if scale > 0:
            raise ValueError("matrix is not skew-symmetric")
    if n == 0:
        return 1.0 + 0j
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], k:] = A[[kp, k + 1], k:]
            A[k:, [k + 1, kp]] = A[k:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return 0j
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1].copy()
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(pf)


def pfaffian_expansion(A) -> complex:
    """Pfaffian by recursive expansion along the first row (exponential cost).

    pf(A) = sum_j (-1)^(j+1) a_{0j} pf(A with rows/cols 0 and j removed).
    Meant as a reference for small matrices.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        raise ValueError("odd size")
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for j in range(1, n):
        keep = [i for i in range(n) if i not in (0, j)]
        total += (-1) ** (j + 1) * A[0, j] * pfaffian_expansion(A[np.ix_(keep, keep)])
    return total
