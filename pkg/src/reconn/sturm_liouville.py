"""Singular exponents at a vertex where sectors of constant coefficient meet.

On each sector ``(t_k, t_{k+1})`` the angular function is
``phi = a_k sin(lam t) + b_k cos(lam t)``.  Continuity of ``phi`` and of
``sigma phi'`` at every sector boundary gives a square system ``M(lam) c = 0``
in ``c = (a_1..a_n, b_1..b_n)``; admissible exponents are the roots of
``det M(lam)`` and the coefficients span its kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KernelRankError, NoRootInUnitInterval

QUADRANT_ANGLES = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)


@dataclass(frozen=True)
class SturmLiouvilleSolution:
    lam: float
    a: np.ndarray
    b: np.ndarray
    sigma: tuple
    angles: tuple = QUADRANT_ANGLES
    roots_found: int = 1

    def sector_of(self, theta) -> np.ndarray:
        th = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
        edges = np.asarray(self.angles[1:])
        return np.searchsorted(edges, th, side="right")

    def phi(self, theta, sector=None) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        k = self.sector_of(th) if sector is None else np.asarray(sector)
        return self.a[k] * np.sin(self.lam * th) + self.b[k] * np.cos(self.lam * th)

    def dphi(self, theta, sector=None) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        k = self.sector_of(th) if sector is None else np.asarray(sector)
        return self.lam * (self.a[k] * np.cos(self.lam * th) - self.b[k] * np.sin(self.lam * th))

    def scaled(self, a1: float) -> "SturmLiouvilleSolution":
        s = a1 / self.a[0]
        return SturmLiouvilleSolution(self.lam, self.a * s, self.b * s, self.sigma, self.angles, self.roots_found)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "sigma": list(self.sigma),
            "roots_found": self.roots_found,
        }


def assemble(lam: float, sigma, angles=QUADRANT_ANGLES) -> np.ndarray:
    """Rows: (value, flux) continuity at each boundary ``t_k``; columns a then b.

    Boundary ``k`` separates sector ``k-1`` (on the left) from sector ``k``;
    at ``k = 0`` the left sector is the last one, evaluated at ``2 pi``.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = len(sigma)
    M = np.zeros((2 * n, 2 * n))
    for k in range(n):
        left, right = (k - 1) % n, k
        tl = angles[k] if k > 0 else 2 * np.pi
        tr = angles[k]
        sl, cl = np.sin(lam * tl), np.cos(lam * tl)
        sr, cr = np.sin(lam * tr), np.cos(lam * tr)
        M[2 * k, left] += sl
        M[2 * k, n + left] += cl
        M[2 * k, right] -= sr
        M[2 * k, n + right] -= cr
        M[2 * k + 1, left] += sigma[left] * lam * cl
        M[2 * k + 1, n + left] -= sigma[left] * lam * sl
        M[2 * k + 1, right] -= sigma[right] * lam * cr
        M[2 * k + 1, n + right] += sigma[right] * lam * sr
    return M


def _row_normalized(M):
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    return M / np.where(norms > 0, norms, 1.0)


def full_pivot_elimination(M: np.ndarray, tol: float = 1e-9):
    """Gaussian elimination with full pivoting.

    Returns ``(U, row_perm, col_perm, sign, rank)`` where ``U`` is upper
    triangular in the permuted ordering.  ``sign`` is the parity of the
    permutations; the determinant is ``sign * prod(diag(U))``.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    rows = np.arange(n)
    cols = np.arange(n)
    sign = 1.0
    scale = np.max(np.abs(A)) or 1.0
    rank = n
    for k in range(n):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        if sub[i - k, j - k] <= tol * scale:
            rank = k
            break
        if i != k:
            A[[k, i]] = A[[i, k]]
            rows[[k, i]] = rows[[i, k]]
            sign = -sign
        if j != k:
            A[:, [k, j]] = A[:, [j, k]]
            cols[[k, j]] = cols[[j, k]]
            sign = -sign
        piv = A[k, k]
        f = A[k + 1:, k] / piv
        A[k + 1:, k:] -= np.outer(f, A[k, k:])
        A[k + 1:, k] = 0.0
    return A, rows, cols, sign, rank


def determinant(M: np.ndarray) -> float:
    U, _, _, sign, _ = full_pivot_elimination(M, tol=0.0)
    return float(sign * np.prod(np.diag(U)))


def null_vector(M: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Kernel of a matrix of nullity exactly one."""
    U, _, cols, _, rank = full_pivot_elimination(M, tol)
    n = M.shape[0]
    if rank != n - 1:
        raise KernelRankError(f"expected nullity 1, got {n - rank}")
    # the last permuted column is free; back-substitute with it set to 1
    y = np.zeros(n)
    y[n - 1] = 1.0
    for k in range(n - 2, -1, -1):
        y[k] = -(U[k, k + 1:] @ y[k + 1:]) / U[k, k]
    v = np.zeros(n)
    v[cols] = y
    return v


def det_scan(sigma, angles=QUADRANT_ANGLES, lo=0.01, hi=0.99, n=200):
    lams = np.linspace(lo, hi, n)
    dets = np.array([determinant(_row_normalized(assemble(l, sigma, angles))) for l in lams])
    return lams, dets


def bisect_root(sigma, a: float, b: float, angles=QUADRANT_ANGLES, tol: float = 1e-12) -> float:
    def g(l):
        return determinant(_row_normalized(assemble(l, sigma, angles)))

    fa = g(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = g(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def solve(sigma, angles=QUADRANT_ANGLES, a1: float | None = None) -> SturmLiouvilleSolution:
    """Smallest exponent in (0, 1) and its angular coefficients.

    Coefficients are normalised to unit Euclidean norm with ``a_1 >= 0``,
    or scaled so that ``a_1`` equals the given value.
    """
    sigma = tuple(float(s) for s in sigma)
    if min(sigma) <= 0:
        raise ValueError("sigma values must be positive")
    lams, dets = det_scan(sigma, angles)
    flips = np.nonzero(np.sign(dets[:-1]) * np.sign(dets[1:]) < 0)[0]
    if flips.size == 0:
        raise NoRootInUnitInterval("no singular exponent in (0,1): det(M) keeps its sign")
    k = flips[0]
    lam = bisect_root(sigma, lams[k], lams[k + 1], angles)
    v = null_vector(_row_normalized(assemble(lam, sigma, angles)))
    v /= np.linalg.norm(v)
    n = len(sigma)
    if v[0] < 0:
        v = -v
    sol = SturmLiouvilleSolution(lam, v[:n].copy(), v[n:].copy(), sigma, tuple(angles), int(flips.size))
    return sol.scaled(a1) if a1 is not None else sol


# ------------------------------------------------------------- FEM oracle


def fem_eigen_exponent(sigma, h: float | None = None, n: int | None = None, angles=QUADRANT_ANGLES) -> float:
    """Smallest nonzero exponent from periodic P1 elements on (0, 2 pi).

    Solves ``(sigma phi')' + lam^2 sigma phi = 0`` in weak form; the mass
    matrix carries ``sigma`` as well, matching the flux-continuity weighting.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.linalg import eigsh

    if n is None:
        n = int(round(2 * np.pi / h))
    hh = 2 * np.pi / n
    mids = (np.arange(n) + 0.5) * hh
    edges = np.asarray(angles[1:])
    sig = np.asarray(sigma, dtype=float)[np.searchsorted(edges, mids, side="right")]
    i = np.arange(n)
    j = (i + 1) % n
    kl = sig / hh
    ml = sig * hh / 6.0
    r = np.concatenate([i, j, i, j])
    c = np.concatenate([i, j, j, i])
    K = coo_matrix((np.concatenate([kl, kl, -kl, -kl]), (r, c)), shape=(n, n)).tocsc()
    M = coo_matrix((np.concatenate([2 * ml, 2 * ml, ml, ml]), (r, c)), shape=(n, n)).tocsc()
    vals = eigsh(K, k=3, M=M, sigma=-0.05, which="LM", return_eigenvectors=False)
    vals = np.sort(vals)
    nz = vals[vals > 1e-8]
    return float(np.sqrt(nz[0]))
