"""Dense least squares and symmetric eigenvalue extremes."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, InvalidInput, NoConvergence, NotSymmetric

RCOND = 1e-10
SYM_TOL = 1e-10
JACOBI_TOL = 1e-12
MAX_SWEEPS = 64


def _matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInput(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix entries must be finite")
    return A


def least_squares(A, b) -> tuple:
    """Minimal-norm minimizer of ||b - A w||^2 and the squared residual.

    Singular values below ``RCOND`` times the largest are treated as zero.
    """
    A = _matrix(A)
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
    if A.shape[1] == 0:
        return np.zeros(0), float(b @ b)
    w, *_ = np.linalg.lstsq(A, b, rcond=RCOND)
    r = b - A @ w
    return w, float(r @ r)


def gram(A) -> np.ndarray:
    """A^T A, made exactly symmetric by mirroring the lower triangle."""
    A = _matrix(A)
    G = A.T @ A
    low = np.tril(G)
    return low + np.tril(G, -1).T


def jacobi_eigenvalues(M, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    M = _matrix(M)
    n = M.shape[0]
    if M.shape[1] != n:
        raise NotSymmetric(f"matrix of shape {M.shape} is not square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > SYM_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    a = 0.5 * (M + M.T)
    norm = float(np.linalg.norm(a))
    if n <= 1 or norm == 0.0:
        return np.sort(np.diag(a).copy())
    for _ in range(max_sweeps):
        off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2))
        if off < tol * norm:
            return np.sort(np.diag(a).copy())
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows and columns p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    off = float(np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2))
    if off < tol * norm:
        return np.sort(np.diag(a).copy())
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")


def sym_eigen_extremes(M) -> tuple:
    """(smallest, largest) eigenvalue of a symmetric matrix."""
    ev = jacobi_eigenvalues(M)
    if ev.size == 0:
        raise InvalidInput("empty matrix has no eigenvalues")
    return float(ev[0]), float(ev[-1])
