"""Dense Cholesky factorization with a hard pivot floor.

The routines work on stacks of matrices (leading batch axis) so that one
patch can be factorized for every shape parameter candidate at once.  A
matrix whose pivot drops to ``PIVOT_TOL`` or below is reported as failed
instead of being regularized.
"""

from __future__ import annotations

import numpy as np

from .errors import NotSPDError, ValidationError

PIVOT_TOL = 1e-14


def cholesky_batch(A, pivot_tol=PIVOT_TOL):
    """Factorize a stack ``A`` of shape ``(B, n, n)`` as ``L @ L.T``.

    Only the lower triangle of ``A`` is read.

    Returns
    -------
    L : ndarray (B, n, n)
        Lower factors.  Rows of failed matrices hold placeholder values.
    failed_at : ndarray (B,) of int
        Index of the first pivot ``<= pivot_tol`` (or non-finite), ``-1``
        when the factorization succeeded.
    """
    A = np.asarray(A, dtype=float)
    B, n, _ = A.shape
    L = np.zeros_like(A)
    failed_at = np.full(B, -1, dtype=int)
    for j in range(n):
        row = L[:, j, :j]
        d = A[:, j, j] - np.einsum("bk,bk->b", row, row)
        bad = ~(d > pivot_tol) & (failed_at < 0)
        failed_at[bad] = j
        ljj = np.sqrt(np.where(failed_at < 0, d, 1.0))
        L[:, j, j] = ljj
        if j + 1 < n:
            below = A[:, j + 1:, j] - np.einsum("bik,bk->bi", L[:, j + 1:, :j], row)
            L[:, j + 1:, j] = below / ljj[:, None]
    return L, failed_at


def inverse_lower_batch(L):
    """Inverse of each lower-triangular factor by forward substitution."""
    B, n, _ = L.shape
    X = np.zeros_like(L)
    for i in range(n):
        rhs = -np.einsum("bk,bkj->bj", L[:, i, :i], X[:, :i, :])
        rhs[:, i] += 1.0
        X[:, i, :] = rhs / L[:, i, i][:, None]
    return X


class SPDFactorization:
    """``A = L @ L.T`` for a single symmetric positive definite matrix."""

    def __init__(self, L):
        self.L = np.asarray(L, dtype=float)
        self.n = self.L.shape[0]
        self._Linv = None

    @property
    def Linv(self):
        if self._Linv is None:
            self._Linv = inverse_lower_batch(self.L[None])[0]
        return self._Linv

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ValidationError(f"rhs has length {rhs.shape[0]}, expected {self.n}")
        y = _forward(self.L, rhs)
        return _backward(self.L.T, y)

    def inverse_diagonal(self):
        # diag(A^-1) = squared column norms of L^-1
        return np.einsum("ki,ki->i", self.Linv, self.Linv)


def _forward(L, b):
    n = L.shape[0]
    y = np.zeros_like(b, dtype=float)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def _backward(U, y):
    n = U.shape[0]
    x = np.zeros_like(y, dtype=float)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - U[i, i + 1:] @ x[i + 1:]) / U[i, i]
    return x


def factorize_spd(A, pivot_tol=PIVOT_TOL) -> SPDFactorization:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    L, failed_at = cholesky_batch(A[None], pivot_tol)
    if failed_at[0] >= 0:
        j = int(failed_at[0])
        pivot = A[j, j] - L[0, j, :j] @ L[0, j, :j]
        raise NotSPDError(j, float(pivot))
    return SPDFactorization(L[0])


def solve(fact: SPDFactorization, rhs):
    return fact.solve(rhs)


def inverse_diagonal(fact: SPDFactorization):
    return fact.inverse_diagonal()
