"""Sparse direct solves and a shift-invert eigensolver.

Thin wrappers around SuperLU and ARPACK that add the checks the solvers rely
on: singular systems are reported instead of producing garbage, a
factorization refuses to run against a matrix that has changed since it was
computed, and eigenpairs come back real, normalised and sign-fixed.
"""
from __future__ import annotations

import logging
import zlib

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .wavefunction import WaveFunction, norm

log = logging.getLogger(__name__)


class SingularMatrixError(ArithmeticError):
    pass


class StaleFactorizationError(RuntimeError):
    pass


class EigenError(RuntimeError):
    pass


def _version(A) -> int:
    """Checksum of the sparse structure and values of ``A``."""
    A = A.tocsc() if not sp.isspmatrix_csc(A) else A
    h = zlib.crc32(np.ascontiguousarray(A.indptr).tobytes())
    h = zlib.crc32(np.ascontiguousarray(A.indices).tobytes(), h)
    return zlib.crc32(np.ascontiguousarray(A.data).tobytes(), h)


class Factorization:
    """Sparse LU of ``A`` tied to the matrix state it was computed from."""

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = A
        self.version = _version(A)
        self.shape = A.shape
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from None
        diag_u = np.abs(self._lu.U.diagonal())
        if diag_u.size and (not np.all(np.isfinite(diag_u)) or diag_u.min() <= 1e-14 * diag_u.max()):
            raise SingularMatrixError("matrix is numerically singular")

    def check(self):
        if _version(self.matrix) != self.version:
            raise StaleFactorizationError("matrix changed since it was factorized")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b)
        if np.iscomplexobj(b) and not np.iscomplexobj(self.matrix.data):
            return self._lu.solve(np.ascontiguousarray(b.real)) + 1j * self._lu.solve(np.ascontiguousarray(b.imag))
        return self._lu.solve(b.astype(np.result_type(b, self.matrix.dtype), copy=False))


def factorize(A) -> Factorization:
    return Factorization(A)


def solve_factored(F: Factorization, b):
    F.check()
    if isinstance(b, WaveFunction):
        return WaveFunction(b.graph, F.solve(b.values))
    return F.solve(b)


def solve(A, b):
    """Solve ``A x = b`` for a vector or :class:`WaveFunction` right-hand side."""
    return solve_factored(Factorization(A), b)


def eigs_smallest(A, graph, k: int = 6, sigma: float = 0.0, tol: float = 0.0):
    """``k`` eigenpairs of ``A`` nearest to ``sigma``, by shift-invert ARPACK.

    Eigenvalues are sorted by ``|lambda - sigma|``.  Each eigenvector is
    returned as a unit-norm :class:`WaveFunction` whose first entry of
    significant size is positive.  Complex eigenvalues are an error.
    """
    n = A.shape[0]
    if k < 1 or k > n // 4:
        raise ValueError(f"k must be in [1, {n // 4}], got {k}")
    A = sp.csc_matrix(A)
    shift = float(sigma)
    for attempt in range(4):
        try:
            F = Factorization(A - shift * sp.identity(n, format="csc"))
            break
        except SingularMatrixError:
            # sigma sits on an eigenvalue: nudge it off
            shift = float(sigma) + 1e-8 * 10**attempt * max(1.0, abs(sigma))
            log.debug("shift %g singular, retrying at %g", sigma, shift)
    else:
        raise EigenError("could not factorize A - sigma I")
    op = spla.LinearOperator((n, n), matvec=F.solve, dtype=A.dtype)
    try:
        mu, V = spla.eigs(op, k=k, which="LM", tol=tol)
    except spla.ArpackNoConvergence as exc:
        raise EigenError(f"ARPACK did not converge: {exc}") from None
    lam = shift + 1.0 / mu
    scale = max(1.0, np.abs(lam).max())
    if np.any(np.abs(lam.imag) > 1e-8 * scale):
        raise EigenError(f"complex eigenvalues near sigma: {lam[np.abs(lam.imag) > 1e-8 * scale]}")
    order = np.argsort(np.abs(lam.real - sigma), kind="stable")
    norm_A = abs(A).sum(axis=1).max()
    out = []
    for i in order:
        v = V[:, i]
        # ARPACK vectors carry an arbitrary complex phase; rotate it away
        j = int(np.argmax(np.abs(v)))
        v = (v * np.conj(v[j]) / abs(v[j])).real
        w = WaveFunction(graph, v)
        v = v / norm(w)
        first = np.flatnonzero(np.abs(v) > 1e-8 * np.abs(v).max())[0]
        if v[first] < 0:
            v = -v
        val = float(lam[i].real)
        res = np.linalg.norm(A @ v - val * v)
        if res > 1e-8 * norm_A * max(1.0, np.linalg.norm(v)):
            raise EigenError(f"eigenpair residual {res:.3e} too large for eigenvalue {val}")
        out.append((val, WaveFunction(graph, v)))
    return out
