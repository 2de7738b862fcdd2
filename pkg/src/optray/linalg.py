"""Small dense linear-algebra kernels: orthonormal bases, projections, simplex projection."""

from dataclasses import dataclass

import numpy as np

from . import _kernels

DEFAULT_RANK_TOL = 1e-10


@dataclass(eq=False)
class Basis:
    """Orthonormal basis of a subspace of R^d, stored as (d, r) columns.

    rank 0 is valid and represents the zero subspace.
    """

    columns: np.ndarray

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def project(self, w: np.ndarray) -> np.ndarray:
        """Orthogonal projection of w (or rows of w) onto the subspace."""
        w = np.asarray(w, dtype=float)
        return (w @ self.columns) @ self.columns.T


def _canonical_signs(cols: np.ndarray) -> np.ndarray:
    # fix SVD sign ambiguity so bases are deterministic
    out = cols.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def orthonormal_basis(vectors: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> Basis:
    """Orthonormal basis of span(vectors), vectors given as rows of an (m, d) array.

    Directions whose singular value is <= rank_tol times the largest one are
    dropped.  An empty (0, d) input yields the rank-0 basis.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    m_rows = np.asarray(vectors, dtype=float)
    if m_rows.ndim != 2:
        raise ValueError("vectors must be a 2-D array with one vector per row")
    d = m_rows.shape[1]
    if m_rows.shape[0] == 0:
        return Basis(np.zeros((d, 0)))
    _, svals, vt = np.linalg.svd(m_rows, full_matrices=False)
    if svals.size == 0 or svals[0] <= 0.0:
        return Basis(np.zeros((d, 0)))
    keep = svals > rank_tol * svals[0]
    return Basis(_canonical_signs(vt[keep].T))


def complement(basis: Basis) -> Basis:
    """Orthonormal basis of the orthogonal complement."""
    d, r = basis.columns.shape
    if r == 0:
        return Basis(np.eye(d))
    if r >= d:
        return Basis(np.zeros((d, 0)))
    _, _, vt = np.linalg.svd(basis.columns.T, full_matrices=True)
    return Basis(_canonical_signs(vt[r:].T))


def project(basis: Basis, w: np.ndarray) -> np.ndarray:
    """Projection of a single vector onto the subspace spanned by basis."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != basis.dim:
        raise ValueError(f"dimension mismatch: vector has {w.shape[0]}, basis {basis.dim}")
    return basis.columns @ (basis.columns.T @ w)


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex {q >= 0, sum q = 1}."""
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValueError("expected a nonempty 1-D vector")
    return _kernels.simplex_project(v)
