"""Dense and factored Hermitian linear algebra on 2**n dimensional spaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dense storage and dense eigendecompositions are capped at this dimension
# (12 sites for density operators).  Larger mixed-state problems must go
# through the factored subspace form.
DENSE_DIM_CAP = 4096

# Factored operators keep at most this many basis columns.
FACTORED_RANK_CAP = 256

# Hybrid tolerances: fixed relative thresholds, scaled at the call site by the
# largest entry or eigenvalue magnitude of the operator at hand.
HERMITICITY_RTOL = 1e-10
ORTHONORMALITY_TOL = 1e-12
ZERO_EIGENVALUE_RTOL = 1e-10


class CapacityError(Exception):
    """A computation would exceed the dense or factored size caps."""


def require_dense_capacity(dim: int, what: str = "operator") -> None:
    if dim > DENSE_DIM_CAP:
        raise CapacityError(
            f"dense {what} of dimension {dim} exceeds the supported cap {DENSE_DIM_CAP}"
        )


def require_factored_capacity(rank: int) -> None:
    if rank > FACTORED_RANK_CAP:
        raise CapacityError(
            f"factored subspace of rank {rank} exceeds the supported cap {FACTORED_RANK_CAP}"
        )


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian operator stored dense or factored as Q B Q^dag.

    In the factored form ``basis`` holds orthonormal columns spanning a
    subspace that contains the range of the operator and ``block`` is the
    small Hermitian restriction to that subspace.  The operator vanishes on
    the orthogonal complement, so the block spectrum is the full nonzero
    spectrum.
    """

    dim: int
    matrix: np.ndarray | None = None
    basis: np.ndarray | None = None
    block: np.ndarray | None = None

    @classmethod
    def dense(cls, matrix: np.ndarray) -> "HermitianOperator":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
        require_dense_capacity(matrix.shape[0])
        return cls(dim=matrix.shape[0], matrix=matrix)

    @classmethod
    def factored(cls, basis: np.ndarray, block: np.ndarray, dim: int | None = None) -> "HermitianOperator":
        basis = np.asarray(basis, dtype=complex)
        block = np.asarray(block, dtype=complex)
        if basis.ndim != 2:
            raise ValueError("factored basis must be a 2-d array of columns")
        if block.shape != (basis.shape[1], basis.shape[1]):
            raise ValueError(
                f"block shape {block.shape} does not match basis rank {basis.shape[1]}"
            )
        require_factored_capacity(basis.shape[1])
        return cls(dim=dim if dim is not None else basis.shape[0], basis=basis, block=block)

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    @property
    def rank(self) -> int:
        """Number of stored dimensions (an upper bound on the true rank)."""
        return self.dim if self.is_dense else self.basis.shape[1]

    def apply_to(self, columns: np.ndarray) -> np.ndarray:
        """Matrix product with a (dim, k) stack of column vectors."""
        if self.is_dense:
            return self.matrix @ columns
        if self.basis.shape[1] == 0:
            return np.zeros_like(columns)
        return self.basis @ (self.block @ (self.basis.conj().T @ columns))

    def to_dense(self) -> np.ndarray:
        if self.is_dense:
            return self.matrix
        require_dense_capacity(self.dim)
        if self.basis.shape[1] == 0:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.basis @ self.block @ self.basis.conj().T

    def trace(self) -> float:
        if self.is_dense:
            return float(np.trace(self.matrix).real)
        return float(np.trace(self.block).real)

    def eig(self) -> EigenDecomposition:
        """Eigendecomposition; for the factored form only the subspace part.

        The omitted orthogonal complement is an exact kernel, so the returned
        eigenvalues are the complete nonzero spectrum (plus possible zeros
        inside the subspace).
        """
        if self.is_dense:
            return hermitian_eig(self.matrix)
        if self.basis.shape[1] == 0:
            return EigenDecomposition(np.zeros(0), np.zeros((self.dim, 0), dtype=complex))
        small = hermitian_eig(self.block)
        return EigenDecomposition(small.eigenvalues, self.basis @ small.eigenvectors)


def _asymmetry(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def hermitian_eig(matrix: np.ndarray | HermitianOperator) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues.

    Inputs that fail the Hermiticity check (relative to the largest entry)
    are rejected with the measured asymmetry in the message.
    """
    if isinstance(matrix, HermitianOperator):
        return matrix.eig()
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    require_dense_capacity(matrix.shape[0], "eigendecomposition")
    if matrix.shape[0] == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0), dtype=complex))
    scale = float(np.max(np.abs(matrix)))
    asym = _asymmetry(matrix)
    if asym > HERMITICITY_RTOL * max(scale, 1.0):
        raise ValueError(f"matrix is not Hermitian: measured asymmetry {asym:.3e}")
    # Symmetrize before calling LAPACK so roundoff asymmetry cannot leak in.
    w, v = np.linalg.eigh((matrix + matrix.conj().T) / 2.0)
    return EigenDecomposition(w, v)


def zero_cutoff(eigenvalues: np.ndarray) -> float:
    """Threshold below which an eigenvalue magnitude counts as zero."""
    if eigenvalues.size == 0:
        return 0.0
    return ZERO_EIGENVALUE_RTOL * float(np.max(np.abs(eigenvalues)))


def orthonormalize(vectors, tol: float) -> np.ndarray:
    """Gram-Schmidt with a drop rule, returning orthonormal columns.

    Vectors whose residual norm after projection onto the vectors kept so
    far falls below ``tol`` are dropped, so the result spans the input span
    without near-duplicates.  A second projection pass restores the
    orthogonality lost to cancellation.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    cols = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    if not cols:
        return np.zeros((0, 0), dtype=complex)
    dim = cols[0].size
    kept: list[np.ndarray] = []
    for v in cols:
        if v.size != dim:
            raise ValueError("all vectors must share one dimension")
        w = v.astype(complex, copy=True)
        for _ in range(2):
            for u in kept:
                w -= u * np.vdot(u, w)
        nrm = float(np.linalg.norm(w))
        if nrm < tol:
            continue
        kept.append(w / nrm)
    if not kept:
        return np.zeros((dim, 0), dtype=complex)
    return np.column_stack(kept)


def project_into_subspace(matrix: np.ndarray | HermitianOperator, basis: np.ndarray) -> np.ndarray:
    """Restriction block B[j, k] = <b_j| M |b_k> for orthonormal basis columns.

    The block is conjugate-symmetrized, so a Hermitian input yields an
    exactly Hermitian block.
    """
    basis = np.asarray(basis, dtype=complex)
    if isinstance(matrix, HermitianOperator):
        applied = matrix.apply_to(basis)
    else:
        applied = np.asarray(matrix, dtype=complex) @ basis
    block = basis.conj().T @ applied
    return (block + block.conj().T) / 2.0
