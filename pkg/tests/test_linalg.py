"""Eigendecomposition layer: dense solver, factored operators, orthonormalization."""

from __future__ import annotations

import numpy as np
import pytest

from macroent.linalg import (
    CapacityError,
    DENSE_DIM_CAP,
    FACTORED_RANK_CAP,
    HermitianOperator,
    hermitian_eig,
    orthonormalize,
    project_into_subspace,
    require_dense_capacity,
    require_factored_capacity,
    zero_cutoff,
)
from macroent.oracles import jacobi_eigenvalues


def _random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def test_eigenvalue_sum_equals_trace():
    rng = np.random.default_rng(3)
    for dim in (1, 2, 5, 16, 64):
        m = _random_hermitian(rng, dim)
        res = hermitian_eig(m)
        assert abs(res.eigenvalues.sum() - np.trace(m).real) <= 1e-9 * dim


def test_eigenvectors_orthonormal():
    rng = np.random.default_rng(4)
    for dim in (2, 7, 32):
        res = hermitian_eig(_random_hermitian(rng, dim))
        v = res.eigenvectors
        gram = v.conj().T @ v
        assert np.abs(gram - np.eye(dim)).max() <= 1e-10


def test_eigenvalues_match_independent_jacobi():
    rng = np.random.default_rng(9)
    m = _random_hermitian(rng, 8)
    ours = hermitian_eig(m).eigenvalues
    theirs = jacobi_eigenvalues(m)
    assert np.abs(ours - theirs).max() <= 1e-9


def test_reconstruction():
    rng = np.random.default_rng(12)
    m = _random_hermitian(rng, 10)
    res = hermitian_eig(m)
    back = (res.eigenvectors * res.eigenvalues) @ res.eigenvectors.conj().T
    assert np.abs(back - m).max() <= 1e-10 * max(1.0, np.abs(m).max())


def test_non_hermitian_rejected():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="not Hermitian"):
        hermitian_eig(m)


def test_capacity_guards():
    require_dense_capacity(DENSE_DIM_CAP)
    with pytest.raises(CapacityError):
        require_dense_capacity(DENSE_DIM_CAP + 1)
    require_factored_capacity(FACTORED_RANK_CAP)
    with pytest.raises(CapacityError):
        require_factored_capacity(FACTORED_RANK_CAP + 1)


def test_zero_cutoff_scales_with_spectrum():
    assert zero_cutoff(np.array([])) == 0.0
    assert zero_cutoff(np.array([2.0, -8.0])) == pytest.approx(8e-10)


def test_orthonormalize_basic():
    rng = np.random.default_rng(21)
    vecs = rng.normal(size=(4, 9)) + 1j * rng.normal(size=(4, 9))
    q = orthonormalize(vecs, tol=1e-12)
    assert q.shape == (9, 4)
    gram = q.conj().T @ q
    assert np.abs(gram - np.eye(4)).max() <= 1e-12


def test_orthonormalize_drops_dependent_rows():
    v = np.array([1.0, 0.0, 0.0])
    stack = [v, 2.0 * v, np.array([0.0, 1.0, 0.0])]
    q = orthonormalize(stack, tol=1e-10)
    assert q.shape == (3, 2)


def test_orthonormalize_rejects_bad_tol():
    with pytest.raises(ValueError):
        orthonormalize([np.ones(3)], tol=0.0)


def test_factored_operator_matches_dense():
    rng = np.random.default_rng(33)
    dim, rank = 16, 3
    basis = orthonormalize((rng.normal(size=(rank, dim))
                            + 1j * rng.normal(size=(rank, dim))), tol=1e-12)
    block = _random_hermitian(rng, rank)
    op = HermitianOperator.factored(basis, block, dim=dim)
    dense = HermitianOperator.dense(op.to_dense())

    lam_f = op.eig().eigenvalues
    lam_d = dense.eig().eigenvalues
    # dense spectrum = factored spectrum plus (dim - rank) zeros
    nonzero = lam_d[np.abs(lam_d) > 1e-10 * max(1.0, np.abs(lam_d).max())]
    assert np.abs(np.sort(nonzero) - np.sort(lam_f[np.abs(lam_f) > 1e-12])).max() <= 1e-9

    cols = rng.normal(size=(dim, 2))
    assert np.abs(op.apply_to(cols) - dense.apply_to(cols)).max() <= 1e-10


def test_rank_zero_factored_operator():
    op = HermitianOperator.factored(np.zeros((8, 0)), np.zeros((0, 0)), dim=8)
    assert op.rank == 0
    assert op.eig().eigenvalues.size == 0
    out = op.apply_to(np.ones((8, 2)))
    assert np.all(out == 0)


def test_project_into_subspace_hermitian():
    rng = np.random.default_rng(44)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))  # deliberately raw
    basis = orthonormalize(rng.normal(size=(2, 6)) + 1j * rng.normal(size=(2, 6)),
                           tol=1e-12)
    block = project_into_subspace(m, basis)
    assert np.abs(block - block.conj().T).max() == 0.0
