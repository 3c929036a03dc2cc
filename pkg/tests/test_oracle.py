"""The cross-validation battery has to be trustworthy on its own terms."""

from __future__ import annotations

import numpy as np
import pytest

from macroent.correlation import ProjectorSpec, correlation_value, maximal_correlation
from macroent.linalg import CapacityError
from macroent.observables import AdditiveObservable
from macroent.oracles import (
    dense_additive,
    dense_double_commutator,
    direction_matrix,
    eigenbasis_double_sum,
    grid_search_observables,
    jacobi_eigensystem,
    jacobi_eigenvalues,
    lift_site_matrix,
    positive_sum,
    random_projector_check,
    run_standard_suite,
    sphere_grid,
    two_branch_analytic,
)
from macroent.states import PureState, make_cat


def _random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (raw + raw.conj().T) / 2.0


@pytest.mark.parametrize("dim", [1, 2, 5, 8, 12])
def test_jacobi_matches_lapack(dim):
    herm = _random_hermitian(dim, 100 + dim)
    vals, vecs = jacobi_eigensystem(herm)
    assert np.max(np.abs(vals - np.linalg.eigvalsh(herm))) <= 1e-9
    recon = vecs @ np.diag(vals) @ vecs.conj().T
    assert np.max(np.abs(recon - herm)) <= 1e-9
    gram = vecs.conj().T @ vecs
    assert np.max(np.abs(gram - np.eye(dim))) <= 1e-10


def test_jacobi_diagonal_is_exact():
    vals = jacobi_eigenvalues(np.diag([4.0, -1.0, 2.5]))
    assert list(vals) == [-1.0, 2.5, 4.0]


def test_jacobi_rejects_rectangular():
    with pytest.raises(ValueError):
        jacobi_eigensystem(np.zeros((2, 3)))


def test_direction_matrix_unit_spectrum():
    d = np.array([1.0, 2.0, -2.0]) / 3.0
    m = direction_matrix(d)
    assert np.max(np.abs(m - m.conj().T)) == 0.0
    assert np.allclose(np.sort(np.linalg.eigvalsh(m)), [-1.0, 1.0])
    assert np.allclose(m @ m, np.eye(2))


def test_lift_site_matrix_bit_convention():
    # site 0 is the least significant bit, so its z term flips sign with bit 0
    sz = direction_matrix((0.0, 0.0, 1.0))
    lifted = lift_site_matrix(sz, 0, 2)
    assert np.allclose(np.diag(lifted).real, [-1.0, 1.0, -1.0, 1.0])
    lifted1 = lift_site_matrix(sz, 1, 2)
    assert np.allclose(np.diag(lifted1).real, [-1.0, -1.0, 1.0, 1.0])


def test_dense_additive_matches_production_operator():
    rng = np.random.default_rng(5)
    obs = AdditiveObservable.random_directions(3, rng)
    assert np.max(np.abs(dense_additive(obs.coefficients) - obs.to_dense())) <= 1e-12


def test_double_commutator_is_traceless():
    herm = _random_hermitian(8, 9)
    rho = np.eye(8, dtype=complex) / 8.0
    k = dense_double_commutator(herm, rho)
    assert abs(np.trace(k)) <= 1e-12
    assert np.max(np.abs(k - k.conj().T)) <= 1e-12


def test_positive_sum_known_spectrum():
    assert positive_sum(np.diag([3.0, -1.0, 0.5, -7.0])) == pytest.approx(3.5)
    assert positive_sum(np.zeros((4, 4))) == 0.0


def test_projector_check_reports_and_caps():
    report = random_projector_check(np.diag([3.0, -1.0, -2.0]), trials=50, seed=4)
    assert report.passed
    assert report.trials == 50
    assert report.max_deviation <= report.tolerance
    with pytest.raises(CapacityError):
        random_projector_check(np.zeros((512, 512)), trials=1, seed=0)


def test_projector_check_flags_violation():
    # shifting the claimed bound is impossible from outside, so check the
    # pass flag flips when the tolerance is absurdly tight on a noisy case
    k = _random_hermitian(8, 2) * 10.0
    strict = random_projector_check(k, trials=400, seed=1, tolerance=-1.0)
    assert not strict.passed


def test_eigenbasis_sum_matches_production():
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(10):
        raw = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = PureState(3, raw / np.linalg.norm(raw))
        obs = AdditiveObservable.random_directions(3, rng)
        vec = rng.normal(size=8) + 1j * rng.normal(size=8)
        eta = ProjectorSpec.rank_one(vec)
        direct = eigenbasis_double_sum(obs.coefficients, eta.basis, psi.density_matrix())
        worst = max(worst, abs(direct - correlation_value(obs, eta, psi)))
    assert worst <= 1e-8


def test_eigenbasis_sum_site_cap():
    with pytest.raises(CapacityError):
        eigenbasis_double_sum(np.zeros((4, 3)), np.eye(16), np.eye(16) / 16.0)


def test_two_branch_analytic_cat_values():
    var, lam = two_branch_analytic(np.sqrt(0.5), np.sqrt(0.5), -6.0, 6.0)
    assert var == pytest.approx(36.0, rel=1e-12)
    assert lam == pytest.approx(72.0, rel=1e-12)
    with pytest.raises(ValueError):
        two_branch_analytic(1.0, 1.0, -1.0, 1.0)


def test_two_branch_vs_dense_top_eigenvalue():
    for n in (4, 7, 10):
        cat = make_cat(n)
        a = dense_additive(AdditiveObservable.total_z(n).coefficients)
        k = dense_double_commutator(a, cat.density_matrix())
        top = float(np.linalg.eigvalsh((k + k.conj().T) / 2.0)[-1])
        _, lam = two_branch_analytic(np.sqrt(0.5), np.sqrt(0.5), -float(n), float(n))
        assert top == pytest.approx(lam, rel=1e-9)


def test_sphere_grid_properties():
    grid = sphere_grid(5)
    assert grid.shape == (2 + 3 * 5, 3)
    assert np.allclose(np.linalg.norm(grid, axis=1), 1.0)
    poles = np.sum(np.abs(grid[:, 2]) > 1.0 - 1e-12)
    assert poles == 2
    with pytest.raises(CapacityError):
        sphere_grid(10)
    with pytest.raises(ValueError):
        sphere_grid(1)


def test_grid_search_finds_cat_optimum():
    cat = make_cat(2)
    best = grid_search_observables(cat.density_matrix(), 2, 5)
    assert best == pytest.approx(8.0, rel=1e-9)  # poles are on the grid
    assert best <= maximal_correlation(AdditiveObservable.total_z(2), cat).value + 1e-9


def test_grid_search_site_cap():
    with pytest.raises(CapacityError):
        grid_search_observables(np.eye(16) / 16.0, 4, 3)


def test_standard_suite_all_green():
    reports = run_standard_suite()
    assert len(reports) == 9
    names = [r.name for r in reports]
    assert len(set(names)) == len(names)
    for r in reports:
        assert r.passed, f"{r.name}: deviation {r.max_deviation} > {r.tolerance}"
        assert r.max_deviation <= r.tolerance
