"""Independent brute-force validators for the derived identities.

Everything here recomputes from first principles: a from-scratch Jacobi
eigensolver, explicit Kronecker assembly of additive operators, random
projector sampling against the positive-eigenvalue bound, the explicit
eigenbasis double sum, closed forms for two-branch states, and an
exhaustive direction-grid search at tiny sizes.  None of it reuses the
production operator plumbing, so agreement is meaningful evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .linalg import CapacityError

_ID2 = np.eye(2, dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
_SZ = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)

PROJECTOR_CHECK_DIM_CAP = 256
SMALL_SITE_CAP = 3
GRID_PER_AXIS_CAP = 9


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_deviation: float
    trials: int
    tolerance: float
    passed: bool


def _report(name: str, deviation: float, trials: int, tolerance: float) -> OracleReport:
    deviation = float(deviation)
    return OracleReport(name, deviation, trials, tolerance, deviation <= tolerance)


def jacobi_eigensystem(matrix: np.ndarray, sweep_tol: float = 1e-13,
                       max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Each rotation phases the pivot entry real and then applies the classic
    two-by-two angle, which annihilates that entry.  Returns ascending
    eigenvalues and the accumulated eigenvector columns.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    vecs = np.eye(n, dtype=complex)
    scale = float(np.max(np.abs(a))) if n else 0.0
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
        if off <= sweep_tol * max(scale, 1.0):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                r = abs(a[p, q])
                if r <= sweep_tol * max(scale, 1.0) * 1e-2:
                    continue
                alpha = np.angle(a[p, q])
                theta = 0.5 * np.arctan2(2.0 * r, (a[p, p] - a[q, q]).real)
                c = np.cos(theta)
                s = np.sin(theta)
                phase = np.exp(1j * alpha)
                w00, w01 = phase * c, -phase * s
                w10, w11 = s, c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = w00 * col_p + w10 * col_q
                a[:, q] = w01 * col_p + w11 * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = np.conj(w00) * row_p + np.conj(w10) * row_q
                a[q, :] = np.conj(w01) * row_p + np.conj(w11) * row_q
                vcol_p = vecs[:, p].copy()
                vcol_q = vecs[:, q].copy()
                vecs[:, p] = w00 * vcol_p + w10 * vcol_q
                vecs[:, q] = w01 * vcol_p + w11 * vcol_q
    values = np.real(np.diag(a))
    order = np.argsort(values)
    return values[order], vecs[:, order]


def jacobi_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    return jacobi_eigensystem(matrix)[0]


def direction_matrix(direction) -> np.ndarray:
    x, y, z = (float(v) for v in direction)
    return x * _SX + y * _SY + z * _SZ


def lift_site_matrix(matrix: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a one-site matrix into the full space by Kronecker products."""
    factors = [matrix if s == site else _ID2 for s in range(n_sites - 1, -1, -1)]
    return reduce(np.kron, factors)


def dense_additive(coefficients: np.ndarray) -> np.ndarray:
    """Explicit dense matrix of a sum of single-site terms."""
    coefficients = np.asarray(coefficients, dtype=float)
    n = coefficients.shape[0]
    total = np.zeros((2**n, 2**n), dtype=complex)
    for s in range(n):
        total += lift_site_matrix(direction_matrix(coefficients[s]), s, n)
    return total


def dense_double_commutator(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return a @ a @ rho - 2.0 * (a @ rho @ a) + rho @ a @ a


def positive_sum(matrix: np.ndarray) -> float:
    evals = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0)
    return float(evals[evals > 0.0].sum())


def random_projector_check(k: np.ndarray, trials: int, seed: int,
                           tolerance: float = 1e-9) -> OracleReport:
    """Sample random projectors and measure any excess over the bound.

    The claimed maximum of the trace against a projector is the sum of the
    positive eigenvalues; the report carries the worst sampled excess.
    """
    k = np.asarray(k, dtype=complex)
    dim = k.shape[0]
    if dim > PROJECTOR_CHECK_DIM_CAP:
        raise CapacityError(
            f"projector sampling supports dimension up to {PROJECTOR_CHECK_DIM_CAP}, got {dim}"
        )
    bound = positive_sum(k)
    rng = np.random.default_rng(seed)
    worst = 0.0
    max_rank = max(dim // 2, 1)
    for _ in range(trials):
        rank = int(rng.integers(1, max_rank + 1))
        raw = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        q, _ = np.linalg.qr(raw)
        value = float(np.real(np.einsum("ij,ij->", q.conj(), k @ q)))
        worst = max(worst, value - bound)
    return _report("random-projector-bound", worst, trials, tolerance)


def eigenbasis_double_sum(coefficients: np.ndarray, eta_basis: np.ndarray,
                          rho: np.ndarray) -> float:
    """Correlation evaluated as the explicit eigenbasis double sum.

    Diagonalizes the dense additive operator with the Jacobi solver, moves
    the density operator and the projector basis into that eigenbasis, and
    sums squared level gaps against their matrix elements.  Degenerate
    levels contribute nothing either way, so arbitrary resolution is fine.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    n = coefficients.shape[0]
    if n > SMALL_SITE_CAP:
        raise CapacityError(
            f"eigenbasis double sum supports up to {SMALL_SITE_CAP} sites, got {n}"
        )
    a = dense_additive(coefficients)
    levels, basis = jacobi_eigensystem(a)
    rho_e = basis.conj().T @ np.asarray(rho, dtype=complex) @ basis
    u = basis.conj().T @ np.asarray(eta_basis, dtype=complex)
    eta_e = u @ u.conj().T
    gaps = levels[:, None] - levels[None, :]
    total = np.sum(gaps * gaps * rho_e * eta_e.T)
    return float(np.real(total))


def two_branch_analytic(amp1: float, amp2: float, a1: float, a2: float) -> tuple[float, float]:
    """Closed-form variance and top eigenvalue for a two-branch state.

    The state is amp1 times one eigenconfiguration plus amp2 times another,
    with observable values a1 and a2 on the branches.
    """
    w1 = float(amp1) ** 2
    w2 = float(amp2) ** 2
    if abs(w1 + w2 - 1.0) > 1e-12:
        raise ValueError(f"branch weights sum to {w1 + w2!r}, not 1")
    mean = a1 * w1 + a2 * w2
    second = a1 * a1 * w1 + a2 * a2 * w2
    var = second - mean * mean
    lam = (a1 - a2) ** 2 * abs(amp1 * amp2)
    return var, lam


def sphere_grid(points_per_axis: int) -> np.ndarray:
    """Unit directions on a polar-angle grid, poles included once."""
    if points_per_axis > GRID_PER_AXIS_CAP:
        raise CapacityError(
            f"grid resolution capped at {GRID_PER_AXIS_CAP} per axis, got {points_per_axis}"
        )
    if points_per_axis < 2:
        raise ValueError("need at least 2 grid points per axis")
    dirs = [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0)]
    thetas = np.linspace(0.0, np.pi, points_per_axis)[1:-1]
    phis = np.linspace(0.0, 2.0 * np.pi, points_per_axis, endpoint=False)
    for theta in thetas:
        for phi in phis:
            dirs.append(
                (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
            )
    return np.array(dirs)


def grid_search_observables(rho: np.ndarray, n_sites: int,
                            points_per_axis: int) -> float:
    """Exhaustive scan over per-site unit directions, best positive sum.

    Exponential in the site count; the cap keeps it at three sites.
    """
    if n_sites > SMALL_SITE_CAP:
        raise CapacityError(
            f"grid search supports up to {SMALL_SITE_CAP} sites, got {n_sites}"
        )
    rho = np.asarray(rho, dtype=complex)
    dirs = sphere_grid(points_per_axis)
    lifted = [
        [lift_site_matrix(direction_matrix(d), s, n_sites) for d in dirs]
        for s in range(n_sites)
    ]
    best = -np.inf
    for combo in product(range(len(dirs)), repeat=n_sites):
        a = lifted[0][combo[0]].copy()
        for s in range(1, n_sites):
            a += lifted[s][combo[s]]
        best = max(best, positive_sum(dense_double_commutator(a, rho)))
    return float(best)


def run_standard_suite() -> list[OracleReport]:
    """The fixed cross-validation battery behind the verify command."""
    from .correlation import (
        ProjectorSpec,
        correlation_value,
        double_commutator,
        maximal_correlation,
    )
    from .linalg import hermitian_eig
    from .observables import AdditiveObservable
    from .optimize import OptimizerConfig, maximize_correlation
    from .states import MixedState, PureState, make_cat, make_psi1

    reports = []

    rng = np.random.default_rng(7)
    raw = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    herm = (raw + raw.conj().T) / 2.0
    dev = float(np.max(np.abs(hermitian_eig(herm).eigenvalues - jacobi_eigenvalues(herm))))
    reports.append(_report("eigensolver-vs-jacobi", dev, 1, 1e-9))

    reports.append(_named(random_projector_check(np.diag([3.0, -1.0, -2.0]), 200, 11, 1e-12),
                          "projector-bound-diagonal"))

    cat3 = make_cat(3)
    k_cat = double_commutator(AdditiveObservable.total_z(3), cat3).to_dense()
    reports.append(_named(random_projector_check(k_cat, 500, 23, 1e-9),
                          "projector-bound-cat3"))
    reports.append(_named(random_projector_check(np.zeros((8, 8)), 100, 5, 1e-12),
                          "projector-bound-zero"))

    cat2 = make_cat(2)
    mz2 = AdditiveObservable.total_z(2)
    eta_cat = cat2.vector[:, None]
    dev = abs(eigenbasis_double_sum(mz2.coefficients, eta_cat, cat2.density_matrix()) - 8.0)
    reports.append(_report("eigenbasis-sum-cat2", dev, 1, 1e-8))

    rng = np.random.default_rng(23)
    raw = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi = PureState(3, raw / np.linalg.norm(raw))
    obs = AdditiveObservable.random_directions(3, rng)
    vec = rng.normal(size=8) + 1j * rng.normal(size=8)
    eta = ProjectorSpec.rank_one(vec)
    dev = abs(
        eigenbasis_double_sum(obs.coefficients, eta.basis, psi.density_matrix())
        - correlation_value(obs, eta, psi)
    )
    reports.append(_report("eigenbasis-sum-random3", dev, 1, 1e-8))

    dev = abs(eigenbasis_double_sum(obs.coefficients, np.eye(8, dtype=complex),
                                    psi.density_matrix()))
    reports.append(_report("eigenbasis-sum-fullspace", dev, 1, 1e-8))

    worst = 0.0
    for n in (3, 6, 10):
        for state in (make_cat(n), make_psi1(n)):
            a = dense_additive(AdditiveObservable.total_z(n).coefficients)
            k = dense_double_commutator(a, state.density_matrix())
            top = float(np.linalg.eigvalsh((k + k.conj().T) / 2.0)[-1])
            amp1 = float(abs(state.vector[0]))
            amp2 = float(abs(state.vector[-1]))
            _, lam = two_branch_analytic(amp1, amp2, -float(n), float(n))
            worst = max(worst, abs(top - lam) / max(abs(lam), 1.0))
    reports.append(_report("two-branch-vs-dense", worst, 6, 1e-9))

    cfg = OptimizerConfig(restarts=8, max_iters=200, seed=1)
    worst = 0.0
    cat_grid = grid_search_observables(cat2.density_matrix(), 2, 5)
    cat_opt = maximize_correlation(cat2, cfg).value
    worst = max(worst, cat_grid - cat_opt)
    rng = np.random.default_rng(3)
    raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    dens = raw @ raw.conj().T
    dens /= np.trace(dens).real
    mixed = MixedState.dense(dens)
    mixed_grid = grid_search_observables(dens, 2, 5)
    mixed_opt = maximize_correlation(mixed, cfg).value
    worst = max(worst, mixed_grid - mixed_opt)
    reports.append(_report("grid-vs-ascent", worst, 2, 1e-6))

    return reports


def _named(report: OracleReport, name: str) -> OracleReport:
    return OracleReport(name, report.max_deviation, report.trials,
                        report.tolerance, report.passed)
