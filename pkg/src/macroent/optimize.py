"""Search over additive observables by projected gradient ascent.

Two objectives share one loop: the projector-maximized correlation for
arbitrary states, and the plain variance for pure states.  Both are
maximized over per-site coefficient triples constrained to the unit ball,
with a deterministic multi-start schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .correlation import maximal_correlation
from .observables import PAULIS, AdditiveObservable, covariance_matrix, variance
from .states import PureState, State

STEP_FLOOR = 1e-12
STEP_GROW = 1.25
STEP_CAP = 1.0


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iters: int = 500
    step_init: float = 0.25
    step_shrink: float = 0.5
    grad_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.step_init <= 0:
            raise ValueError(f"step_init must be positive, got {self.step_init}")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError(f"step_shrink must lie in (0, 1), got {self.step_shrink}")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")


@dataclass(frozen=True)
class Optimum:
    observable: AdditiveObservable
    value: float
    iterations: int
    restart_index: int
    converged: bool


def project_feasible(coefficients: np.ndarray) -> np.ndarray:
    """Clip each site's coefficient triple back into the unit ball.

    Rows already inside the ball pass through with their exact values, so
    the map is idempotent.
    """
    coeff = np.array(coefficients, dtype=float)
    norms = np.linalg.norm(coeff, axis=1)
    over = norms > 1.0
    if over.any():
        coeff[over] /= norms[over, None]
    return coeff


def _state_apply(state: State, columns: np.ndarray) -> np.ndarray:
    if isinstance(state, PureState):
        inner = state.vector.conj() @ columns
        return state.vector[:, None] * inner[None, :]
    if state.uniform:
        return columns / state.dim
    if state.is_ensemble:
        comps = state.component_matrix()
        inner = comps.conj().T @ columns
        return comps @ (state.weights[:, None] * inner)
    return state.matrix @ columns


def correlation_gradient(
    state: State, obs: AdditiveObservable, positive_basis: np.ndarray
) -> np.ndarray:
    """Gradient of the positive-eigenvalue sum with respect to coefficients.

    First-order perturbation of the objective keeps the positive-eigenspace
    projector fixed, which leaves six operator-product terms; every term is
    a low-rank outer product, so the per-site partial traces cost a few
    matrix products against the basis columns.  At eigenvalue sign
    crossings the objective is not smooth and this is one subgradient.
    """
    n = obs.n_sites
    grad = np.zeros((n, 3))
    v = positive_basis
    if v.shape[1] == 0:
        return grad
    rho_v = _state_apply(state, v)
    a_v = obs.apply_columns(v)
    a_rho_v = obs.apply_columns(rho_v)
    rho_a_v = _state_apply(state, a_v)
    terms = (
        (a_rho_v, v, 1.0),
        (rho_v, a_v, 1.0),
        (rho_a_v, v, -2.0),
        (v, rho_a_v, -2.0),
        (a_v, rho_v, 1.0),
        (v, a_rho_v, 1.0),
    )
    shape = (2,) * n + (v.shape[1],)
    for left, right, coef in terms:
        lview = left.reshape(shape)
        rview = right.reshape(shape)
        for s in range(n):
            axis = n - 1 - s
            l2 = np.moveaxis(lview, axis, 0).reshape(2, -1)
            r2 = np.moveaxis(rview, axis, 0).reshape(2, -1)
            partial = l2 @ r2.conj().T
            for a_idx, pauli in enumerate(PAULIS):
                grad[s, a_idx] += coef * float(
                    np.real(np.einsum("ij,ji->", pauli, partial))
                )
    return grad


def _ascend(
    start: np.ndarray,
    evaluate: Callable[[np.ndarray], tuple[float, object]],
    gradient: Callable[[np.ndarray, object], np.ndarray],
    cfg: OptimizerConfig,
) -> tuple[np.ndarray, float, int, bool]:
    coeff = project_feasible(start)
    value, aux = evaluate(coeff)
    step = cfg.step_init
    iterations = 0
    converged = False
    while iterations < cfg.max_iters:
        iterations += 1
        grad = gradient(coeff, aux)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.grad_tol:
            converged = True
            break
        trial = project_feasible(coeff + (step / gnorm) * grad)
        trial_value, trial_aux = evaluate(trial)
        if trial_value > value:
            coeff, value, aux = trial, trial_value, trial_aux
            step = min(step * STEP_GROW, STEP_CAP)
        else:
            step *= cfg.step_shrink
            if step < STEP_FLOOR:
                # No improving step at any resolution: settled.
                converged = True
                break
    return coeff, value, iterations, converged


def _covariance_start(state: PureState) -> np.ndarray:
    cov = covariance_matrix(state)
    vals, vecs = np.linalg.eigh(cov)
    top = vecs[:, -1].reshape(state.n_sites, 3)
    coeff = np.zeros_like(top)
    for s in range(state.n_sites):
        nrm = float(np.linalg.norm(top[s]))
        coeff[s] = top[s] / nrm if nrm > 1e-12 else (0.0, 0.0, 1.0)
    return coeff


def _start_schedule(state: State, cfg: OptimizerConfig, cov_first: bool) -> list[np.ndarray]:
    n = state.n_sites
    fixed: list[np.ndarray] = []
    if cov_first and isinstance(state, PureState):
        fixed.append(_covariance_start(state))
    fixed.append(AdditiveObservable.total_z(n).coefficients)
    fixed.append(AdditiveObservable.staggered_z(n).coefficients)
    if not cov_first and isinstance(state, PureState):
        fixed.append(_covariance_start(state))
    starts = fixed[: cfg.restarts]
    for index in range(len(starts), cfg.restarts):
        rng = np.random.default_rng([cfg.seed, index])
        starts.append(project_feasible(rng.normal(size=(n, 3))))
    return starts


def _run_restarts(
    state: State,
    cfg: OptimizerConfig,
    evaluate: Callable[[np.ndarray], tuple[float, object]],
    gradient: Callable[[np.ndarray, object], np.ndarray],
    cov_first: bool,
) -> tuple[np.ndarray, float, int, int, bool]:
    best = None
    for index, start in enumerate(_start_schedule(state, cfg, cov_first)):
        coeff, value, iterations, converged = _ascend(start, evaluate, gradient, cfg)
        # Strict comparison keeps the lowest restart index on ties.
        if best is None or value > best[1]:
            best = (coeff, value, index, iterations, converged)
    return best


def maximize_correlation(state: State, cfg: OptimizerConfig | None = None) -> Optimum:
    """Best projector-maximized correlation over feasible observables.

    Multi-start projected ascent on the sum of positive eigenvalues; the
    reported value is re-evaluated exactly for the winning coefficients, so
    it is always a true lower bound on the global maximum.
    """
    cfg = cfg or OptimizerConfig()
    n = state.n_sites

    def evaluate(coeff: np.ndarray) -> tuple[float, np.ndarray]:
        result = maximal_correlation(AdditiveObservable(n, coeff), state)
        return result.value, result.optimal_eta.basis

    def gradient(coeff: np.ndarray, basis: np.ndarray) -> np.ndarray:
        return correlation_gradient(state, AdditiveObservable(n, coeff), basis)

    coeff, _, index, iterations, converged = _run_restarts(
        state, cfg, evaluate, gradient, cov_first=False
    )
    observable = AdditiveObservable(n, coeff)
    final = maximal_correlation(observable, state).value
    return Optimum(
        observable=observable,
        value=final,
        iterations=iterations,
        restart_index=index,
        converged=converged,
    )


def maximize_variance(state: PureState, cfg: OptimizerConfig | None = None) -> Optimum:
    """Best variance over feasible observables on a pure state.

    The quadratic form through the site-pair covariance matrix is the
    objective; its top eigenvector, rescaled site by site onto the unit
    sphere, seeds the first restart.
    """
    if not isinstance(state, PureState):
        raise TypeError("maximize_variance needs a pure state")
    cfg = cfg or OptimizerConfig()
    n = state.n_sites
    cov = covariance_matrix(state)

    def evaluate(coeff: np.ndarray) -> tuple[float, object]:
        flat = coeff.reshape(-1)
        return float(flat @ cov @ flat), None

    def gradient(coeff: np.ndarray, aux: object) -> np.ndarray:
        return 2.0 * (cov @ coeff.reshape(-1)).reshape(n, 3)

    coeff, _, index, iterations, converged = _run_restarts(
        state, cfg, evaluate, gradient, cov_first=True
    )
    observable = AdditiveObservable(n, coeff)
    return Optimum(
        observable=observable,
        value=variance(observable, state),
        iterations=iterations,
        restart_index=index,
        converged=converged,
    )
