"""Additive observables: one traceless Hermitian term per site, summed.

Every operator here is specified by an (n_sites, 3) real array of Pauli
coefficients.  Row s with entries (x, y, z) stands for the site-s term
x*sigma_x + y*sigma_y + z*sigma_z, and the full observable is the sum of
those terms.  Rows are constrained to the closed unit ball so each term
has operator norm at most 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import require_dense_capacity
from .states import MixedState, PureState, State

# Pauli matrices in the (down, up) basis ordering used by the state module:
# sigma_z is diag(-1, +1) so spin up carries eigenvalue +1.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

NORM_BUDGET_TOL = 1e-12


def local_matrix(c) -> np.ndarray:
    """2x2 Hermitian matrix for one coefficient triple (x, y, z)."""
    x, y, z = (float(v) for v in c)
    return np.array([[-z, x + 1j * y], [x - 1j * y, z]], dtype=complex)


def _apply_site(view: np.ndarray, n_sites: int, site: int, matrix: np.ndarray) -> np.ndarray:
    """Act with a 2x2 matrix on one site of a (2,)*n + (k,) tensor."""
    # Site s lives on tensor axis n-1-s (C-order reshape puts bit n-1 first).
    axis = n_sites - 1 - site
    moved = np.moveaxis(view, axis, 0)
    acted = np.tensordot(matrix, moved, axes=([1], [0]))
    return np.moveaxis(acted, 0, axis)


@dataclass(frozen=True)
class AdditiveObservable:
    """Sum of single-site Hermitian terms with per-site norm budget 1."""

    n_sites: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeff = np.array(self.coefficients, dtype=float)
        if coeff.shape != (self.n_sites, 3):
            raise ValueError(
                f"coefficient array must have shape ({self.n_sites}, 3), got {coeff.shape}"
            )
        norms = np.linalg.norm(coeff, axis=1)
        worst = float(norms.max(initial=0.0))
        if worst > 1.0 + NORM_BUDGET_TOL:
            raise ValueError(f"site coefficient norm {worst!r} exceeds the unit budget")
        object.__setattr__(self, "coefficients", coeff)

    @classmethod
    def total_z(cls, n_sites: int) -> "AdditiveObservable":
        """Total z magnetization: every site weighted (0, 0, 1)."""
        coeff = np.zeros((n_sites, 3))
        coeff[:, 2] = 1.0
        return cls(n_sites, coeff)

    @classmethod
    def staggered_z(cls, n_sites: int) -> "AdditiveObservable":
        """Alternating-sign z weights, (-1)**s on site s."""
        coeff = np.zeros((n_sites, 3))
        coeff[:, 2] = [(-1.0) ** s for s in range(n_sites)]
        return cls(n_sites, coeff)

    @classmethod
    def total_x(cls, n_sites: int) -> "AdditiveObservable":
        coeff = np.zeros((n_sites, 3))
        coeff[:, 0] = 1.0
        return cls(n_sites, coeff)

    @classmethod
    def random_directions(cls, n_sites: int, rng: np.random.Generator) -> "AdditiveObservable":
        """Independent uniform unit 3-vector per site."""
        raw = rng.normal(size=(n_sites, 3))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return cls(n_sites, raw / norms)

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def norm_bound(self) -> float:
        """Upper bound on the operator norm: sum of site coefficient norms."""
        return float(np.linalg.norm(self.coefficients, axis=1).sum())

    def site_matrix(self, site: int) -> np.ndarray:
        return local_matrix(self.coefficients[site])

    def apply_columns(self, columns: np.ndarray) -> np.ndarray:
        """Act on a (dim,) vector or (dim, k) column stack without building
        the dense matrix."""
        cols = np.asarray(columns, dtype=complex)
        single = cols.ndim == 1
        if single:
            cols = cols[:, None]
        if cols.shape[0] != self.dim:
            raise ValueError(
                f"dimension mismatch: operator on {self.dim}, vectors of length {cols.shape[0]}"
            )
        view = cols.reshape((2,) * self.n_sites + (cols.shape[1],))
        out = np.zeros_like(view)
        for s in range(self.n_sites):
            if not self.coefficients[s].any():
                continue
            out += _apply_site(view, self.n_sites, s, self.site_matrix(s))
        result = out.reshape(cols.shape)
        return result[:, 0] if single else result

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.apply_columns(vector)

    def to_dense(self) -> np.ndarray:
        require_dense_capacity(self.dim, "additive observable")
        return self.apply_columns(np.eye(self.dim, dtype=complex))

    def to_text(self) -> str:
        """One line per site, three decimal floats."""
        lines = [
            " ".join(f"{v:.17g}" for v in row) for row in self.coefficients
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AdditiveObservable":
        rows = []
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {ln}: expected three coefficients, got {len(parts)}")
            rows.append([float(p) for p in parts])
        if not rows:
            raise ValueError("no coefficient lines found")
        return cls(len(rows), np.array(rows))


def expectation(obs: AdditiveObservable, state: State) -> float:
    """Real expectation value of the observable on a pure or mixed state."""
    if isinstance(state, PureState):
        _check_sites(obs, state)
        return float(np.real(np.vdot(state.vector, obs.apply(state.vector))))
    _check_sites(obs, state)
    if state.uniform:
        # Every site term is traceless, so the flat state averages to zero.
        return 0.0
    if state.is_ensemble:
        cols = state.component_matrix()
        acted = obs.apply_columns(cols)
        per = np.real(np.einsum("ij,ij->j", cols.conj(), acted))
        return float(np.dot(state.weights, per))
    return float(np.real(np.trace(obs.apply_columns(state.matrix))))


def variance(obs: AdditiveObservable, state: PureState) -> float:
    """Variance <A^2> - <A>^2 on a pure state."""
    if not isinstance(state, PureState):
        raise TypeError("variance is defined here for pure states only")
    _check_sites(obs, state)
    acted = obs.apply(state.vector)
    mean = float(np.real(np.vdot(state.vector, acted)))
    second = float(np.real(np.vdot(acted, acted)))
    return second - mean * mean


def covariance_matrix(state: PureState) -> np.ndarray:
    """Real symmetric 3n x 3n matrix V with c.T @ V @ c = Var(A(c)).

    Index (site, pauli) flattens to site*3 + pauli.  V is the Gram matrix of
    the vectors (1 - |psi><psi|) sigma_alpha(site) |psi>, so it is positive
    semidefinite up to round-off.
    """
    if not isinstance(state, PureState):
        raise TypeError("covariance_matrix needs a pure state")
    n = state.n_sites
    view = state.vector.reshape((2,) * n + (1,))
    stack = np.empty((state.dim, 3 * n), dtype=complex)
    for s in range(n):
        for a, pauli in enumerate(PAULIS):
            acted = _apply_site(view, n, s, pauli)
            stack[:, s * 3 + a] = acted.reshape(-1)
    means = np.real(state.vector.conj() @ stack)
    gram = stack.conj().T @ stack
    return np.real(gram) - np.outer(means, means)


def additive_indistinguishability(
    s1: State,
    s2: State,
    trials: int,
    seed: int,
    extra: tuple[AdditiveObservable, ...] = (),
) -> float:
    """Largest expectation gap over sampled (plus given) additive observables."""
    n = s1.n_sites
    if s2.n_sites != n:
        raise ValueError("states must share the site count")
    rng = np.random.default_rng(seed)
    worst = 0.0
    probes = list(extra)
    for _ in range(trials):
        probes.append(AdditiveObservable.random_directions(n, rng))
    for obs in probes:
        gap = abs(expectation(obs, s1) - expectation(obs, s2))
        worst = max(worst, gap)
    return worst


def _check_sites(obs: AdditiveObservable, state: State) -> None:
    if obs.n_sites != state.n_sites:
        raise ValueError(
            f"observable on {obs.n_sites} sites, state on {state.n_sites}"
        )
