"""Double-commutator correlations and their exact projector optimization.

The central object is the Hermitian operator obtained by commuting an
additive observable twice with the density operator.  Its trace against a
projector gives the correlation value, and the maximum over all projectors
is the sum of its positive eigenvalues, attained by the projector onto the
positive eigenspace.  That identity is validated independently by the
random-projector oracle.

Also here: the pure-state specialization and its variance-product bound,
sufficient-condition checks for mixtures, Mermin and collective-CHSH
baselines, an exact expansion into products of single-site Hermitian
operators, and the single-site measurement that converts a lopsided
two-branch superposition into an equal-weight one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .linalg import (
    CapacityError,
    HermitianOperator,
    orthonormalize,
    require_dense_capacity,
    require_factored_capacity,
    zero_cutoff,
)
from .observables import AdditiveObservable, variance
from .states import MixedState, PureState, State, TwoBranchState

PROJECTOR_ORTHO_TOL = 1e-10
OFFDIAG_TOL = 1e-10

# Exact expansion into local operator products doubles its term count per
# site twice over; past this many sites it is no longer desk-scale.
LOCAL_EXPANSION_SITE_CAP = 4


@dataclass(frozen=True)
class ProjectorSpec:
    """Projector given by orthonormal basis columns of its range."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim != 2:
            raise ValueError("projector basis must be a 2-d array of columns")
        object.__setattr__(self, "basis", basis)
        if basis.shape[1] > 0:
            gram = basis.conj().T @ basis
            dev = float(np.max(np.abs(gram - np.eye(basis.shape[1]))))
            if dev > PROJECTOR_ORTHO_TOL:
                raise ValueError(
                    f"projector basis is not orthonormal: deviation {dev:.3e}"
                )

    @classmethod
    def rank_one(cls, vector: np.ndarray) -> "ProjectorSpec":
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        nrm = float(np.linalg.norm(vec))
        if nrm == 0.0:
            raise ValueError("cannot project onto the zero vector")
        return cls(vec[:, None] / nrm)

    @classmethod
    def full_space(cls, dim: int) -> "ProjectorSpec":
        require_dense_capacity(dim, "full-space projector")
        return cls(np.eye(dim, dtype=complex))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class CorrelationResult:
    """Projector-maximized correlation with the spectrum behind it."""

    value: float
    optimal_eta: ProjectorSpec
    k_spectrum: np.ndarray
    zero_threshold: float


@dataclass(frozen=True)
class MerminReport:
    raw: float
    lhv_bound: float
    ratio: float
    # The classical bound convention is stated for an odd site count; the
    # same expression is applied to even counts, so flag those.
    even_sites: bool


@dataclass(frozen=True)
class MixtureConditionReport:
    """Separate verdicts for each sufficient-condition ingredient."""

    n_sites: int
    n_components: int
    gram_deviation: float
    orthonormal_ok: bool
    offdiag_deviation: float
    offdiag_ok: bool
    component_variances: np.ndarray
    threshold_exponent: float
    variance_threshold: float
    big_component_flags: np.ndarray
    surviving_weight: float


@dataclass(frozen=True)
class ConversionResult:
    site: int
    success_probability: float
    alternative_probability: float
    measurement_amplitudes: np.ndarray
    post_state: TwoBranchState
    branch_weight_gap: float


def _state_apply(state: State, columns: np.ndarray) -> np.ndarray:
    """Density operator acting on a stack of columns, form-aware."""
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


def _check_match(obs: AdditiveObservable, state: State) -> None:
    if obs.n_sites != state.n_sites:
        raise ValueError(
            f"observable on {obs.n_sites} sites, state on {state.n_sites}"
        )


def double_commutator(obs: AdditiveObservable, state: State) -> HermitianOperator:
    """The observable commuted twice with the density operator.

    Pure states and ensembles give a factored operator over the orthonormal
    span of the components together with their first and second images under
    the observable; that span contains the whole range.  Dense inputs give a
    dense result computed column-wise, and the flat state gives the zero
    operator since everything commutes with it.
    """
    _check_match(obs, state)
    dim = obs.dim
    if isinstance(state, MixedState) and state.uniform:
        return HermitianOperator.factored(
            np.zeros((dim, 0), dtype=complex), np.zeros((0, 0), dtype=complex), dim=dim
        )
    if isinstance(state, MixedState) and state.is_dense:
        rho = state.matrix
        p = obs.apply_columns(rho)
        twice = obs.apply_columns(p)
        k = twice - 2.0 * obs.apply_columns(p.conj().T) + twice.conj().T
        return HermitianOperator.dense((k + k.conj().T) / 2.0)

    if isinstance(state, PureState):
        comps = state.vector[:, None]
        weights = np.ones(1)
    else:
        comps = state.component_matrix()
        weights = state.weights
    once = obs.apply_columns(comps)
    twice = obs.apply_columns(once)
    stacked = np.hstack([comps, once, twice])
    require_factored_capacity(stacked.shape[1])
    scale = float(np.max(np.abs(np.linalg.norm(stacked, axis=0)), initial=1.0))
    q = orthonormalize(stacked.T, tol=1e-12 * scale)
    w = weights[:, None]
    kq = twice @ (w * (comps.conj().T @ q))
    kq -= 2.0 * (once @ (w * (once.conj().T @ q)))
    kq += comps @ (w * (twice.conj().T @ q))
    block = q.conj().T @ kq
    return HermitianOperator.factored(q, (block + block.conj().T) / 2.0, dim=dim)


def correlation_value(obs: AdditiveObservable, eta: ProjectorSpec, state: State) -> float:
    """Trace of the double commutator against the projector.

    Evaluated by applying operators to the projector's basis columns, so no
    full-dimension matrix is formed.
    """
    _check_match(obs, state)
    if eta.dim != obs.dim:
        raise ValueError(f"projector dimension {eta.dim} does not match {obs.dim}")
    if eta.rank == 0:
        return 0.0
    phi = eta.basis
    a_phi = obs.apply_columns(phi)
    term = obs.apply_columns(obs.apply_columns(_state_apply(state, phi)))
    term -= 2.0 * obs.apply_columns(_state_apply(state, a_phi))
    term += _state_apply(state, obs.apply_columns(a_phi))
    return float(np.real(np.einsum("ij,ij->", phi.conj(), term)))


def maximal_correlation(obs: AdditiveObservable, state: State) -> CorrelationResult:
    """Maximize the correlation over all projectors, exactly.

    The optimum is the projector onto the positive eigenspace and the value
    is the positive part of the spectrum; eigenvalues inside the noise
    cutoff count as zero and are excluded from both.
    """
    k = double_commutator(obs, state)
    dec = k.eig()
    cutoff = zero_cutoff(dec.eigenvalues)
    nonzero = np.abs(dec.eigenvalues) > cutoff
    positive = dec.eigenvalues > cutoff
    value = float(dec.eigenvalues[positive].sum()) if positive.any() else 0.0
    eta = ProjectorSpec(dec.eigenvectors[:, positive])
    return CorrelationResult(
        value=value,
        optimal_eta=eta,
        k_spectrum=dec.eigenvalues[nonzero],
        zero_threshold=cutoff,
    )


def pure_state_maximum(obs: AdditiveObservable, state: PureState) -> tuple[float, np.ndarray]:
    """Largest double-commutator eigenvalue for a pure state, with its vector.

    Works in the span of the state and its first two images under the
    observable, so the cost is a handful of operator applications.
    """
    if not isinstance(state, PureState):
        raise TypeError("pure_state_maximum needs a pure state")
    dec = double_commutator(obs, state).eig()
    if dec.eigenvalues.size == 0:
        return 0.0, state.vector
    return float(dec.eigenvalues[-1]), dec.eigenvectors[:, -1]


def variance_product_bound(obs: AdditiveObservable, state: PureState) -> tuple[float, float]:
    """Pure-state maximum next to twice the geometric-mean variance.

    The left side never exceeds the right; equality holds for two-branch
    superpositions.
    """
    value, vec = pure_state_maximum(obs, state)
    nrm = float(np.linalg.norm(vec))
    maximizer = PureState(state.n_sites, vec / nrm)
    var_max = max(variance(obs, maximizer), 0.0)
    var_state = max(variance(obs, state), 0.0)
    return value, 2.0 * float(np.sqrt(var_max * var_state))


def check_mixture_conditions(
    state: MixedState,
    obs: AdditiveObservable,
    threshold_exponent: float,
) -> MixtureConditionReport:
    """Check the sufficient-condition ingredients on an ensemble.

    Reports component orthonormality, vanishing off-diagonal matrix elements
    of the observable between components, a size classification of each
    component's variance against n_sites**threshold_exponent, and the total
    weight of the large-variance components.  Each ingredient is reported on
    its own rather than folded into one verdict.
    """
    if not isinstance(state, MixedState) or not state.is_ensemble:
        raise ValueError("sufficient-condition checks need the ensemble form")
    _check_match(obs, state)
    comps = state.component_matrix()
    r = comps.shape[1]
    gram = comps.conj().T @ comps
    gram_dev = float(np.max(np.abs(gram - np.eye(r))))
    acted = obs.apply_columns(comps)
    cross = comps.conj().T @ acted
    off = cross - np.diag(np.diag(cross))
    offdiag_dev = float(np.max(np.abs(off))) if r > 1 else 0.0
    means = np.real(np.diag(cross))
    seconds = np.real(np.einsum("ij,ij->j", acted.conj(), acted))
    variances = seconds - means**2
    threshold = float(state.n_sites) ** threshold_exponent
    big = variances >= threshold
    offdiag_tol = OFFDIAG_TOL * max(1.0, obs.norm_bound)
    return MixtureConditionReport(
        n_sites=state.n_sites,
        n_components=r,
        gram_deviation=gram_dev,
        orthonormal_ok=gram_dev <= PROJECTOR_ORTHO_TOL,
        offdiag_deviation=offdiag_dev,
        offdiag_ok=offdiag_dev <= offdiag_tol,
        component_variances=variances,
        threshold_exponent=threshold_exponent,
        variance_threshold=threshold,
        big_component_flags=big,
        surviving_weight=float(state.weights[big].sum()),
    )


def _extreme_coherence(state: State | TwoBranchState) -> complex:
    """Matrix element of the density operator between all-up and all-down."""
    n = state.n_sites
    top = (1 << n) - 1
    if isinstance(state, TwoBranchState):
        if {state.pattern_a, state.pattern_b} != {0, top}:
            return 0.0
        if state.pattern_a == top:
            return state.amplitude_a * np.conj(state.amplitude_b)
        return state.amplitude_b * np.conj(state.amplitude_a)
    if isinstance(state, PureState):
        return complex(state.vector[top] * np.conj(state.vector[0]))
    if state.uniform:
        return 0.0
    if state.is_ensemble:
        total = 0.0 + 0.0j
        for w, comp in zip(state.weights, state.components):
            total += w * comp.vector[top] * np.conj(comp.vector[0])
        return complex(total)
    return complex(state.matrix[top, 0])


def mermin_score(state: State | TwoBranchState) -> MerminReport:
    """Product-correlation score against the local classical bound.

    The raw score is the modulus of the expectation of the all-site product
    of raising operators times 2**n, which equals 2**n times the coherence
    between the all-up and all-down configurations.  Using the modulus folds
    away the global phase freedom of the measurement axes.
    """
    n = state.n_sites
    raw = float(2.0**n * abs(_extreme_coherence(state)))
    lhv = float(2.0 ** ((n - 1) / 2.0))
    return MerminReport(
        raw=raw,
        lhv_bound=lhv,
        ratio=raw / lhv,
        even_sites=(n % 2 == 0),
    )


@dataclass(frozen=True)
class ChshChoice:
    """Two measurement settings per half of the chain."""

    left: AdditiveObservable
    left_alt: AdditiveObservable
    right: AdditiveObservable
    right_alt: AdditiveObservable


def canonical_chsh_choice(n_sites: int) -> ChshChoice:
    """The x/z settings on the left half against their diagonal mixes."""
    if n_sites % 2 != 0:
        raise ValueError(f"site count must be even, got {n_sites}")
    half = n_sites // 2
    s = 1.0 / np.sqrt(2.0)
    diag = np.zeros((half, 3))
    diag[:, 0] = s
    diag[:, 2] = s
    anti = np.zeros((half, 3))
    anti[:, 0] = s
    anti[:, 2] = -s
    return ChshChoice(
        left=AdditiveObservable.total_x(half),
        left_alt=AdditiveObservable.total_z(half),
        right=AdditiveObservable(half, diag),
        right_alt=AdditiveObservable(half, anti),
    )


def _normalized_half(obs: AdditiveObservable, half: int) -> np.ndarray:
    if obs.n_sites != half:
        raise ValueError(f"each setting must act on {half} sites, got {obs.n_sites}")
    total = obs.norm_bound
    if total == 0.0:
        raise ValueError("cannot normalize a setting with all-zero coefficients")
    scaled = AdditiveObservable(half, obs.coefficients * (half / total))
    return scaled.to_dense()


def collective_chsh_maximum(n_sites: int, choice: ChshChoice | None = None) -> float:
    """Largest eigenvalue of the normalized four-setting combination.

    Each setting is rescaled so its coefficient norms sum to half the site
    count, the four products are combined with the usual one-minus-three
    sign pattern, and the whole thing is divided by the square of that half
    count.  The result is the best value any state can reach.
    """
    if n_sites % 2 != 0 or n_sites < 2:
        raise ValueError(f"site count must be even and positive, got {n_sites}")
    require_dense_capacity(2**n_sites, "collective correlation operator")
    half = n_sites // 2
    if choice is None:
        choice = canonical_chsh_choice(n_sites)
    a = _normalized_half(choice.left, half)
    a_alt = _normalized_half(choice.left_alt, half)
    b = _normalized_half(choice.right, half)
    b_alt = _normalized_half(choice.right_alt, half)
    mats = [a, a_alt, b, b_alt]
    if all(np.abs(m.imag).max() == 0.0 for m in mats):
        a, a_alt, b, b_alt = (m.real.copy() for m in mats)
    # Left-half settings occupy the low bits, so they sit on the right kron
    # factor; the minus sign lands on left x right_alt.
    combined = np.kron(b, a + a_alt) + np.kron(b_alt, a_alt - a)
    combined /= float(half) ** 2
    return float(np.linalg.eigvalsh(combined)[-1])


def _state_dense(state: State) -> np.ndarray:
    if isinstance(state, PureState):
        return state.density_matrix()
    return state.to_dense()


def local_product_expectation(
    obs: AdditiveObservable, eta: ProjectorSpec, state: State
) -> float:
    """Correlation evaluated as a sum of local-operator product expectations.

    Expands the double commutator in the product eigenbasis of the per-site
    terms into dyads, splits every dyad into its Hermitian and
    anti-Hermitian parts, and distributes the products so that each term is
    a tensor product of single-site Hermitian operators whose expectations
    are summed with the appropriate powers of i.  Exponential in the site
    count, hence the small-size cap.
    """
    n = obs.n_sites
    if n > LOCAL_EXPANSION_SITE_CAP:
        raise CapacityError(
            f"local product expansion supports up to {LOCAL_EXPANSION_SITE_CAP} sites, got {n}"
        )
    _check_match(obs, state)
    if eta.dim != obs.dim:
        raise ValueError(f"projector dimension {eta.dim} does not match {obs.dim}")
    dim = obs.dim
    site_vals = []
    site_vecs = []
    for s in range(n):
        w, u = np.linalg.eigh(obs.site_matrix(s))
        site_vals.append(w)
        site_vecs.append(u)
    u_full = reduce(np.kron, site_vecs[::-1]) if n > 1 else site_vecs[0]
    levels = np.zeros(dim)
    for i in range(dim):
        levels[i] = sum(site_vals[s][(i >> s) & 1] for s in range(n))
    in_eigen = u_full.conj().T @ eta.basis
    eta_eigen = in_eigen @ in_eigen.conj().T

    # Hermitian / anti-Hermitian split of every one-site dyad, indexed by
    # (site, bra level, ket level).
    herm = {}
    anti = {}
    for s in range(n):
        for p in range(2):
            for qq in range(2):
                dyad = np.outer(site_vecs[s][:, p], site_vecs[s][:, qq].conj())
                herm[s, p, qq] = (dyad + dyad.conj().T) / 2.0
                anti[s, p, qq] = (dyad - dyad.conj().T) / 2.0j

    rho = _state_dense(state)
    total = 0.0 + 0.0j
    for p in range(dim):
        for qq in range(dim):
            gap = levels[p] - levels[qq]
            coeff = gap * gap * eta_eigen[p, qq]
            if coeff == 0.0:
                continue
            dyad_expect = 0.0 + 0.0j
            for subset in range(2**n):
                factors = []
                for s in range(n - 1, -1, -1):
                    table = anti if (subset >> s) & 1 else herm
                    factors.append(table[s, (p >> s) & 1, (qq >> s) & 1])
                product = reduce(np.kron, factors) if n > 1 else factors[0]
                weight = 1j ** bin(subset).count("1")
                dyad_expect += weight * np.trace(rho @ product)
            total += coeff * dyad_expect
    return float(np.real(total))


def _drop_bit(pattern: int, site: int) -> int:
    return ((pattern >> (site + 1)) << site) | (pattern & ((1 << site) - 1))


def single_site_conversion(
    state: TwoBranchState | PureState, site: int
) -> ConversionResult:
    """Best one-site measurement turning the state into an equal cat.

    Measuring the chosen site in the basis that swaps the branch amplitudes
    leaves the remaining sites in an equal-weight two-branch state.  The
    winning outcome has probability twice the branch-weight product.
    """
    if isinstance(state, PureState):
        state = TwoBranchState.from_pure(state)
    n = state.n_sites
    if n < 2:
        raise ValueError("conversion needs at least two sites")
    mask = (1 << n) - 1
    if state.pattern_a ^ state.pattern_b != mask:
        raise ValueError("the two branches must differ at every site")
    if not 0 <= site < n:
        raise ValueError(f"site {site} outside range 0..{n - 1}")
    amp_a, amp_b = state.amplitude_a, state.amplitude_b
    bit_a = (state.pattern_a >> site) & 1
    measurement = np.zeros(2, dtype=complex)
    measurement[bit_a] = np.conj(amp_b)
    measurement[1 - bit_a] = np.conj(amp_a)
    wa = abs(amp_a) ** 2
    wb = abs(amp_b) ** 2
    success = 2.0 * wa * wb
    post_a = amp_a * amp_b
    post_b = amp_b * amp_a
    norm = float(np.sqrt(abs(post_a) ** 2 + abs(post_b) ** 2))
    post = TwoBranchState(
        n - 1,
        post_a / norm,
        post_b / norm,
        _drop_bit(state.pattern_a, site),
        _drop_bit(state.pattern_b, site),
    )
    gap = abs(abs(post_a) ** 2 - abs(post_b) ** 2) / (abs(post_a) ** 2 + abs(post_b) ** 2)
    return ConversionResult(
        site=site,
        success_probability=success,
        alternative_probability=wa * wa + wb * wb,
        measurement_amplitudes=measurement,
        post_state=post,
        branch_weight_gap=float(gap),
    )
