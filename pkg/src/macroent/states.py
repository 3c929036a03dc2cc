"""Spin-1/2 many-body states: pure vectors, mixtures, and named families.

Basis convention: site ``s`` (0-based) occupies bit ``s`` of the basis index,
with spin down as bit 0 and spin up as bit 1.  The all-down configuration is
index 0 and the all-up configuration is index 2**n - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import CapacityError, require_dense_capacity

# Explicit 2**n state vectors are refused beyond this many sites; the
# two-branch form carries larger systems without allocation.
VECTOR_SITE_CAP = 22

NORM_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12

# Density matrices are eigenvalue-checked for positivity only up to this
# dimension; larger ones are validated on the cheaper invariants alone.
_PSD_CHECK_DIM_CAP = 512


def require_vector_capacity(n_sites: int) -> None:
    if n_sites > VECTOR_SITE_CAP:
        raise CapacityError(
            f"explicit state vectors are supported up to {VECTOR_SITE_CAP} sites, got {n_sites}"
        )


def _check_site_count(n_sites: int, minimum: int = 1) -> None:
    if n_sites < minimum:
        raise ValueError(f"need at least {minimum} sites, got {n_sites}")


def pattern_magnetization(pattern: int, n_sites: int) -> int:
    """Total z magnetization of a basis configuration (up = +1, down = -1)."""
    ups = bin(pattern & ((1 << n_sites) - 1)).count("1")
    return 2 * ups - n_sites


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over n_sites spins."""

    n_sites: int
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=complex).reshape(-1)
        object.__setattr__(self, "vector", vec)
        if vec.size != 2 ** self.n_sites:
            raise ValueError(
                f"vector length {vec.size} does not match {self.n_sites} sites"
            )
        nrm = float(np.linalg.norm(vec))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm {nrm!r} deviates from 1 beyond {NORM_TOL}")

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(vec.size)))
        if 2 ** n != vec.size:
            raise ValueError(f"amplitude count {vec.size} is not a power of two")
        nrm = float(np.linalg.norm(vec))
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(n, vec / nrm)

    @property
    def dim(self) -> int:
        return self.vector.size

    def density_matrix(self) -> np.ndarray:
        require_dense_capacity(self.dim, "density matrix")
        return np.outer(self.vector, self.vector.conj())


@dataclass(frozen=True)
class MixedState:
    """A density operator in ensemble, dense, or flagged-uniform form."""

    n_sites: int
    weights: np.ndarray | None = None
    components: tuple[PureState, ...] | None = None
    matrix: np.ndarray | None = None
    uniform: bool = False

    @classmethod
    def ensemble(cls, weights, components) -> "MixedState":
        comps = tuple(components)
        if not comps:
            raise ValueError("an ensemble needs at least one component")
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != len(comps):
            raise ValueError(f"{w.size} weights for {len(comps)} components")
        if np.any(w < -WEIGHT_SUM_TOL) or np.any(w > 1 + WEIGHT_SUM_TOL):
            raise ValueError("ensemble weights must lie in [0, 1]")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"ensemble weights sum to {w.sum()!r}, not 1")
        n = comps[0].n_sites
        if any(c.n_sites != n for c in comps):
            raise ValueError("all ensemble components must share the site count")
        return cls(n_sites=n, weights=w, components=comps)

    @classmethod
    def dense(cls, matrix: np.ndarray) -> "MixedState":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got {matrix.shape}")
        dim = matrix.shape[0]
        n = int(round(np.log2(dim)))
        if 2 ** n != dim:
            raise ValueError(f"density matrix dimension {dim} is not a power of two")
        require_dense_capacity(dim, "density matrix")
        tr = complex(np.trace(matrix))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1 beyond {TRACE_TOL}")
        asym = float(np.max(np.abs(matrix - matrix.conj().T)))
        if asym > 1e-10 * max(1.0, float(np.max(np.abs(matrix)))):
            raise ValueError(f"density matrix is not Hermitian: asymmetry {asym:.3e}")
        if dim <= _PSD_CHECK_DIM_CAP:
            low = float(np.min(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0)))
            if low < -PSD_TOL:
                raise ValueError(f"density matrix has negative eigenvalue {low:.3e}")
        return cls(n_sites=n, matrix=matrix)

    @classmethod
    def from_pure(cls, state: PureState) -> "MixedState":
        return cls.ensemble([1.0], [state])

    @classmethod
    def maximally_mixed(cls, n_sites: int) -> "MixedState":
        _check_site_count(n_sites)
        return cls(n_sites=n_sites, uniform=True)

    @property
    def is_ensemble(self) -> bool:
        return self.components is not None

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def rank(self) -> int:
        if self.is_ensemble:
            return len(self.components)
        return self.dim

    def component_matrix(self) -> np.ndarray:
        """Ensemble component vectors as the columns of a (dim, r) array."""
        if not self.is_ensemble:
            raise ValueError("component_matrix is defined for ensemble form only")
        return np.column_stack([c.vector for c in self.components])

    def to_dense(self) -> np.ndarray:
        require_dense_capacity(self.dim, "density matrix")
        if self.is_dense:
            return self.matrix
        if self.uniform:
            return np.eye(self.dim, dtype=complex) / self.dim
        cols = self.component_matrix()
        return (cols * self.weights) @ cols.conj().T


State = PureState | MixedState


def _basis_vector(n_sites: int, pattern: int) -> np.ndarray:
    require_vector_capacity(n_sites)
    vec = np.zeros(2 ** n_sites, dtype=complex)
    vec[pattern] = 1.0
    return vec


def _two_pattern_vector(n_sites: int, amp_a: complex, pattern_a: int,
                        amp_b: complex, pattern_b: int) -> np.ndarray:
    vec = _basis_vector(n_sites, pattern_a) * amp_a
    vec[pattern_b] += amp_b
    return vec


def make_cat(n_sites: int) -> PureState:
    """Equal superposition of all-down and all-up."""
    _check_site_count(n_sites, 1)
    amp = 1.0 / np.sqrt(2.0)
    top = 2 ** n_sites - 1
    return PureState(n_sites, _two_pattern_vector(n_sites, amp, 0, amp, top))


def make_psi1(n_sites: int) -> PureState:
    """All-down plus a 1/n weight of all-up."""
    _check_site_count(n_sites, 2)
    a = np.sqrt(1.0 - 1.0 / n_sites)
    b = np.sqrt(1.0 / n_sites)
    top = 2 ** n_sites - 1
    return PureState(n_sites, _two_pattern_vector(n_sites, a, 0, b, top))


def make_psi2(n_sites: int) -> PureState:
    """Equal superposition of the n + 1 domain walls: first k sites up."""
    _check_site_count(n_sites, 1)
    require_vector_capacity(n_sites)
    vec = np.zeros(2 ** n_sites, dtype=complex)
    amp = 1.0 / np.sqrt(n_sites + 1.0)
    for k in range(n_sites + 1):
        vec[(1 << k) - 1] = amp
    return PureState(n_sites, vec)


def make_ex1(n_sites: int) -> MixedState:
    """Even classical mixture of the all-down and all-up configurations."""
    _check_site_count(n_sites, 1)
    down = PureState(n_sites, _basis_vector(n_sites, 0))
    up = PureState(n_sites, _basis_vector(n_sites, 2 ** n_sites - 1))
    return MixedState.ensemble([0.5, 0.5], [down, up])


def make_ex2_ensemble(n_sites: int) -> MixedState:
    """Uniform mixture of one-flip cats: site s flipped against both branches."""
    _check_site_count(n_sites, 3)
    amp = 1.0 / np.sqrt(2.0)
    top = 2 ** n_sites - 1
    comps = []
    for s in range(n_sites):
        lone_up = 1 << s
        comps.append(PureState(
            n_sites,
            _two_pattern_vector(n_sites, amp, lone_up, amp, top ^ lone_up),
        ))
    return MixedState.ensemble(np.full(n_sites, 1.0 / n_sites), comps)


def make_ex3_ensemble(n_sites: int, pattern_seed: int | None = None) -> MixedState:
    """Mixture of n/3 balanced cats pairing a k-up pattern with its complement.

    The canonical patterns set the first k sites up; with ``pattern_seed`` the
    k up-sites are drawn from the seeded generator instead.
    """
    _check_site_count(n_sites, 3)
    if n_sites % 3 != 0:
        raise ValueError(f"site count must be divisible by 3, got {n_sites}")
    amp = 1.0 / np.sqrt(2.0)
    top = 2 ** n_sites - 1
    rng = None if pattern_seed is None else np.random.default_rng(pattern_seed)
    comps = []
    for k in range(1, n_sites // 3 + 1):
        if rng is None:
            pattern = (1 << k) - 1
        else:
            sites = rng.choice(n_sites, size=k, replace=False)
            pattern = 0
            for s in sites:
                pattern |= 1 << int(s)
        comps.append(PureState(
            n_sites,
            _two_pattern_vector(n_sites, amp, pattern, amp, top ^ pattern),
        ))
    m = n_sites // 3
    return MixedState.ensemble(np.full(m, 1.0 / m), comps)


def make_random_state(n_sites: int) -> MixedState:
    """Maximally mixed state, stored as a flag rather than a dense matrix."""
    return MixedState.maximally_mixed(n_sites)


def make_product(n_sites: int, seed: int) -> PureState:
    """Seeded product state, one Bloch direction per site."""
    _check_site_count(n_sites, 1)
    require_vector_capacity(n_sites)
    rng = np.random.default_rng(seed)
    vec = np.ones(1, dtype=complex)
    for _ in range(n_sites):
        theta = rng.uniform(0.0, np.pi)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        site = np.array([np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)])
        # New site occupies the next-higher bit, so it goes on the kron left.
        vec = np.kron(site, vec)
    return PureState(n_sites, vec)


def mix(a: MixedState, b: MixedState, w: float) -> MixedState:
    """Convex combination w * a + (1 - w) * b."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {w}")
    if a.n_sites != b.n_sites:
        raise ValueError("cannot mix states with different site counts")
    if w == 1.0:
        return a
    if w == 0.0:
        return b
    if a.is_ensemble and b.is_ensemble:
        weights = np.concatenate([w * a.weights, (1.0 - w) * b.weights])
        weights = weights / weights.sum()
        return MixedState.ensemble(weights, a.components + b.components)
    return MixedState.dense(w * a.to_dense() + (1.0 - w) * b.to_dense())


def state_to_text(state: PureState) -> str:
    """Serialize a pure state, one amplitude per line as `re im`.

    Seventeen significant digits per float, so a read-back reproduces every
    amplitude bit for bit.
    """
    return "\n".join(f"{a.real:.17g} {a.imag:.17g}" for a in state.vector) + "\n"


def state_from_text(text: str) -> PureState:
    """Inverse of state_to_text; blank lines and #-comments are skipped."""
    amplitudes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(
                f"line {lineno}: expected two floats per amplitude, got {line!r}")
        amplitudes.append(complex(float(parts[0]), float(parts[1])))
    if not amplitudes:
        raise ValueError("state text holds no amplitudes")
    vec = np.asarray(amplitudes, dtype=complex)
    size = vec.size
    # A state that is already normalized is kept bit for bit; renormalizing
    # it would shave the last ulp and spoil exact round-trips.
    if size > 0 and size & (size - 1) == 0:
        if abs(np.linalg.norm(vec) - 1.0) <= NORM_TOL:
            return PureState(int(round(np.log2(size))), vec)
    return PureState.from_amplitudes(vec)


@dataclass(frozen=True)
class TwoBranchState:
    """Superposition of two basis configurations, stored without a full vector.

    Carries states like the cat family at sizes where a 2**n vector would not
    fit in memory.
    """

    n_sites: int
    amplitude_a: complex
    amplitude_b: complex
    pattern_a: int
    pattern_b: int

    def __post_init__(self):
        _check_site_count(self.n_sites, 1)
        top = (1 << self.n_sites) - 1
        for p in (self.pattern_a, self.pattern_b):
            if not 0 <= p <= top:
                raise ValueError(f"pattern {p} outside the {self.n_sites}-site range")
        if self.pattern_a == self.pattern_b:
            raise ValueError("the two branch patterns must differ")
        total = abs(self.amplitude_a) ** 2 + abs(self.amplitude_b) ** 2
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"branch weights sum to {total!r}, not 1")

    @classmethod
    def cat(cls, n_sites: int) -> "TwoBranchState":
        amp = 1.0 / np.sqrt(2.0)
        return cls(n_sites, amp, amp, 0, (1 << n_sites) - 1)

    @classmethod
    def psi1(cls, n_sites: int) -> "TwoBranchState":
        _check_site_count(n_sites, 2)
        a = np.sqrt(1.0 - 1.0 / n_sites)
        b = np.sqrt(1.0 / n_sites)
        return cls(n_sites, a, b, 0, (1 << n_sites) - 1)

    @classmethod
    def from_pure(cls, state: PureState, tol: float = 1e-12) -> "TwoBranchState":
        idx = np.flatnonzero(np.abs(state.vector) > tol)
        if idx.size != 2:
            raise ValueError(
                f"state has {idx.size} amplitudes above {tol}, not a two-branch superposition"
            )
        i, j = int(idx[0]), int(idx[1])
        return cls(state.n_sites, complex(state.vector[i]), complex(state.vector[j]), i, j)

    @property
    def magnetization_a(self) -> int:
        return pattern_magnetization(self.pattern_a, self.n_sites)

    @property
    def magnetization_b(self) -> int:
        return pattern_magnetization(self.pattern_b, self.n_sites)

    def to_pure(self) -> PureState:
        vec = _two_pattern_vector(
            self.n_sites, self.amplitude_a, self.pattern_a, self.amplitude_b, self.pattern_b
        )
        return PureState(self.n_sites, vec)


@dataclass(frozen=True)
class StateFamily:
    """A named state family addressable from sweeps and the command line."""

    name: str
    build: Callable[..., State]
    kind: str
    # Canonical measurement projector spans the ensemble components.
    component_eta: bool = False
    takes_w: bool = False
    takes_seed: bool = False
    validate_n: Callable[[int], None] = field(default=lambda n: None)
    default_grid: tuple[int, ...] = ()
    note: str | None = None


def _need_multiple_of_3(n: int) -> None:
    if n % 3 != 0:
        raise ValueError(f"site count must be divisible by 3, got {n}")


_PSI1_NOTE = (
    "psi1: unconstrained projector optimization grows like N**1.5 for this family "
    "even though its variance-based classification puts it in the non-macroscopic "
    "class; treat the fitted exponent with care."
)

PURE_GRID = (6, 8, 10, 12, 14, 16)
DENSE_GRID = (4, 6, 8, 10, 12)
LOW_RANK_GRID = (6, 8, 10, 12, 14, 16, 18)
EX3_GRID = (6, 9, 12, 15, 18)

FAMILIES: dict[str, StateFamily] = {}


def _register(family: StateFamily) -> None:
    FAMILIES[family.name] = family


_register(StateFamily("cat", lambda n: make_cat(n), "pure", default_grid=PURE_GRID))
_register(StateFamily("psi1", lambda n: make_psi1(n), "pure",
                      default_grid=PURE_GRID, note=_PSI1_NOTE))
_register(StateFamily("psi2", lambda n: make_psi2(n), "pure", default_grid=PURE_GRID))
_register(StateFamily("ex1", lambda n: make_ex1(n), "ensemble",
                      component_eta=True, default_grid=DENSE_GRID))
_register(StateFamily("ex2", lambda n: make_ex2_ensemble(n), "ensemble",
                      component_eta=True, default_grid=LOW_RANK_GRID))
_register(StateFamily("ex3", lambda n: make_ex3_ensemble(n), "ensemble",
                      component_eta=True, validate_n=_need_multiple_of_3,
                      default_grid=EX3_GRID))
_register(StateFamily("ex2prime", lambda n, w: mix(make_ex2_ensemble(n), make_ex1(n), w),
                      "ensemble", component_eta=True, takes_w=True,
                      default_grid=LOW_RANK_GRID))
_register(StateFamily("ex3prime", lambda n, w: mix(make_ex3_ensemble(n), make_ex1(n), w),
                      "ensemble", component_eta=True, takes_w=True,
                      validate_n=_need_multiple_of_3, default_grid=EX3_GRID))
_register(StateFamily("product", lambda n, seed: make_product(n, seed), "pure",
                      takes_seed=True, default_grid=PURE_GRID))
_register(StateFamily("random", lambda n: make_random_state(n), "uniform",
                      default_grid=DENSE_GRID))


def resolve_state(name: str, n_sites: int, w: float | None = None,
                  seed: int | None = None) -> State:
    """Build a named family member, checking its parameter requirements."""
    if name not in FAMILIES:
        known = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown state name {name!r}; known states: {known}")
    family = FAMILIES[name]
    family.validate_n(n_sites)
    kwargs = {}
    if family.takes_w:
        if w is None:
            raise ValueError(f"state {name!r} requires a mixing weight w")
        kwargs["w"] = w
    if family.takes_seed:
        kwargs["seed"] = 0 if seed is None else seed
    return family.build(n_sites, **kwargs)
