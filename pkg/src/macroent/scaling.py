"""Sweeps over system size and power-law exponent estimation.

A sweep evaluates one named state family at each size, floors the value at
the site count, and the fit extracts the growth exponent from the log-log
regression.  Because every claim about the exponent is asymptotic, the fit
is reported together with running and pairwise secant slopes so finite-size
drift stays visible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .correlation import ProjectorSpec, correlation_value, maximal_correlation
from .linalg import CapacityError
from .observables import AdditiveObservable
from .optimize import Optimum, OptimizerConfig, maximize_correlation, maximize_variance
from .states import FAMILIES, MixedState, State, resolve_state

SWEEP_MODES = ("optimized", "canonical", "variance")


@dataclass(frozen=True)
class SweepPoint:
    n: int
    raw_value: float
    effective_value: float
    seed: int
    restarts: int
    wall_time_s: float
    optimum: Optimum | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class IndexFit:
    """Least-squares slope of log value against log size."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[SweepPoint, ...]


def canonical_value(state: State, component_eta: bool) -> float:
    """Correlation at the total-z observable with the family's natural projector.

    Ensembles whose components form the natural measurement subspace use the
    projector spanning those components; everything else takes the exact
    projector optimum at the same observable.
    """
    obs = AdditiveObservable.total_z(state.n_sites)
    if component_eta and isinstance(state, MixedState) and state.is_ensemble:
        eta = ProjectorSpec(state.component_matrix())
        return correlation_value(obs, eta, state)
    return maximal_correlation(obs, state).value


def sweep(
    family_name: str,
    n_values,
    cfg: OptimizerConfig | None = None,
    mode: str = "optimized",
    w: float | None = None,
    state_seed: int | None = None,
) -> list[SweepPoint]:
    """One point per size, in ascending size order.

    A point that exceeds a representation capacity is recorded with its
    error and the sweep moves on; other failures abort, since they signal a
    bad request rather than a size limit.
    """
    if mode not in SWEEP_MODES:
        raise ValueError(f"unknown sweep mode {mode!r}; choose from {SWEEP_MODES}")
    if family_name not in FAMILIES:
        known = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown state name {family_name!r}; known states: {known}")
    cfg = cfg or OptimizerConfig()
    sizes = [int(n) for n in n_values]
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValueError(f"sizes must be strictly ascending, got {sizes}")
    family = FAMILIES[family_name]
    restarts = 0 if mode == "canonical" else cfg.restarts
    points: list[SweepPoint] = []
    for n in sizes:
        start = time.perf_counter()
        try:
            state = resolve_state(family_name, n, w=w, seed=state_seed)
            optimum = None
            if mode == "optimized":
                optimum = maximize_correlation(state, cfg)
                raw = optimum.value
            elif mode == "variance":
                optimum = maximize_variance(state, cfg)
                raw = optimum.value
            else:
                raw = canonical_value(state, family.component_eta)
            elapsed = time.perf_counter() - start
            points.append(
                SweepPoint(
                    n=n,
                    raw_value=raw,
                    effective_value=max(raw, float(n)),
                    seed=cfg.seed,
                    restarts=restarts,
                    wall_time_s=elapsed,
                    optimum=optimum,
                )
            )
        except CapacityError as exc:
            elapsed = time.perf_counter() - start
            points.append(
                SweepPoint(
                    n=n,
                    raw_value=float("nan"),
                    effective_value=float("nan"),
                    seed=cfg.seed,
                    restarts=restarts,
                    wall_time_s=elapsed,
                    error=str(exc),
                )
            )
    return points


def fit_index(points) -> IndexFit:
    """Log-log regression over the usable sweep points."""
    usable = tuple(p for p in points if p.ok)
    if len(usable) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(usable)}")
    if any(p.effective_value <= 0 for p in usable):
        raise ValueError("all effective values must be positive for a log fit")
    x = np.log([p.n for p in usable])
    y = np.log([p.effective_value for p in usable])
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r_squared = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return IndexFit(float(slope), float(intercept), r_squared, usable)


def running_slopes(points) -> list[float]:
    """Fit slope over the prefix ending at each point; nan before 3 points."""
    out: list[float] = []
    for i in range(len(points)):
        prefix = [p for p in points[: i + 1] if p.ok]
        if len(prefix) < 3 or any(p.effective_value <= 0 for p in prefix):
            out.append(float("nan"))
        else:
            out.append(fit_index(prefix).slope)
    return out


def secant_slopes(points) -> list[float]:
    """Pairwise log-log slopes between consecutive usable points."""
    usable = [p for p in points if p.ok and p.effective_value > 0]
    out = []
    for a, b in zip(usable, usable[1:]):
        out.append(
            float(np.log(b.effective_value / a.effective_value) / np.log(b.n / a.n))
        )
    return out
