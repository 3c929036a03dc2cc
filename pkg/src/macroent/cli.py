"""Command-line front end.

Seven subcommands cover the library surface: ``index`` scores one state,
``sweep`` runs a size grid and fits the growth exponent, ``mermin`` and
``chsh`` evaluate the two violation diagnostics, ``conditions`` checks the
sufficient criteria for mixtures, ``convert`` reports the single-site
measurement protocol, and ``verify`` runs the slow reference checks.

Exit codes: 0 success, 1 failed verification, 2 bad request (unknown state,
malformed flags), 3 capacity exceeded, 4 unwritable output path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .correlation import (
    collective_chsh_maximum,
    check_mixture_conditions,
    maximal_correlation,
    mermin_score,
    single_site_conversion,
)
from .linalg import CapacityError
from .observables import AdditiveObservable
from .optimize import OptimizerConfig, maximize_correlation
from .oracles import run_standard_suite
from .scaling import (
    canonical_value,
    fit_index,
    running_slopes,
    secant_slopes,
    sweep,
)
from .states import (
    FAMILIES,
    PureState,
    TwoBranchState,
    resolve_state,
    state_from_text,
)
from . import report

SCHEMA_VERSION = 1

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_OUTPUT = 4

DEFAULT_CHSH_SIZES = (2, 4, 6, 8, 10, 12)

_OPTIMIZER_KEYS = ("restarts", "max_iters", "step_init", "step_shrink",
                   "grad_tol", "seed")
_CONFIG_KEYS = _OPTIMIZER_KEYS + (
    "state", "n", "w", "state_seed", "mode", "threshold_exponent", "site",
    "jobs", "format",
)


class OutputError(RuntimeError):
    """Raised when a requested output artifact cannot be written."""


def _fmt(value) -> str:
    # 17 significant digits round-trips any double.
    return f"{float(value):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _dump_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _parse_sizes(text: str) -> list[int]:
    """Accept a single size, a comma list, or an inclusive start:stop:step."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad size range {text!r}; expected start:stop[:step]")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0 or stop < start:
            raise ValueError(f"bad size range {text!r}; need stop >= start and step > 0")
        return list(range(start, stop + 1, step))
    if "," in text:
        return [int(p) for p in text.split(",") if p.strip()]
    return [int(text)]


def _load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must hold a flat JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ValueError(f"config file {path} has unknown keys: {', '.join(unknown)}")
    return raw


def _resolved(args, key, fallback=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    file_cfg = getattr(args, "_file_cfg", {})
    if key in file_cfg and file_cfg[key] is not None:
        return file_cfg[key]
    return fallback


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(
        restarts=int(_resolved(args, "restarts", 32)),
        max_iters=int(_resolved(args, "max_iters", 500)),
        step_init=float(_resolved(args, "step_init", 0.25)),
        step_shrink=float(_resolved(args, "step_shrink", 0.5)),
        grad_tol=float(_resolved(args, "grad_tol", 1e-7)),
        seed=int(_resolved(args, "seed", 0)),
    )


def _read_state_file(path: str) -> PureState:
    """Load a pure state stored as one amplitude per line, `re im`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read state file {path}: {exc}") from None
    try:
        return state_from_text(text)
    except ValueError as exc:
        raise ValueError(f"state file {path}: {exc}") from None


def _write_text(path: Path, text: str) -> None:
    # Parent directories are not created: a missing directory is an
    # unwritable path and should fail loudly, not be papered over.
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"{path}: {exc}") from None


def _precheck_output(output) -> None:
    """Reject a doomed destination before burning compute on the run."""
    if output is None:
        return
    parent = Path(output).resolve().parent
    if not parent.is_dir():
        raise OutputError(f"{output}: directory {parent} does not exist")
    if not os.access(parent, os.W_OK):
        raise OutputError(f"{output}: directory {parent} is not writable")


def _render(figure_call, path: Path) -> None:
    try:
        figure_call(path)
    except OSError as exc:
        raise OutputError(f"{path}: {exc}") from None


def _pick_state(args, *, allow_file: bool = True):
    """Resolve --state/--state-file into (state, family, label, n)."""
    name = _resolved(args, "state")
    state_file = getattr(args, "state_file", None)
    if state_file is not None:
        if not allow_file:
            raise ValueError("this command takes a named state, not --state-file")
        if name is not None:
            raise ValueError("--state and --state-file are mutually exclusive")
        if getattr(args, "n", None) is not None:
            raise ValueError("--state-file fixes the size; drop --n")
        state = _read_state_file(state_file)
        return state, None, Path(state_file).name, state.n_sites
    name = name or "cat"
    family = FAMILIES.get(name)
    if family is None:
        known = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown state name {name!r}; known states: {known}")
    n = _resolved(args, "n")
    if n is None:
        n = family.default_grid[0]
    n = int(n) if not isinstance(n, str) else _parse_sizes(n)[0]
    w = _resolved(args, "w")
    state_seed = _resolved(args, "state_seed")
    state = resolve_state(name, n, w=w, seed=state_seed)
    return state, family, name, n


def _common_config(args, command: str, **extra) -> dict:
    cfg = {"command": command, "schema_version": SCHEMA_VERSION}
    cfg.update(extra)
    return cfg


# ---------------------------------------------------------------------------
# subcommand handlers


def run_index(args) -> int:
    _precheck_output(getattr(args, "output", None))
    state, family, label, n = _pick_state(args)
    cfg = _optimizer_config(args)
    component_eta = family.component_eta if family is not None else False

    value_canonical = canonical_value(state, component_eta)
    optimum = maximize_correlation(state, cfg)
    detail = maximal_correlation(optimum.observable, state)
    best = max(value_canonical, optimum.value)
    value_effective = max(best, float(n))

    config = _common_config(
        args, "index", state=label, n=n,
        w=_resolved(args, "w"), state_seed=_resolved(args, "state_seed"),
        **{k: getattr(cfg, k) for k in _OPTIMIZER_KEYS})
    payload = {
        "config": config,
        "value_canonical": value_canonical,
        "value_optimized": optimum.value,
        "value_effective": value_effective,
        "k_spectrum": detail.k_spectrum,
        "eta_rank": detail.optimal_eta.rank,
        "observable_coefficients": optimum.observable.coefficients,
        "eta_vectors": detail.optimal_eta.basis.T
        if getattr(args, "eta_vectors", False) else None,
        "diagnostics": {
            "restart_index": optimum.restart_index,
            "iterations": optimum.iterations,
            "converged": optimum.converged,
            "zero_threshold": detail.zero_threshold,
            "note": family.note if family is not None else None,
        },
    }
    text = _dump_json(payload)
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(text)
        return 0
    out = Path(output)
    _write_text(out, text)
    print(f"wrote {out}")
    if not _resolved(args, "no_figure", False):
        fig = out.with_suffix(".png")
        _render(lambda p: report.spectrum_figure(
            payload["k_spectrum"], p, f"{label} (N={n}) correlation spectrum"), fig)
        print(f"wrote {fig}")
    return 0


def _sweep_csv(points, running, comments) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append("n,raw_value,effective_value,slope_running,seed,restarts,wall_time_s")
    for point, slope in zip(points, running):
        if not point.ok:
            lines.append(f"# skipped n={point.n}: {point.error}")
            continue
        lines.append(",".join([
            str(point.n), _fmt(point.raw_value), _fmt(point.effective_value),
            _fmt(slope), str(point.seed), str(point.restarts),
            _fmt(point.wall_time_s),
        ]))
    return "\n".join(lines) + "\n"


def run_sweep(args) -> int:
    _precheck_output(getattr(args, "output", None))
    name = _resolved(args, "state", "cat")
    family = FAMILIES.get(name)
    if family is None:
        known = ", ".join(sorted(FAMILIES))
        raise ValueError(f"unknown state name {name!r}; known states: {known}")
    n_spec = _resolved(args, "n")
    if n_spec is None:
        sizes = list(family.default_grid)
    else:
        sizes = _parse_sizes(str(n_spec))
    mode = _resolved(args, "mode", "optimized")
    w = _resolved(args, "w")
    state_seed = _resolved(args, "state_seed")
    cfg = _optimizer_config(args)

    points = sweep(name, sizes, cfg=cfg, mode=mode, w=w, state_seed=state_seed)
    usable = [p for p in points if p.ok]
    fit = fit_index(points) if len(usable) >= 3 else None
    running = running_slopes(points)
    secants = secant_slopes(points)

    config = _common_config(
        args, "sweep", state=name, sizes=sizes, mode=mode, w=w,
        state_seed=state_seed, jobs=int(_resolved(args, "jobs", 1)),
        **{k: getattr(cfg, k) for k in _OPTIMIZER_KEYS})
    summary = {
        "config": config,
        "points": [
            {"n": p.n, "raw_value": p.raw_value,
             "effective_value": p.effective_value, "seed": p.seed,
             "restarts": p.restarts, "wall_time_s": p.wall_time_s,
             "error": p.error}
            for p in points
        ],
        "fit": None if fit is None else
            {"slope": fit.slope, "intercept": fit.intercept,
             "r_squared": fit.r_squared, "points_used": len(fit.points)},
        "secant_slopes": secants,
        "note": family.note,
    }

    comments = [f"sweep schema v{SCHEMA_VERSION}",
                "config: " + json.dumps(_jsonable(config), sort_keys=True)]
    if family.note:
        comments.append(f"note: {family.note}")
    csv_text = _sweep_csv(points, running, comments)

    fmt = _resolved(args, "format", "csv")
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(csv_text if fmt == "csv" else _dump_json(summary))
        return 0
    out = Path(output)
    if fmt == "csv":
        _write_text(out, csv_text)
        print(f"wrote {out}")
        summary_path = out.with_suffix(".summary.json")
        _write_text(summary_path, _dump_json(summary))
        print(f"wrote {summary_path}")
    else:
        _write_text(out, _dump_json(summary))
        print(f"wrote {out}")
    if not _resolved(args, "no_figure", False):
        fig = out.with_suffix(".png")
        _render(lambda p: report.scaling_figure(
            points, fit, p, f"{name} sweep ({mode})", note=family.note), fig)
        print(f"wrote {fig}")
    if fit is not None:
        print(f"fitted slope {fit.slope:.4f} over {len(fit.points)} points")
    return 0


def run_mermin(args) -> int:
    _precheck_output(getattr(args, "output", None))
    state_file = getattr(args, "state_file", None)
    rows = []
    if state_file is not None:
        state = _read_state_file(state_file)
        rows.append((Path(state_file).name, mermin_score(state)))
        label, sizes = Path(state_file).name, [state.n_sites]
    else:
        name = _resolved(args, "state", "cat")
        family = FAMILIES.get(name)
        if family is None:
            known = ", ".join(sorted(FAMILIES))
            raise ValueError(f"unknown state name {name!r}; known states: {known}")
        n_spec = _resolved(args, "n")
        sizes = list(family.default_grid) if n_spec is None else _parse_sizes(str(n_spec))
        w = _resolved(args, "w")
        state_seed = _resolved(args, "state_seed")
        for n in sizes:
            state = resolve_state(name, n, w=w, seed=state_seed)
            rows.append((n, mermin_score(state)))
        label = name
    config = _common_config(args, "mermin", state=label, sizes=sizes)

    lines = [f"# mermin schema v{SCHEMA_VERSION}",
             "# config: " + json.dumps(_jsonable(config), sort_keys=True),
             "n,raw_value,lhv_bound,ratio,even_sites"]
    for key, score in rows:
        lines.append(",".join([
            str(key if isinstance(key, int) else sizes[0]),
            _fmt(score.raw), _fmt(score.lhv_bound), _fmt(score.ratio),
            str(int(score.even_sites)),
        ]))
    csv_text = "\n".join(lines) + "\n"

    summary = {
        "config": config,
        "rows": [{"n": key if isinstance(key, int) else sizes[0],
                  "raw_value": s.raw, "lhv_bound": s.lhv_bound,
                  "ratio": s.ratio, "even_sites": s.even_sites}
                 for key, s in rows],
    }
    fmt = _resolved(args, "format", "csv")
    text = csv_text if fmt == "csv" else _dump_json(summary)
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(text)
        return 0
    out = Path(output)
    _write_text(out, text)
    print(f"wrote {out}")
    return 0


def run_chsh(args) -> int:
    _precheck_output(getattr(args, "output", None))
    n_spec = _resolved(args, "n")
    sizes = list(DEFAULT_CHSH_SIZES) if n_spec is None else _parse_sizes(str(n_spec))
    values: list[tuple[int, float | None, str | None]] = []
    for n in sizes:
        try:
            values.append((n, collective_chsh_maximum(n), None))
        except CapacityError as exc:
            values.append((n, None, str(exc)))
    config = _common_config(args, "chsh", sizes=sizes)

    lines = [f"# chsh schema v{SCHEMA_VERSION}",
             "# config: " + json.dumps(_jsonable(config), sort_keys=True),
             "n,maximum"]
    for n, value, error in values:
        if value is None:
            lines.append(f"# skipped n={n}: {error}")
        else:
            lines.append(f"{n},{_fmt(value)}")
    csv_text = "\n".join(lines) + "\n"
    summary = {
        "config": config,
        "rows": [{"n": n, "maximum": v, "error": e} for n, v, e in values],
    }

    fmt = _resolved(args, "format", "csv")
    text = csv_text if fmt == "csv" else _dump_json(summary)
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(text)
        return 0
    out = Path(output)
    _write_text(out, text)
    print(f"wrote {out}")
    good = [(n, v) for n, v, _ in values if v is not None]
    if good and not _resolved(args, "no_figure", False):
        fig = out.with_suffix(".png")
        _render(lambda p: report.chsh_figure(
            [n for n, _ in good], [v for _, v in good], p), fig)
        print(f"wrote {fig}")
    return 0


def run_conditions(args) -> int:
    _precheck_output(getattr(args, "output", None))
    state, family, label, n = _pick_state(args, allow_file=False)
    exponent = float(_resolved(args, "threshold_exponent", 1.5))
    observable = AdditiveObservable.total_z(n)
    result = check_mixture_conditions(state, observable, exponent)
    config = _common_config(
        args, "conditions", state=label, n=n, w=_resolved(args, "w"),
        threshold_exponent=exponent)
    payload = {"config": config, **asdict(result)}
    text = _dump_json(payload)
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(text)
        return 0
    out = Path(output)
    _write_text(out, text)
    print(f"wrote {out}")
    return 0


def run_convert(args) -> int:
    _precheck_output(getattr(args, "output", None))
    state_file = getattr(args, "state_file", None)
    if state_file is not None:
        pure = _read_state_file(state_file)
        branch = TwoBranchState.from_pure(pure)
        label, n = Path(state_file).name, pure.n_sites
    else:
        name = _resolved(args, "state", "cat")
        n = int(_resolved(args, "n", 8))
        if name == "cat":
            branch = TwoBranchState.cat(n)
        elif name == "psi1":
            branch = TwoBranchState.psi1(n)
        else:
            raise ValueError(
                f"convert needs a two-branch superposition; {name!r} is not one "
                "(use cat, psi1, or --state-file)")
        label = name
    site = int(_resolved(args, "site", 0))
    if not 0 <= site < branch.n_sites:
        raise ValueError(f"site {site} out of range for {branch.n_sites} sites")
    result = single_site_conversion(branch, site)
    config = _common_config(args, "convert", state=label, n=branch.n_sites,
                            site=site)
    payload = {
        "config": config,
        "site": result.site,
        "success_probability": result.success_probability,
        "alternative_probability": result.alternative_probability,
        "measurement_amplitudes": list(result.measurement_amplitudes),
        "branch_weight_gap": result.branch_weight_gap,
        "post_state": {
            "n_sites": result.post_state.n_sites,
            "pattern_a": result.post_state.pattern_a,
            "pattern_b": result.post_state.pattern_b,
            "amplitude_a": result.post_state.amplitude_a,
            "amplitude_b": result.post_state.amplitude_b,
        },
    }
    text = _dump_json(payload)
    output = getattr(args, "output", None)
    if output is None:
        sys.stdout.write(text)
        return 0
    out = Path(output)
    _write_text(out, text)
    print(f"wrote {out}")
    return 0


def run_verify(args) -> int:
    _precheck_output(getattr(args, "output", None))
    reports = run_standard_suite()
    failed = [r for r in reports if not r.passed]
    for r in reports:
        tag = "PASS" if r.passed else "FAIL"
        print(f"[{tag}] {r.name}: deviation {r.max_deviation:.3e} "
              f"(tolerance {r.tolerance:.1e}, trials {r.trials})")
    output = getattr(args, "output", None)
    if output is not None:
        payload = {
            "config": _common_config(args, "verify"),
            "checks": [asdict(r) for r in reports],
            "passed": not failed,
        }
        out = Path(output)
        _write_text(out, _dump_json(payload))
        print(f"wrote {out}")
    if failed:
        print(f"{len(failed)} of {len(reports)} reference checks FAILED")
        return EXIT_FAILURE
    print(f"all {len(reports)} reference checks passed")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_state_flags(sp, with_file=True):
    sp.add_argument("--state", help="named state family (default cat)")
    if with_file:
        sp.add_argument("--state-file",
                        help="pure state file, one 're im' amplitude per line")
    sp.add_argument("--w", type=float, help="mixing weight for the *prime families")
    sp.add_argument("--state-seed", type=int,
                    help="seed for randomized state families")


def _add_optimizer_flags(sp):
    sp.add_argument("--restarts", type=int, help="optimizer restarts (default 32)")
    sp.add_argument("--max-iters", type=int, help="ascent iterations (default 500)")
    sp.add_argument("--step-init", type=float, help="initial step size (default 0.25)")
    sp.add_argument("--step-shrink", type=float,
                    help="backtracking factor (default 0.5)")
    sp.add_argument("--grad-tol", type=float,
                    help="gradient norm stop threshold (default 1e-7)")
    sp.add_argument("--seed", type=int, help="base seed for random restarts")


def _add_output_flags(sp, formats=False):
    sp.add_argument("--output", help="write results to this path")
    if formats:
        sp.add_argument("--format", choices=("csv", "structured"),
                        help="output format (default csv)")
    sp.add_argument("--no-figure", action="store_true", default=None,
                    help="skip the PNG figure next to the output file")


def _add_config_flag(sp):
    sp.add_argument("--config", help="JSON file with default flag values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macroent",
        description="Correlation-scaling toolkit for many-site quantum states.")
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command")

    sp = sub.add_parser("index", help="score one state at one size")
    _add_state_flags(sp)
    sp.add_argument("--n", help="number of sites")
    sp.add_argument("--eta-vectors", action="store_true", default=None,
                    help="include the optimal projector basis in the record")
    _add_optimizer_flags(sp)
    _add_output_flags(sp)
    _add_config_flag(sp)

    sp = sub.add_parser("sweep", help="scan sizes and fit the growth exponent")
    _add_state_flags(sp, with_file=False)
    sp.add_argument("--n", help="sizes: single, comma list, or start:stop:step")
    sp.add_argument("--mode", choices=("optimized", "canonical", "variance"),
                    help="per-size evaluation mode (default optimized)")
    sp.add_argument("--jobs", type=int,
                    help="worker bound; evaluation is currently sequential")
    _add_optimizer_flags(sp)
    _add_output_flags(sp, formats=True)
    _add_config_flag(sp)

    sp = sub.add_parser("mermin", help="many-site parity violation score")
    _add_state_flags(sp)
    sp.add_argument("--n", help="sizes: single, comma list, or start:stop:step")
    sp.add_argument("--format", choices=("csv", "structured"))
    sp.add_argument("--output", help="write results to this path")
    _add_config_flag(sp)

    sp = sub.add_parser("chsh", help="collective two-setting score vs size")
    sp.add_argument("--n", help="even sizes: single, comma list, or start:stop:step")
    _add_output_flags(sp, formats=True)
    _add_config_flag(sp)

    sp = sub.add_parser("conditions", help="sufficient-condition checks for mixtures")
    _add_state_flags(sp, with_file=False)
    sp.add_argument("--n", help="number of sites")
    sp.add_argument("--threshold-exponent", type=float,
                    help="variance growth threshold exponent (default 1.5)")
    sp.add_argument("--output", help="write results to this path")
    _add_config_flag(sp)

    sp = sub.add_parser("convert", help="single-site measurement conversion")
    sp.add_argument("--state", help="two-branch family: cat or psi1")
    sp.add_argument("--state-file",
                    help="pure state file, one 're im' amplitude per line")
    sp.add_argument("--n", help="number of sites")
    sp.add_argument("--site", type=int, help="measured site (default 0)")
    sp.add_argument("--output", help="write results to this path")
    _add_config_flag(sp)

    sp = sub.add_parser("verify", help="run the independent reference checks")
    sp.add_argument("--output", help="write the check report to this path")
    _add_config_flag(sp)

    return parser


_HANDLERS = {
    "index": run_index,
    "sweep": run_sweep,
    "mermin": run_mermin,
    "chsh": run_chsh,
    "conditions": run_conditions,
    "convert": run_convert,
    "verify": run_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        args._file_cfg = {} if args.config is None else _load_config_file(args.config)
        return _HANDLERS[args.command](args)
    except OutputError as exc:
        print(f"output path is not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValueError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
