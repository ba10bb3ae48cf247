"""Scenario configuration, orchestration, observables, and file output.

A scenario is a strict JSON document (unknown keys are rejected) selecting
a collision model, one or two initial states, and a set of evolution
engines.  ``run_scenario`` evolves every (engine, initial state) pair onto
a common time grid, writes one CSV per pair, a pointwise engine-comparison
CSV, and a JSON summary that carries the trace-distance revival witness
whenever two initial states are given.  Identical configuration and seed
produce byte-identical output files.

Command line::

    qcollide run <config.json>   [--out-dir DIR] [--threads N]
    qcollide validate <config.json>
    qcollide demo <name>         [--out-dir DIR] [--threads N]

Exit status: 0 on success, 1 on configuration errors, 2 on runtime
validation failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import backend
from .channels import CollisionSpec
from .integrator import IntegratorConfig, integrate_me
from .periodic import run_correlated_bath, run_periodic, uniform_fixed_m_bath
from .qmat import (
    DensityMatrix,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    StateSeries,
    UnitaryOp,
    basis_state,
    partial_swap_unitary,
    trace_distance,
)
from .stochastic import ensemble_average

ENGINES = ("stochastic", "periodic", "me", "correlated")

_CONFIG_KEYS = {
    "d_s",
    "d_a",
    "unitary",
    "eta",
    "gamma",
    "t_max",
    "grid_points",
    "engines",
    "n_traj",
    "seed",
    "delta_t",
    "fixed_n",
    "correlated_m",
    "initial_states",
    "output_path",
}

_REQUIRED_KEYS = ("d_s", "d_a", "unitary", "eta", "gamma", "t_max", "engines",
                  "initial_states", "output_path")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario: model, engines, grid, and output location."""

    d_s: int
    d_a: int
    unitary: UnitaryOp
    eta: DensityMatrix
    gamma: float
    t_max: float
    grid_points: int
    engines: tuple[str, ...]
    n_traj: int
    seed: int
    delta_t: float
    fixed_n: int | None
    correlated_m: int | None
    initial_states: tuple[DensityMatrix, ...] = field(repr=False)
    output_path: str = "out"
    name: str = "scenario"


@dataclass(frozen=True)
class WitnessReport:
    """Trace-distance revival witness: total backflow and revival windows.

    ``blp_value`` sums the positive increments of the trace-distance series
    over the grid; ``revival_intervals`` are the maximal time windows of
    consecutive positive increments.  A monotone (memoryless) decay gives
    zero.
    """

    blp_value: float
    revival_intervals: list[tuple[float, float]]

    def __post_init__(self):
        if self.blp_value < 0:
            raise ValueError("blp_value cannot be negative")


def blp_witness(times, values) -> WitnessReport:
    """Revival witness of a trace-distance series on an ascending grid."""
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.ndim != 1 or v.shape != t.shape:
        raise ValueError("times and values must be 1-D arrays of equal length")
    if t.size < 2:
        raise ValueError("need at least two grid points")
    if not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing")
    diffs = np.diff(v)
    blp = float(np.sum(diffs[diffs > 0]))
    intervals: list[tuple[float, float]] = []
    start = None
    for k, d in enumerate(diffs):
        if d > 0:
            if start is None:
                start = k
        elif start is not None:
            intervals.append((float(t[start]), float(t[k])))
            start = None
    if start is not None:
        intervals.append((float(t[start]), float(t[-1])))
    return WitnessReport(blp, intervals)


def bloch_vector(rho: DensityMatrix) -> tuple[float, float, float]:
    """Bloch components ``(Tr ρσx, Tr ρσy, Tr ρσz)`` of a qubit state."""
    if rho.dim != 2:
        raise ValueError(f"Bloch vector needs a qubit state, got dimension {rho.dim}")
    return (
        float(np.trace(rho.mat @ PAULI_X).real),
        float(np.trace(rho.mat @ PAULI_Y).real),
        float(np.trace(rho.mat @ PAULI_Z).real),
    )


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _get_positive_int(raw: dict, key: str, default=None) -> int:
    if key not in raw:
        return default
    v = raw[key]
    _require(isinstance(v, int) and not isinstance(v, bool) and v > 0,
             f"{key} must be a positive integer")
    return v


def _get_positive_real(raw: dict, key: str) -> float:
    v = raw[key]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool)
             and math.isfinite(v) and v > 0,
             f"{key} must be a positive real number")
    return float(v)


def _parse_entry(x, fieldname: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if (isinstance(x, list) and len(x) == 2
            and all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in x)):
        return complex(x[0], x[1])
    raise ConfigError(
        f"{fieldname}: matrix entries must be numbers or [re, im] pairs, got {x!r}"
    )


def _parse_matrix(value, dim: int, fieldname: str) -> np.ndarray:
    _require(isinstance(value, list) and len(value) == dim,
             f"{fieldname}: matrix literal must have {dim} rows")
    out = np.zeros((dim, dim), dtype=np.complex128)
    for i, row in enumerate(value):
        _require(isinstance(row, list) and len(row) == dim,
                 f"{fieldname}: row {i} must have {dim} entries")
        for j, x in enumerate(row):
            out[i, j] = _parse_entry(x, fieldname)
    return out


def _parse_state(obj, dim: int, fieldname: str) -> DensityMatrix:
    _require(isinstance(obj, dict) and "kind" in obj, f"{fieldname} must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "basis_state":
        _require(set(obj) == {"kind", "index"}, f"{fieldname}: basis_state takes only 'index'")
        idx = obj["index"]
        _require(isinstance(idx, int) and not isinstance(idx, bool) and 0 <= idx < dim,
                 f"{fieldname}: basis index must lie in 0..{dim - 1}")
        return basis_state(dim, idx)
    if kind == "matrix":
        _require(set(obj) == {"kind", "value"}, f"{fieldname}: matrix takes only 'value'")
        mat = _parse_matrix(obj["value"], dim, fieldname)
        try:
            return DensityMatrix(mat)
        except ValueError as exc:
            raise ConfigError(f"{fieldname}: {exc}") from exc
    raise ConfigError(f"{fieldname}: unknown state kind {kind!r}")


def _parse_unitary(obj, d_s: int, d_a: int) -> UnitaryOp:
    _require(isinstance(obj, dict) and "kind" in obj, "unitary must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "partial_swap":
        _require(set(obj) == {"kind", "theta"}, "unitary: partial_swap takes only 'theta'")
        _require(d_s == d_a, f"unitary: partial_swap needs d_s == d_a, got {d_s} != {d_a}")
        theta = obj["theta"]
        _require(isinstance(theta, (int, float)) and not isinstance(theta, bool)
                 and math.isfinite(theta), "unitary: theta must be a finite real")
        return partial_swap_unitary(float(theta), d_s)
    if kind == "sigma_x_on_system":
        _require(set(obj) == {"kind"}, "unitary: sigma_x_on_system takes no parameters")
        _require(d_s == 2, f"unitary: sigma_x_on_system needs d_s = 2, got {d_s}")
        return UnitaryOp(np.kron(PAULI_X, np.eye(d_a, dtype=np.complex128)))
    if kind == "matrix":
        _require(set(obj) == {"kind", "value"}, "unitary: matrix takes only 'value'")
        mat = _parse_matrix(obj["value"], d_s * d_a, "unitary")
        try:
            return UnitaryOp(mat)
        except ValueError as exc:
            raise ConfigError(f"unitary: {exc}") from exc
    raise ConfigError(f"unitary: unknown kind {kind!r}")


def load_config(text: str, name: str = "scenario") -> ScenarioConfig:
    """Parse and fully validate a scenario document.

    The schema is strict: unknown keys are errors, every matrix literal is
    validated on load, and cross-field requirements (step probability,
    correlated-bath slot count) are checked here so runs fail before any
    computation starts.  Defaults: ``grid_points=101``, ``n_traj=10000``,
    ``delta_t=t_max/10000``, ``seed=0``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "top-level config must be a JSON object")
    for key in raw:
        _require(key in _CONFIG_KEYS, f"unknown config key: {key!r}")
    for key in _REQUIRED_KEYS:
        _require(key in raw, f"missing required config key: {key!r}")

    d_s = _get_positive_int(raw, "d_s")
    d_a = _get_positive_int(raw, "d_a")
    gamma = _get_positive_real(raw, "gamma")
    t_max = _get_positive_real(raw, "t_max")
    grid_points = _get_positive_int(raw, "grid_points", 101)
    _require(grid_points >= 2, "grid_points must be at least 2")
    n_traj = _get_positive_int(raw, "n_traj", 10000)
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool),
             "seed must be an integer")
    delta_t = _get_positive_real(raw, "delta_t") if "delta_t" in raw else t_max / 10000.0
    _require(delta_t <= t_max, "delta_t must not exceed t_max")

    engines_raw = raw["engines"]
    _require(isinstance(engines_raw, list) and engines_raw,
             "engines must be a non-empty list")
    engines = []
    for e in engines_raw:
        _require(e in ENGINES, f"engines: unknown engine {e!r}")
        _require(e not in engines, f"engines: duplicate engine {e!r}")
        engines.append(e)

    fixed_n = raw.get("fixed_n")
    if fixed_n is not None:
        _require(isinstance(fixed_n, int) and not isinstance(fixed_n, bool)
                 and fixed_n >= 0, "fixed_n must be a non-negative integer")
    correlated_m = raw.get("correlated_m")
    if correlated_m is not None:
        _require(isinstance(correlated_m, int) and not isinstance(correlated_m, bool)
                 and correlated_m >= 0, "correlated_m must be a non-negative integer")

    unitary = _parse_unitary(raw["unitary"], d_s, d_a)
    eta = _parse_state(raw["eta"], d_a, "eta")

    states_raw = raw["initial_states"]
    _require(isinstance(states_raw, list) and 1 <= len(states_raw) <= 2,
             "initial_states must list one or two states")
    initial_states = tuple(
        _parse_state(s, d_s, f"initial_states[{i}]") for i, s in enumerate(states_raw)
    )

    output_path = raw["output_path"]
    _require(isinstance(output_path, str) and output_path,
             "output_path must be a non-empty string")

    if "periodic" in engines:
        _require(gamma * delta_t <= 1.0,
                 f"gamma * delta_t = {gamma * delta_t} exceeds 1: "
                 "periodic engine needs a valid step probability")
    if "correlated" in engines:
        _require(correlated_m is not None,
                 "correlated engine requires correlated_m")
        n_slots = t_max / delta_t
        _require(abs(n_slots - round(n_slots)) <= 1e-9 * max(1.0, n_slots),
                 "correlated engine needs t_max to be an integer multiple of delta_t")
        _require(correlated_m <= round(n_slots),
                 f"correlated_m = {correlated_m} exceeds the {round(n_slots)} slots")

    return ScenarioConfig(
        d_s=d_s, d_a=d_a, unitary=unitary, eta=eta, gamma=gamma, t_max=t_max,
        grid_points=grid_points, engines=tuple(engines), n_traj=n_traj, seed=seed,
        delta_t=delta_t, fixed_n=fixed_n, correlated_m=correlated_m,
        initial_states=initial_states, output_path=output_path, name=name,
    )


def _snap_to_grid(series: StateSeries, grid: np.ndarray, delta_t: float) -> StateSeries:
    # grid time t maps to the last mesh point <= t (tolerant to roundoff)
    idx = np.floor(grid / delta_t + 1e-9).astype(np.int64)
    idx = np.clip(idx, 0, len(series) - 1)
    return StateSeries(grid, [series.states[i] for i in idx])


def _run_engine(cfg: ScenarioConfig, engine: str, spec: CollisionSpec,
                rho0: DensityMatrix, grid: np.ndarray) -> StateSeries:
    if engine == "me":
        return integrate_me(spec, rho0, grid, IntegratorConfig(step=cfg.delta_t))
    if engine == "stochastic":
        if cfg.fixed_n is not None:
            return ensemble_average(spec, rho0, grid, cfg.n_traj, cfg.seed,
                                    mode="fixed_n", n=cfg.fixed_n, t_max=cfg.t_max)
        return ensemble_average(spec, rho0, grid, cfg.n_traj, cfg.seed)
    if engine == "periodic":
        n_steps = math.ceil(cfg.t_max / cfg.delta_t - 1e-9)
        series = run_periodic(spec, rho0, cfg.delta_t, n_steps)
        return _snap_to_grid(series, grid, cfg.delta_t)
    if engine == "correlated":
        n_slots = round(cfg.t_max / cfg.delta_t)
        bath = uniform_fixed_m_bath(n_slots, cfg.correlated_m, cfg.eta)
        series = run_correlated_bath(spec, bath, rho0, cfg.delta_t)
        return _snap_to_grid(series, grid, cfg.delta_t)
    raise ValueError(f"unknown engine {engine!r}")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _state_header(d_s: int) -> list[str]:
    cols = ["t"]
    for i in range(d_s):
        for j in range(i, d_s):
            cols.append(f"re_r_{i}_{j}")
            cols.append(f"im_r_{i}_{j}")
    if d_s == 2:
        cols += ["bloch_x", "bloch_y", "bloch_z"]
    return cols


def _state_row(t: float, rho: DensityMatrix) -> list[float]:
    row = [t]
    m = rho.mat
    for i in range(rho.dim):
        for j in range(i, rho.dim):
            row.append(m[i, j].real)
            row.append(m[i, j].imag)
    if rho.dim == 2:
        row.extend(bloch_vector(rho))
    return row


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def run_scenario(config: ScenarioConfig) -> list[Path]:
    """Execute every requested engine and write the scenario's output files.

    Writes ``<engine>_state<k>.csv`` per (engine, initial state) on the
    common grid, ``comparison.csv`` with pointwise trace distances between
    engine pairs when at least two engines run, and ``summary.json``
    (including the revival witness per engine when two initial states are
    given).  Returns the written paths.
    """
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = CollisionSpec(config.d_s, config.d_a, config.unitary, config.eta,
                         config.gamma)
    grid = np.linspace(0.0, config.t_max, config.grid_points)

    results: dict[tuple[str, int], StateSeries] = {}
    for engine in config.engines:
        for si, rho0 in enumerate(config.initial_states):
            results[(engine, si)] = _run_engine(config, engine, spec, rho0, grid)

    written: list[Path] = []
    header = _state_header(config.d_s)
    for engine in config.engines:
        for si in range(len(config.initial_states)):
            series = results[(engine, si)]
            path = out_dir / f"{engine}_state{si}.csv"
            _write_csv(path, header,
                       (_state_row(t, s) for t, s in zip(series.times, series.states)))
            written.append(path)

    if len(config.engines) >= 2:
        cols = ["t"]
        dist_cols: list[np.ndarray] = []
        for ea, eb in combinations(config.engines, 2):
            for si in range(len(config.initial_states)):
                suffix = f"_state{si}" if len(config.initial_states) == 2 else ""
                cols.append(f"D_{ea}_vs_{eb}{suffix}")
                sa, sb = results[(ea, si)], results[(eb, si)]
                dist_cols.append(np.array([
                    trace_distance(x, y) for x, y in zip(sa.states, sb.states)
                ]))
        rows = ([t] + [c[k] for c in dist_cols] for k, t in enumerate(grid))
        path = out_dir / "comparison.csv"
        _write_csv(path, cols, rows)
        written.append(path)

    summary = {"scenario": config.name, "seed": config.seed}
    if len(config.initial_states) == 2:
        witness = {}
        for engine in config.engines:
            s0, s1 = results[(engine, 0)], results[(engine, 1)]
            d = [trace_distance(a, b) for a, b in zip(s0.states, s1.states)]
            report = blp_witness(grid, d)
            witness[engine] = {
                "blp_value": report.blp_value,
                "revival_intervals": [list(iv) for iv in report.revival_intervals],
            }
        summary["witness"] = witness
    path = out_dir / "summary.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


# Built-in demonstration scenarios, validated through the normal loader.
_DEMO_CONFIGS: dict[str, dict] = {
    # the fixed-step extended-ancilla engine tracks the master equation
    "eq33-identity": {
        "d_s": 2, "d_a": 2,
        "unitary": {"kind": "partial_swap", "theta": 0.7853981633974483},
        "eta": {"kind": "basis_state", "index": 0},
        "gamma": 1.0, "t_max": 2.0, "grid_points": 101,
        "engines": ["periodic", "me"],
        "delta_t": 0.001, "seed": 0,
        "initial_states": [{"kind": "basis_state", "index": 1}],
        "output_path": "out/eq33-identity",
    },
    # exponential relaxation of an excited qubit under full-swap collisions
    "fullswap-decay": {
        "d_s": 2, "d_a": 2,
        "unitary": {"kind": "partial_swap", "theta": 1.5707963267948966},
        "eta": {"kind": "basis_state", "index": 0},
        "gamma": 1.0, "t_max": 5.0, "grid_points": 101,
        "engines": ["stochastic", "periodic", "me"],
        "n_traj": 20000, "delta_t": 0.0005, "seed": 0,
        "initial_states": [{"kind": "basis_state", "index": 1}],
        "output_path": "out/fullswap-decay",
    },
    # conditioning on exactly one collision produces a trace-distance revival
    "fixedn-revival": {
        "d_s": 2, "d_a": 2,
        "unitary": {"kind": "sigma_x_on_system"},
        "eta": {"kind": "basis_state", "index": 0},
        "gamma": 1.0, "t_max": 1.0, "grid_points": 101,
        "engines": ["stochastic", "correlated", "me"],
        "n_traj": 20000, "delta_t": 0.0005, "seed": 0,
        "fixed_n": 1, "correlated_m": 1,
        "initial_states": [{"kind": "basis_state", "index": 0},
                           {"kind": "basis_state", "index": 1}],
        "output_path": "out/fixedn-revival",
    },
    # exactly-one-collision bath: linear relaxation instead of exponential
    "correlated-m1": {
        "d_s": 2, "d_a": 2,
        "unitary": {"kind": "partial_swap", "theta": 1.5707963267948966},
        "eta": {"kind": "basis_state", "index": 0},
        "gamma": 1.0, "t_max": 1.0, "grid_points": 101,
        "engines": ["correlated", "me"],
        "delta_t": 0.001, "seed": 0, "correlated_m": 1,
        "initial_states": [{"kind": "basis_state", "index": 1}],
        "output_path": "out/correlated-m1",
    },
}


def demo_config(name: str) -> ScenarioConfig:
    """Named built-in scenario, validated like any user config."""
    if name not in _DEMO_CONFIGS:
        known = ", ".join(sorted(_DEMO_CONFIGS))
        raise ConfigError(f"unknown demo {name!r} (available: {known})")
    return load_config(json.dumps(_DEMO_CONFIGS[name]), name=name)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcollide",
        description="Collision-model simulator: stochastic, periodic, and "
                    "master-equation evolutions with CSV/JSON output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config file")
    run_p.add_argument("config", help="path to a scenario JSON file")
    validate_p = sub.add_parser("validate", help="validate a config and exit")
    validate_p.add_argument("config", help="path to a scenario JSON file")
    demo_p = sub.add_parser("demo", help="run a named built-in scenario")
    demo_p.add_argument("name", help=f"one of: {', '.join(sorted(_DEMO_CONFIGS))}")

    for p in (run_p, demo_p):
        p.add_argument("--out-dir", default=None,
                       help="override the config's output_path")
        p.add_argument("--threads", type=int, default=0,
                       help="engine parallelism (0 = auto); never changes results")
    return parser


def _load_from_path(path_str: str) -> ScenarioConfig:
    path = Path(path_str)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return load_config(text, name=path.stem)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            _load_from_path(args.config)
            print("config OK")
            return 0
        if args.command == "run":
            config = _load_from_path(args.config)
        else:
            config = demo_config(args.name)
        if args.out_dir is not None:
            config = dataclasses.replace(config, output_path=args.out_dir)
        if args.threads < 0:
            raise ConfigError("--threads must be non-negative")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        backend.set_threads(args.threads)
        written = run_scenario(config)
    except Exception as exc:  # noqa: BLE001 - map any runtime failure to status 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
