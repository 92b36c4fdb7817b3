"""Command-line front end: truth-table, sweep, and stirap-trace experiments.

Config files are JSON with explicit unit suffixes on physical keys
(rad_per_s, _s). Exit codes: 0 success, 2 usage/config error, 3 simulation
domain error. CSV output carries 17 significant digits so downstream
convergence checks stay meaningful.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import gate as gate_mod
from . import states, stirap
from .errors import SimulationError
from .hilbert import DEFAULT_N_MAX
from .operators import PhysicalParams

WORKERS_ENV = "HOTGATE_MAX_WORKERS"

SWEEP_AXES = {
    "epsilon": ("gate", "epsilon"),
    "eta": ("gate", "params", "eta"),
    "omega_rad_per_s": ("gate", "params", "omega_rad_per_s"),
    "delta_rad_per_s": ("gate", "params", "delta_rad_per_s"),
    "delta_stirap_rad_per_s": ("gate", "params", "delta_stirap_rad_per_s"),
    "n_max": ("n_max",),
    "total_duration_s": ("gate", "schedule", "total_duration_s"),
    "margin": ("gate", "schedule", "margin"),
    "n_steps": ("gate", "schedule", "n_steps"),
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Parsed experiment: gate setup, phonon input, optional sweep/trace sections."""

    n_max: int
    phonon_spec: str
    gate: gate_mod.GateConfig
    sweep_axes: list
    trace_n: int
    raw: dict

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing {key!r} in {where}")
    return section[key]


def _parse_params(section: dict) -> PhysicalParams:
    try:
        return PhysicalParams(
            eta=float(_require(section, "eta", "gate.params")),
            omega=float(_require(section, "omega_rad_per_s", "gate.params")),
            n_ions=int(section.get("n_ions", 2)),
            delta=float(_require(section, "delta_rad_per_s", "gate.params")),
            delta_stirap=float(section.get("delta_stirap_rad_per_s", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad physical parameters: {exc}") from exc


def _parse_envelope(section: dict, where: str) -> stirap.PulseEnvelope:
    try:
        return stirap.PulseEnvelope(
            shape=str(section.get("shape", "sin2")),
            peak_rabi=float(_require(section, "peak_rabi_rad_per_s", where)),
            center=float(_require(section, "center_s", where)),
            width=float(_require(section, "width_s", where)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad pulse envelope in {where}: {exc}") from exc


def _parse_schedule(section: dict, params: PhysicalParams) -> stirap.StirapSchedule:
    try:
        total = float(_require(section, "total_duration_s", "gate.schedule"))
        if "dt_s" in section:
            n_steps = int(round(total / float(section["dt_s"])))
        else:
            n_steps = int(section.get("n_steps", stirap.DEFAULT_N_STEPS))
        detuning = section.get("detuning_rad_per_s")
        detuning = None if detuning is None else float(detuning)
        if "pump" in section or "stokes" in section:
            if "margin" in section:
                raise ConfigError("give either explicit pump/stokes envelopes or a margin")
            pump = _parse_envelope(_require(section, "pump", "gate.schedule"), "pump")
            stokes = _parse_envelope(_require(section, "stokes", "gate.schedule"), "stokes")
            return stirap.StirapSchedule(
                pump=pump,
                stokes=stokes,
                total_duration=total,
                detuning=params.delta_stirap if detuning is None else detuning,
                dt=total / n_steps,
                direction=str(section.get("direction", "up")),
            )
        margin = section.get("margin")
        pump_peak = section.get("pump_peak_rabi_rad_per_s")
        stokes_peak = section.get("stokes_peak_rabi_rad_per_s")
        if margin is not None and pump_peak is not None:
            raise ConfigError("give either a margin or fixed peak rates, not both")
        return stirap.standard_schedule(
            total, params,
            margin=None if margin is None else float(margin),
            pump_peak=None if pump_peak is None else float(pump_peak),
            stokes_peak=None if stokes_peak is None else float(stokes_peak),
            n_steps=n_steps, detuning=detuning,
            shape=str(section.get("shape", "sin2")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad schedule: {exc}") from exc


def _parse_axes(section: dict) -> list:
    axes = section.get("axes")
    if not isinstance(axes, list) or not axes:
        raise ConfigError("sweep requires a non-empty 'axes' list")
    parsed = []
    for axis in axes:
        name = _require(axis, "name", "sweep axis")
        if name not in SWEEP_AXES:
            raise ConfigError(
                f"unknown sweep axis {name!r}; known: {sorted(SWEEP_AXES)}"
            )
        if "values" in axis:
            values = [float(v) for v in axis["values"]]
        else:
            start = float(_require(axis, "start", f"axis {name}"))
            stop = float(_require(axis, "stop", f"axis {name}"))
            steps = int(_require(axis, "steps", f"axis {name}"))
            if steps < 1:
                raise ConfigError(f"axis {name}: steps must be >= 1")
            values = list(np.linspace(start, stop, steps))
        if not values:
            raise ConfigError(f"axis {name}: empty value range")
        parsed.append((name, values))
    return parsed


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate and build the experiment from a JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    n_max = int(doc.get("n_max", DEFAULT_N_MAX))
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    phonon_spec = str(_require(doc, "phonon", "config"))
    gate_sec = _require(doc, "gate", "config")
    params = _parse_params(_require(gate_sec, "params", "gate"))
    mode = str(gate_sec.get("mode", "ideal"))
    schedule = None
    if mode == "stirap":
        if "schedule" not in gate_sec:
            raise ConfigError("stirap mode: schedule required")
        schedule = _parse_schedule(gate_sec["schedule"], params)
    try:
        gate_config = gate_mod.GateConfig(
            params=params,
            control=int(gate_sec.get("control", 0)),
            target=int(gate_sec.get("target", 1)),
            mode=mode,
            schedule=schedule,
            epsilon=float(gate_sec.get("epsilon", 0.0)),
            compensate_phases=bool(gate_sec.get("compensate_phases", False)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sweep_axes = _parse_axes(doc["sweep"]) if "sweep" in doc else []
    trace_n = int(doc.get("trace", {}).get("n", 0))
    return ExperimentConfig(
        n_max=n_max, phonon_spec=phonon_spec, gate=gate_config,
        sweep_axes=sweep_axes, trace_n=trace_n, raw=doc,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def _phonon_input(config: ExperimentConfig, seed: int | None):
    try:
        return states.parse_state_spec(config.phonon_spec, config.n_max, default_seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_text(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_truth_table(config: ExperimentConfig, out: str, fmt: str, seed: int | None) -> int:
    if fmt != "json":
        raise ConfigError("truth-table reports are JSON; use --format json")
    phonon = _phonon_input(config, seed)
    report = gate_mod.gate_report(config.gate, phonon)
    doc = report.to_dict()
    doc["phonon"] = config.phonon_spec
    doc["n_max"] = config.n_max
    _write_text(out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"qubit_fidelity={_fmt(report.qubit_fidelity)}")
    print(f"phonon_restoration_fidelity={_fmt(report.phonon_restoration_fidelity)}")
    return 0


def _patched_raw(raw: dict, name: str, value: float) -> dict:
    doc = json.loads(json.dumps(raw))
    path = SWEEP_AXES[name]
    node = doc
    for key in path[:-1]:
        if key not in node or not isinstance(node[key], dict):
            raise ConfigError(f"sweep axis {name!r} needs a {'.'.join(path[:-1])} section")
        node = node[key]
    leaf = path[-1]
    node[leaf] = int(value) if leaf in ("n_max", "n_steps") else value
    doc.pop("sweep", None)
    return doc


def _grid_point_metrics(raw: dict, names, values, seed: int | None) -> dict:
    cfg = parse_config(_patched_raw_multi(raw, names, values))
    phonon = _phonon_input(cfg, seed)
    t0 = time.perf_counter()
    row = {
        "gate_fidelity": gate_mod.gate_fidelity(cfg.gate, phonon),
        "phonon_restoration": gate_mod.phonon_restoration(cfg.gate, phonon),
        "leakage": gate_mod.gate_leakage(cfg.gate, phonon),
    }
    if cfg.gate.mode == "stirap":
        ns = np.arange(min(11, cfg.n_max))
        props = stirap.block_propagators(cfg.gate.schedule, cfg.gate.params, ns,
                                         method=cfg.gate.method)
        row["transfer_efficiency"] = float(np.min(np.abs(props[:, 2, 0]) ** 2))
    row["runtime_s"] = time.perf_counter() - t0
    return row


def _patched_raw_multi(raw: dict, names, values) -> dict:
    doc = raw
    for name, value in zip(names, values):
        doc = _patched_raw(doc, name, value)
    return doc


def cmd_sweep(config: ExperimentConfig, out: str, fmt: str, seed: int | None) -> int:
    if fmt != "csv":
        raise ConfigError("sweep emits CSV; use --format csv")
    if not config.sweep_axes:
        raise ConfigError("sweep requires a non-empty 'axes' list")
    names = [name for name, _ in config.sweep_axes]
    grids = [vals for _, vals in config.sweep_axes]
    points = list(product(*grids))
    workers = os.environ.get(WORKERS_ENV)
    workers = max(1, int(workers)) if workers else 1
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda vals: _grid_point_metrics(config.raw, names, vals, seed), points
            ))
    else:
        rows = [_grid_point_metrics(config.raw, names, vals, seed) for vals in points]
    metric_cols = ["gate_fidelity", "phonon_restoration", "leakage"]
    if config.gate.mode == "stirap":
        metric_cols.append("transfer_efficiency")
    metric_cols.append("runtime_s")
    lines = [",".join(names + metric_cols)]
    for vals, row in zip(points, rows):
        cells = [_fmt(v) for v in vals] + [_fmt(row[c]) for c in metric_cols]
        lines.append(",".join(cells))
    _write_text(out, "\n".join(lines) + "\n")
    print(f"sweep: {len(points)} grid points -> {out}")
    return 0


def cmd_stirap_trace(config: ExperimentConfig, out: str, fmt: str, seed: int | None) -> int:
    if fmt != "csv":
        raise ConfigError("stirap-trace emits CSV; use --format csv")
    if config.gate.mode != "stirap":
        raise ConfigError("stirap-trace requires gate mode 'stirap' (schedule required)")
    n = config.trace_n
    if not 0 <= n < config.n_max:
        raise ConfigError(f"trace.n = {n} outside 0..{config.n_max - 1}")
    schedule = config.gate.schedule
    params = config.gate.params
    times, amps = stirap.block_trajectory(schedule, params, n, method=config.gate.method)
    pump = schedule.pump.value(times)
    sideband = stirap.sideband_rate(n, times, schedule, params)
    pops = np.abs(amps) ** 2
    lines = ["t_s,omega_pump_rad_per_s,omega_stokes_n_rad_per_s,pop_1n,pop_3n,pop_2n1"]
    for k in range(len(times)):
        lines.append(",".join(_fmt(v) for v in
                              (times[k], pump[k], sideband[k],
                               pops[k, 0], pops[k, 1], pops[k, 2])))
    _write_text(out, "\n".join(lines) + "\n")
    final = pops[-1, 2] if schedule.direction == "up" else pops[-1, 0]
    print(f"final_transfer_population={_fmt(final)}")
    return 0


_COMMANDS = {
    "truth-table": (cmd_truth_table, "json"),
    "sweep": (cmd_sweep, "csv"),
    "stirap-trace": (cmd_stirap_trace, "csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hotgate",
        description="Simulate the four-pulse controlled-rotation gate on a hot ion string.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, default_fmt) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", required=True, help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=default_fmt)
        p.add_argument("--seed", type=int, default=None,
                       help="default seed for the 'random' phonon family")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, _ = _COMMANDS[args.command]
    try:
        config = load_config(args.config)
        return handler(config, args.out, args.format, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
