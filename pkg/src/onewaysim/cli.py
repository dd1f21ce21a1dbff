"""Scenario runner: reproducible command-line experiments emitting figure data.

Each scenario exercises only public library operations and writes one artifact
(JSON or CSV) to ``--out`` or stdout.  Outputs are deterministic for a fixed
seed: numbers are emitted at full round-trip precision, keys are sorted, CSV
records use '.' decimals and newline terminators.

Exit codes: 0 ok, 2 config error, 3 infeasible calibration, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import cluster, mbqc, measure, noise, qcore, timing, tomo

SCENARIOS = ("witness", "lifetime", "tomography", "rotate", "sweep", "budget")


class ConfigError(ValueError):
    """Invalid scenario configuration (exit code 2)."""


@dataclass
class ScenarioConfig:
    """Flat configuration; every key can come from flags or a key=value file."""

    scenario: str = ""
    alpha: float = 0.0
    beta: float = 0.0
    shots: int = 0
    seed: int = 0
    out: Optional[str] = None
    format: Optional[str] = None  # None = scenario default
    verify: bool = False
    noise_file: Optional[str] = None
    tables_in: Optional[str] = None
    tables_out: Optional[str] = None
    # preparation
    theta: float = 0.0
    imbalance: float = 1.0
    spatial_white_noise: float = 0.0
    ideal: bool = False
    noiseless: bool = False
    calibrated: bool = False
    # storage noise
    tau: Optional[float] = None
    osc_amp: float = 0.0
    osc_freq: float = 0.0
    envelope: str = "gaussian"
    storage_time: float = 0.0
    # rotation / sweep
    feedforward: bool = True
    mode: str = "rz"
    per_branch: bool = False
    # lifetime grid and calibration targets
    t_max: float = 25.0
    t_step: float = 0.5
    target_t1: float = 2.27
    target_f1: float = 0.80
    target_t2: float = 14.27
    target_f2: float = 0.50
    # latency budget
    eom_response: float = 1.56
    optical_propagation: float = 0.02
    signal_processing: float = 0.11
    storage_before_first_readout: float = 2.27
    coherence_time: float = 14.27


_ANGLE_KEYS = {"alpha", "beta", "theta"}
_DEFAULT_FORMATS = {
    "witness": "json",
    "lifetime": "csv",
    "tomography": "json",
    "rotate": "json",
    "sweep": "csv",
    "budget": "json",
}


def parse_angle(text: str) -> float:
    """Float radians; accepts 'pi' forms such as pi/4, 3pi/4, -pi, 0.5pi."""
    s = str(text).strip().lower().replace(" ", "")
    if "pi" not in s:
        try:
            return float(s)
        except ValueError as exc:
            raise ConfigError(f"cannot parse angle {text!r}") from exc
    head, _, tail = s.partition("pi")
    try:
        if head in ("", "+"):
            num = 1.0
        elif head == "-":
            num = -1.0
        else:
            num = float(head)
        den = 1.0
        if tail:
            if not tail.startswith("/"):
                raise ValueError
            den = float(tail[1:])
        return num * math.pi / den
    except ValueError as exc:
        raise ConfigError(f"cannot parse angle {text!r}") from exc


def _coerce(key: str, raw, kind) -> object:
    if raw is None:
        return None
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean for {key}: {raw!r}")
    if kind is int:
        try:
            return int(str(raw))
        except ValueError as exc:
            raise ConfigError(f"cannot parse integer for {key}: {raw!r}") from exc
    if kind is float or kind == Optional[float]:
        if key in _ANGLE_KEYS:
            return parse_angle(str(raw))
        try:
            return float(str(raw))
        except ValueError as exc:
            raise ConfigError(f"cannot parse number for {key}: {raw!r}") from exc
    return str(raw)


_FIELD_KINDS = {
    "scenario": str, "alpha": float, "beta": float, "shots": int, "seed": int,
    "out": str, "format": str, "verify": bool, "noise_file": str,
    "tables_in": str, "tables_out": str,
    "theta": float, "imbalance": float, "spatial_white_noise": float,
    "ideal": bool, "noiseless": bool, "calibrated": bool,
    "tau": float, "osc_amp": float, "osc_freq": float, "envelope": str,
    "storage_time": float, "feedforward": bool, "mode": str, "per_branch": bool,
    "t_max": float, "t_step": float,
    "target_t1": float, "target_f1": float, "target_t2": float, "target_f2": float,
    "eom_response": float, "optical_propagation": float, "signal_processing": float,
    "storage_before_first_readout": float, "coherence_time": float,
}


def read_key_value_file(path: str) -> dict:
    """Parse a flat key=value text file; '#' starts a comment line."""
    data = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        data[key.strip()] = value.strip()
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onewaysim",
        description="Cluster-state one-way computing scenarios: witness, lifetime, "
                    "tomography, rotate, sweep, budget.",
    )
    parser.add_argument("scenario_pos", nargs="?", metavar="SCENARIO",
                        help=f"one of {', '.join(SCENARIOS)}")
    parser.add_argument("--scenario", dest="scenario")
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--alpha", type=parse_angle)
    parser.add_argument("--beta", type=parse_angle)
    parser.add_argument("--theta", type=parse_angle)
    parser.add_argument("--shots", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--verify", action="store_true", default=None)
    parser.add_argument("--noise-file", dest="noise_file")
    parser.add_argument("--tables-in", dest="tables_in",
                        help="reconstruct from count tables (JSON lines) instead of sampling")
    parser.add_argument("--tables-out", dest="tables_out",
                        help="also write the sampled count tables as JSON lines")
    parser.add_argument("--imbalance", type=float)
    parser.add_argument("--spatial-white-noise", dest="spatial_white_noise", type=float)
    parser.add_argument("--ideal", action="store_true", default=None,
                        help="ideal preparation (the default)")
    parser.add_argument("--noiseless", action="store_true", default=None,
                        help="alias of --ideal")
    parser.add_argument("--calibrated", action="store_true", default=None,
                        help="use the calibrated noise model")
    parser.add_argument("--tau", type=float)
    parser.add_argument("--osc-amp", dest="osc_amp", type=float)
    parser.add_argument("--osc-freq", dest="osc_freq", type=float)
    parser.add_argument("--envelope", choices=("gaussian", "exponential"))
    parser.add_argument("--storage-time", dest="storage_time", type=float)
    parser.add_argument("--feedforward", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--mode", choices=mbqc.SWEEP_MODES)
    parser.add_argument("--per-branch", dest="per_branch", action="store_true", default=None)
    parser.add_argument("--t-max", dest="t_max", type=float)
    parser.add_argument("--t-step", dest="t_step", type=float)
    parser.add_argument("--target-t1", dest="target_t1", type=float)
    parser.add_argument("--target-f1", dest="target_f1", type=float)
    parser.add_argument("--target-t2", dest="target_t2", type=float)
    parser.add_argument("--target-f2", dest="target_f2", type=float)
    parser.add_argument("--eom-response", dest="eom_response", type=float)
    parser.add_argument("--optical-propagation", dest="optical_propagation", type=float)
    parser.add_argument("--signal-processing", dest="signal_processing", type=float)
    parser.add_argument("--storage-before-first-readout",
                        dest="storage_before_first_readout", type=float)
    parser.add_argument("--coherence-time", dest="coherence_time", type=float)
    return parser


def parse_args(argv=None) -> ScenarioConfig:
    """Merge defaults, config file, and flags (in increasing precedence)."""
    args = build_parser().parse_args(argv)
    config = ScenarioConfig()
    valid_keys = {f.name for f in fields(ScenarioConfig)}

    if args.config:
        for key, raw in read_key_value_file(args.config).items():
            if key not in valid_keys:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(config, key, _coerce(key, raw, _FIELD_KINDS[key]))

    if args.noise_file is None and config.noise_file:
        args.noise_file = config.noise_file
    if args.noise_file:
        allowed = {"theta", "imbalance", "spatial_white_noise", "tau",
                   "osc_amp", "osc_freq", "envelope", "storage_time"}
        for key, raw in read_key_value_file(args.noise_file).items():
            if key not in allowed:
                raise ConfigError(f"unknown noise-file key {key!r}")
            setattr(config, key, _coerce(key, raw, _FIELD_KINDS[key]))
        config.noise_file = args.noise_file

    for key in valid_keys:
        if hasattr(args, key) and getattr(args, key) is not None:
            setattr(config, key, getattr(args, key))
    if args.scenario_pos is not None:
        config.scenario = args.scenario_pos

    if config.scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {', '.join(SCENARIOS)}, got {config.scenario!r}"
        )
    if config.format is not None and config.format not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {config.format!r}")
    if config.mode not in mbqc.SWEEP_MODES:
        raise ConfigError(f"mode must be one of {mbqc.SWEEP_MODES}, got {config.mode!r}")
    if config.shots < 0:
        raise ConfigError(f"shots must be >= 0, got {config.shots}")
    if config.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {config.seed}")
    if config.storage_time < 0:
        raise ConfigError(f"storage_time must be >= 0, got {config.storage_time}")
    return config


def _calibration_targets(config: ScenarioConfig) -> dict:
    return {config.target_t1: config.target_f1, config.target_t2: config.target_f2}


def _resolve_model(config: ScenarioConfig):
    """(prep, storage_noise or None, storage_time) from the configuration."""
    if config.calibrated:
        result = noise.calibrate(_calibration_targets(config), envelope=config.envelope)
        t = config.storage_time if config.storage_time > 0 else config.target_t1
        return result.prep, result.noise, t
    try:
        prep = cluster.PreparationParams(
            theta=config.theta,
            imbalance=config.imbalance,
            spatial_white_noise=config.spatial_white_noise,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if config.noiseless or config.ideal or config.tau is None:
        return prep, None, 0.0
    try:
        storage = noise.StorageNoiseParams(
            tau=config.tau, osc_amp=config.osc_amp,
            osc_freq=config.osc_freq, envelope=config.envelope,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return prep, storage, config.storage_time


def _state_for(config: ScenarioConfig):
    prep, storage, t = _resolve_model(config)
    rho = cluster.prepare_cluster(prep)
    if storage is not None and t > 0:
        rho = noise.apply_storage(rho, t, storage)
    return rho


def _run_witness(config: ScenarioConfig):
    report = cluster.evaluate_witness(_state_for(config))
    return {
        "expectation": report.expectation,
        "bound": report.fidelity_lower_bound,
        "genuinely_entangled": report.genuinely_entangled,
    }


def _run_lifetime(config: ScenarioConfig):
    prep, storage, _ = _resolve_model(config)
    if storage is None:
        raise ConfigError("lifetime needs storage noise: pass --calibrated or --tau")
    if config.t_step <= 0 or config.t_max < 0:
        raise ConfigError("need t_step > 0 and t_max >= 0")
    steps = int(math.floor(config.t_max / config.t_step + 1e-9))
    times = [i * config.t_step for i in range(steps + 1)]
    points = noise.lifetime_curve(times, prep, storage)
    return ["t_us", "fidelity_bound"], [[p.t, p.fidelity_bound] for p in points]


def _run_tomography(config: ScenarioConfig):
    if config.tables_in:
        try:
            lines = Path(config.tables_in).read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read tables file {config.tables_in}: {exc}") from exc
        tables = [measure.CountTable.from_json(line) for line in lines if line.strip()]
        shots = tables[0].shots if tables else 0
    else:
        rho = _state_for(config)
        shots = config.shots if config.shots >= 1 else 1000
        settings = measure.pauli_settings(4)
        tables = measure.sample_counts(rho, settings, shots, measure.RandomSource(config.seed))
    if config.tables_out:
        text = "\n".join(t.to_json() for t in tables) + "\n"
        Path(config.tables_out).write_text(text)
    report = tomo.reconstruct(tables)
    payload = tomo.report_to_json_dict(report)
    payload["shots_per_setting"] = shots
    payload["n_settings"] = len(tables)
    if not config.tables_in:
        payload["seed"] = config.seed
    return payload


def _rotation_request(config: ScenarioConfig) -> mbqc.RotationRequest:
    prep, storage, t = _resolve_model(config)
    bundle = None
    if storage is not None:
        bundle = mbqc.RotationNoise(prep=prep, storage=storage, storage_time=t)
    elif (config.imbalance != 1.0 or config.spatial_white_noise != 0.0 or config.theta != 0.0):
        bundle = mbqc.RotationNoise(
            prep=prep, storage=noise.StorageNoiseParams(tau=1.0), storage_time=0.0
        )
    return mbqc.RotationRequest(
        alpha=config.alpha, beta=config.beta,
        feedforward_enabled=config.feedforward,
        shots=config.shots, noise=bundle,
    )


def _run_rotate(config: ScenarioConfig):
    result = mbqc.run_rotation(_rotation_request(config), measure.RandomSource(config.seed))
    payload = mbqc.result_to_json_dict(result)
    payload["alpha"] = config.alpha
    payload["beta"] = config.beta
    payload["feedforward"] = config.feedforward
    payload["shots"] = config.shots
    payload["seed"] = config.seed
    return payload


def _run_sweep(config: ScenarioConfig):
    template = _rotation_request(config)
    tag = "calibrated" if config.calibrated else (
        "noiseless" if template.noise is None else "noisy")
    points = mbqc.sweep(config.mode, template, noise_tag=tag,
                        rng=measure.RandomSource(config.seed))
    return mbqc.sweep_to_csv_rows(points, per_branch=config.per_branch)


def _run_budget(config: ScenarioConfig):
    budget = timing.LatencyBudget(
        eom_response=config.eom_response,
        optical_propagation=config.optical_propagation,
        signal_processing=config.signal_processing,
        storage_before_first_readout=config.storage_before_first_readout,
        coherence_time=config.coherence_time,
    )
    return {
        "cycle_us": timing.cycle_time(budget),
        "max_steps": timing.max_steps(budget),
        "note": timing.MAX_STEPS_FORMULA_NOTE,
    }


_RUNNERS = {
    "witness": _run_witness,
    "lifetime": _run_lifetime,
    "tomography": _run_tomography,
    "rotate": _run_rotate,
    "sweep": _run_sweep,
    "budget": _run_budget,
}


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_artifact(payload, fmt: str) -> str:
    """Serialize a scenario result: dict or (header, rows) table."""
    is_table = isinstance(payload, tuple)
    if fmt == "json":
        if is_table:
            header, rows = payload
            payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if is_table:
        header, rows = payload
        lines = [",".join(header)]
        lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    else:
        lines = ["key,value"] + [f"{k},{_csv_cell(v)}" for k, v in sorted(payload.items())]
    return "\n".join(lines) + "\n"


def emit_figure_data(payload, fmt: str, out: Optional[str]) -> list:
    """Write the rendered artifact to ``out`` (or stdout); returns paths written."""
    text = render_artifact(payload, fmt)
    if out is None:
        sys.stdout.write(text)
        return []
    path = Path(out)
    try:
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write output file {out}: {exc}") from exc
    return [path]


def verify_invariants(scenario: str) -> None:
    """Fast invariant suite run before emitting when --verify is set."""
    ideal = cluster.evaluate_witness(cluster.prepare_cluster(cluster.IDEAL_PREP))
    assert abs(ideal.expectation + 1.0) < 1e-10, "ideal witness expectation must be -1"
    assert abs(ideal.fidelity_lower_bound - 1.0) < 1e-10, "ideal witness bound must be 1"
    for term in cluster.witness_stabilizer_terms():
        val = qcore.expectation(cluster.cluster_statevector(), term)
        assert abs(val - 1.0) < 1e-10, "witness term must stabilize the cluster"
    if scenario in ("lifetime", "witness", "tomography"):
        params = noise.StorageNoiseParams(tau=5.0, osc_amp=0.3, osc_freq=2.0)
        for t in np.linspace(0.0, 40.0, 81):
            g = noise.coherence_retention(float(t), params)
            assert 0.0 <= g <= 1.0, "retention must stay in [0, 1]"
        mixed = qcore.maximally_mixed(4)
        out = noise.apply_storage(mixed, 3.0, params)
        assert np.abs(out.entries - mixed.entries).max() < 1e-10, "storage must be unital"
    if scenario in ("rotate", "sweep"):
        for alpha in (0.0, math.pi / 3, math.pi):
            for beta in (0.0, math.pi / 2):
                ok, residuals = mbqc.branch_verify(alpha, beta)
                assert ok, f"branch identity failed: {residuals}"
    if scenario == "budget":
        base = timing.REFERENCE_BUDGET
        longer = timing.LatencyBudget(
            base.eom_response, base.optical_propagation, base.signal_processing,
            base.storage_before_first_readout, base.coherence_time + 5.0)
        assert timing.max_steps(longer) >= timing.max_steps(base), \
            "max_steps must grow with coherence time"


def run(config: ScenarioConfig) -> int:
    """Execute one scenario; returns the process exit code."""
    runner = _RUNNERS.get(config.scenario)
    if runner is None:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    if config.verify:
        verify_invariants(config.scenario)
    payload = runner(config)
    fmt = config.format or _DEFAULT_FORMATS[config.scenario]
    emit_figure_data(payload, fmt, config.out)
    return 0


def main(argv=None) -> int:
    try:
        config = parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except noise.CalibrationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (ValueError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
