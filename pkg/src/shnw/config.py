"""JSON configuration schema, validation, and the experiment manifest."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import asdict, dataclass

from .dynamics import InitialDataSpec, NoiseSpec, SimConfig

ARTIFACT_VERSION = "0.1.0"
SEED_ENV_VAR = "SHNW_SEED"


class ConfigError(ValueError):
    """Schema violation; the message names the offending key and constraint."""


_GRID_KEYS = {"d", "M", "L"}
_NOISE_KEYS = {"profile", "amplitude", "exponent", "cutoff"}
_INITIAL_KEYS = {"kind", "u0", "u1", "window", "law", "seed"}
_TOP_KEYS = {
    "grid", "gamma", "mu", "dt", "t_final", "sample_every", "truncation_N",
    "picard_iterations", "dealias", "noise", "initial_data", "formulation",
    "blowup_threshold", "trajectories", "master_seed", "snapshot_times",
}

_DEFAULTS = {
    "sample_every": 1,
    "truncation_N": None,
    "picard_iterations": 2,
    "dealias": False,
    "noise": {"profile": "none", "amplitude": 0.0, "exponent": 0.0, "cutoff": 0.0},
    "initial_data": {"kind": "zero", "u0": None, "u1": None,
                     "window": "raised_cosine", "law": "gaussian", "seed": 0},
    "formulation": "full_u",
    "blowup_threshold": 1.0e4,
    "trajectories": 1,
    "master_seed": 0,
    "snapshot_times": [],
}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return section[key]


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key {key!r} must be a number, got {value!r}")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key {key!r} must be an integer, got {value!r}")
    return value


def parse_config(text: str) -> SimConfig:
    """Parse and validate a JSON configuration document.

    Unknown keys are rejected, defaults are applied, and every SimConfig
    invariant is checked here rather than at run time.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "configuration root")

    grid = _require(doc, "grid", "configuration root")
    if not isinstance(grid, dict):
        raise ConfigError("key 'grid' must be an object")
    _reject_unknown(grid, _GRID_KEYS, "grid")
    d = _as_int(_require(grid, "d", "grid"), "grid.d")
    M = _as_int(_require(grid, "M", "grid"), "grid.M")
    L = _as_number(_require(grid, "L", "grid"), "grid.L")

    gamma = _as_number(_require(doc, "gamma", "configuration root"), "gamma")
    if not 0.0 < gamma < d:
        raise ConfigError(f"potential exponent out of range: gamma={gamma} requires 0 < gamma < d={d}")
    mu = _as_number(_require(doc, "mu", "configuration root"), "mu")
    dt = _as_number(_require(doc, "dt", "configuration root"), "dt")
    t_final = _as_number(_require(doc, "t_final", "configuration root"), "t_final")

    merged = dict(_DEFAULTS)
    for key in _DEFAULTS:
        if key in doc:
            merged[key] = doc[key]

    noise_doc = merged["noise"]
    if not isinstance(noise_doc, dict):
        raise ConfigError("key 'noise' must be an object")
    _reject_unknown(noise_doc, _NOISE_KEYS, "noise")
    noise_full = dict(_DEFAULTS["noise"])
    noise_full.update(noise_doc)
    noise = NoiseSpec(profile=str(noise_full["profile"]),
                      amplitude=_as_number(noise_full["amplitude"], "noise.amplitude"),
                      exponent=_as_number(noise_full["exponent"], "noise.exponent"),
                      cutoff=_as_number(noise_full["cutoff"], "noise.cutoff"))

    init_doc = merged["initial_data"]
    if not isinstance(init_doc, dict):
        raise ConfigError("key 'initial_data' must be an object")
    _reject_unknown(init_doc, _INITIAL_KEYS, "initial_data")
    init_full = dict(_DEFAULTS["initial_data"])
    init_full.update(init_doc)
    initial = InitialDataSpec(kind=str(init_full["kind"]),
                              u0_path=init_full["u0"], u1_path=init_full["u1"],
                              window=str(init_full["window"]), law=str(init_full["law"]),
                              seed=_as_int(init_full["seed"], "initial_data.seed"))

    snapshot_times = merged["snapshot_times"]
    if not isinstance(snapshot_times, list):
        raise ConfigError("key 'snapshot_times' must be a list of times")

    truncation = merged["truncation_N"]
    if truncation is not None:
        truncation = _as_number(truncation, "truncation_N")

    try:
        cfg = SimConfig(
            d=d, M=M, L=L, gamma=gamma, mu=mu, dt=dt, t_final=t_final,
            sample_every=_as_int(merged["sample_every"], "sample_every"),
            truncation_N=truncation,
            picard_iterations=_as_int(merged["picard_iterations"], "picard_iterations"),
            dealias=bool(merged["dealias"]),
            noise=noise, initial_data=initial,
            formulation=str(merged["formulation"]),
            blowup_threshold=_as_number(merged["blowup_threshold"], "blowup_threshold"),
            trajectories=_as_int(merged["trajectories"], "trajectories"),
            master_seed=_as_int(merged["master_seed"], "master_seed"),
            snapshot_times=tuple(_as_number(t, "snapshot_times[]") for t in snapshot_times),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    # grid invariants are enforced by SpectralGrid
    try:
        cfg.grid()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def apply_seed_override(cfg: SimConfig) -> SimConfig:
    """Honor the SHNW_SEED environment variable, if set."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return cfg
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    from dataclasses import replace
    return replace(cfg, master_seed=seed)


def canonical_config(cfg: SimConfig) -> dict:
    """Fully-populated configuration dictionary with defaults echoed back."""
    return {
        "grid": {"d": cfg.d, "M": cfg.M, "L": cfg.L},
        "gamma": cfg.gamma,
        "mu": cfg.mu,
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "sample_every": cfg.sample_every,
        "truncation_N": cfg.truncation_N,
        "picard_iterations": cfg.picard_iterations,
        "dealias": cfg.dealias,
        "noise": asdict(cfg.noise),
        "initial_data": {"kind": cfg.initial_data.kind, "u0": cfg.initial_data.u0_path,
                         "u1": cfg.initial_data.u1_path, "window": cfg.initial_data.window,
                         "law": cfg.initial_data.law, "seed": cfg.initial_data.seed},
        "formulation": cfg.formulation,
        "blowup_threshold": cfg.blowup_threshold,
        "trajectories": cfg.trajectories,
        "master_seed": cfg.master_seed,
        "snapshot_times": list(cfg.snapshot_times),
    }


def config_hash(cfg: SimConfig) -> str:
    payload = json.dumps(canonical_config(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class ExperimentManifest:
    config: dict
    output_dir: str
    created_at: str
    artifact_version: str
    config_hash: str


def build_manifest(cfg: SimConfig, output_dir: str) -> ExperimentManifest:
    return ExperimentManifest(
        config=canonical_config(cfg),
        output_dir=str(output_dir),
        created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        artifact_version=ARTIFACT_VERSION,
        config_hash=config_hash(cfg),
    )


def manifest_to_json(manifest: ExperimentManifest) -> str:
    return json.dumps(asdict(manifest), indent=2, sort_keys=True)


def config_from_manifest(manifest_doc: dict) -> SimConfig:
    return parse_config(json.dumps(manifest_doc["config"]))
