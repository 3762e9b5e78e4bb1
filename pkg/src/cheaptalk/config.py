"""Flat dotted-key config files for experiments.

One ``key = value`` pair per line, ``#`` comments, keys namespaced like
``sched.tau_floor``.  Unknown keys are rejected so a frozen config is an
exact record of a run.  The environment variable CHEAPTALK_SEED overrides
the base seed at resolution time.
"""

from __future__ import annotations

import os
from dataclasses import replace

from cheaptalk.harness import ExperimentConfig


class ConfigError(ValueError):
    pass


def _bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


# dotted key -> (target, field, parser); target "cfg" or "sched"
KEYS = {
    "game.k": ("cfg", "k", int),
    "game.b": ("cfg", "b", float),
    "sched.alpha_mode": ("sched", "alpha_mode", str),
    "sched.alpha": ("sched", "alpha", float),
    "sched.rm_a": ("sched", "rm_a", float),
    "sched.rm_c": ("sched", "rm_c", float),
    "sched.tau0": ("sched", "tau0", float),
    "sched.tau_floor": ("sched", "tau_floor", float),
    "sched.gamma": ("sched", "gamma", float),
    "sched.eps0": ("sched", "eps0", float),
    "sched.eps_floor": ("sched", "eps_floor", float),
    "sched.eps_gamma": ("sched", "eps_gamma", float),
    "sched.beta": ("sched", "beta", float),
    "noise.sigma_eta": ("cfg", "sigma_eta", float),
    "run.steps": ("cfg", "steps", int),
    "run.n_runs": ("cfg", "n_runs", int),
    "run.seed": ("cfg", "seed", int),
    "run.init": ("cfg", "init", str),
    "run.delta_init": ("cfg", "delta_init", float),
    "run.snapshot_interval": ("cfg", "snapshot_interval", int),
    "run.chunk_size": ("cfg", "chunk_size", int),
    "run.support_tol": ("cfg", "support_tol", float),
    "run.record_snapshots": ("cfg", "record_snapshots", _bool),
    "conv.delta": ("cfg", "delta_conv", float),
    "conv.window_steps": ("cfg", "conv_window_steps", int),
    "cycle.threshold": ("cfg", "cycle_threshold", float),
    "cycle.window": ("cfg", "cycle_window", int),
    "cycle.track": ("cfg", "track_cycles", str),
    "receiver.mode": ("cfg", "receiver_mode", str),
    "receiver.beta0": ("cfg", "recv_beta0", float),
    "receiver.p": ("cfg", "recv_p", float),
    "receiver.sigma": ("cfg", "recv_sigma", float),
}


def parse_assignments(pairs) -> dict[str, str]:
    """Split ``key=value`` strings, validating the keys."""
    out = {}
    for raw in pairs:
        if "=" not in raw:
            raise ConfigError(f"expected key=value, got {raw!r}")
        key, value = raw.split("=", 1)
        key = key.strip()
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value.strip()
    return out


def read_config_file(path) -> dict[str, str]:
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            pairs.append(line)
    return parse_assignments(pairs)


def build_config(assignments: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply dotted-key assignments on top of a base configuration."""
    cfg = base if base is not None else ExperimentConfig()
    cfg_fields: dict = {}
    sched_fields: dict = {}
    for key, raw in assignments.items():
        target, field_name, parse = KEYS[key]
        try:
            value = parse(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        (cfg_fields if target == "cfg" else sched_fields)[field_name] = value
    try:
        if sched_fields:
            cfg_fields["sched"] = replace(cfg.sched, **sched_fields)
        cfg = replace(cfg, **cfg_fields) if cfg_fields else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    env_seed = os.environ.get("CHEAPTALK_SEED")
    if env_seed is not None and "run.seed" not in assignments:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigError(f"CHEAPTALK_SEED must be an integer, got {env_seed!r}") from exc
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Frozen, diff-friendly rendering with every key explicit."""
    values = {
        "game.k": cfg.k,
        "game.b": repr(cfg.b),
        "sched.alpha_mode": cfg.sched.alpha_mode,
        "sched.alpha": repr(cfg.sched.alpha),
        "sched.rm_a": repr(cfg.sched.rm_a),
        "sched.rm_c": repr(cfg.sched.rm_c),
        "sched.tau0": repr(cfg.sched.tau0),
        "sched.tau_floor": repr(cfg.sched.tau_floor),
        "sched.gamma": repr(cfg.sched.gamma),
        "sched.eps0": repr(cfg.sched.eps0),
        "sched.eps_floor": repr(cfg.sched.eps_floor),
        "sched.eps_gamma": repr(cfg.sched.eps_gamma),
        "sched.beta": repr(cfg.sched.beta),
        "noise.sigma_eta": repr(cfg.sigma_eta),
        "run.steps": cfg.steps,
        "run.n_runs": cfg.n_runs,
        "run.seed": cfg.seed,
        "run.init": cfg.init,
        "run.delta_init": repr(cfg.delta_init),
        "run.snapshot_interval": cfg.snapshot_interval,
        "run.chunk_size": cfg.chunk_size,
        "run.support_tol": repr(cfg.support_tol),
        "run.record_snapshots": cfg.record_snapshots,
        "conv.delta": repr(cfg.delta_conv),
        "conv.window_steps": cfg.conv_window_steps,
        "cycle.threshold": repr(cfg.cycle_threshold),
        "cycle.window": cfg.cycle_window,
        "cycle.track": cfg.track_cycles,
        "receiver.mode": cfg.receiver_mode,
        "receiver.beta0": repr(cfg.recv_beta0),
        "receiver.p": repr(cfg.recv_p),
        "receiver.sigma": repr(cfg.recv_sigma),
    }
    return "".join(f"{k} = {values[k]}\n" for k in sorted(values))
