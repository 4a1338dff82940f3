"""Run configuration: flat dotted keys, one ``key = value`` per line, ``#`` comments."""
from __future__ import annotations

import copy
from pathlib import Path

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "out_dir": "sqglab-run",
    "threads": 0,
    "grid.n": 64,
    "sqg.gamma": 1.5,
    "sqg.kappa": 1.0,
    "sqg.eps": 0.0,
    "forcing.source": "builtin:lowmode",
    "forcing.amplitude": 0.1,
    "forcing.period": 1.0,
    "time.dt": 0.01,
    "time.scheme": "etdrk4",
    "time.t_span": 1.0,
    "time.spinup": 0.0,
    "time.sample_every": 1,
    "norms.sigma": 1.0,
    "norms.p": 4.0,
    "nudge.mu": 64.0,
    "nudge.m": 5,
    "nudge.p": 8.0,
    "nudge.operator": "lp",
    "nudge.cutoff": 0.0,
    "nudge.ref": "",
    "nudge.w0": "zero",
    "nudge.window": 2.0,
    "nudge.threshold": 1e-6,
    "detform.ref_steady": "",
    "detform.v0": "perturbed:0.01:0",
    "detform.tau_span": 0.0,
    "detform.dtau": 0.0,
    "detform.span_lambda0": 50.0,
    "detform.dtau_lambda0": 0.1,
    "detform.rhs_power": 2,
    "detform.window": 0.2,
    "detform.sample_dt": 0.02,
    "detform.tol": 0.0,
    "diagnose.run": "",
    "diagnose.check": "all",
    "diagnose.M": 0.0,
    "diagnose.delta_inf": 0.0,
    "diagnose.n_max": 12,
    "diagnose.pairs": 20,
    "lp.ensemble": 100,
    "lp.beta": 1.0,
    "lp.p": 2.0,
    "lp.q": 4.0,
    "steady.tol": 1e-10,
    "steady.t_max": 50.0,
    "periodic.tol": 1e-8,
    "periodic.max_iters": 60,
    "sweep.command": "nudge",
    "sweep.axes": "",
    "sweep.cap": 10000,
    "sweep.parallel": 1,
}

CHOICES = {
    "time.scheme": ("etdrk4", "ifrk4", "expeuler"),
    "nudge.operator": ("lp", "sharp"),
    "diagnose.check": ("levelset", "degiorgi", "bounds", "lemmas", "all"),
    "detform.rhs_power": (1, 2),
    "sweep.command": ("simulate", "nudge", "detform", "steady", "periodic"),
}


def _coerce(key: str, value):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if isinstance(default, int):
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {key}", key) from None


class RunConfig:
    """Resolved configuration; unknown keys are rejected."""

    def __init__(self, values: dict | None = None):
        self._values = copy.deepcopy(DEFAULTS)
        for k, v in (values or {}).items():
            self.set(k, v)

    def set(self, key: str, value) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown configuration key {key!r}", key)
        v = _coerce(key, value)
        if key in CHOICES and v not in CHOICES[key]:
            raise ConfigError(f"{key} must be one of {CHOICES[key]}, got {v!r}", key)
        if key == "schema_version" and v > SCHEMA_VERSION:
            raise ConfigError(f"schema_version {v} is newer than supported {SCHEMA_VERSION}", key)
        self._values[key] = v

    def __getitem__(self, key: str):
        return self._values[key]

    def get(self, key: str, default=None):
        return self._values.get(key, default)

    def as_dict(self) -> dict:
        return dict(self._values)

    def copy(self) -> "RunConfig":
        return RunConfig(self._values)

    def echo(self) -> str:
        return "".join(f"{k} = {self._values[k]!r}\n" if isinstance(self._values[k], float)
                       else f"{k} = {self._values[k]}\n" for k in sorted(self._values))


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown configuration key {key!r}", key)
        out[key] = value
    return out


def load_config(path) -> RunConfig:
    return RunConfig(parse_config_text(Path(path).read_text()))
