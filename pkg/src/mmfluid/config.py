"""Line-oriented scenario configuration: `[section]` headers and
`key = value` pairs, with unknown keys rejected."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigInvalid

__all__ = ["ScenarioConfig", "parse_config", "load_config", "rescale_parameters"]

_PRESETS = ("taylor-green", "random-seeded", "uniform-f", "aligned-f", "file")

# section -> key -> (type, default)
_SCHEMA = {
    "grid": {
        "n_x": (int, 64),
        "n_y": (int, 64),
        "length": (float, 2.0 * math.pi),
    },
    "manifold": {
        "n_m": (int, 64),
        "s": (float, 2.0),
    },
    "params": {
        "delta": (float, 1.0),
        "b": (float, 0.0),
        "tau": (float, 1.0),
        "nu": (float, 1.0),
        "k_max": (int, 2),
    },
    "initial": {
        "preset": (str, "taylor-green"),
        "rho0": (float, 0.5),
        "alignment": (float, 0.8),
        "amplitude": (float, 1.0),
        "path": (str, ""),
    },
    "run": {
        "T": (float, 1.0),
        "dt": (float, 1e-3),
        "cfl_safety": (float, 0.5),
        "snapshot_stride": (int, 10),
        "seed": (int, 0),
    },
    "diagnostics": {
        "reports": (str, "energy,vorticity,log,amplification,gronwall,microbudget"),
        "r_values": (str, "2,4"),
        "epsilon": (float, 1.0),
    },
}


@dataclass
class ScenarioConfig:
    """Validated scenario description; field names mirror the config file."""

    values: dict = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key)

    @property
    def r_list(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.r_values.split(",") if v.strip())

    @property
    def report_list(self) -> tuple[str, ...]:
        return tuple(v.strip() for v in self.reports.split(",") if v.strip())

    def as_items(self):
        return sorted(self.values.items())


def _coerce(section: str, key: str, raw: str, lineno: int):
    typ, _ = _SCHEMA[section][key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigInvalid(
            f"line {lineno}: cannot parse {section}.{key} = {raw!r} as {typ.__name__}"
        )


def parse_config(text: str) -> ScenarioConfig:
    values = {k: default for sec in _SCHEMA.values() for k, (_, default) in sec.items()}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigInvalid(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key = value, got {line!r}")
        if section is None:
            raise ConfigInvalid(f"line {lineno}: key outside any section")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigInvalid(f"line {lineno}: unknown key {section}.{key}")
        values[key] = _coerce(section, key, raw, lineno)
    config = ScenarioConfig(values)
    _validate(config)
    return config


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _validate(c: ScenarioConfig) -> None:
    if c.delta <= 0 or c.tau <= 0 or c.nu <= 0:
        raise ConfigInvalid("delta, tau, nu must be positive")
    if c.b < 0:
        raise ConfigInvalid("b must be nonnegative")
    if c.preset not in _PRESETS:
        raise ConfigInvalid(f"unknown preset {c.preset!r}; choose from {_PRESETS}")
    if c.preset == "file" and not c.path:
        raise ConfigInvalid("preset 'file' requires initial.path")
    if not 0.0 <= c.rho0 <= 1.0:
        raise ConfigInvalid("initial density rho0 must lie in [0, 1]")
    if not 0.0 <= c.alignment < 1.0:
        raise ConfigInvalid("alignment must lie in [0, 1)")
    if c.T <= 0 or c.dt <= 0:
        raise ConfigInvalid("run T and dt must be positive")
    if c.snapshot_stride < 1:
        raise ConfigInvalid("snapshot_stride must be >= 1")
    if c.k_max not in (1, 2):
        raise ConfigInvalid("k_max must be 1 or 2")
    for r in c.r_list:
        if r < 2:
            raise ConfigInvalid("diagnostic exponents r must be >= 2")
    if c.epsilon <= 0:
        raise ConfigInvalid("epsilon must be positive")


def rescale_parameters(nu: float, tau: float, delta: float) -> dict:
    """Physical-to-rescaled mapping: unit viscosity via lam = sqrt(nu tau / delta)."""
    if nu <= 0 or tau <= 0 or delta <= 0:
        raise ConfigInvalid("nu, tau, delta must be positive")
    lam = math.sqrt(nu * tau / delta)
    return {
        "lambda": lam,
        "time_scale": 1.0 / nu,        # t' = nu t
        "space_scale": 1.0,            # same torus
        "velocity_scale": 1.0 / nu,    # u' = u / nu
        "stress_prefactor": tau / (delta * nu),
        "rescaled_nu": 1.0,
    }
