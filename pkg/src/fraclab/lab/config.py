"""Experiment configuration: defaults, flat key=value files, overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXPERIMENTS = (
    "matrix-limits",
    "ball-validate",
    "pointwise-limits",
    "rate-study",
    "parabolic-study",
)
RHS_CHOICES = ("constant", "sin-pi-x2", "piecewise-constant", "mollified-div")


class ConfigError(ValueError):
    pass


def rate_grid(count=20, gap_min=5e-3, gap_max=0.5):
    """Orders s with 1 - s log-spaced in [gap_min, gap_max], increasing."""
    return tuple(float(1.0 - g) for g in np.geomspace(gap_max, gap_min, count))


_DEFAULTS = {
    "matrix-limits": dict(n=63, s_grid=(1e-4, 1e-3, 1e-2, 0.1, 0.3, 0.5, 0.75, 0.9, 0.99, 0.999, 0.9999)),
    "ball-validate": dict(n=1023, s_grid=(0.5, 0.9999)),
    "pointwise-limits": dict(n=11, s_grid=(0.01, 0.999)),
    "rate-study": dict(n=511, s_grid=rate_grid(), rhs="sin-pi-x2"),
    "parabolic-study": dict(n=255, s_grid=(0.9999,), dt=1e-3, T=0.5),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    a: float = -1.0
    b: float = 1.0
    n: int = 63
    s_grid: tuple = (0.5,)
    rhs: str = "constant"
    dt: float = 1e-3
    T: float = 0.5
    out: Path = field(default=Path("results"))
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.a < self.b:
            raise ConfigError("need a < b")
        if self.n < 3:
            raise ConfigError("n must be at least 3")
        sg = tuple(float(s) for s in self.s_grid)
        if not sg or any(not 0.0 < s < 1.0 for s in sg):
            raise ConfigError("every s in s_grid must lie in (0, 1)")
        if any(s2 <= s1 for s1, s2 in zip(sg, sg[1:])):
            raise ConfigError("s_grid must be strictly increasing")
        object.__setattr__(self, "s_grid", sg)
        if self.rhs not in RHS_CHOICES:
            raise ConfigError(f"rhs must be one of {', '.join(RHS_CHOICES)}")
        if not self.dt > 0 or self.T < self.dt:
            raise ConfigError("need dt > 0 and T >= dt")
        object.__setattr__(self, "out", Path(self.out))

    @classmethod
    def for_experiment(cls, experiment, **overrides):
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        values = dict(_DEFAULTS[experiment])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(experiment=experiment, **values)


_CASTS = {
    "a": float,
    "b": float,
    "n": int,
    "s_grid": lambda v: parse_s_grid(v),
    "rhs": str,
    "dt": float,
    "T": float,
    "out": Path,
    "seed": int,
}


def parse_s_grid(text):
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad s grid {text!r}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CASTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CASTS[key](value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def build_config(experiment, config_path=None, **overrides):
    values = read_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.for_experiment(experiment, **values)


def replace(cfg, **changes):
    return dataclasses.replace(cfg, **changes)
