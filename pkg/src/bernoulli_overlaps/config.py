"""Run configuration: a flat ``key = value`` text file.

Example::

    # x^4 - x^3 - x^2 + x - 1
    polynomial = 1, -1, -1, 1, -1
    B = 20
    K = 12

Unknown keys are rejected.  See ``FIELDS`` for the schema and defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    polynomial: list = field(default_factory=lambda: [1, -1, -1, 1, -1])
    free_override: int | None = None
    eps_hyp: float = 1e-8
    B: float = 20.0              # window for the weight table and Condition 1
    B_det: float = 200.0         # window for the successor chain
    K: int = 12                  # fractal depth
    eps_R: float = 1e-3          # interior margin for Condition 1
    delta: float = 1e-4          # fractal cloud deduplication
    pixel: float = 0.005         # certificate grid spacing
    n_stab: int = 30
    n_max: int = 20              # equidistribution rows (W1 table)
    count_nmax: int = 10         # overlap counting depth
    mode: str = "linear"
    atom_cap: int = 10_000_000
    max_points: int = 5_000_000
    output_dir: str = "out"
    jobs: int = 1
    cache: bool = True

    def validate(self) -> "RunConfig":
        if not self.polynomial or not all(isinstance(c, int) for c in self.polynomial):
            raise ConfigError("polynomial must be a nonempty list of integers")
        for name in ("eps_hyp", "B", "B_det", "eps_R", "delta", "pixel"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("K", "n_stab", "n_max", "count_nmax", "atom_cap", "max_points", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.mode not in ("linear", "geometric"):
            raise ConfigError("mode must be 'linear' or 'geometric'")
        if self.n_stab < 3:
            raise ConfigError("n_stab must be at least 3")
        return self

    def check_bounds(self, threshold: float) -> None:
        """B values must reach the free escape radius."""
        for name in ("B", "B_det"):
            if getattr(self, name) < threshold:
                raise ConfigError(f"{name}={getattr(self, name)} is below the escape "
                                  f"threshold {threshold:.6g}")

    def digest(self, *names: str) -> str:
        """Short hash of the named fields (all fields when none given)."""
        d = dataclasses.asdict(self)
        keys = names or tuple(sorted(d))
        payload = json.dumps({k: d[k] for k in keys}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    t = _TYPES[key]
    raw = raw.strip()
    try:
        if key == "polynomial":
            return [int(x) for x in raw.replace("[", "").replace("]", "").split(",") if x.strip()]
        if key == "free_override":
            return None if raw.lower() in ("", "none") else int(raw)
        if t == "bool":
            return raw.lower() in ("1", "true", "yes", "on")
        if t == "int":
            return int(float(raw))
        if t == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values = {}
    for key, raw in cp["run"].items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return RunConfig(**values).validate()


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def apply_overrides(cfg: RunConfig, **kw) -> RunConfig:
    upd = {k: v for k, v in kw.items() if v is not None}
    return dataclasses.replace(cfg, **upd).validate()
