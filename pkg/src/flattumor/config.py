"""Run configuration: one flat JSON document per run."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .integrator import IntegratorConfig
from .model import ForcingFunction, ModelParams


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


REQUIRED = ("mu", "sigma_tilde", "period", "a0")


@dataclass
class RunConfig:
    mu: float
    sigma_tilde: float
    period: float
    a0: float
    cos: list[float] = field(default_factory=list)
    sin: list[float] = field(default_factory=list)
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float | None = None
    max_steps: int = 10_000_000
    rho0: float = 1.0
    t_end: float | None = None
    n_periods: int = 10
    samples: int = 201
    probe_deviation: float = 2.0
    tol: float = 1e-10
    seed: int = 0

    def params(self) -> ModelParams:
        forcing = ForcingFunction(self.period, self.a0, tuple(self.cos), tuple(self.sin))
        return ModelParams(self.mu, self.sigma_tilde, forcing)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.rel_tol, self.abs_tol, self.max_step, self.max_steps)

    def span(self) -> float:
        return self.t_end if self.t_end is not None else self.n_periods * self.period

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = {"mu": 1.0, "sigma_tilde": 0.5, "period": 1.0, "a0": 1.0, "cos": [0.5], "sin": []}

_FLOATS = ("mu", "sigma_tilde", "period", "a0", "rel_tol", "abs_tol", "rho0", "probe_deviation", "tol")
_OPTIONAL_FLOATS = ("max_step", "t_end")
_INTS = ("max_steps", "n_periods", "samples", "seed")
_POSITIVE = ("mu", "sigma_tilde", "period", "rel_tol", "abs_tol", "rho0", "probe_deviation", "tol")


def _number(key, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def from_dict(doc: dict) -> RunConfig:
    """Validate a flat mapping and build a :class:`RunConfig`.

    Every model and forcing invariant is re-checked here, so errors name
    the field that caused them.
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown field")
    for key in REQUIRED:
        if key not in doc:
            raise ConfigError(key, "missing required field")
    kw = {}
    for key in _FLOATS:
        if key in doc:
            kw[key] = _number(key, doc[key])
    for key in _OPTIONAL_FLOATS:
        if doc.get(key) is not None:
            kw[key] = _number(key, doc[key])
            if kw[key] <= 0:
                raise ConfigError(key, "must be positive")
    for key in _INTS:
        if key in doc:
            v = doc[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(key, f"expected an integer, got {v!r}")
            kw[key] = v
    for key in ("cos", "sin"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, list):
                raise ConfigError(key, "expected a list of numbers")
            kw[key] = [_number(f"{key}[{i}]", c) for i, c in enumerate(v)]
    for key in _POSITIVE:
        if key in kw and kw[key] <= 0:
            raise ConfigError(key, "must be positive")
    for key in ("max_steps", "n_periods", "samples"):
        if key in kw and kw[key] < (2 if key == "samples" else 1):
            raise ConfigError(key, "too small")
    if kw.get("seed", 0) < 0:
        raise ConfigError("seed", "must be non-negative")
    cfg = RunConfig(**kw)
    try:
        cfg.params()
    except ValueError as exc:
        # field checks above leave forcing positivity as the only failure
        raise ConfigError("a0", f"{exc} (a0 too small for the cos/sin harmonics)") from exc
    return cfg


def load(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError("--config", f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"line {exc.lineno}: {exc.msg}") from exc
    return from_dict(doc)
