"""Experiment configuration: a flat, JSON-compatible key-value document."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .params import L_COEFFICIENTS, PARAMETER_SETS, ModelParams
from .quadrature import QUADRATURE_KINDS

__all__ = ["SimConfig", "SCHEMES", "load_config"]

SCHEMES = ("weighted", "milstein", "qe")
_MODEL_KEYS = tuple(f.name for f in fields(ModelParams))


@dataclass
class SimConfig:
    """Everything needed to re-run an experiment.

    ``parameter_set`` is either a key of ``PARAMETER_SETS`` or ``"custom"``, in
    which case ``model`` holds inline parameters.  ``strikes`` are moneyness
    ratios K/S0.
    """

    parameter_set: str = "PS2"
    model: dict[str, float] | None = None
    scheme: str = "weighted"
    T: float = 1.0
    h: float = 0.02
    M: int = 2
    N: int = 50_000
    delta: float = 1e-5
    strikes: list[float] = field(default_factory=lambda: [1.0])
    repetitions: int = 20
    seed: int = 20240611
    quadrature: str = "simpson13"
    phi_c: float = 1.5
    milstein_correlated: bool = True
    l_coefficient: str = "derived"
    integer_tol: float = 1e-3
    workers: int = 1
    exact_prices: list[float | None] | None = None

    @property
    def steps(self) -> int:
        return int(round(self.T / self.h))

    def model_params(self) -> ModelParams:
        if self.parameter_set == "custom":
            return ModelParams(**self.model)
        return PARAMETER_SETS[self.parameter_set]

    def validate(self) -> SimConfig:
        """Raise :class:`ConfigError` naming the first offending field."""
        if self.parameter_set == "custom":
            if not isinstance(self.model, dict) or set(self.model) != set(_MODEL_KEYS):
                raise ConfigError(f"custom parameter set needs keys {list(_MODEL_KEYS)}", "model")
        elif self.parameter_set not in PARAMETER_SETS:
            raise ConfigError(
                f"unknown parameter set {self.parameter_set!r}; expected one of "
                f"{sorted(PARAMETER_SETS)} or 'custom'",
                "parameter_set",
            )
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}", "scheme")
        for name in ("T", "h"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"must be a finite number > 0, got {value!r}", name)
        if abs(self.T / self.h - self.steps) > 1e-9 * max(1, self.steps) or self.steps < 1:
            raise ConfigError(f"T/h = {self.T / self.h!r} is not an integer; the grid must tile [0, T]", "h")
        for name in ("M", "N", "repetitions", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"must be an integer >= 1, got {value!r}", name)
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.delta!r}", "delta")
        if not isinstance(self.strikes, list) or any(
            not isinstance(k, (int, float)) or not k > 0 for k in self.strikes
        ):
            raise ConfigError(f"must be a list of positive moneyness ratios, got {self.strikes!r}", "strikes")
        if self.quadrature not in QUADRATURE_KINDS:
            raise ConfigError(f"expected one of {QUADRATURE_KINDS}, got {self.quadrature!r}", "quadrature")
        if self.quadrature == "simpson13" and self.M % 2:
            raise ConfigError(f"simpson13 needs an even M, got {self.M}", "M")
        if not 1.0 <= self.phi_c <= 2.0:
            raise ConfigError(f"must lie in [1, 2], got {self.phi_c!r}", "phi_c")
        if self.l_coefficient not in L_COEFFICIENTS:
            raise ConfigError(f"expected one of {L_COEFFICIENTS}, got {self.l_coefficient!r}", "l_coefficient")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"must be an integer in [0, 2^64), got {self.seed!r}", "seed")
        if self.exact_prices is not None and len(self.exact_prices) != len(self.strikes):
            raise ConfigError("must have one entry per strike", "exact_prices")
        return self

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown keys {unknown}", unknown[0])
        return cls(**data)


def load_config(path: str | Path | None, **overrides: Any) -> SimConfig:
    """Read a JSON config file (or start from defaults) and apply overrides.

    ``None``-valued overrides are ignored so CLI flags that were not given do
    not clobber file values.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig.from_dict(data).validate()
