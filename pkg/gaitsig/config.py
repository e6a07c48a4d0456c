"""Pipeline configuration.

Values come from three layers, highest precedence first: explicit overrides
(command-line flags), a flat ``key=value`` file parsed with python-dotenv, and
the dataclass defaults below.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values

from gaitsig.errors import ConfigError
from gaitsig.models import PRESETS, Thresholds

logger = logging.getLogger(__name__)

CRITERIA = ("aic", "bic")
PENALTY_COUNTS = ("params", "order")
SIMILARITIES = ("pearson", "cosine")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class PipelineConfig:
    band_lo: float = 0.1
    band_hi: float = 10.0
    filter_order: int = 4
    mode: str = "walking"
    eps_p: float = 2.0
    eps_v: float = -2.0
    eps_lo: float = 0.5
    eps_up: float = 1.4
    auto_bounds: bool = False
    gamma: float = 1e-4
    grid_size: int = 100
    max_outer_iters: int = 20
    line_search_tol: float = 0.01
    k_min: int = 1
    k_max: int = 25
    criterion: str = "bic"
    penalty_count: str = "params"
    similarity: str = "pearson"

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.eps_p, self.eps_v)

    def validate(self, nominal_rate: float | None = None) -> None:
        if not 0 < self.band_lo < self.band_hi:
            raise ConfigError(f"band needs 0 < band_lo < band_hi, got {self.band_lo}:{self.band_hi}")
        if nominal_rate is not None and not self.band_hi < nominal_rate / 2:
            raise ConfigError(f"band_hi={self.band_hi} Hz must stay below Nyquist ({nominal_rate / 2} Hz)")
        if self.filter_order < 1:
            raise ConfigError(f"filter_order must be >= 1, got {self.filter_order}")
        if self.mode not in PRESETS:
            raise ConfigError(f"mode must be one of {sorted(PRESETS)}, got {self.mode!r}")
        if not self.eps_v < 0 < self.eps_p:
            raise ConfigError(f"thresholds need eps_v < 0 < eps_p, got eps_v={self.eps_v}, eps_p={self.eps_p}")
        if not 0 < self.eps_lo < self.eps_up:
            raise ConfigError(f"bounds need 0 < eps_lo < eps_up, got eps_lo={self.eps_lo}, eps_up={self.eps_up}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")
        if self.max_outer_iters < 1:
            raise ConfigError(f"max_outer_iters must be >= 1, got {self.max_outer_iters}")
        if not self.line_search_tol > 0:
            raise ConfigError(f"line_search_tol must be positive, got {self.line_search_tol}")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(f"order range needs 1 <= k_min <= k_max, got {self.k_min}:{self.k_max}")
        if 2 * self.k_max - 1 > self.grid_size:
            raise ConfigError(f"k_max={self.k_max} needs 2*k_max-1 <= grid_size={self.grid_size}")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.penalty_count not in PENALTY_COUNTS:
            raise ConfigError(f"penalty_count must be one of {PENALTY_COUNTS}, got {self.penalty_count!r}")
        if self.similarity not in SIMILARITIES:
            raise ConfigError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def _coerce(name: str, raw: Any, target: type) -> Any:
    if not isinstance(raw, str):
        return target(raw)
    text = raw.strip()
    try:
        if target is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if target is int:
            return int(text)
        if target is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"invalid value for {name}: {raw!r}") from None


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Build a validated config from defaults, an optional file and overrides."""
    types = {f.name: f.type for f in fields(PipelineConfig)}
    # dataclass field types are strings under postponed annotations
    types = {name: {"float": float, "int": int, "str": str, "bool": bool}[t] for name, t in types.items()}

    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            name = key.strip().lower().replace("-", "_")
            if name not in types:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            if raw is None:
                raise ConfigError(f"config key {key!r} has no value in {path}")
            values[name] = _coerce(name, raw, types[name])
        logger.debug("loaded %d config values from %s", len(values), path)

    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw, types[key])

    cfg = PipelineConfig(**values)
    preset = PRESETS.get(cfg.mode)
    if preset is not None:
        # explicit thresholds win, one field at a time
        defaults = {key: getattr(preset, key) for key in ("eps_p", "eps_v") if key not in values}
        cfg = replace(cfg, **defaults)
    cfg.validate()
    return cfg
