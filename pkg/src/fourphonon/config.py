"""Run configuration: strict JSON with four sections.

Units: ``g2``, ``kappa`` and ``gamma`` share one rate unit (``kappa = 1``
makes it the cavity linewidth); ``r``, ``theta`` (radians) and ``n_th`` are
dimensionless; ``t_cap`` and ``dt_max`` are in the time unit of the chosen
generator; ``x_max`` is in units of the zero-point quadrature.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import DomainError
from .model import MAX_FULL_DIM, MIN_EFFECTIVE_DIM, ModelParams
from .oracle import R_MAX


class ConfigError(DomainError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class ModelSection:
    r: float = 0.0
    theta: float = 0.0
    g2: float = 0.05
    kappa: float = 1.0
    gamma: float = 0.0
    n_th: float = 0.0
    include_mech_bath: bool = False

    def validate(self):
        for name in ("r", "g2", "gamma", "n_th"):
            if getattr(self, name) < 0:
                raise ConfigError(f"model.{name} must be >= 0")
        if self.kappa <= 0:
            raise ConfigError("model.kappa must be > 0")
        if self.r > R_MAX:
            raise ConfigError(f"model.r must be <= {R_MAX}")


@dataclass(frozen=True)
class NumericsSection:
    dim_cavity: int = 0  # 0 selects the default rule
    dim_mech: int = 0
    dt_max: float | None = None
    stop_tol: float = 1e-10
    t_cap: float | None = None
    method: str = "implicit"

    def validate(self):
        if self.dim_cavity < 0 or self.dim_mech < 0:
            raise ConfigError("numerics dims must be >= 0 (0 = default)")
        if 0 < self.dim_mech < MIN_EFFECTIVE_DIM:
            raise ConfigError(f"numerics.dim_mech must be >= {MIN_EFFECTIVE_DIM}")
        if self.dim_mech > MAX_FULL_DIM or self.dim_cavity > MAX_FULL_DIM:
            raise ConfigError(f"numerics dims must be <= {MAX_FULL_DIM}")
        for name in ("dt_max", "t_cap"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"numerics.{name} must be > 0")
        if not self.stop_tol > 0:
            raise ConfigError("numerics.stop_tol must be > 0")
        if self.method not in ("implicit", "rk4"):
            raise ConfigError("numerics.method must be 'implicit' or 'rk4'")


@dataclass(frozen=True)
class WignerSection:
    x_max: float | None = None  # None selects ceil(3 sqrt(2 nbar + 1))
    n_points: int = 161

    def validate(self):
        if self.x_max is not None and not self.x_max > 0:
            raise ConfigError("wigner.x_max must be > 0")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ConfigError("wigner.n_points must be an odd integer >= 3")


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    format: str = "csv"

    def validate(self):
        if self.format not in ("csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")


_SECTIONS = {
    "model": ModelSection,
    "numerics": NumericsSection,
    "wigner": WignerSection,
    "output": OutputSection,
}


def _coerce(section: str, f, value):
    where = f"{section}.{f.name}"
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    if value is None:
        if "None" in kind:
            return None
        raise ConfigError(f"{where} may not be null")
    if kind.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if kind.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if kind.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where} must be finite")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{where} must be a string")
    return value


def _build_section(name, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
    section = cls(**{k: _coerce(name, known[k], v) for k, v in raw.items()})
    section.validate()
    return section


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    wigner: WignerSection = field(default_factory=WignerSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(raw) - set(_SECTIONS))
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
        return cls(**{k: _build_section(k, _SECTIONS[k], raw.get(k, {})) for k in _SECTIONS})

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def override(self, section: str, **values) -> "RunConfig":
        """New config with the non-None ``values`` replaced in ``section``."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        merged = {**asdict(getattr(self, section)), **values}
        return replace(self, **{section: _build_section(section, _SECTIONS[section], merged)})

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def model_params(self) -> ModelParams:
        m, n = self.model, self.numerics
        return ModelParams.build(
            m.r, m.theta, g2=m.g2, kappa=m.kappa, gamma=m.gamma, n_th=m.n_th,
            dim_cavity=n.dim_cavity, dim_mech=n.dim_mech, include_mech_bath=m.include_mech_bath,
        )
