"""Experiment configuration: JSON in, validated dataclasses out.

All lengths are in metres. Validation happens before any computation and
rejects unknown keys at every level.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import jsonschema

from .channel import default_basis
from .nonlinear import CrystalConfig

CHANNEL_SOURCES = ("identity", "random-unitary", "kolmogorov", "zernike", "file")


class ConfigError(ValueError):
    pass


@dataclass
class CrystalSection:
    lambda1: float = 1.0e-6
    lambda2: float = 1.0e-6
    n1: float = 1.66
    n2: float = 1.66
    L: float = 0.0


@dataclass
class WaistSection:
    w1: float = 50e-6
    w2: float = 50e-6
    w_c: float = 100e-6


@dataclass
class ChannelSection:
    source: str = "random-unitary"
    waist: float = 0.01  # beam waist at the phase screen
    r0: float = 0.01 / 0.3
    side: int = 128
    dx: float | None = None  # default: 8 * waist / side
    zernike: list = field(default_factory=list)  # [[n, m, amplitude_rad], ...]
    aperture_radius: float | None = None  # default: 3 * waist
    path: str | None = None

    def grid_spacing(self) -> float:
        return self.dx if self.dx is not None else 8.0 * self.waist / self.side


@dataclass
class NoiseSection:
    kind: str = "none"
    n_photons: float = 0.0


@dataclass
class VerifySection:
    ell_max: int = 3
    order: int = 32
    tolerance: float = 1e-6
    zero_tolerance: float = 1e-10


@dataclass
class DesignSection:
    nominal_wavelength: float = 1.0e-6
    repetition_frequency: float = 1.0e9
    component_spacing_multiple: int = 2
    lines_per_mm: float = 3000.0
    slm_width_pixels: int = 1000


@dataclass
class ExperimentConfig:
    dimension: int = 3
    basis: list | None = None
    seed: int = 0
    compensate_lambda: bool = True
    adaptive_reference: bool = True
    waists: WaistSection = field(default_factory=WaistSection)
    crystal: CrystalSection = field(default_factory=CrystalSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    verify: VerifySection = field(default_factory=VerifySection)
    design: DesignSection = field(default_factory=DesignSection)
    output_dir: str = "out"

    def resolved_basis(self) -> list[int]:
        return list(self.basis) if self.basis is not None else default_basis(self.dimension)

    def crystal_config(self) -> CrystalConfig:
        c = self.crystal
        return CrystalConfig(c.lambda1, c.lambda2, c.n1, c.n2, c.L, self.waists.w_c)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_index = {"type": "number", "minimum": 1}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = {"$schema": "https://json-schema.org/draft/2020-12/schema"} | _section(
    {
        "dimension": {"type": "integer", "minimum": 2},
        "basis": {"type": ["array", "null"], "items": {"type": "integer"}, "uniqueItems": True},
        "seed": {"type": "integer", "minimum": 0},
        "compensate_lambda": {"type": "boolean"},
        "adaptive_reference": {"type": "boolean"},
        "waists": _section({"w1": _pos, "w2": _pos, "w_c": _pos}),
        "crystal": _section({"lambda1": _pos, "lambda2": _pos, "n1": _index, "n2": _index, "L": _nonneg}),
        "channel": _section(
            {
                "source": {"enum": list(CHANNEL_SOURCES)},
                "waist": _pos,
                "r0": _pos,
                "side": {"type": "integer", "minimum": 64},
                "dx": {"anyOf": [_pos, {"type": "null"}]},
                "zernike": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "integer"}, {"type": "integer"}, {"type": "number"}],
                        "items": False,
                        "minItems": 3,
                        "maxItems": 3,
                    },
                },
                "aperture_radius": {"anyOf": [_pos, {"type": "null"}]},
                "path": {"type": ["string", "null"]},
            }
        ),
        "noise": _section({"kind": {"enum": ["none", "poisson"]}, "n_photons": _nonneg}),
        "verify": _section(
            {
                "ell_max": {"type": "integer", "minimum": 0, "maximum": 8},
                "order": {"type": "integer", "minimum": 16},
                "tolerance": _pos,
                "zero_tolerance": _pos,
            }
        ),
        "design": _section(
            {
                "nominal_wavelength": _pos,
                "repetition_frequency": _pos,
                "component_spacing_multiple": {"type": "integer", "minimum": 1},
                "lines_per_mm": _pos,
                "slm_width_pixels": {"type": "integer", "minimum": 1},
            }
        ),
        "output_dir": {"type": "string"},
    }
)

_SECTIONS = {
    "waists": WaistSection,
    "crystal": CrystalSection,
    "channel": ChannelSection,
    "noise": NoiseSection,
    "verify": VerifySection,
    "design": DesignSection,
}


def parse_config(data: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    kwargs = {}
    for f in fields(ExperimentConfig):
        if f.name not in data:
            continue
        value = data[f.name]
        if f.name in _SECTIONS:
            value = _SECTIONS[f.name](**value)
        kwargs[f.name] = value
    cfg = ExperimentConfig(**kwargs)
    if cfg.basis is not None and len(cfg.basis) != cfg.dimension:
        raise ConfigError(f"basis {cfg.basis} does not have {cfg.dimension} elements")
    if cfg.noise.kind == "poisson" and not cfg.noise.n_photons > 0:
        raise ConfigError("poisson noise needs noise.n_photons > 0")
    if cfg.channel.source == "file" and not cfg.channel.path:
        raise ConfigError("channel.source 'file' needs channel.path")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(data)
