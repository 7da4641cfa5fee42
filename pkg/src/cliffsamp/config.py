"""Experiment configuration files.

A config names a circuit, a noise model, a sampling campaign and what to
write. Presets live as JSON files in ``cliffsamp/presets`` and are loaded
by name. Unknown fields are rejected everywhere.
"""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .circuit import Circuit, circuit_from_dict, experimental_circuit, standard_circuit
from .noise import NoiseModel, build_noise
from .sampling import SamplingMode


class ConfigError(ValueError):
    """Invalid experiment configuration; ``details`` is a list of messages."""

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CircuitSource(_Strict):
    """Exactly one of ``preset``, ``inline`` or ``file``."""

    preset: Literal["standard", "experimental"] | None = None
    n: int | None = None
    observable_qubit: int | None = None
    inline: dict[str, Any] | None = None
    file: str | None = None

    @model_validator(mode="after")
    def _one_source(self):
        given = [k for k in ("preset", "inline", "file") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError("circuit needs exactly one of preset, inline, file")
        if self.preset == "standard" and self.n is None:
            raise ValueError("standard circuit needs n")
        if self.preset != "standard" and self.n is not None:
            raise ValueError("n only applies to the standard circuit")
        if self.preset != "experimental" and self.observable_qubit is not None:
            raise ValueError("observable_qubit only applies to the experimental circuit")
        return self


class SamplingSpec(_Strict):
    estimator: Literal["mean_value", "single_run", "fidelity", "hybrid_combined"]
    mode: str | list[str] = "clifford"
    n_configs: int | None = Field(default=None, ge=1)
    n_s: int | None = Field(default=None, ge=2)
    shots: int | None = Field(default=None, ge=1)
    g_draws: int | None = Field(default=None, ge=2)
    n_clifford: int | None = Field(default=None, ge=2)
    method: Literal["conditional", "sampled"] = "conditional"
    seed: int = Field(ge=0, lt=2**64)

    @property
    def modes(self) -> list[str]:
        return [self.mode] if isinstance(self.mode, str) else list(self.mode)

    @model_validator(mode="after")
    def _consistent(self):
        modes = self.modes
        if not modes:
            raise ValueError("at least one sampling mode is required")
        for m in modes:
            SamplingMode.parse(m)
        if len(set(modes)) != len(modes):
            raise ValueError("sampling modes must be distinct")
        if self.estimator == "single_run":
            if self.n_s is None:
                raise ValueError("single_run needs n_s")
            if modes != ["clifford"]:
                raise ValueError("single_run is defined for Clifford sampling only")
        elif self.n_configs is None:
            raise ValueError(f"{self.estimator} needs n_configs")
        if self.shots is not None and self.estimator != "mean_value":
            raise ValueError("shots apply to the mean_value estimator only")
        if self.g_draws is not None and self.estimator != "fidelity":
            raise ValueError("g_draws apply to the fidelity estimator only")
        return self


class OutputSpec(_Strict):
    samples: bool = True
    histogram_bins: int | None = Field(default=None, ge=1)
    moments: int | None = Field(default=None, ge=1, le=14)


class ExperimentConfig(_Strict):
    name: str
    description: str = ""
    circuit: CircuitSource
    noise: dict[str, Any]
    sampling: SamplingSpec
    outputs: OutputSpec = OutputSpec()

    def build_circuit(self, base_dir: Path | None = None) -> Circuit:
        c = self.circuit
        if c.preset == "standard":
            return standard_circuit(c.n)
        if c.preset == "experimental":
            return experimental_circuit(c.observable_qubit or 0)
        if c.inline is not None:
            return circuit_from_dict(c.inline)
        path = Path(c.file)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return circuit_from_dict(json.loads(path.read_text()))

    def build_noise(self, circuit: Circuit, base_dir: Path | None = None) -> NoiseModel:
        return build_noise(self.noise, circuit, base_dir)


def _messages(exc: ValidationError) -> list[str]:
    out = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"])
        out.append(f"{loc}: {e['msg']}" if loc else e["msg"])
    return out


def parse_config(data: Any) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("invalid experiment config", _messages(exc)) from None


def preset_names() -> list[str]:
    root = resources.files("cliffsamp") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def preset_data(name: str) -> dict:
    names = preset_names()
    if name not in names:
        raise ConfigError(f"unknown preset {name!r}", [f"available: {', '.join(names)}"])
    return json.loads((resources.files("cliffsamp") / "presets" / f"{name}.json").read_text())


def load_config(source: str | Path) -> tuple[ExperimentConfig, Path | None]:
    """Config from a file path, or from a preset name when no such file exists.

    Returns the config and the directory relative paths resolve against.
    """
    path = Path(source)
    if path.is_file():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON", [str(exc)]) from None
        return parse_config(data), path.parent
    if path.suffix == ".json" or "/" in str(source):
        raise ConfigError(f"config file {source} not found")
    return parse_config(preset_data(str(source))), None


def set_path(data: dict, dotted: str, value: Any) -> dict:
    """Copy of ``data`` with the numeric field at ``a.b.c`` replaced."""
    out = copy.deepcopy(data)
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"parameter path {dotted!r} does not resolve")
        node = node[k]
    last = keys[-1]
    if not isinstance(node, dict) or last not in node:
        raise ConfigError(f"parameter path {dotted!r} does not resolve")
    if isinstance(node[last], bool) or not isinstance(node[last], (int, float)):
        raise ConfigError(f"parameter {dotted!r} is not numeric")
    node[last] = value
    return out
