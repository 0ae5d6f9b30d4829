import hashlib
import json
import math

from pathlib import Path
from typing import Annotated, Dict, List, Literal, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationError, model_validator,
)

from dbar_akns.errors import ConfigError
from dbar_akns.models.objects import NormParams


__all__ = [
    "ComplexValue", "GridConfig", "XGridConfig", "SolverConfig", "CauchyConfig", "VerifyConfig",
    "RunConfig", "parse_config", "config_hash",
]


def _to_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex value as a list needs [re, im], got {value}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, (int, float, complex)):
        return complex(value)
    raise ValueError(f"cannot read {value!r} as a complex number")


ComplexValue = Annotated[
    complex,
    BeforeValidator(_to_complex),
    PlainSerializer(lambda c: [c.real, c.imag], return_type=list),
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    nr: int = Field(32, ge=2)
    ntheta: int = Field(256, ge=2)


class XGridConfig(_Strict):
    min: float = -4.0
    max: float = 4.0
    n: int = Field(64, ge=1)
    exclude_zero: bool = True

    @model_validator(mode="after")
    def _no_zero(self) -> "XGridConfig":
        if not self.exclude_zero:
            raise ValueError("exclude_zero must be true: x = 0 has no indicator branch")
        if self.min > self.max:
            raise ValueError(f"min {self.min} > max {self.max}")
        if np.any(self.points() == 0.0):
            raise ValueError(f"x grid linspace({self.min}, {self.max}, {self.n}) contains 0")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.n)

    @property
    def max_abs(self) -> float:
        return max(abs(self.min), abs(self.max))


class SolverConfig(_Strict):
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(200, ge=1)


class CauchyConfig(_Strict):
    density: Literal["chi_disk", "preset"] = "chi_disk"
    nr: int = Field(256, ge=2)
    ntheta: int = Field(256, ge=2)
    n_targets: int = Field(100, ge=1)
    oracle_n: int = Field(256, ge=64)


class VerifyConfig(_Strict):
    nr: int = Field(12, ge=2)
    ntheta: int = Field(64, ge=2)
    cauchy_nr: int = Field(256, ge=2)
    cauchy_ntheta: int = Field(256, ge=2)
    oracle_n: int = Field(256, ge=64)
    rtc_oracle_nr: int = Field(384, ge=2)
    rtc_oracle_ntheta: int = Field(768, ge=2)
    rtc_oracle_n: int = Field(256, ge=32)
    akns_hx: float = Field(0.2, gt=0)
    holder_pairs: int = Field(10_000, ge=100)
    trials: int = Field(10, ge=10)
    n_fields: int = Field(20, ge=1)
    lemma1_draws: int = Field(100, ge=1)
    x_samples: List[float] = Field(default_factory=lambda: [-0.5, 0.5])
    born_epsilons: List[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    lipschitz_bound: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _nonzero_samples(self) -> "VerifyConfig":
        if any(x == 0 for x in self.x_samples):
            raise ValueError("x_samples must not contain 0")
        return self


class RunConfig(_Strict):
    preset: Literal["zero", "annulus_bump", "rational_decay"] = "annulus_bump"
    preset_parameters: Dict[str, float] = Field(default_factory=dict)
    amplitudes: Tuple[ComplexValue, ComplexValue] = (0.1 + 0j, 0.1 + 0j)
    grid: GridConfig = Field(default_factory=GridConfig)
    x_grid: XGridConfig = Field(default_factory=XGridConfig)
    norm: NormParams = Field(default_factory=NormParams)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    cauchy: CauchyConfig = Field(default_factory=CauchyConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    seed: int = 0
    deterministic: bool = False

    @model_validator(mode="after")
    def _oscillation_resolved(self) -> "RunConfig":
        need = 64 * math.ceil(self.x_grid.max_abs)
        if self.grid.ntheta < need:
            # pydantic passes ConfigError through unwrapped
            raise ConfigError("grid.ntheta", f"{self.grid.ntheta} must be >= 64*ceil(max|x|) = {need}")
        return self


def _location(err: ValidationError) -> str:
    first = err.errors()[0]
    loc = [str(p) for p in first.get("loc", ())]
    return ".".join(loc) or "config"


def parse_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"file {path} does not exist")
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"{path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(_location(e), e.errors()[0]["msg"])


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(config.model_dump_json().encode("utf-8")).hexdigest()[:16]
