from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


__all__ = ["NormParams", "CheckRecord", "Provenance", "VerificationReport", "plain"]


class NormParams(BaseModel):
    p: float = Field(8.0, gt=2)
    q: float = Field(8.0, gt=2)
    nu: float = 2.0

    @model_validator(mode="after")
    def _holder_window(self) -> "NormParams":
        if 1 / self.p + 1 / self.q >= 0.5:
            raise ValueError(f"1/p + 1/q must be < 1/2, got 1/{self.p} + 1/{self.q}")
        return self

    @computed_field
    @property
    def mu(self) -> float:
        return 1.0 / (1 / self.p + 1 / self.q)

    @computed_field
    @property
    def alpha(self) -> float:
        return 1.0 - 2.0 * (1 / self.p + 1 / self.q)

    @computed_field
    @property
    def gamma(self) -> float:
        return (self.p - 2.0) / self.p


class CheckRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True, ser_json_inf_nan="constants")

    name: str
    observed: float
    bound_or_target: float
    tolerance: float
    passed: bool = Field(alias="pass")
    details: Dict[str, Any] = Field(default_factory=dict)


class Provenance(BaseModel):
    command: str = ""
    config_hash: str = ""
    seed: int = 0
    grid_sizes: Dict[str, int] = Field(default_factory=dict)
    created_at: Optional[str] = None


class VerificationReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    checks: List[CheckRecord] = Field(default_factory=list)
    provenance: Provenance = Field(default_factory=Provenance)

    def add(
            self,
            name: str,
            observed: float,
            bound_or_target: float,
            tolerance: float,
            passed: bool,
            **details,
    ) -> CheckRecord:
        record = CheckRecord(
            name=name,
            observed=float(observed),
            bound_or_target=float(bound_or_target),
            tolerance=float(tolerance),
            passed=bool(passed),
            details={k: plain(v) for k, v in details.items()},
        )
        self.checks.append(record)
        return record

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> Optional[CheckRecord]:
        return next((c for c in self.checks if c.name == name), None)


def plain(value: Any) -> Any:
    """JSON-ready copy of numpy scalars, arrays and complex numbers."""
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        return plain(value.item())
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    return value
