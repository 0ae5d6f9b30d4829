import json

from pathlib import Path
from typing import Iterable, List, Type

from more_itertools import chunked
from pydantic import BaseModel

from dbar_akns.logger import info
from dbar_akns.models.objects import VerificationReport


__all__ = ["CauchyRow", "SolveRow", "ReconstructRow", "ResultsRepository", "format_value", "load_report"]


# rows are formatted and written this many at a time
MAX_BATCH_SIZE = 256


class CauchyRow(BaseModel):
    k_re: float
    k_im: float
    value_re: float
    value_im: float
    scheme: str
    h: float


class SolveRow(BaseModel):
    x: float
    solver_iterations: int
    residual: float
    dbar_residual: float
    contraction_ratio: float


class ReconstructRow(BaseModel):
    x: float
    u_re: float
    u_im: float
    v_re: float
    v_im: float
    solver_iterations: int
    residual: float


def format_value(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


class ResultsRepository:
    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_rows(self, name: str, model: Type[BaseModel], rows: Iterable[BaseModel]) -> Path:
        path = self.out_dir / name
        columns: List[str] = list(model.model_fields)
        written = 0
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(",".join(columns) + "\n")
            for chunk in chunked(rows, MAX_BATCH_SIZE):
                lines = [
                    ",".join(format_value(getattr(row, c)) for c in columns)
                    for row in chunk
                ]
                f.write("\n".join(lines) + "\n")
                written += len(lines)
        info(f"wrote {written} rows to {path}")
        return path

    def write_report(self, report: VerificationReport, name: str = "report.json") -> Path:
        path = self.out_dir / name
        path.write_text(report.model_dump_json(indent=2, by_alias=True), encoding="utf-8")
        info(f"wrote {len(report.checks)} check records to {path}")
        return path


def load_report(path: Path) -> VerificationReport:
    # json.loads accepts the Infinity / NaN constants the report may hold
    return VerificationReport.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
