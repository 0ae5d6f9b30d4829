from dataclasses import dataclass
from typing import Callable

import numpy as np

from dbar_akns.geometry.grids import COMPONENTS, ComponentGrids, QuadratureGrid


__all__ = ["ScalarField", "MatrixField", "MatrixFamily", "IDENTITY"]


IDENTITY = np.eye(2, dtype=complex)


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} has non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.size,):
            raise ValueError(f"scalar field needs {self.grid.size} values, got shape {self.values.shape}")
        _check_finite(self.values, "scalar field")

    @classmethod
    def from_evaluator(cls, grid: QuadratureGrid, f: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=complex), grid.nodes.shape)
        return cls(grid, np.array(values))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(frozen=True, eq=False)
class MatrixField:
    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.size, 2, 2):
            raise ValueError(f"matrix field needs shape ({self.grid.size}, 2, 2), got {self.values.shape}")
        _check_finite(self.values, "matrix field")


@dataclass(frozen=True, eq=False)
class MatrixFamily:
    """2x2 matrix samples on all four component grids, stacked in COMPONENTS order."""
    grids: ComponentGrids
    values: np.ndarray

    def __post_init__(self):
        expected = (4 * self.grids.size, 2, 2)
        if self.values.shape != expected:
            raise ValueError(f"matrix family needs shape {expected}, got {self.values.shape}")

    @classmethod
    def identity(cls, grids: ComponentGrids) -> "MatrixFamily":
        values = np.broadcast_to(IDENTITY, (4 * grids.size, 2, 2))
        return cls(grids, np.array(values))

    @classmethod
    def from_evaluator(cls, grids: ComponentGrids, f: Callable[[np.ndarray], np.ndarray]) -> "MatrixFamily":
        return cls(grids, np.asarray(f(grids.nodes), dtype=complex).reshape(-1, 2, 2))

    def component(self, name: str) -> np.ndarray:
        return self.values[self.grids.slice(name)]

    def replace(self, values: np.ndarray) -> "MatrixFamily":
        return MatrixFamily(self.grids, values)

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def components(self):
        for name in COMPONENTS:
            yield name, self.component(name)
