from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property

import numpy as np

from dbar_akns.geometry.grids import ComponentGrids, build_component_grids
from dbar_akns.globals import worker_count
from dbar_akns.models.config import RunConfig, config_hash
from dbar_akns.models.objects import Provenance, VerificationReport
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.repositories.results_repository import ResultsRepository


__all__ = ["RunContext"]


@dataclass
class RunContext:
    config: RunConfig
    command: str
    repo: ResultsRepository

    @cached_property
    def workers(self) -> int:
        return 1 if self.config.deterministic else worker_count()

    @cached_property
    def data(self) -> SpectralData:
        plus, minus = self.config.amplitudes
        return SpectralData.from_preset(self.config.preset, plus, minus, self.config.preset_parameters)

    @cached_property
    def grids(self) -> ComponentGrids:
        return build_component_grids(self.config.grid.nr, self.config.grid.ntheta)

    @cached_property
    def verify_grids(self) -> ComponentGrids:
        v = self.config.verify
        return build_component_grids(v.nr, v.ntheta)

    @property
    def x_grid(self) -> np.ndarray:
        return self.config.x_grid.points()

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, stream])

    def new_report(self) -> VerificationReport:
        c = self.config
        return VerificationReport(provenance=Provenance(
            command=self.command,
            config_hash=config_hash(c),
            seed=c.seed,
            grid_sizes={
                "nr": c.grid.nr, "ntheta": c.grid.ntheta,
                "cauchy_nr": c.cauchy.nr, "cauchy_ntheta": c.cauchy.ntheta,
                "verify_nr": c.verify.nr, "verify_ntheta": c.verify.ntheta,
                "x_points": c.x_grid.n,
            },
            created_at=None if c.deterministic else datetime.now(timezone.utc).isoformat(),
        ))
