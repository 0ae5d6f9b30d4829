from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from dbar_akns.models.presets import Profile, resolve_preset


__all__ = ["SpectralData", "zero_data"]


@dataclass(frozen=True)
class SpectralData:
    """r_+(k) = amplitude_plus * profile(k) and r_-(k) = amplitude_minus * profile(k), plus additive perturbations.

    Only continuous data: there are no point-mass components.
    """
    preset: str
    amplitude_plus: complex = 0j
    amplitude_minus: complex = 0j
    parameters: Tuple[Tuple[str, float], ...] = ()
    perturbations: Tuple["SpectralData", ...] = field(default=())

    @classmethod
    def from_preset(cls, preset: str, amplitude_plus: complex, amplitude_minus: complex,
                    parameters: Dict[str, float] = None) -> "SpectralData":
        data = cls(preset, complex(amplitude_plus), complex(amplitude_minus),
                   tuple(sorted((parameters or {}).items())))
        data.profile  # validate the preset name eagerly
        return data

    @cached_property
    def profile(self) -> Profile:
        return resolve_preset(self.preset, dict(self.parameters))

    @property
    def support_radius(self) -> float:
        radii = [self.profile.support_radius if (self.amplitude_plus or self.amplitude_minus) else 0.0]
        radii += [p.support_radius for p in self.perturbations]
        return max(radii)

    @property
    def is_zero(self) -> bool:
        own = self.preset == "zero" or (self.amplitude_plus == 0 and self.amplitude_minus == 0)
        return own and all(p.is_zero for p in self.perturbations)

    def r_plus(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        out = self.amplitude_plus * self.profile(k) if self.amplitude_plus else np.zeros(k.shape, dtype=complex)
        for p in self.perturbations:
            out = out + p.r_plus(k)
        return out

    def r_minus(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        out = self.amplitude_minus * self.profile(k) if self.amplitude_minus else np.zeros(k.shape, dtype=complex)
        for p in self.perturbations:
            out = out + p.r_minus(k)
        return out

    def scaled(self, c: complex) -> "SpectralData":
        return replace(
            self,
            amplitude_plus=self.amplitude_plus * c,
            amplitude_minus=self.amplitude_minus * c,
            perturbations=tuple(p.scaled(c) for p in self.perturbations),
        )

    def plus(self, other: "SpectralData") -> "SpectralData":
        return replace(self, perturbations=self.perturbations + (other,))


def zero_data() -> SpectralData:
    return SpectralData("zero")
