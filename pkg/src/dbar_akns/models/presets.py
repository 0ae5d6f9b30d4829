from typing import Dict, Optional

import numpy as np


__all__ = ["Profile", "ZeroProfile", "AnnulusBump", "RationalDecay", "resolve_preset", "PRESET_NAMES"]


class Profile:
    """Unit-amplitude spectral profile r(k)."""
    name: str = ""
    # radius outside which the profile vanishes identically; inf if not compactly supported
    support_radius: float = np.inf

    def __call__(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError("Not implemented")

    @property
    def parameters(self) -> Dict[str, float]:
        return {}


class ZeroProfile(Profile):
    name = "zero"
    support_radius = 0.0

    def __call__(self, k: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(k), dtype=complex)


class AnnulusBump(Profile):
    """exp(1 - 1/(1 - s^2)) with s = (|k| - center)/halfwidth; smooth, supported in center +- halfwidth."""
    name = "annulus_bump"

    def __init__(self, center: float = 0.55, halfwidth: float = 0.35):
        if halfwidth <= 0 or center - halfwidth < 0:
            raise ValueError(f"annulus_bump needs 0 <= center - halfwidth, halfwidth > 0; got {center}, {halfwidth}")
        self.center = float(center)
        self.halfwidth = float(halfwidth)
        self.support_radius = self.center + self.halfwidth

    def __call__(self, k: np.ndarray) -> np.ndarray:
        s = (np.abs(np.asarray(k)) - self.center) / self.halfwidth
        inside = np.abs(s) < 1.0
        out = np.zeros(np.shape(s), dtype=complex)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    @property
    def parameters(self) -> Dict[str, float]:
        return {"center": self.center, "halfwidth": self.halfwidth}


class RationalDecay(Profile):
    """1/(1 + |k|^power); power > 2 keeps r_(2) bounded on E1."""
    name = "rational_decay"

    def __init__(self, power: float = 4.0):
        if power <= 2:
            raise ValueError(f"rational_decay needs power > 2, got {power}")
        self.power = float(power)

    def __call__(self, k: np.ndarray) -> np.ndarray:
        return (1.0 / (1.0 + np.abs(np.asarray(k)) ** self.power)).astype(complex)

    @property
    def parameters(self) -> Dict[str, float]:
        return {"power": self.power}


PRESET_NAMES = ("zero", "annulus_bump", "rational_decay")


def resolve_preset(name: str, parameters: Optional[Dict[str, float]] = None) -> Profile:
    parameters = parameters or {}
    try:
        if name == "zero":
            return ZeroProfile()
        elif name == "annulus_bump":
            return AnnulusBump(**parameters)
        elif name == "rational_decay":
            return RationalDecay(**parameters)
    except TypeError as e:
        raise ValueError(f"preset {name}: bad parameters {parameters}: {e}")
    raise ValueError(f"preset {name} does not exist")
