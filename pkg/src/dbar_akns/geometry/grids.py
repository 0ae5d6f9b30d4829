from dataclasses import dataclass
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str.__str__(self)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self), format_spec)
from functools import cached_property, lru_cache
from typing import Callable, Literal, Tuple, Union

import numpy as np

from dbar_akns.logger import debug


__all__ = [
    "RegionTag", "Region", "QuadratureGrid", "InversionImage", "ComponentGrids",
    "COMPONENTS", "E1_PLUS", "E1_MINUS", "E2_PLUS", "E2_MINUS", "C_PLUS", "C_MINUS", "UNIT_DISK",
    "build_half_disk_grid", "build_disk_grid", "build_component_grids",
    "classify_point", "invert_grid", "invert_nodes", "exterior_integrability", "parse_sign",
]


Sign = Union[Literal["+", "-"], int]


class RegionTag(StrEnum):
    E1PLUS = "E1plus"
    E1MINUS = "E1minus"
    E2PLUS = "E2plus"
    E2MINUS = "E2minus"
    CPLUS = "Cplus"
    CMINUS = "Cminus"
    UNIT_DISK = "UnitDisk"
    DISK = "Disk"


# sampling radius used for unbounded regions (holder pair sampling only)
UNBOUNDED_SAMPLING_RADIUS = 2.0


@dataclass(frozen=True)
class Region:
    tag: RegionTag
    center: complex = 0j
    radius: float = 1.0

    @classmethod
    def disk(cls, center: complex, radius: float) -> "Region":
        if radius <= 0:
            raise ValueError(f"disk radius must be positive, got {radius}")
        return cls(RegionTag.DISK, complex(center), float(radius))

    @property
    def area(self) -> float:
        match self.tag:
            case RegionTag.E1PLUS | RegionTag.E1MINUS:
                return np.pi / 2
            case RegionTag.UNIT_DISK:
                return np.pi
            case RegionTag.DISK:
                return np.pi * self.radius ** 2
        return np.inf

    def contains(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        upper = k.imag >= 0
        inner = np.abs(k) <= 1.0
        match self.tag:
            case RegionTag.E1PLUS:
                return inner & upper
            case RegionTag.E1MINUS:
                return inner & ~upper
            case RegionTag.E2PLUS:
                return ~inner & upper
            case RegionTag.E2MINUS:
                return ~inner & ~upper
            case RegionTag.CPLUS:
                return upper
            case RegionTag.CMINUS:
                return ~upper
            case RegionTag.UNIT_DISK:
                return inner
            case RegionTag.DISK:
                return np.abs(k - self.center) <= self.radius
        raise ValueError(f"region {self.tag} has no membership test")

    def sampling_sector(self) -> Tuple[complex, float, float, float]:
        """(center, radius, theta0, span) of the polar sector holder sampling draws from."""
        match self.tag:
            case RegionTag.E1PLUS:
                return 0j, 1.0, 0.0, np.pi
            case RegionTag.E1MINUS:
                return 0j, 1.0, np.pi, np.pi
            case RegionTag.E2PLUS | RegionTag.CPLUS:
                return 0j, UNBOUNDED_SAMPLING_RADIUS, 0.0, np.pi
            case RegionTag.E2MINUS | RegionTag.CMINUS:
                return 0j, UNBOUNDED_SAMPLING_RADIUS, np.pi, np.pi
            case RegionTag.UNIT_DISK:
                return 0j, 1.0, 0.0, 2 * np.pi
        return self.center, self.radius, 0.0, 2 * np.pi


E1_PLUS = Region(RegionTag.E1PLUS)
E1_MINUS = Region(RegionTag.E1MINUS)
E2_PLUS = Region(RegionTag.E2PLUS)
E2_MINUS = Region(RegionTag.E2MINUS)
C_PLUS = Region(RegionTag.CPLUS)
C_MINUS = Region(RegionTag.CMINUS)
UNIT_DISK = Region(RegionTag.UNIT_DISK)


def parse_sign(sign: Sign) -> int:
    if sign in ("+", 1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def classify_point(k: complex) -> RegionTag:
    """Im k = 0 goes to the plus side, |k| = 1 goes to E1."""
    k = complex(k)
    if not np.isfinite(k.real) or not np.isfinite(k.imag):
        raise ValueError(f"cannot classify non-finite point {k}")
    upper = k.imag >= 0
    if abs(k) <= 1.0:
        return RegionTag.E1PLUS if upper else RegionTag.E1MINUS
    return RegionTag.E2PLUS if upper else RegionTag.E2MINUS


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Polar midpoint grid; node index is i * ntheta + j (i radial, j angular)."""
    region: Region
    nodes: np.ndarray
    weights: np.ndarray
    h: float
    nr: int
    ntheta: int
    center: complex
    radius: float
    theta0: float
    span: float

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def dr(self) -> float:
        return self.radius / self.nr

    @property
    def dtheta(self) -> float:
        return self.span / self.ntheta

    @cached_property
    def polar(self) -> Tuple[np.ndarray, np.ndarray]:
        i = np.arange(self.nr)
        j = np.arange(self.ntheta)
        r = (i + 0.5) * self.dr
        theta = self.theta0 + (j + 0.5) * self.dtheta
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        return rr.ravel(), tt.ravel()

    def locate(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        a = k - self.center
        r = np.abs(a) / self.dr
        theta = np.mod(np.angle(a) - self.theta0, 2 * np.pi) / self.dtheta
        i = np.floor(r).astype(np.int64)
        j = np.floor(theta).astype(np.int64)
        inside = (i < self.nr) & (j < self.ntheta)
        return np.where(inside, i * self.ntheta + j, -1)

    def lattice(self, values: np.ndarray) -> np.ndarray:
        return values.reshape((self.nr, self.ntheta) + values.shape[1:])

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.weights, values, axes=(0, 0))


def _polar_grid(region: Region, center: complex, radius: float, theta0: float, span: float,
                nr: int, ntheta: int) -> QuadratureGrid:
    if nr < 2 or ntheta < 2:
        raise ValueError(f"grid needs nr, ntheta >= 2, got nr={nr}, ntheta={ntheta}")

    dr = radius / nr
    dtheta = span / ntheta
    r = (np.arange(nr) + 0.5) * dr
    theta = theta0 + (np.arange(ntheta) + 0.5) * dtheta
    rr, tt = np.meshgrid(r, theta, indexing="ij")

    nodes = center + (rr * np.exp(1j * tt)).ravel()
    weights = (rr * dr * dtheta).ravel()
    h = max(dr, radius * dtheta)

    debug(f"grid {region.tag}: nr={nr} ntheta={ntheta} h={h:.4g}")
    return QuadratureGrid(region, nodes, weights, h, nr, ntheta, complex(center), float(radius),
                          float(theta0), float(span))


def build_half_disk_grid(sign: Sign, nr: int, ntheta: int) -> QuadratureGrid:
    s = parse_sign(sign)
    region = E1_PLUS if s > 0 else E1_MINUS
    return _polar_grid(region, 0j, 1.0, 0.0 if s > 0 else np.pi, np.pi, nr, ntheta)


def build_disk_grid(region: Region, nr: int, ntheta: int) -> QuadratureGrid:
    if region.tag not in (RegionTag.DISK, RegionTag.UNIT_DISK):
        raise ValueError(f"build_disk_grid needs a Disk or UnitDisk region, got {region.tag}")
    return _polar_grid(region, region.center, region.radius, 0.0, 2 * np.pi, nr, ntheta)


def invert_nodes(nodes: np.ndarray) -> np.ndarray:
    return 1.0 / np.asarray(nodes, dtype=complex)


@dataclass(frozen=True, eq=False)
class InversionImage:
    """Image of an E1 grid under k -> 1/k.

    Sums against jacobian_weights at the image nodes integrate over E2 of the
    opposite half-plane: the integral of F over E2 equals the integral of
    F(1/z) |z|^-4 over the source grid.
    """
    source: QuadratureGrid
    nodes: np.ndarray
    jacobian_weights: np.ndarray
    region: Region

    def restore(self) -> np.ndarray:
        return invert_nodes(self.nodes)

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.jacobian_weights, values, axes=(0, 0))


def invert_grid(grid: QuadratureGrid) -> InversionImage:
    match grid.region.tag:
        case RegionTag.E1PLUS:
            region = E2_MINUS
        case RegionTag.E1MINUS:
            region = E2_PLUS
        case _:
            raise ValueError(f"only E1plus/E1minus grids can be inverted, got {grid.region.tag}")

    z = grid.nodes
    return InversionImage(
        source=grid,
        nodes=invert_nodes(z),
        jacobian_weights=grid.weights / np.abs(z) ** 4,
        region=region,
    )


def exterior_integrability(
        F: Callable[[np.ndarray], np.ndarray],
        sign: Sign,
        levels: Tuple[int, ...] = (16, 32, 64, 128),
        ntheta: int = 64,
) -> Tuple[list, bool]:
    """Integrate F over E2^sign at increasing radial resolution.

    The integral is flagged integrable when every increment shrinks by at
    least a factor 1.5 relative to the previous one.
    """
    s = parse_sign(sign)
    values = []
    for nr in levels:
        image = invert_grid(build_half_disk_grid(-s, nr, ntheta))
        values.append(complex(image.integrate(F(image.nodes))))

    increments = np.abs(np.diff(values))
    integrable = bool(np.all(np.isfinite(values))) and all(
        b <= a / 1.5 or b < 1e-13 for a, b in zip(increments[:-1], increments[1:])
    )
    return values, integrable


COMPONENTS = ("E1plus", "E1minus", "E2plus", "E2minus")


@dataclass(frozen=True, eq=False)
class ComponentGrids:
    """E1+ and E1- grids with their inversion images.

    E2plus nodes are the inverses of the E1minus nodes, E2minus nodes the
    inverses of the E1plus nodes.
    """
    plus: QuadratureGrid
    minus: QuadratureGrid
    e2plus: InversionImage
    e2minus: InversionImage

    @property
    def size(self) -> int:
        return self.plus.size

    @property
    def h(self) -> float:
        return max(self.plus.h, self.minus.h)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.plus.nodes, self.minus.nodes, self.e2plus.nodes, self.e2minus.nodes])

    def slice(self, component: str) -> slice:
        n = self.size
        idx = COMPONENTS.index(component)
        return slice(idx * n, (idx + 1) * n)

    def interior(self, sign: int) -> QuadratureGrid:
        return self.plus if sign > 0 else self.minus

    def exterior(self, sign: int) -> InversionImage:
        """Inverted image covering E2^sign; its source is the E1 grid of the other half-plane."""
        return self.e2plus if sign > 0 else self.e2minus

    def component_of(self, sign: int, inner: bool) -> str:
        return ("E1" if inner else "E2") + ("plus" if sign > 0 else "minus")


@lru_cache(maxsize=16)
def build_component_grids(nr: int, ntheta: int) -> ComponentGrids:
    plus = build_half_disk_grid("+", nr, ntheta)
    minus = build_half_disk_grid("-", nr, ntheta)
    return ComponentGrids(plus, minus, invert_grid(minus), invert_grid(plus))
