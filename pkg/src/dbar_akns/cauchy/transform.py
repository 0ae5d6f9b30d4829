from dataclasses import dataclass
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from more_itertools import chunked
from numpy.lib.stride_tricks import sliding_window_view

from dbar_akns.geometry.grids import QuadratureGrid, Region, RegionTag
from dbar_akns.globals import KERNEL_BLOCK, KERNEL_CACHE_MB, TARGET_CHUNK
from dbar_akns.logger import debug
from dbar_akns.spaces.fields import ScalarField


__all__ = [
    "CauchyEvaluation", "CauchyOperator", "sector_integrals", "cell_kernel", "cauchy_transform",
    "CartesianMesh", "cartesian_mesh", "cauchy_oracle", "oracle_values", "NODE_TOLERANCE",
]


# targets closer than this to a node are rejected by the public transform
NODE_TOLERANCE = 1e-14

# |k - center| below this fraction of the grid radius is evaluated as the centre itself
CENTRE_TOLERANCE = 1e-8

# angular slack (radians) for a target on the radial edge of a cell
EDGE_TOLERANCE = 1e-9


def _corner_terms(kappa, r, theta, rotation):
    """((r^2 - a^2)/2) * (Log((z - kappa) * rotation) - i theta) with z = r e^{i theta}, a = kappa e^{-i theta}.

    rotation picks the branch cut of the logarithm; a corner sitting on kappa contributes 0.
    """
    e = np.exp(1j * theta)
    u = r * e - kappa
    a = kappa * np.conj(e)
    hit = u == 0
    log = np.log(np.where(hit, 1.0, u * rotation)) - 1j * theta
    return np.where(hit, 0j, 0.5 * (r ** 2 - a ** 2) * log)


def sector_integrals(kappa, r0, r1, t0, t1, rotation):
    """Integral of dA/(z - kappa) over the sectors r0 <= |z| <= r1, t0 <= arg z <= t1 (elementwise).

    kappa is measured from the sector centre and must be nonzero; the logarithm
    branch given by rotation must be continuous on every sector.
    """
    s = (_corner_terms(kappa, r1, t1, rotation) - _corner_terms(kappa, r0, t1, rotation)
         - _corner_terms(kappa, r1, t0, rotation) + _corner_terms(kappa, r0, t0, rotation))
    poly = kappa * (np.exp(-1j * t1) - np.exp(-1j * t0)) * (r1 - r0) / 2
    return (s - poly) / (1j * kappa)


def _split_sector(kappa, r0, r1, t0, t1):
    """Sectors holding kappa: cut at (|kappa|, arg kappa) into four pieces with kappa on their corner."""
    outward = -np.conj(kappa) / np.abs(kappa)
    rho = np.clip(np.abs(kappa), r0, r1)
    tk = np.clip(t0 + np.mod(np.angle(kappa) - t0 + EDGE_TOLERANCE, 2 * np.pi) - EDGE_TOLERANCE, t0, t1)
    return (sector_integrals(kappa, r0, rho, t0, tk, outward) + sector_integrals(kappa, r0, rho, tk, t1, outward)
            + sector_integrals(kappa, rho, r1, t0, tk, -outward) + sector_integrals(kappa, rho, r1, tk, t1, -outward))


def cell_kernel(kappa: np.ndarray, r_edges: np.ndarray, t_edges: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Exact integrals of dA/(z - kappa) over every cell of a polar lattice.

    Returns shape (targets, len(r_edges) - 1, len(t_edges) - 1). The logarithm is cut
    along the radial ray through kappa: outward of kappa for most cells, inward
    for cells of kappa's own column beyond it, and the cell holding kappa is split.
    """
    kappa = np.atleast_1d(np.asarray(kappa, dtype=complex))
    rho = np.abs(kappa)
    centre = rho <= CENTRE_TOLERANCE * scale
    k = np.where(centre, 1.0, kappa)
    outward = -np.conj(k) / np.abs(k)

    g = _corner_terms(k[:, None, None], r_edges[None, :, None], t_edges[None, None, :], outward[:, None, None])
    s = g[:, 1:, 1:] - g[:, :-1, 1:] - g[:, 1:, :-1] + g[:, :-1, :-1]
    poly = np.diff(k[:, None] * np.exp(-1j * t_edges)[None, :], axis=1)[:, None, :] * np.diff(r_edges)[None, :, None] / 2
    out = (s - poly) / (1j * k[:, None, None])

    # kappa's column: cells whose closed angular span holds arg kappa
    phi = np.mod(np.angle(k) - t_edges[0], 2 * np.pi)
    rel = t_edges - t_edges[0]
    column = np.zeros((k.size, t_edges.size - 1), dtype=bool)
    for shift in (-2 * np.pi, 0.0, 2 * np.pi):
        p = phi[:, None] + shift
        column |= (p >= rel[None, :-1] - EDGE_TOLERANCE) & (p <= rel[None, 1:] + EDGE_TOLERANCE)
    column &= ~centre[:, None]
    above = r_edges[None, :-1] >= rho[:, None]
    below = r_edges[None, 1:] <= rho[:, None]

    t, i, j = np.nonzero(column[:, None, :] & above[:, :, None])
    out[t, i, j] = sector_integrals(k[t], r_edges[i], r_edges[i + 1], t_edges[j], t_edges[j + 1], -outward[t])
    t, i, j = np.nonzero(column[:, None, :] & ~(above | below)[:, :, None])
    out[t, i, j] = _split_sector(k[t], r_edges[i], r_edges[i + 1], t_edges[j], t_edges[j + 1])

    if np.any(centre):
        ring = np.diff(r_edges)[:, None] * np.diff(np.exp(-1j * t_edges))[None, :]
        out[centre] = 1j * ring
    return out


class CauchyOperator:
    """Discrete solid Cauchy transform of piecewise-constant cell densities on a polar grid.

    Every cell is integrated exactly against the kernel, so the transform of a
    density that is constant on cells carries no quadrature error. Targets on
    the grid's mid-angle rays reuse one ring of integrals per radius, rotated
    to their column. Kernel chunks are kept between applications while their
    total size stays under the cache budget.
    """

    def __init__(
            self,
            grid: QuadratureGrid,
            targets: np.ndarray,
            cache_mb: float = KERNEL_CACHE_MB,
            chunk: int = TARGET_CHUNK,
    ):
        self.grid = grid
        self.targets = np.atleast_1d(np.asarray(targets, dtype=complex))
        self._kappa = self.targets - grid.center
        self._r_edges = grid.dr * np.arange(grid.nr + 1)
        self._t_edges = grid.theta0 + grid.dtheta * np.arange(grid.ntheta + 1)
        self.chunk = max(1, min(chunk, KERNEL_BLOCK // self._r_edges.size // self._t_edges.size))

        self._group = np.full(self.targets.size, -1)
        self._column = np.zeros(self.targets.size, dtype=np.int64)
        self._ring = self._build_ring()

        kernel_mb = self.targets.size * grid.size * 16 / 2 ** 20
        self._cache_enabled = kernel_mb <= cache_mb
        self._cache: dict = {}
        debug(f"cauchy operator {self.targets.size}x{grid.size}: {kernel_mb:.1f} MB, cached={self._cache_enabled}, "
              f"{np.count_nonzero(self._group >= 0)} targets on rotated rings")

    @classmethod
    def for_grid(cls, grid: QuadratureGrid, targets: np.ndarray, **kwargs) -> "CauchyOperator":
        return cls(grid, targets, **kwargs)

    def _build_ring(self) -> Optional[np.ndarray]:
        grid = self.grid
        periods = 2 * np.pi / grid.dtheta
        P = int(round(periods))
        if abs(periods - P) > 1e-9 or self.targets.size < 2 * grid.ntheta:
            return None

        rho = np.abs(self._kappa)
        col = np.mod(np.angle(self._kappa) - grid.theta0, 2 * np.pi) / grid.dtheta - 0.5
        m = np.rint(col)
        aligned = (np.abs(col - m) < 1e-7) & (rho > CENTRE_TOLERANCE * grid.radius)
        if not np.any(aligned):
            return None

        _, first, group = np.unique(np.round(rho[aligned], 12), return_index=True, return_inverse=True)
        self._group[aligned] = group.ravel()
        self._column[aligned] = m[aligned].astype(np.int64) % P

        radii = rho[aligned][first]
        ring_edges = grid.theta0 + grid.dtheta * np.arange(P + 1)
        seeds = radii * np.exp(1j * (grid.theta0 + 0.5 * grid.dtheta))
        rows = max(1, KERNEL_BLOCK // self._r_edges.size // ring_edges.size)
        ring = np.concatenate([cell_kernel(seeds[b[0]:b[-1] + 1], self._r_edges, ring_edges, grid.radius)
                               for b in chunked(range(seeds.size), rows)])
        # doubled along the ring so a rotated row is one contiguous window
        return np.concatenate([ring, ring], axis=2)

    def _kernel(self, rows: slice) -> Tuple[np.ndarray, np.ndarray]:
        if (cached := self._cache.get(rows.start)) is not None:
            return cached

        grid = self.grid
        group, column = self._group[rows], self._column[rows]
        kernel = np.empty((group.size, grid.nr, grid.ntheta), dtype=complex)
        phase = np.ones(group.size, dtype=complex)

        on = group >= 0
        if np.any(on):
            P = self._ring.shape[2] // 2
            windows = sliding_window_view(self._ring, grid.ntheta, axis=2)
            kernel[on] = windows[group[on][:, None], np.arange(grid.nr)[None, :], (P - column[on])[:, None]]
            phase[on] = np.exp(-1j * column[on] * grid.dtheta)
        if not np.all(on):
            kernel[~on] = cell_kernel(self._kappa[rows][~on], self._r_edges, self._t_edges, grid.radius)

        entry = (kernel.reshape(group.size, grid.size), phase)
        if self._cache_enabled:
            self._cache[rows.start] = entry
        return entry

    def apply(self, density: np.ndarray) -> np.ndarray:
        density = np.asarray(density, dtype=complex)
        if density.shape[0] != self.grid.size:
            raise ValueError(f"density has {density.shape[0]} samples, grid has {self.grid.size} nodes")

        out = np.empty((self.targets.size,) + density.shape[1:], dtype=complex)
        for batch in chunked(range(self.targets.size), self.chunk):
            rows = slice(batch[0], batch[-1] + 1)
            kernel, phase = self._kernel(rows)
            out[rows] = (kernel @ density) * phase.reshape((-1,) + (1,) * (density.ndim - 1))
        return -out / np.pi


@dataclass(frozen=True, eq=False)
class CauchyEvaluation:
    targets: np.ndarray
    values: np.ndarray
    scheme: Literal["corrected", "oracle"]
    h: float


def cauchy_transform(f: ScalarField, targets) -> CauchyEvaluation:
    """-(1/pi) * integral of f(z)/(z - k), f taken constant on each grid cell and every cell integrated exactly."""
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if not np.all(np.isfinite(targets)):
        raise ValueError("cauchy_transform targets must be finite")

    grid = f.grid
    cells = grid.locate(targets)
    located = cells >= 0
    if np.any(located):
        gaps = np.abs(targets[located] - grid.nodes[cells[located]])
        if np.any(gaps < NODE_TOLERANCE):
            hit = targets[located][np.argmin(gaps)]
            raise ValueError(f"target {hit} coincides with a quadrature node")

    values = CauchyOperator.for_grid(grid, targets, cache_mb=0).apply(f.values)
    return CauchyEvaluation(targets, values, "corrected", grid.h)


@dataclass(frozen=True, eq=False)
class CartesianMesh:
    points: np.ndarray
    hx: float
    hy: float

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy


def _bounding_box(region: Region) -> Tuple[float, float, float, float]:
    match region.tag:
        case RegionTag.E1PLUS:
            return -1.0, 1.0, 0.0, 1.0
        case RegionTag.E1MINUS:
            return -1.0, 1.0, -1.0, 0.0
        case RegionTag.UNIT_DISK | RegionTag.DISK:
            c, r = region.center, region.radius
            return c.real - r, c.real + r, c.imag - r, c.imag + r
    raise ValueError(f"oracle quadrature needs a bounded region, got {region.tag}")


def cartesian_mesh(region: Region, n: int) -> CartesianMesh:
    """Midpoints of an n x n Cartesian mesh over the region's bounding box, kept if inside."""
    if n < 64:
        raise ValueError(f"oracle resolution must be >= 64, got {n}")
    x0, x1, y0, y1 = _bounding_box(region)
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * hx
    ys = y0 + (np.arange(n) + 0.5) * hy
    points = (xs[None, :] + 1j * ys[:, None]).ravel()
    return CartesianMesh(points[region.contains(points)], hx, hy)


def _oracle_sum(mesh: CartesianMesh, fvals: np.ndarray, k: complex) -> complex:
    d = mesh.points - k
    # drop the cell containing k
    keep = ~((np.abs(d.real) < mesh.hx / 2) & (np.abs(d.imag) < mesh.hy / 2))
    return complex(-mesh.cell_area / np.pi * np.sum(fvals[keep] / d[keep]))


def cauchy_oracle(f: Callable[[np.ndarray], np.ndarray], region: Region, k: complex, n: int) -> complex:
    """Brute-force midpoint rule on a Cartesian mesh; O(h) accurate."""
    mesh = cartesian_mesh(region, n)
    return _oracle_sum(mesh, np.asarray(f(mesh.points), dtype=complex), complex(k))


def oracle_values(
        f: Callable[[np.ndarray], np.ndarray],
        region: Region,
        targets,
        n: int,
        mesh: Optional[CartesianMesh] = None,
) -> CauchyEvaluation:
    mesh = mesh or cartesian_mesh(region, n)
    fvals = np.asarray(f(mesh.points), dtype=complex)
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    values = np.array([_oracle_sum(mesh, fvals, k) for k in targets])
    return CauchyEvaluation(targets, values, "oracle", mesh.h)
