from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from dbar_akns.cauchy.transform import NODE_TOLERANCE, CauchyOperator
from dbar_akns.geometry.grids import ComponentGrids
from dbar_akns.globals import KERNEL_CACHE_MB, TARGET_CHUNK
from dbar_akns.logger import debug
from dbar_akns.operator.evolution import PIECES, Piece, R_active, check_x, piece_sign, piece_values
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.fields import MatrixFamily


__all__ = ["RTCOperator", "apply_RTC", "node_gaps", "rtc_direct_oracle"]


@dataclass
class _PieceKernels:
    piece: Piece
    sign: int
    interior_slice: slice
    exterior_slice: slice
    # nonzero entry of w_piece at the interior nodes
    interior_weights: np.ndarray
    # w_piece(1/z) conj(z)^-2 at the source nodes z of the inverted grid
    exterior_weights: np.ndarray
    interior: CauchyOperator
    exterior: Optional[CauchyOperator]
    origin: Optional[CauchyOperator]

    @property
    def column(self) -> int:
        # psi w_- = [[psi12 R21, 0], [psi22 R21, 0]], psi w_+ = [[0, psi11 R12], [0, psi21 R12]]
        return 0 if self.piece == "minus" else 1

    @property
    def source_column(self) -> int:
        return 1 - self.column


class RTCOperator:
    """psi -> psi R T_C(.;x) at fixed targets, through the half-plane decomposition.

    For x > 0 this is psi w_- T_{C+} + psi w_+ T_{C-}; for x < 0 the half-planes
    swap. Each half-plane transform is the E1 piece plus the E2 piece, and the
    E2 piece is evaluated on the inverted grid as G(0) - G(1/k) with
    G(lam) = -(1/pi) sum w F(1/z) conj(z)^-2 / (z - lam).
    """

    def __init__(
            self,
            grids: ComponentGrids,
            data: SpectralData,
            x: float,
            targets,
            cache_mb: float = KERNEL_CACHE_MB,
            chunk: int = TARGET_CHUNK,
    ):
        self.grids = grids
        self.data = data
        self.x = check_x(x)
        self.targets = np.atleast_1d(np.asarray(targets, dtype=complex))
        if not np.all(np.isfinite(self.targets)):
            raise ValueError("RTC targets must be finite")

        far = self.targets != 0
        self._far = far
        inverted = np.where(far, 1.0 / np.where(far, self.targets, 1.0), 0j)

        self._pieces: List[_PieceKernels] = []
        for piece in PIECES:
            s = piece_sign(piece, self.x)
            inner = grids.interior(s)
            image = grids.exterior(s)

            w_in = piece_values(data, piece, self.x, inner.nodes)
            w_out = piece_values(data, piece, self.x, image.nodes) * np.conj(image.source.nodes) ** -2
            if not np.any(w_in) and not np.any(w_out):
                continue

            has_exterior = bool(np.any(w_out))
            kw = dict(cache_mb=cache_mb, chunk=chunk)
            self._pieces.append(_PieceKernels(
                piece=piece,
                sign=s,
                interior_slice=grids.slice(grids.component_of(s, inner=True)),
                exterior_slice=grids.slice(grids.component_of(s, inner=False)),
                interior_weights=w_in,
                exterior_weights=w_out,
                interior=CauchyOperator.for_grid(inner, self.targets, **kw),
                exterior=CauchyOperator.for_grid(image.source, inverted, **kw) if has_exterior else None,
                origin=CauchyOperator.for_grid(image.source, np.zeros(1), **kw) if has_exterior else None,
            ))

        debug(f"RTC x={self.x}: {len(self._pieces)} active pieces, {self.targets.size} targets")

    @property
    def is_zero(self) -> bool:
        return not self._pieces

    @property
    def has_exterior(self) -> bool:
        return any(pk.exterior is not None for pk in self._pieces)

    def apply(self, psi: Union[MatrixFamily, np.ndarray]) -> np.ndarray:
        values = psi.values if isinstance(psi, MatrixFamily) else np.asarray(psi, dtype=complex)
        out = np.zeros((self.targets.size, 2, 2), dtype=complex)

        for pk in self._pieces:
            density = values[pk.interior_slice][:, :, pk.source_column] * pk.interior_weights[:, None]
            result = pk.interior.apply(density)

            if pk.exterior is not None:
                density = values[pk.exterior_slice][:, :, pk.source_column] * pk.exterior_weights[:, None]
                at_origin = pk.origin.apply(density)[0]
                result += at_origin[None, :] - np.where(self._far[:, None], pk.exterior.apply(density), 0)

            out[:, :, pk.column] += result
        return out


def node_gaps(grids: ComponentGrids, targets: np.ndarray) -> np.ndarray:
    """Distance from each target to the component node of the cell it falls in (inf off every grid)."""
    gaps = np.full(targets.size, np.inf)
    inverted = 1.0 / np.where(targets != 0, targets, np.inf)
    for grid, nodes, points in (
            (grids.plus, grids.plus.nodes, targets),
            (grids.minus, grids.minus.nodes, targets),
            (grids.e2plus.source, grids.e2plus.nodes, inverted),
            (grids.e2minus.source, grids.e2minus.nodes, inverted),
    ):
        cells = grid.locate(points)
        located = cells >= 0
        gaps[located] = np.minimum(gaps[located], np.abs(targets[located] - nodes[cells[located]]))
    return gaps


def apply_RTC(psi: MatrixFamily, data: SpectralData, x: float, targets) -> np.ndarray:
    """psi R T_C(k) at targets; targets on a component node are rejected like in cauchy_transform."""
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if not np.all(np.isfinite(targets)):
        raise ValueError("RTC targets must be finite")
    gaps = node_gaps(psi.grids, targets)
    if np.any(gaps < NODE_TOLERANCE):
        raise ValueError(f"target {targets[np.argmin(gaps)]} coincides with a quadrature node")
    return RTCOperator(psi.grids, data, x, targets, cache_mb=0).apply(psi)


def rtc_direct_oracle(data: SpectralData, x: float, targets, n: int = 256) -> np.ndarray:
    """I R T_C at targets by polar quadrature centred on each target.

    In polar coordinates around k the kernel dA/(z - k) becomes e^{-i phi} drho dphi,
    so the integrand is as smooth as R_active itself. Each ray is cut at the
    support circle and at the real axis, where R_active switches entries; the
    segments use n-point Gauss-Legendre and the angle the n-point periodic
    trapezoid rule. Needs data supported in |k| <= 1 and targets off the real axis.
    """
    x = check_x(x)
    support = data.support_radius
    if support > 1.0:
        raise ValueError(f"direct oracle needs data supported in |k| <= 1, got radius {support}")
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if np.any(targets.imag == 0):
        raise ValueError("direct oracle targets must lie off the real axis")

    out = np.zeros((targets.size, 2, 2), dtype=complex)
    if data.is_zero or support <= 0:
        return out

    t, gw = np.polynomial.legendre.leggauss(n)
    e = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    for idx, k in enumerate(targets):
        b = (k * np.conj(e)).real
        root = np.sqrt(np.maximum(b ** 2 + support ** 2 - abs(k) ** 2, 0.0))
        lo = np.maximum(-b - root, 0.0)
        hi = np.maximum(-b + root, lo)
        with np.errstate(divide="ignore"):
            cross = -k.imag / e.imag
        mid = np.clip(np.where(cross > 0, cross, np.inf), lo, hi)

        total = np.zeros((2, 2), dtype=complex)
        for a, c in ((lo, mid), (mid, hi)):
            rho = a[:, None] + (c - a)[:, None] * (t[None, :] + 1) / 2
            w = (c - a)[:, None] / 2 * gw[None, :] * np.conj(e)[:, None]
            total += np.einsum("ab,abij->ij", w, R_active(data, x, k + rho * e[:, None]))
        out[idx] = -total * (2 / n)
    return out
