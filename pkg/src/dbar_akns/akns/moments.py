from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from dbar_akns.logger import debug
from dbar_akns.models.objects import NormParams, VerificationReport
from dbar_akns.operator.evolution import (
    PIECES, Piece, SIGMA3, check_x, piece_entry, piece_profile, piece_sign, piece_values,
)
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.fields import MatrixFamily


__all__ = ["Moments", "compute_moments", "potential_matrix", "lemma4_split"]


@dataclass
class Moments:
    """<psi w> pieces over their active half-planes; total is <psi R>."""
    x: float
    pieces: Dict[str, np.ndarray] = field(default_factory=dict)
    interior: Dict[str, np.ndarray] = field(default_factory=dict)
    exterior: Dict[str, np.ndarray] = field(default_factory=dict)
    total: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), dtype=complex))

    @property
    def diagonal_magnitude(self) -> float:
        return float(np.max(np.abs(np.diag(self.total))))

    @property
    def u(self) -> complex:
        return complex(-2j * self.total[0, 1])

    @property
    def v(self) -> complex:
        return complex(2j * self.total[1, 0])


def piece_name(piece: Piece, sign: int) -> str:
    return f"w_{piece}_C{'plus' if sign > 0 else 'minus'}"


def _embed(piece: Piece, values: np.ndarray) -> np.ndarray:
    W = np.zeros(values.shape + (2, 2), dtype=complex)
    i, j = piece_entry(piece)
    W[..., i, j] = values
    return W


def compute_moments(psi: MatrixFamily, data: SpectralData, x: float) -> Moments:
    """<F> = -(1/pi) [sum_E1 w F + sum_E1' w |z|^-4 F(1/z)] for F = psi w on each active half-plane."""
    x = check_x(x)
    grids = psi.grids
    moments = Moments(x)
    for piece in PIECES:
        s = piece_sign(piece, x)
        inner = grids.interior(s)
        image = grids.exterior(s)

        inner_psi = psi.component(grids.component_of(s, inner=True))
        outer_psi = psi.component(grids.component_of(s, inner=False))
        F_in = inner_psi @ _embed(piece, piece_values(data, piece, x, inner.nodes))
        F_out = outer_psi @ _embed(piece, piece_values(data, piece, x, image.nodes))

        name = piece_name(piece, s)
        moments.interior[name] = -inner.integrate(F_in) / np.pi
        moments.exterior[name] = -image.integrate(F_out) / np.pi
        moments.pieces[name] = moments.interior[name] + moments.exterior[name]
        moments.total = moments.total + moments.pieces[name]

    debug(f"x={x}: <psi R> diagonal magnitude {moments.diagonal_magnitude:.3e}")
    return moments


def potential_matrix(moments: Moments) -> np.ndarray:
    """Q = -i [sigma3, <psi R>]; off-diagonal by construction."""
    A = moments.total
    return -1j * (SIGMA3 @ A - A @ SIGMA3)


def _lp(weights: np.ndarray, values: np.ndarray, p: float) -> float:
    return float(np.sum(weights * np.abs(values) ** p) ** (1.0 / p))


def lemma4_split(psi: MatrixFamily, data: SpectralData, x: float, params: NormParams) -> VerificationReport:
    """Interior (A1) and inverted exterior (A2) parts of <psi11 R12> and <psi22 R21>.

    A1 is bounded by Hoelder with the half-disk area; A2 by Hoelder on the
    inverted grid with r_(4)(z) = |z|^-4 r(1/z). The weighted shape with
    |z|^-2 moved onto the area factor, 1/(2 - 2 nu'), is reported alongside;
    it is infinite because nu' = mu/(mu - 1) > 1.
    """
    x = check_x(x)
    grids = psi.grids
    moments = compute_moments(psi, data, x)
    nu_conj = params.mu / (params.mu - 1.0)
    area_factor = (np.pi / 2) ** (1.0 / nu_conj) / np.pi
    shape_constant = 1.0 / (2.0 - 2.0 * nu_conj) if nu_conj < 1 else float("inf")

    report = VerificationReport()
    for bracket, piece, diag in (("u", "plus", 0), ("v", "minus", 1)):
        s = piece_sign(piece, x)
        name = piece_name(piece, s)
        i, j = piece_entry(piece)
        inner = grids.interior(s)
        image = grids.exterior(s)

        psi_in = psi.component(grids.component_of(s, inner=True))[:, diag, diag]
        psi_out = psi.component(grids.component_of(s, inner=False))[:, diag, diag]
        r_in = piece_profile(data, piece, inner.nodes)
        r4 = piece_profile(data, piece, image.nodes) * np.abs(image.source.nodes) ** -4

        # entry (i, j) of psi w is psi_dd R_ij
        a1 = moments.interior[name][i, j]
        a2 = moments.exterior[name][i, j]
        a1_bound = area_factor * _lp(inner.weights, psi_in, params.p) * _lp(inner.weights, r_in, params.q)
        a2_bound = area_factor * _lp(image.source.weights, psi_out, params.p) * _lp(image.source.weights, r4, params.q)

        report.add(f"lemma4_{bracket}_interior", abs(a1), a1_bound, 1e-12,
                   abs(a1) <= a1_bound * (1 + 1e-9) + 1e-15, x=x, half_plane=s, moment=a1)
        report.add(f"lemma4_{bracket}_inverted", abs(a2), a2_bound, 1e-12,
                   abs(a2) <= a2_bound * (1 + 1e-9) + 1e-15, x=x, half_plane=s, moment=a2,
                   weighted_shape_constant=shape_constant)
    return report
