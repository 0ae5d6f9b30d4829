from typing import Literal, Tuple

import numpy as np

from dbar_akns.operator.spectral_data import SpectralData


__all__ = [
    "SIGMA3", "Piece", "PIECES", "check_x", "evolve_R", "nilpotent_split", "piece_sign",
    "piece_phase", "piece_entry", "piece_profile", "piece_values", "R_active", "assert_bounded",
]


SIGMA3 = np.diag([1.0 + 0j, -1.0 + 0j])

Piece = Literal["minus", "plus"]
PIECES: Tuple[Piece, Piece] = ("minus", "plus")

# modulus slack for exponentials that are bounded by 1 in exact arithmetic
PHASE_SLACK = 1e-12


def check_x(x: float) -> float:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")
    if x == 0:
        raise ValueError("x = 0 has no half-plane decomposition")
    return x


def evolve_R(data: SpectralData, x: float, k) -> np.ndarray:
    """R(k;x) with R12 = r_+(k) e^{-2ikx}, R21 = r_-(k) e^{2ikx}; shape k.shape + (2, 2)."""
    k = np.asarray(k, dtype=complex)
    R = np.zeros(k.shape + (2, 2), dtype=complex)
    R[..., 0, 1] = data.r_plus(k) * np.exp(-2j * k * x)
    R[..., 1, 0] = data.r_minus(k) * np.exp(2j * k * x)
    return R


def nilpotent_split(R: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(w_minus, w_plus): the strictly lower and strictly upper parts of R."""
    w_minus = np.zeros_like(R)
    w_plus = np.zeros_like(R)
    w_minus[..., 1, 0] = R[..., 1, 0]
    w_plus[..., 0, 1] = R[..., 0, 1]
    return w_minus, w_plus


def piece_sign(piece: Piece, x: float) -> int:
    """Half-plane a piece is integrated over: w_- lives on C^sign(x), w_+ on C^-sign(x)."""
    s = 1 if check_x(x) > 0 else -1
    return s if piece == "minus" else -s


def piece_entry(piece: Piece) -> Tuple[int, int]:
    return (1, 0) if piece == "minus" else (0, 1)


def piece_phase(piece: Piece, x: float, k) -> np.ndarray:
    k = np.asarray(k, dtype=complex)
    return np.exp(2j * k * x) if piece == "minus" else np.exp(-2j * k * x)


def piece_profile(data: SpectralData, piece: Piece, k) -> np.ndarray:
    return data.r_minus(k) if piece == "minus" else data.r_plus(k)


def assert_bounded(phase: np.ndarray, where: str):
    worst = float(np.max(np.abs(phase))) if np.size(phase) else 0.0
    assert worst <= 1.0 + PHASE_SLACK, f"{where}: exponential factor of modulus {worst} > 1"


def piece_values(data: SpectralData, piece: Piece, x: float, k) -> np.ndarray:
    """Scalar nonzero entry of w_piece at k, which must lie in the piece's active half-plane."""
    phase = piece_phase(piece, x, k)
    assert_bounded(phase, f"w_{piece} at x={x}")
    return piece_profile(data, piece, k) * phase


def R_active(data: SpectralData, x: float, k) -> np.ndarray:
    """The part of R integrated on each half-plane: the entry whose exponential is bounded there."""
    x = check_x(x)
    k = np.asarray(k, dtype=complex)
    upper = k.imag >= 0
    out = np.zeros(k.shape + (2, 2), dtype=complex)
    for piece in PIECES:
        on = upper if piece_sign(piece, x) > 0 else ~upper
        i, j = piece_entry(piece)
        out[..., i, j] = np.where(on, piece_profile(data, piece, k) * piece_phase(piece, x, np.where(on, k, 0)), 0)
    return out
