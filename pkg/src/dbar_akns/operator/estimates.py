from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from dbar_akns.geometry.grids import ComponentGrids, Region, build_component_grids
from dbar_akns.logger import info
from dbar_akns.models.objects import NormParams, VerificationReport
from dbar_akns.operator.evolution import PIECES, check_x, piece_sign, piece_values
from dbar_akns.operator.rtc import RTCOperator
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.fields import MatrixFamily
from dbar_akns.spaces.norms import family_lpnu_norm, holder_norm_estimate


__all__ = ["OperatorEstimate", "estimate_operator_norm", "rtc_evaluator", "lemma2_membership"]


# region the H^alpha norm of psi R T_C is sampled on
HOLDER_REGION = Region.disk(0j, 2.0)


@dataclass(frozen=True)
class OperatorEstimate:
    """Randomized lower bound of ||R T_C||: L^{p,0} -> H^alpha."""
    norm_lower_bound: float
    small_norm_margin: float
    p: float
    q: float
    alpha: float
    # smallest empirical Hoelder exponent seen over the trial outputs
    holder_exponent: float = float("inf")

    @property
    def small_norm(self) -> bool:
        return self.norm_lower_bound < 1.0


def rtc_evaluator(psi: MatrixFamily, data: SpectralData, x: float):
    def f(k: np.ndarray) -> np.ndarray:
        return RTCOperator(psi.grids, data, x, k, cache_mb=0).apply(psi)
    return f


def estimate_operator_norm(
        data: SpectralData,
        params: NormParams,
        x_samples: Iterable[float],
        trials: int,
        seed: int,
        grids: Optional[ComponentGrids] = None,
        n_pairs: int = 1000,
) -> OperatorEstimate:
    """max over trials and x of ||phi R T_C||_{H^alpha} for random unit-L^{p,0} phi.

    The H^alpha norm is the sampled sup norm plus the sampled seminorm, so the
    result never exceeds the true operator norm up to quadrature error.
    """
    if trials < 10:
        raise ValueError(f"trials must be >= 10, got {trials}")
    x_samples = [check_x(x) for x in x_samples]
    if not x_samples:
        raise ValueError("x_samples must not be empty")

    grids = grids or build_component_grids(12, 64)
    rng = np.random.default_rng(seed)

    bound, exponent = 0.0, float("inf")
    for trial in range(trials):
        raw = rng.standard_normal((4 * grids.size, 2, 2)) + 1j * rng.standard_normal((4 * grids.size, 2, 2))
        phi = MatrixFamily(grids, raw)
        phi = phi.replace(raw / family_lpnu_norm(phi, params.p, 0.0))

        for x in x_samples:
            estimate = holder_norm_estimate(rtc_evaluator(phi, data, x), params.alpha, HOLDER_REGION,
                                            n_pairs, seed + trial)
            bound = max(bound, estimate.sup_norm + estimate.seminorm_estimate)
            exponent = min(exponent, estimate.empirical_exponent)

    info(f"operator norm estimate {bound:.4g} over {trials} trials, {len(x_samples)} x samples")
    return OperatorEstimate(bound, 1.0 - bound, params.p, params.q, params.alpha, exponent)


def _l_mu(weights: np.ndarray, magnitudes: np.ndarray, mu: float) -> float:
    return float(np.sum(weights * magnitudes ** mu) ** (1.0 / mu))


def lemma2_membership(psi: MatrixFamily, data: SpectralData, x: float, params: NormParams) -> VerificationReport:
    """L^mu norms of the active pieces psi w on E1 and of their weighted inverted images.

    Recorded as finite or infinite; nothing is asserted about the implication
    from the data norms.
    """
    x = check_x(x)
    grids = psi.grids
    report = VerificationReport()
    for piece in PIECES:
        s = piece_sign(piece, x)
        column = 1 if piece == "minus" else 0
        inner = grids.interior(s)
        image = grids.exterior(s)

        w_in = piece_values(data, piece, x, inner.nodes)
        inner_psi = psi.component(grids.component_of(s, inner=True))[:, :, column]
        interior = _l_mu(inner.weights, np.linalg.norm(inner_psi, axis=1) * np.abs(w_in), params.mu)

        w_out = piece_values(data, piece, x, image.nodes) * np.abs(image.source.nodes) ** -2
        outer_psi = psi.component(grids.component_of(s, inner=False))[:, :, column]
        exterior = _l_mu(image.source.weights, np.linalg.norm(outer_psi, axis=1) * np.abs(w_out), params.mu)

        for part, value in (("interior", interior), ("inverted", exterior)):
            report.add(f"lemma2_{piece}_{part}_membership", value, float("inf"), 0.0, np.isfinite(value),
                       x=x, half_plane=s, mu=params.mu)
    return report
