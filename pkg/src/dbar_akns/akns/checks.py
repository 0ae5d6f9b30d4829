from typing import List, NamedTuple, Sequence

import numpy as np

from dbar_akns.akns.moments import compute_moments
from dbar_akns.akns.potentials import PotentialSample, reconstruct_potentials
from dbar_akns.errors import SmallNormViolation
from dbar_akns.geometry.grids import ComponentGrids
from dbar_akns.logger import info
from dbar_akns.models.objects import NormParams, VerificationReport
from dbar_akns.operator.estimates import OperatorEstimate
from dbar_akns.operator.evolution import check_x
from dbar_akns.operator.rtc import RTCOperator
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.fields import MatrixFamily
from dbar_akns.spaces.norms import loglog_slope, lpnu_norm


__all__ = [
    "data_norms", "potential_bounds_check", "LipschitzProbe", "lipschitz_ratio", "lipschitz_probe",
    "born_order_check", "amplitude_sweep", "moment_identity_check", "POTENTIAL_BOUND_CONSTANT",
]


# frozen constant of the |u| <= M ||r_+|| / margin shape, calibrated on the preset catalog
POTENTIAL_BOUND_CONSTANT = 4.0

BORN_MIN_SLOPE = 1.8
SWEEP_MAX_DRIFT = 0.05
LIPSCHITZ_SPREAD = 2.0


def data_norms(data: SpectralData, q: float) -> tuple:
    """(||r_+||, ||r_-||) in L^{q,2}(C)."""
    return lpnu_norm(data.r_plus, q, 2.0), lpnu_norm(data.r_minus, q, 2.0)


def potential_bounds_check(sample: PotentialSample, data: SpectralData, params: NormParams,
                           estimate: OperatorEstimate) -> VerificationReport:
    """sup and L2 norms of u, v against M ||r_+-|| / (1 - ||R T_C||), plus the ratio sup|u|/||r_+||."""
    if not estimate.small_norm:
        raise SmallNormViolation(f"operator norm estimate {estimate.norm_lower_bound:.4g} >= 1")

    n_plus, n_minus = data_norms(data, params.q)
    margin = estimate.small_norm_margin
    span = float(np.sqrt(sample.x_grid[-1] - sample.x_grid[0])) if sample.x_grid.size > 1 else 1.0

    report = VerificationReport()
    for name, sup, l2, norm in (("u", sample.sup_u, sample.l2_u, n_plus), ("v", sample.sup_v, sample.l2_v, n_minus)):
        bound = POTENTIAL_BOUND_CONSTANT * norm / margin
        report.add(f"potential_{name}_sup_bound", sup, bound, 1e-15, sup <= bound + 1e-15,
                   data_norm=norm, margin=margin)
        report.add(f"potential_{name}_l2_bound", l2, bound * span, 1e-15, l2 <= bound * span + 1e-15,
                   data_norm=norm, margin=margin, finite=np.isfinite(l2))

    ratio = sample.sup_u / n_plus if n_plus > 0 else 0.0
    report.add("potential_amplitude_ratio", ratio, POTENTIAL_BOUND_CONSTANT / margin, 0.0,
               ratio <= POTENTIAL_BOUND_CONSTANT / margin)
    return report


def _reconstruct(data: SpectralData, x_grid, grids: ComponentGrids, tol: float, max_iter: int) -> PotentialSample:
    sample = reconstruct_potentials(data, x_grid, grids, tol=tol, max_iter=max_iter)
    if not sample.complete:
        raise sample.worst_failure()
    return sample


def lipschitz_ratio(dataA: SpectralData, dataB: SpectralData, x_grid, params: NormParams,
                    grids: ComponentGrids, tol: float = 1e-12, max_iter: int = 200) -> float:
    """sup_x |u_A - u_B| / (||r_+A - r_+B|| + ||r_-A - r_-B||) in L^{q,2}; 0 when the data agree."""
    den = lpnu_norm(lambda k: dataA.r_plus(k) - dataB.r_plus(k), params.q, 2.0) \
        + lpnu_norm(lambda k: dataA.r_minus(k) - dataB.r_minus(k), params.q, 2.0)
    if den == 0:
        return 0.0
    uA = _reconstruct(dataA, x_grid, grids, tol, max_iter).u
    uB = _reconstruct(dataB, x_grid, grids, tol, max_iter).u
    return float(np.max(np.abs(uA - uB))) / den


class LipschitzProbe(NamedTuple):
    ratio: float
    passed: bool
    ratios: List[float]


def lipschitz_probe(
        dataA: SpectralData,
        dataB: SpectralData,
        x_grid,
        params: NormParams,
        B: float,
        grids: ComponentGrids,
        shrink: Sequence[float] = (0.1, 0.01),
        tol: float = 1e-12,
        max_iter: int = 200,
) -> LipschitzProbe:
    """Lipschitz ratio between A and B, then between A and A + t (B - A) for each t in shrink.

    Passes when the largest and smallest ratio agree within a factor 2. Both
    data sets must have L^{q,2} norms below B; a failing small-norm condition
    surfaces as Divergence from the solver.
    """
    for label, data in (("A", dataA), ("B", dataB)):
        norms = data_norms(data, params.q)
        if max(norms) >= B:
            raise SmallNormViolation(f"data {label} has L^(q,2) norms {norms}, bound B={B}")

    ratios = [lipschitz_ratio(dataA, dataB, x_grid, params, grids, tol, max_iter)]
    for t in shrink:
        between = dataA.plus(dataB.scaled(t)).plus(dataA.scaled(-t))
        ratios.append(lipschitz_ratio(dataA, between, x_grid, params, grids, tol, max_iter))

    positive = [r for r in ratios if r > 0]
    passed = not positive or (len(positive) == len(ratios) and max(ratios) <= LIPSCHITZ_SPREAD * min(ratios))
    info(f"lipschitz ratios {['%.4g' % r for r in ratios]}: pass={passed}")
    return LipschitzProbe(ratios[0], passed, ratios)


def born_order_check(data: SpectralData, x_grid, epsilons: Sequence[float], grids: ComponentGrids,
                     tol: float = 1e-14, max_iter: int = 200) -> VerificationReport:
    """Slope of sup_x |u(x; eps) - eps u1(x)| against eps, u1 being the psi = I moment of the unit data.

    psi11 - 1 is of second order, so the gap is of third order; the check
    asks for at least second order.
    """
    xs = np.sort([check_x(x) for x in x_grid])
    identity = MatrixFamily.identity(grids)
    u1 = np.array([compute_moments(identity, data, x).u for x in xs])

    gaps = []
    for eps in epsilons:
        u = _reconstruct(data.scaled(eps), xs, grids, tol, max_iter).u
        gaps.append(float(np.max(np.abs(u - eps * u1))))

    if max(gaps) == 0:
        slope = float("inf")
    else:
        slope = loglog_slope(epsilons, gaps)
    report = VerificationReport()
    report.add("born_order", slope, 2.0, 0.2, slope >= BORN_MIN_SLOPE, epsilons=list(epsilons), gaps=gaps)
    info(f"born order slope {slope:.3f} over eps={list(epsilons)}")
    return report


def amplitude_sweep(data: SpectralData, x_grid, amplitudes: Sequence[float], grids: ComponentGrids,
                    params: NormParams, tol: float = 1e-12, max_iter: int = 200) -> VerificationReport:
    """sup|u| / ||r_+|| across amplitudes; the last decade must drift by less than 5%."""
    amplitudes = sorted(amplitudes, reverse=True)
    ratios = []
    for a in amplitudes:
        scaled = data.scaled(a)
        n_plus, _ = data_norms(scaled, params.q)
        sample = _reconstruct(scaled, x_grid, grids, tol, max_iter)
        ratios.append(sample.sup_u / n_plus if n_plus > 0 else 0.0)

    last, prev = ratios[-1], ratios[-2] if len(ratios) > 1 else ratios[-1]
    drift = abs(last - prev) / last if last > 0 else 0.0
    report = VerificationReport()
    report.add("amplitude_sweep_drift", drift, 0.0, SWEEP_MAX_DRIFT, drift < SWEEP_MAX_DRIFT,
               amplitudes=amplitudes, ratios=ratios)
    return report


def moment_identity_check(psi: MatrixFamily, data: SpectralData, x: float, targets) -> VerificationReport:
    """[z psi R T_C](k) = k [psi R T_C](k) + <psi R> at the targets."""
    x = check_x(x)
    k = np.atleast_1d(np.asarray(targets, dtype=complex))
    op = RTCOperator(psi.grids, data, x, k, cache_mb=0)

    weighted = psi.replace(psi.values * psi.grids.nodes[:, None, None])
    lhs = op.apply(weighted)
    total = compute_moments(psi, data, x).total
    rhs = k[:, None, None] * op.apply(psi) + total[None, :, :]

    scale = max(float(np.max(np.abs(rhs))), 1e-300)
    err = float(np.max(np.abs(lhs - rhs))) / scale
    tol = psi.grids.h
    report = VerificationReport()
    report.add("moment_identity", err, 0.0, tol, err <= tol, x=x, targets=k.size)
    return report
