from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from dbar_akns.errors import Divergence, NonConvergence, SmallNormViolation
from dbar_akns.geometry.grids import ComponentGrids, QuadratureGrid, build_component_grids
from dbar_akns.logger import debug, info
from dbar_akns.models.objects import VerificationReport
from dbar_akns.operator.evolution import R_active, check_x
from dbar_akns.operator.rtc import RTCOperator
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.fields import IDENTITY, MatrixFamily
from dbar_akns.spaces.norms import pointwise_norm


__all__ = [
    "SolveResult", "solve_psi", "interpolate_psi", "dbar_residual", "contraction_ratio",
    "small_norm_threshold", "dbar_refinement_check", "GROWTH_WINDOW", "DBAR_REFINEMENT_FACTOR",
]


# consecutive growing updates that count as divergence
GROWTH_WINDOW = 5

# updates above this size are a blow-up regardless of the growth pattern
BLOWUP = 1e100

HOLDOUT_TARGETS = 32

# each halving of h must shrink the dbar residual by this factor
DBAR_REFINEMENT_FACTOR = 1.7


@dataclass
class SolveResult:
    psi: MatrixFamily
    iterations: int
    residual: float
    x: float = 0.0
    node_residual: float = 0.0
    changes: List[float] = field(default_factory=list)

    @property
    def contraction_ratio(self) -> float:
        return contraction_ratio(self.changes)


def _growing(changes: List[float]) -> bool:
    if len(changes) <= GROWTH_WINDOW:
        return False
    tail = changes[-(GROWTH_WINDOW + 1):]
    return all(b > a for a, b in zip(tail[:-1], tail[1:]))


def _holdout_targets(seed: int, n: int = HOLDOUT_TARGETS) -> np.ndarray:
    # off-node points in |k| < 2 covering both half-planes and both sides of |k| = 1
    u = np.random.default_rng(seed).random((n, 2))
    return 2.0 * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])


def solve_psi(
        data: SpectralData,
        x: float,
        grids: ComponentGrids,
        tol: float = 1e-10,
        max_iter: int = 200,
        seed: int = 0,
        operator: Optional[RTCOperator] = None,
) -> SolveResult:
    """Neumann iteration psi_{n+1} = I + psi_n R T_C at every component node.

    Stops when the sup Frobenius change drops below tol. The residual is the
    sup of |psi - I - psi R T_C| at held-out targets, where psi off the nodes
    is the Nystroem interpolant I + psi_prev R T_C.
    """
    x = check_x(x)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    op, active, e1_only = operator, slice(None), False
    if op is None:
        e1 = slice(0, 2 * grids.size)
        op = RTCOperator(grids, data, x, grids.nodes[e1])
        if op.has_exterior:
            op = RTCOperator(grids, data, x, grids.nodes)
        else:
            # no density on E2: iterate on the E1 nodes and fill E2 once at the end
            active, e1_only = e1, True
    psi = MatrixFamily.identity(grids)
    changes: List[float] = []

    prev = psi
    for n in range(1, max_iter + 1):
        values = psi.values.copy()
        values[active] = IDENTITY + op.apply(psi)
        nxt = psi.replace(values)
        if not nxt.is_finite:
            raise Divergence(f"x={x}: non-finite iterate at iteration {n}", n)

        change = float(np.max(pointwise_norm(nxt.values - psi.values)))
        changes.append(change)
        debug(f"x={x} iteration {n}: change {change:.3e}")

        prev, psi = psi, nxt
        if change < tol:
            break
        if change > BLOWUP or _growing(changes):
            raise Divergence(f"x={x}: Neumann updates grew for {GROWTH_WINDOW} consecutive iterations "
                             f"(last change {change:.3e})", n)
    else:
        raise NonConvergence(f"x={x}: no convergence after {max_iter} iterations "
                             f"(last change {changes[-1]:.3e})", max_iter, changes[-1])

    if e1_only:
        rest = slice(2 * grids.size, None)
        values = psi.values.copy()
        values[rest] = IDENTITY + RTCOperator(grids, data, x, grids.nodes[rest], cache_mb=0).apply(psi)
        psi = psi.replace(values)

    node_residual = float(np.max(pointwise_norm(psi.values[active] - IDENTITY - op.apply(psi))))
    residual = max(node_residual, _holdout_residual(grids, data, x, prev, psi, seed))

    info(f"x={x}: converged in {n} iterations, change {changes[-1]:.3e}, residual {residual:.3e}")
    return SolveResult(psi, n, residual, x, node_residual, changes)


def _holdout_residual(grids: ComponentGrids, data: SpectralData, x: float,
                      prev: MatrixFamily, psi: MatrixFamily, seed: int) -> float:
    holdout = RTCOperator(grids, data, x, _holdout_targets(seed), cache_mb=0)
    if holdout.is_zero:
        return 0.0
    interpolant = IDENTITY + holdout.apply(prev)
    return float(np.max(pointwise_norm(interpolant - IDENTITY - holdout.apply(psi))))


def interpolate_psi(result: SolveResult, data: SpectralData, targets) -> np.ndarray:
    """psi at arbitrary targets through the integral equation: I + psi R T_C(k)."""
    op = RTCOperator(result.psi.grids, data, result.x, targets, cache_mb=0)
    return IDENTITY + op.apply(result.psi)


def contraction_ratio(changes: List[float], floor: float = 1e-13) -> float:
    """Geometric mean of successive update ratios, ignoring updates at round-off level."""
    c = np.asarray([v for v in changes if v > floor], dtype=float)
    if c.size < 2:
        # the iteration terminated exactly (zero or nilpotent data)
        return 0.0 if changes else float("nan")
    return float(np.exp(np.mean(np.log(c[1:] / c[:-1]))))


def _wirtinger_on_lattice(grid: QuadratureGrid, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Centered-difference dbar of lattice values on the interior (1..nr-2, 1..ntheta-2) indices.

    dbar = (e^{i theta}/2) (d_r + (i/r) d_theta).
    """
    lat = grid.lattice(values)
    rr, tt = grid.polar
    r = grid.lattice(rr)[1:-1, 1:-1]
    theta = grid.lattice(tt)[1:-1, 1:-1]

    d_r = (lat[2:, 1:-1] - lat[:-2, 1:-1]) / (2 * grid.dr)
    d_t = (lat[1:-1, 2:] - lat[1:-1, :-2]) / (2 * grid.dtheta)
    factor = (np.exp(1j * theta) / 2)[..., None, None]
    dbar = factor * (d_r + 1j / r[..., None, None] * d_t)
    nodes = grid.lattice(grid.nodes)[1:-1, 1:-1]
    return dbar.reshape(-1, 2, 2), nodes.ravel()


def dbar_residual(psi: MatrixFamily, data: SpectralData, x: float, margin: float = 3.0,
                  exclusion: Optional[float] = None) -> float:
    """sup |dbar psi - psi R_active| over E1 nodes at least exclusion from 0, |k| = 1 and the real axis.

    exclusion defaults to margin*h. A refinement study passes one distance for
    every level so all levels are measured on the same region.
    """
    x = check_x(x)
    grids = psi.grids
    worst = 0.0
    used = 0
    for name, grid in (("E1plus", grids.plus), ("E1minus", grids.minus)):
        dbar, nodes = _wirtinger_on_lattice(grid, psi.component(name))
        centre = grid.lattice(psi.component(name))[1:-1, 1:-1].reshape(-1, 2, 2)

        gap = exclusion if exclusion is not None else margin * grid.h
        r = np.abs(nodes)
        keep = (r >= gap) & (r <= 1.0 - gap) & (np.abs(nodes.imag) >= gap)
        if not np.any(keep):
            continue
        used += int(np.count_nonzero(keep))

        rhs = centre[keep] @ R_active(data, x, nodes[keep])
        worst = max(worst, float(np.max(pointwise_norm(dbar[keep] - rhs))))

    if used == 0:
        distance = f"{exclusion:g}" if exclusion is not None else f"{margin}h"
        raise ValueError(f"grid too coarse for dbar residual: no node is {distance} inside the half disks")
    return worst


def dbar_refinement_check(
        data: SpectralData,
        x: float,
        grids: ComponentGrids,
        tol: float = 1e-10,
        max_iter: int = 200,
        psi: Optional[MatrixFamily] = None,
        levels: Tuple[int, ...] = (1, 2, 4),
        margin: float = 3.0,
        floor: float = 1e-8,
) -> VerificationReport:
    """dbar residual of psi solved on grids refined by each multiplier in levels.

    Every level is measured at margin times the coarsest h from 0, |k| = 1 and
    the real axis. The check passes when each refinement shrinks the residual
    by DBAR_REFINEMENT_FACTOR, or the residual already sits below floor.
    psi, when given, is the solution on grids itself.
    """
    x = check_x(x)
    if len(levels) < 2:
        raise ValueError(f"refinement needs at least two levels, got {levels}")
    exclusion = margin * grids.h
    residuals = []
    for m in levels:
        level = grids if m == 1 else build_component_grids(m * grids.plus.nr, m * grids.plus.ntheta)
        solved = psi if (m == 1 and psi is not None) else solve_psi(data, x, level, tol=tol, max_iter=max_iter).psi
        residuals.append(dbar_residual(solved, data, x, exclusion=exclusion))

    factors = [a / b if b > 0 else float("inf") for a, b in zip(residuals[:-1], residuals[1:])]
    passed = all(a <= floor or f >= DBAR_REFINEMENT_FACTOR for a, f in zip(residuals[:-1], factors))
    info(f"x={x}: dbar residuals {', '.join(f'{r:.3e}' for r in residuals)}")

    report = VerificationReport()
    report.add(f"dbar_residual_refinement_x={x:g}", float(min(factors)), DBAR_REFINEMENT_FACTOR, 0.0, passed,
               residuals=residuals, factors=factors, levels=list(levels), exclusion=exclusion)
    return report


def small_norm_threshold(
        data: SpectralData,
        x: float,
        grids: ComponentGrids,
        lo: float = 0.0,
        hi: float = 100.0,
        steps: int = 12,
        max_iter: int = 200,
        tol: float = 1e-8,
) -> Tuple[float, float]:
    """Bracket (converging scale, failing scale) of the Neumann iteration for data scaled by c.

    hi must fail; the bracket is halved steps times.
    """
    def converges(c: float) -> bool:
        try:
            solve_psi(data.scaled(c), x, grids, tol=tol, max_iter=max_iter)
            return True
        except (SmallNormViolation, NonConvergence):
            return False

    if converges(hi):
        raise ValueError(f"scale {hi} still converges; raise hi")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    info(f"x={x}: Neumann threshold bracket [{lo:.4g}, {hi:.4g}]")
    return lo, hi
