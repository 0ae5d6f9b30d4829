from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from dbar_akns.akns.moments import Moments, compute_moments, potential_matrix
from dbar_akns.errors import DbarError, SmallNormViolation
from dbar_akns.geometry.grids import ComponentGrids
from dbar_akns.logger import info
from dbar_akns.operator.evolution import SIGMA3, check_x
from dbar_akns.operator.solver import SolveResult, interpolate_psi, solve_psi
from dbar_akns.operator.spectral_data import SpectralData
from dbar_akns.spaces.norms import pointwise_norm
from dbar_akns.workers.w_pool import map_ordered


__all__ = ["PotentialSample", "AknsRefinement", "reconstruct_potentials", "akns_residual", "akns_refinement", "solve_at"]


@dataclass
class PotentialSample:
    """u, v on a sorted x grid; entries of failed x values are NaN and listed in failures."""
    x_grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray
    diagonal: np.ndarray
    failures: Dict[float, DbarError] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failures

    @property
    def ok(self) -> np.ndarray:
        return np.isfinite(self.u) & np.isfinite(self.v)

    @property
    def sup_u(self) -> float:
        return float(np.max(np.abs(self.u[self.ok]))) if np.any(self.ok) else 0.0

    @property
    def sup_v(self) -> float:
        return float(np.max(np.abs(self.v[self.ok]))) if np.any(self.ok) else 0.0

    def _l2(self, values: np.ndarray) -> float:
        ok = self.ok
        if np.count_nonzero(ok) < 2:
            return 0.0
        return float(np.sqrt(trapezoid(np.abs(values[ok]) ** 2, self.x_grid[ok])))

    @property
    def l2_u(self) -> float:
        return self._l2(self.u)

    @property
    def l2_v(self) -> float:
        return self._l2(self.v)

    def worst_failure(self) -> Optional[DbarError]:
        """A small-norm failure outranks a non-convergence."""
        errors = list(self.failures.values())
        return next((e for e in errors if isinstance(e, SmallNormViolation)), errors[0] if errors else None)


@dataclass
class _PointResult:
    solve: SolveResult
    moments: Moments


def solve_at(data: SpectralData, x: float, grids: ComponentGrids, tol: float, max_iter: int,
             seed: int = 0) -> _PointResult:
    result = solve_psi(data, x, grids, tol=tol, max_iter=max_iter, seed=seed)
    moments = compute_moments(result.psi, data, x)
    Q = potential_matrix(moments)
    assert Q[0, 0] == 0 and Q[1, 1] == 0, f"x={x}: Q has a diagonal part {Q[0, 0]}, {Q[1, 1]}"
    return _PointResult(result, moments)


def reconstruct_potentials(
        data: SpectralData,
        x_grid,
        grids: ComponentGrids,
        tol: float = 1e-10,
        max_iter: int = 200,
        workers: int = 1,
        seed: int = 0,
) -> PotentialSample:
    """u = -2i <psi R>_12 and v = 2i <psi R>_21 at every x; x values are independent tasks."""
    xs = np.sort(np.asarray([check_x(x) for x in x_grid], dtype=float))

    outcomes = map_ordered(lambda x: solve_at(data, x, grids, tol, max_iter, seed), xs, workers)

    n = xs.size
    sample = PotentialSample(
        x_grid=xs,
        u=np.full(n, np.nan + 0j),
        v=np.full(n, np.nan + 0j),
        iterations=np.zeros(n, dtype=int),
        residuals=np.full(n, np.nan),
        diagonal=np.full(n, np.nan),
    )
    for idx, outcome in enumerate(outcomes):
        if not outcome.ok:
            sample.failures[float(outcome.item)] = outcome.error
            sample.iterations[idx] = getattr(outcome.error, "iterations", 0)
            continue
        point: _PointResult = outcome.value
        sample.u[idx] = point.moments.u
        sample.v[idx] = point.moments.v
        sample.iterations[idx] = point.solve.iterations
        sample.residuals[idx] = point.solve.residual
        sample.diagonal[idx] = point.moments.diagonal_magnitude

    info(f"reconstructed {n - len(sample.failures)}/{n} x values; sup|u|={sample.sup_u:.4g} sup|v|={sample.sup_v:.4g}")
    return sample


def _residual_fields(
        data: SpectralData,
        x0: float,
        steps,
        k: np.ndarray,
        grids: ComponentGrids,
        tol: float,
        max_iter: int,
) -> Dict[float, np.ndarray]:
    """Pointwise AKNS residual matrices at k for each centered-difference step; x0 is solved once."""
    x0 = check_x(x0)
    if any(hx <= 0 for hx in steps):
        raise ValueError(f"hx must be positive, got {steps}")
    xs = sorted({x0} | {x0 + s * hx for hx in steps for s in (-1, 1)})
    if any(np.sign(x) != np.sign(x0) or x == 0 for x in xs):
        raise ValueError(f"x0 +- hx must stay on the side of x0={x0}, got hx={max(steps)}")

    psi = {}
    Q = None
    for x in xs:
        point = solve_at(data, x, grids, tol, max_iter)
        psi[x] = interpolate_psi(point.solve, data, k)
        if x == x0:
            Q = potential_matrix(point.moments)

    centre = psi[x0]
    commutator = SIGMA3 @ centre - centre @ SIGMA3
    rhs = -1j * k[:, None, None] * commutator + Q @ centre
    return {hx: (psi[x0 + hx] - psi[x0 - hx]) / (2 * hx) - rhs for hx in steps}


def akns_residual(
        data: SpectralData,
        x0: float,
        hx: float,
        k_samples,
        grids: ComponentGrids,
        tol: float = 1e-12,
        max_iter: int = 200,
) -> float:
    """sup_k |(psi(x0+hx) - psi(x0-hx))/(2hx) - (-ik[sigma3, psi] + Q psi)(x0)| at off-grid k samples."""
    k = np.atleast_1d(np.asarray(k_samples, dtype=complex))
    fields = _residual_fields(data, x0, (hx,), k, grids, tol, max_iter)
    return float(np.max(pointwise_norm(fields[hx])))


@dataclass
class AknsRefinement:
    """Centered-difference residuals at hx, hx/2, hx/4 on a fixed quadrature.

    The quadrature floor is the hx -> 0 limit of the pointwise residual,
    extrapolated from the two finest steps; truncation is the residual with
    that floor removed and shrinks like hx^2.
    """
    steps: Tuple[float, float, float]
    residuals: Tuple[float, float, float]
    truncation: Tuple[float, float, float]
    floor: float

    @property
    def factor(self) -> float:
        wide, narrow = self.truncation[0], self.truncation[1]
        return wide / narrow if narrow > 0 else float("inf")


def akns_refinement(
        data: SpectralData,
        x0: float,
        hx: float,
        k_samples,
        grids: ComponentGrids,
        tol: float = 1e-12,
        max_iter: int = 200,
) -> AknsRefinement:
    k = np.atleast_1d(np.asarray(k_samples, dtype=complex))
    steps = (hx, hx / 2, hx / 4)
    fields = _residual_fields(data, x0, steps, k, grids, tol, max_iter)

    floor = (4 * fields[steps[2]] - fields[steps[1]]) / 3
    residuals = tuple(float(np.max(pointwise_norm(fields[s]))) for s in steps)
    truncation = tuple(float(np.max(pointwise_norm(fields[s] - floor))) for s in steps)
    refinement = AknsRefinement(steps, residuals, truncation, float(np.max(pointwise_norm(floor))))
    info(f"akns x0={x0:g}: residuals {residuals[0]:.3g}/{residuals[1]:.3g}/{residuals[2]:.3g}, "
         f"quadrature floor {refinement.floor:.3g}, factor {refinement.factor:.3g}")
    return refinement
