from typing import Callable, Literal, NamedTuple, Optional, Tuple

import numpy as np

from dbar_akns.cauchy.transform import (
    CauchyOperator, cauchy_transform, cartesian_mesh, oracle_values,
)
from dbar_akns.geometry.grids import QuadratureGrid, Region, RegionTag, UNIT_DISK, build_disk_grid
from dbar_akns.logger import info
from dbar_akns.models.objects import VerificationReport
from dbar_akns.spaces.fields import ScalarField
from dbar_akns.spaces.norms import holder_norm_estimate, lp_norm_bounded, loglog_slope


__all__ = [
    "chi_disk", "closed_form_chi_disk", "verify_pompeiu",
    "lemma1_integral", "lemma1_check", "lemma1_bound", "lemma1_regime_sweep", "Lemma1Result",
    "theorem3_check", "Theorem3Result", "holomorphy_check", "scheme_agreement_check",
    "closed_form_check", "linearity_check",
]


Evaluator = Callable[[np.ndarray], np.ndarray]
Regime = Literal["sub", "log", "super"]


def chi_disk(k: np.ndarray) -> np.ndarray:
    return (np.abs(k) <= 1.0).astype(complex)


def closed_form_chi_disk(k: np.ndarray) -> np.ndarray:
    """T(chi_disk): conj(k) inside the unit disk, 1/k outside."""
    k = np.asarray(k, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(k) <= 1.0, np.conj(k), 1.0 / k)


def _disk_of(region: Region) -> Tuple[complex, float]:
    if region.tag not in (RegionTag.DISK, RegionTag.UNIT_DISK):
        raise ValueError(f"expected a disk region, got {region.tag}")
    return region.center, region.radius


def verify_pompeiu(
        phi: Evaluator,
        dbar_phi: Evaluator,
        G: Region,
        k_samples,
        m: int = 512,
        nr: int = 256,
        ntheta: int = 256,
        tol: float = 5e-3,
        name: str = "pompeiu",
) -> VerificationReport:
    """Check phi(k) = Phi(k) + (dbar phi) T_G(k) at interior samples.

    Phi(k) = (1/2 pi i) * contour integral of phi(z)/(z - k) dz over the
    boundary circle, by the periodic trapezoid rule on m nodes.
    """
    if m < 512:
        raise ValueError(f"boundary rule needs m >= 512 nodes, got {m}")
    center, radius = _disk_of(G)
    k = np.atleast_1d(np.asarray(k_samples, dtype=complex))
    if np.any(np.abs(k - center) >= radius):
        raise ValueError("pompeiu samples must be interior to G")

    offsets = radius * np.exp(2j * np.pi * np.arange(m) / m)
    z = center + offsets
    # dz = i (z - c) dt, dt = 2 pi / m
    boundary = np.mean(phi(z)[None, :] * offsets[None, :] / (z[None, :] - k[:, None]), axis=1)

    grid = build_disk_grid(G, nr, ntheta)
    area_term = cauchy_transform(ScalarField.from_evaluator(grid, dbar_phi), k).values

    residual = np.abs(phi(k) - boundary - area_term)
    report = VerificationReport()
    report.add(name, np.max(residual), 0.0, tol, np.max(residual) <= tol,
               h=grid.h, boundary_nodes=m, samples=len(k))
    info(f"{name}: max residual {np.max(residual):.3e} (tol {tol:.1e})")
    return report


def _regime(mu: float, nu: float) -> Regime:
    s = mu + nu
    if abs(s - 2.0) < 1e-12:
        return "log"
    return "sub" if s < 2.0 else "super"


def _refined_mesh(region: Region, n: int, focus: complex, halfwidth: float, fine_step: float):
    """Cartesian midpoints with the coarse cells around focus split into fine subcells.

    Returns (points, cell areas, cell spacing).
    """
    mesh = cartesian_mesh(region, n)
    hx, hy = mesh.hx, mesh.hy
    halfwidth = max(halfwidth, 8 * max(hx, hy))
    pts = mesh.points
    in_box = (np.abs(pts.real - focus.real) <= halfwidth) & (np.abs(pts.imag - focus.imag) <= halfwidth)

    sx = max(1, int(np.ceil(hx / fine_step)))
    sy = max(1, int(np.ceil(hy / fine_step)))
    if sx == 1 and sy == 1:
        return pts, np.full(pts.size, hx * hy), np.full(pts.size, max(hx, hy))

    ox = ((np.arange(sx) + 0.5) / sx - 0.5) * hx
    oy = ((np.arange(sy) + 0.5) / sy - 0.5) * hy
    offsets = (ox[None, :] + 1j * oy[:, None]).ravel()
    fine = (pts[in_box][:, None] + offsets[None, :]).ravel()
    fine = fine[region.contains(fine)]

    coarse = pts[~in_box]
    points = np.concatenate([coarse, fine])
    areas = np.concatenate([np.full(coarse.size, hx * hy), np.full(fine.size, hx * hy / (sx * sy))])
    spacing = np.concatenate([np.full(coarse.size, max(hx, hy)), np.full(fine.size, max(hx / sx, hy / sy))])
    return points, areas, spacing


def lemma1_integral(
        mu: float,
        nu: float,
        k1: complex,
        k2: complex,
        G: Region = UNIT_DISK,
        n: int = 256,
        cells_per_gap: int = 16,
) -> float:
    """I(mu, nu) = integral over G of |z - k1|^-mu |z - k2|^-nu.

    Oracle quadrature refined around the pair; points within 1.5 cell
    spacings of k1 or k2 are excluded and replaced by the analytic integral
    of the singular factor over a disk of the excluded area.
    """
    if not (0 < mu < 2 and 0 < nu < 2):
        raise ValueError(f"mu, nu must lie in (0, 2), got {mu}, {nu}")
    k1, k2 = complex(k1), complex(k2)
    d = abs(k1 - k2)
    if d == 0:
        raise ValueError("lemma1 needs k1 != k2")

    points, areas, spacing = _refined_mesh(G, n, (k1 + k2) / 2, d, d / cells_per_gap)
    r1 = np.abs(points - k1)
    r2 = np.abs(points - k2)
    near1 = r1 < 1.5 * spacing
    near2 = r2 < 1.5 * spacing
    keep = ~(near1 | near2)

    total = float(np.sum(areas[keep] * r1[keep] ** (-mu) * r2[keep] ** (-nu)))
    for near, power, other in ((near1, mu, nu), (near2, nu, mu)):
        if (excluded := float(np.sum(areas[near]))) > 0:
            rho = np.sqrt(excluded / np.pi)
            total += 2 * np.pi * rho ** (2 - power) / (2 - power) * d ** (-other)
    return total


class Lemma1Result(NamedTuple):
    integral: float
    regime: Regime
    exponent_fit: float


def lemma1_check(
        mu: float,
        nu: float,
        k1: complex,
        k2: complex,
        G: Region = UNIT_DISK,
        levels: int = 5,
        n: int = 256,
) -> Lemma1Result:
    """Integral at (k1, k2), its regime, and the fitted behaviour as k2 -> k1.

    The shrink sequence is k2_j = k1 + (k2 - k1) 2^-j. For the sub and super
    regimes exponent_fit is the log-log slope of the increments
    I_j - I_{j+1} against |k1 - k2_j|, which removes the bounded part of I and
    leaves the exponent 2 - mu - nu. For the log regime it is the growth
    coefficient c of I ~ c |ln|k1 - k2||.
    """
    regime = _regime(mu, nu)
    k1, k2 = complex(k1), complex(k2)
    gaps = np.abs(k2 - k1) * 0.5 ** np.arange(levels)
    values = np.array([
        lemma1_integral(mu, nu, k1, k1 + (k2 - k1) * 0.5 ** j, G, n) for j in range(levels)
    ])

    if regime == "log":
        fit = float(np.polyfit(np.abs(np.log(gaps)), values, 1)[0])
    else:
        fit = loglog_slope(gaps[:-1], np.abs(np.diff(values)))

    info(f"lemma1 mu={mu} nu={nu}: regime={regime} I={values[0]:.4g} fit={fit:.4f}")
    return Lemma1Result(float(values[0]), regime, fit)


def _near_constant(power: float, other: float) -> float:
    # integral of |w|^-power over |w| < 1/2 with |w - e|^-other <= 2^other there
    return 2.0 ** other * 2 * np.pi * 0.5 ** (2 - power) / (2 - power)


def lemma1_bound(mu: float, nu: float, d: float, diameter: float = 2.0) -> float:
    """Closed-form bound shape for I(mu, nu) on a domain of area pi and the given diameter.

    sub: 2 pi/(2 - mu - nu); log: 8 pi |ln d| + M2; super: M3 d^(2 - mu - nu).
    Each constant follows from splitting the plane into the two half-gap
    disks and the weighted AM-GM bound on the rest.
    """
    s = mu + nu
    match _regime(mu, nu):
        case "sub":
            return 2 * np.pi / (2 - s)
        case "log":
            m2 = _near_constant(mu, nu) + _near_constant(nu, mu) + 2 * np.pi * np.log(2 * diameter)
            return 8 * np.pi * abs(np.log(d)) + m2
    m3 = _near_constant(mu, nu) + _near_constant(nu, mu) + 2 * np.pi * 2.0 ** (s - 2) / (s - 2)
    return m3 * d ** (2 - s)


def lemma1_regime_sweep(regime: Regime, draws: int = 100, seed: int = 0, n: int = 128,
                        min_gap: float = 0.05) -> VerificationReport:
    """Random (mu, nu, k1, k2) draws within one regime against the frozen bound shape."""
    rng = np.random.default_rng(seed)
    ratios = []
    while len(ratios) < draws:
        match regime:
            case "sub":
                mu, nu = rng.uniform(0.1, 0.9, size=2)
            case "super":
                mu, nu = rng.uniform(1.1, 1.9, size=2)
            case _:
                mu = rng.uniform(0.2, 1.8)
                nu = 2.0 - mu
        k1, k2 = np.sqrt(rng.random(2)) * np.exp(2j * np.pi * rng.random(2))
        if (d := abs(k1 - k2)) < min_gap:
            continue
        ratios.append(lemma1_integral(mu, nu, k1, k2, UNIT_DISK, n) / lemma1_bound(mu, nu, d))

    worst = float(np.max(ratios))
    report = VerificationReport()
    report.add(f"lemma1_{regime}_bound", worst, 1.0, 0.0, worst <= 1.0, draws=draws, seed=seed)
    return report


class Theorem3Result(NamedTuple):
    bound_ratio: float
    empirical_exponent: float


def _transform_evaluator(f: ScalarField) -> Evaluator:
    def g(k: np.ndarray) -> np.ndarray:
        return CauchyOperator.for_grid(f.grid, k, cache_mb=0).apply(f.values)
    return g


def theorem3_check(f: ScalarField, p: float, pair_budget: int, seed: int = 0,
                   region: Optional[Region] = None) -> Theorem3Result:
    """Empirical M4 = sup|g|/||f||_p and the Hoelder exponent of g = f T_G.

    Pairs are drawn from the disk of twice the grid radius so both the
    interior and the exterior of G are covered.
    """
    if p <= 2:
        raise ValueError(f"theorem 3 needs p > 2, got {p}")
    norm = lp_norm_bounded(f, p)
    if norm == 0:
        return Theorem3Result(0.0, float("inf"))

    region = region or Region.disk(f.grid.center, 2 * f.grid.radius)
    gamma = (p - 2) / p
    estimate = holder_norm_estimate(_transform_evaluator(f), gamma, region, pair_budget, seed)
    return Theorem3Result(estimate.sup_norm / norm, estimate.empirical_exponent)


def holomorphy_check(f: ScalarField, radius: float = 2.0, n_targets: int = 64,
                     step: float = 1e-3, ray: Tuple[float, ...] = (2, 4, 8, 16, 32)) -> VerificationReport:
    """Discrete Cauchy-Riemann residual of g = f T_G on |k| = radius, and decay of |g| |k| along a ray.

    f must be supported in the unit disk and radius >= 2.
    """
    g = _transform_evaluator(f)
    k = radius * np.exp(2j * np.pi * (np.arange(n_targets) + 0.25) / n_targets)
    dbar = (g(k + step) - g(k - step) + 1j * (g(k + 1j * step) - g(k - 1j * step))) / (4 * step)
    scale = np.max(np.abs(g(k))) + 1e-300
    cr = float(np.max(np.abs(dbar)) / scale)

    report = VerificationReport()
    report.add("holomorphy_outside", cr, 0.0, f.grid.h, cr <= f.grid.h, radius=radius, step=step)

    t = np.asarray(ray, dtype=float) * np.exp(0.3j)
    decay = np.abs(g(t)) * np.abs(t)
    mass = float(np.sum(f.grid.weights * np.abs(f.values))) / np.pi
    report.add("decay_at_infinity", float(np.max(decay)), 2 * mass, 1e-12,
               np.max(decay) <= 2 * mass + 1e-12, ray=list(ray), values=decay)
    return report


def scheme_agreement_check(f: Evaluator, grid: QuadratureGrid, n_targets: int = 50, seed: int = 0,
                           oracle_n: int = 256) -> VerificationReport:
    """Corrected scheme vs the Cartesian oracle at random targets in the grid's disk."""
    rng = np.random.default_rng(seed)
    u = rng.random((n_targets, 2))
    targets = grid.center + grid.radius * 0.95 * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])

    field = ScalarField.from_evaluator(grid, f)
    corrected = cauchy_transform(field, targets)
    oracle = oracle_values(f, grid.region, targets, oracle_n)

    err = float(np.max(np.abs(corrected.values - oracle.values)))
    tol = 10 * (corrected.h + oracle.h) * max(field.sup, 1e-300)
    report = VerificationReport()
    report.add("scheme_agreement", err, 0.0, tol, err <= tol,
               h_corrected=corrected.h, h_oracle=oracle.h, targets=n_targets)
    return report


def closed_form_check(nr: int = 256, ntheta: int = 256, n_targets: int = 100, seed: int = 0,
                      tol: Optional[float] = None) -> VerificationReport:
    """T(chi_disk) against conj(k) / 1/k at random targets with |k| < 2."""
    grid = build_disk_grid(UNIT_DISK, nr, ntheta)
    rng = np.random.default_rng(seed)
    u = rng.random((n_targets, 2))
    targets = 2.0 * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])

    values = cauchy_transform(ScalarField.from_evaluator(grid, chi_disk), targets).values
    err = float(np.max(np.abs(values - closed_form_chi_disk(targets))))
    tol = tol if tol is not None else 5e-3

    report = VerificationReport()
    report.add("cauchy_closed_form", err, 0.0, tol, err <= tol, nr=nr, ntheta=ntheta, targets=n_targets)
    info(f"cauchy closed form: max error {err:.3e} at nr={nr} ntheta={ntheta}")
    return report


def linearity_check(grid: QuadratureGrid, seed: int = 0, n_targets: int = 20) -> VerificationReport:
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    g = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    a, b = 0.7 - 0.2j, -1.3 + 0.4j
    targets = 1.5 * np.exp(2j * np.pi * rng.random(n_targets)) * np.sqrt(rng.random(n_targets))

    op = CauchyOperator.for_grid(grid, targets, cache_mb=0)
    lhs = op.apply(a * f + b * g)
    rhs = a * op.apply(f) + b * op.apply(g)
    err = float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))

    report = VerificationReport()
    report.add("cauchy_linearity", err, 0.0, 1e-12, err <= 1e-12)
    return report
