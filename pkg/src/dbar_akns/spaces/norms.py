from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from dbar_akns.errors import NonFiniteValue
from dbar_akns.geometry.grids import ComponentGrids, Region, build_component_grids, parse_sign
from dbar_akns.spaces.fields import MatrixFamily, MatrixField, ScalarField


__all__ = [
    "pointwise_norm", "lp_norm_bounded", "lpnu_norm", "family_lpnu_norm",
    "holder_norm_estimate", "HolderEstimate", "loglog_slope", "DEFAULT_NORM_GRID",
]


Evaluator = Callable[[np.ndarray], np.ndarray]

DEFAULT_NORM_GRID = (64, 128)

# weighted images beyond this magnitude are treated as a blow-up
OVERFLOW_THRESHOLD = 1e150


def pointwise_norm(values: np.ndarray) -> np.ndarray:
    """|f| for scalar samples, Frobenius norm for (..., 2, 2) samples."""
    values = np.asarray(values)
    if values.ndim >= 3 and values.shape[-2:] == (2, 2):
        return np.sqrt(np.sum(np.abs(values) ** 2, axis=(-2, -1)))
    return np.abs(values)


def _p_sum(weights: np.ndarray, norms: np.ndarray, p: float) -> float:
    if np.isinf(p):
        return float(np.max(norms)) if norms.size else 0.0
    return float(np.sum(weights * norms ** p))


def _root(total: float, p: float) -> float:
    return total if np.isinf(p) else total ** (1.0 / p)


def _check_p(p: float):
    if not p >= 1:
        raise ValueError(f"norm exponent p must be >= 1, got {p}")


def lp_norm_bounded(f: Union[ScalarField, MatrixField], p: float) -> float:
    _check_p(p)
    return _root(_p_sum(f.grid.weights, pointwise_norm(f.values), p), p)


def _weighted_image(f: Evaluator, z: np.ndarray, nu: float) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        values = np.abs(z) ** (-nu) * pointwise_norm(f(1.0 / z))
    if not np.all(np.isfinite(values)) or np.any(values > OVERFLOW_THRESHOLD):
        raise NonFiniteValue(f"weighted image |k|^-{nu} f(1/k) blows up on the E1 nodes")
    return values


def lpnu_norm(
        f: Evaluator,
        p: float,
        nu: float,
        halfplane=None,
        grids: Optional[ComponentGrids] = None,
) -> float:
    """||f||_{L^p(E1)} + ||f_(nu)||_{L^p(E1)} with f_(nu)(k) = |k|^-nu f(1/k).

    The half-plane variant pairs the interior of E1^s with the weighted image
    over E1 of the opposite half-plane, which is where 1/k lands for k in E2^s.
    """
    _check_p(p)
    grids = grids or build_component_grids(*DEFAULT_NORM_GRID)
    signs = (1, -1) if halfplane is None else (parse_sign(halfplane),)

    interior, image = [], []
    for s in signs:
        inner = grids.interior(s)
        outer = grids.interior(-s)
        interior.append(_p_sum(inner.weights, pointwise_norm(f(inner.nodes)), p))
        image.append(_p_sum(outer.weights, _weighted_image(f, outer.nodes, nu), p))

    return _root(_combine(interior, p), p) + _root(_combine(image, p), p)


def _combine(sums, p: float) -> float:
    return max(sums) if np.isinf(p) else sum(sums)


def family_lpnu_norm(family: MatrixFamily, p: float, nu: float = 0.0) -> float:
    """L^{p,nu}(C) norm of a matrix family using the stored E2 samples as f(1/z)."""
    _check_p(p)
    grids = family.grids
    interior = (_p_sum(grids.plus.weights, pointwise_norm(family.component("E1plus")), p),
                _p_sum(grids.minus.weights, pointwise_norm(family.component("E1minus")), p))
    # E2plus samples sit at 1/z for z on the E1minus grid, and vice versa
    image = (_p_sum(grids.minus.weights,
                    np.abs(grids.minus.nodes) ** (-nu) * pointwise_norm(family.component("E2plus")), p),
             _p_sum(grids.plus.weights,
                    np.abs(grids.plus.nodes) ** (-nu) * pointwise_norm(family.component("E2minus")), p))
    return _root(_combine(interior, p), p) + _root(_combine(image, p), p)


def loglog_slope(scales, values) -> float:
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (scales > 0) & (values > 0) & np.isfinite(scales) & np.isfinite(values)
    if np.count_nonzero(mask) < 2:
        return float("nan")
    return float(np.polyfit(np.log(scales[mask]), np.log(values[mask]), 1)[0])


class HolderEstimate(NamedTuple):
    sup_norm: float
    seminorm_estimate: float
    empirical_exponent: float


# anchors of local pairs are log-uniform in radius down to this fraction of the sector radius
ANCHOR_FLOOR = 1e-6
EXPONENT_BINS = 12


def _sector_points(center, radius, theta0, span, radial_u, angle_u, log_radius: bool):
    if log_radius:
        r = radius * ANCHOR_FLOOR ** (1.0 - radial_u)
    else:
        r = radius * np.sqrt(radial_u)
    return center + r * np.exp(1j * (theta0 + span * angle_u))


def holder_norm_estimate(
        f: Evaluator,
        alpha: float,
        region: Region,
        n_pairs: int,
        seed: int,
        max_scale: float = 0.1,
        min_scale: float = 1e-4,
) -> HolderEstimate:
    """Sampled sup norm, Hoelder seminorm and empirical exponent of f on region.

    Half of the pairs are independent uniform points of the region, the other
    half are local pairs at log-uniform separations in [min_scale, max_scale]
    anchored at log-uniform radii. Row i of the random stream only drives
    pair i, so a larger n_pairs with the same seed samples a superset.

    The exponent is the least-squares log-log slope of the largest increment
    per separation bin against its separation, over local pairs with
    separation <= max_scale: a lower-bound estimator of the true exponent.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n_pairs < 100:
        raise ValueError(f"n_pairs must be >= 100, got {n_pairs}")

    center, radius, theta0, span = region.sampling_sector()
    u = np.random.default_rng(seed).random((n_pairs, 7))

    local = u[:, 0] >= 0.5
    k1 = np.where(
        local,
        _sector_points(center, radius, theta0, span, u[:, 1], u[:, 2], log_radius=True),
        _sector_points(center, radius, theta0, span, u[:, 1], u[:, 2], log_radius=False),
    )
    delta = min_scale * (max_scale / min_scale) ** u[:, 5]
    k2 = np.where(
        local,
        k1 + delta * np.exp(2j * np.pi * u[:, 6]),
        _sector_points(center, radius, theta0, span, u[:, 3], u[:, 4], log_radius=False),
    )

    keep = region.contains(k1) & region.contains(k2) & (k1 != k2)
    k1, k2, local = k1[keep], k2[keep], local[keep]
    if k1.size == 0:
        return HolderEstimate(0.0, 0.0, float("nan"))

    values = np.asarray(f(np.concatenate([k1, k2])))
    f1, f2 = values[:k1.size], values[k1.size:]

    sup_norm = float(np.max(pointwise_norm(values)))
    dk = np.abs(k1 - k2)
    df = pointwise_norm(f1 - f2)
    seminorm = float(np.max(df / dk ** alpha))

    sel = local & (dk <= max_scale) & (df > 0)
    if not np.any(sel):
        # no measurable increment at small scales: constant up to round-off
        return HolderEstimate(sup_norm, seminorm, float("inf"))

    dk_s, df_s = dk[sel], df[sel]
    edges = np.geomspace(dk_s.min(), max_scale * (1 + 1e-12), EXPONENT_BINS + 1)
    bins = np.clip(np.searchsorted(edges, dk_s, side="right") - 1, 0, EXPONENT_BINS - 1)

    picked_dk, picked_df = [], []
    for b in range(EXPONENT_BINS):
        if not np.any(in_bin := bins == b):
            continue
        arg = np.argmax(np.where(in_bin, df_s, -np.inf))
        picked_dk.append(dk_s[arg])
        picked_df.append(df_s[arg])

    exponent = loglog_slope(picked_dk, picked_df)
    return HolderEstimate(sup_norm, seminorm, exponent)
