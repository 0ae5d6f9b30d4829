import numpy as np
import pytest
from scipy.integrate import quad

from dbar_akns.errors import NonFiniteValue
from dbar_akns.geometry.grids import Region, UNIT_DISK, build_component_grids, build_disk_grid
from dbar_akns.spaces.fields import IDENTITY, MatrixFamily, ScalarField
from dbar_akns.spaces.norms import (
    holder_norm_estimate, loglog_slope, lp_norm_bounded, lpnu_norm, pointwise_norm,
)


def test_pointwise_norm_is_frobenius_for_matrices():
    values = np.broadcast_to(IDENTITY, (3, 2, 2))
    assert np.allclose(pointwise_norm(values), np.sqrt(2))
    assert np.allclose(pointwise_norm(np.array([3 + 4j])), 5.0)


def test_lp_norm_of_constant_on_unit_disk():
    grid = build_disk_grid(UNIT_DISK, 16, 32)
    f = ScalarField.from_evaluator(grid, lambda k: np.ones_like(k))
    assert abs(lp_norm_bounded(f, 2.0) - np.sqrt(np.pi)) < 1e-12
    assert abs(lp_norm_bounded(f, np.inf) - 1.0) < 1e-15


def test_lpnu_norm_of_disk_indicator():
    """1/k leaves the unit disk for every E1 node, so only the interior part counts."""
    chi = lambda k: (np.abs(k) <= 1.0).astype(complex)
    value = lpnu_norm(chi, 4.0, 2.0)
    assert abs(value - np.pi ** 0.25) < 1e-12, value
    assert lpnu_norm(lambda k: np.zeros_like(k), 4.0, 2.0) == 0.0


def test_lpnu_norm_rejects_blowing_up_image():
    with pytest.raises(NonFiniteValue):
        lpnu_norm(lambda k: np.exp(np.abs(k) ** 2), 4.0, 2.0)
    with pytest.raises(ValueError):
        lpnu_norm(lambda k: k, 0.5, 2.0)


def test_family_shape_is_checked():
    grids = build_component_grids(4, 8)
    family = MatrixFamily.identity(grids)
    assert family.values.shape == (4 * grids.size, 2, 2)
    assert family.is_finite
    with pytest.raises(ValueError):
        MatrixFamily(grids, np.zeros((grids.size, 2, 2), dtype=complex))


def test_loglog_slope_of_power_law():
    scales = np.geomspace(1e-3, 1e-1, 7)
    assert abs(loglog_slope(scales, 3 * scales ** 2) - 2.0) < 1e-10
    assert np.isnan(loglog_slope([1.0], [1.0]))


def test_holder_estimate_of_linear_function():
    estimate = holder_norm_estimate(lambda k: k, 0.5, Region.disk(0j, 2.0), 400, seed=3)
    assert abs(estimate.empirical_exponent - 1.0) < 1e-6, estimate
    assert estimate.sup_norm <= 2.0


def test_holder_estimate_of_constant_function():
    estimate = holder_norm_estimate(lambda k: np.full(k.shape, 2 + 0j), 0.5, UNIT_DISK, 200, seed=0)
    assert estimate.seminorm_estimate == 0.0
    assert estimate.empirical_exponent == float("inf")
    assert abs(estimate.sup_norm - 2.0) < 1e-15


def test_holder_estimate_validates_arguments():
    with pytest.raises(ValueError):
        holder_norm_estimate(lambda k: k, 1.5, UNIT_DISK, 200, seed=0)
    with pytest.raises(ValueError):
        holder_norm_estimate(lambda k: k, 0.5, UNIT_DISK, 10, seed=0)


def test_lp_norm_of_radial_power_against_quad():
    grid = build_disk_grid(UNIT_DISK, 256, 16)
    f = ScalarField.from_evaluator(grid, lambda k: np.abs(k) ** 0.5 + 0j)
    p = 3.0
    exact = (2 * np.pi * quad(lambda r: r ** (0.5 * p + 1), 0, 1)[0]) ** (1 / p)
    assert abs(lp_norm_bounded(f, p) - exact) < 1e-4, (lp_norm_bounded(f, p), exact)
