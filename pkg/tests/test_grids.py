import numpy as np
import pytest

from dbar_akns.geometry.grids import (
    E2_PLUS, Region, RegionTag, UNIT_DISK, build_component_grids, build_disk_grid, build_half_disk_grid,
    classify_point, exterior_integrability,
)


def test_half_disk_weights_sum_to_area():
    for sign in ("+", "-"):
        grid = build_half_disk_grid(sign, 16, 32)
        assert abs(grid.weights.sum() - np.pi / 2) < 1e-12, f"{sign}: weights sum {grid.weights.sum()}"
        assert grid.size == 16 * 32


def test_half_disk_nodes_stay_in_their_half_plane():
    plus = build_half_disk_grid("+", 8, 16)
    minus = build_half_disk_grid("-", 8, 16)
    assert np.all(plus.nodes.imag > 0) and np.all(np.abs(plus.nodes) < 1)
    assert np.all(minus.nodes.imag < 0) and np.all(np.abs(minus.nodes) < 1)


def test_component_grids_pair_inverted_nodes():
    grids = build_component_grids(8, 16)
    e2plus = grids.exterior(1)
    assert e2plus.source is grids.minus, "E2plus is the image of the E1minus grid"
    assert np.allclose(e2plus.nodes, 1.0 / grids.minus.nodes)
    assert np.all(np.abs(e2plus.nodes) > 1) and np.all(e2plus.nodes.imag > 0)
    assert np.all(E2_PLUS.contains(e2plus.nodes))
    assert np.allclose(e2plus.restore(), grids.minus.nodes)

    nodes = grids.nodes
    assert nodes.shape == (4 * grids.size,)
    assert np.array_equal(nodes[grids.slice("E2minus")], grids.exterior(-1).nodes)


def test_inversion_jacobian_preserves_integrals():
    """The integral of |k|^-4 over E2 is the area of the source half-disk."""
    image = build_component_grids(16, 32).exterior(-1)
    value = image.integrate(np.abs(image.nodes) ** -4)
    assert abs(value - np.pi / 2) < 1e-10, value


def test_classify_point_boundaries():
    assert classify_point(0.5) == RegionTag.E1PLUS, "real axis goes to the plus side"
    assert classify_point(1.0) == RegionTag.E1PLUS, "unit circle goes to E1"
    assert classify_point(-0.5j) == RegionTag.E1MINUS
    assert classify_point(2.0) == RegionTag.E2PLUS
    assert classify_point(-3j) == RegionTag.E2MINUS
    with pytest.raises(ValueError):
        classify_point(complex(np.nan, 0))


def test_disk_grid_locates_its_own_nodes():
    grid = build_disk_grid(Region.disk(0.2 + 0.1j, 0.8), 8, 16)
    assert np.array_equal(grid.locate(grid.nodes), np.arange(grid.size))
    assert grid.locate(5.0)[0] == -1
    assert abs(grid.weights.sum() - np.pi * 0.64) < 1e-12


def test_invalid_regions_rejected():
    with pytest.raises(ValueError):
        Region.disk(0j, -1.0)
    with pytest.raises(ValueError):
        build_disk_grid(E2_PLUS, 8, 16)
    with pytest.raises(ValueError):
        build_half_disk_grid("*", 8, 16)
    assert UNIT_DISK.area == np.pi


def test_exterior_integrability_separates_decay_rates():
    values, integrable = exterior_integrability(lambda k: np.abs(k) ** -4, "+", levels=(8, 16, 32))
    assert integrable, values
    assert abs(values[-1] - np.pi / 2) < 1e-10

    values, integrable = exterior_integrability(lambda k: np.abs(k) ** -2.0 + 0j, "-", levels=(8, 16, 32, 64))
    assert not integrable, values
