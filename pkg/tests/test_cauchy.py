import numpy as np
import pytest

from dbar_akns.cauchy.checks import (
    chi_disk, closed_form_chi_disk, closed_form_check, holomorphy_check, lemma1_bound, lemma1_check,
    lemma1_integral, linearity_check, theorem3_check, verify_pompeiu,
)
from dbar_akns.cauchy.transform import CauchyOperator, cauchy_oracle, cauchy_transform, cell_kernel
from dbar_akns.geometry.grids import UNIT_DISK, build_disk_grid, build_half_disk_grid
from dbar_akns.pipeline.verify import POMPEIU_FIXTURES
from dbar_akns.spaces.fields import ScalarField


def _edges(grid):
    return grid.dr * np.arange(grid.nr + 1), grid.theta0 + grid.dtheta * np.arange(grid.ntheta + 1)


def test_cell_kernel_sums_to_the_disk_integral():
    grid = build_disk_grid(UNIT_DISK, 8, 16)
    # generic, on a ring edge, on an angular edge, the centre, a node, outside
    kappa = np.array([0.3 + 0.2j, 0.5 * np.exp(0.3j), -0.9j, 0j, grid.nodes[37], 1.7 - 0.4j])
    total = cell_kernel(kappa, *_edges(grid), grid.radius).sum(axis=(1, 2))
    inside = np.abs(kappa) < 1
    expected = np.where(inside, -np.pi * np.conj(kappa), -np.pi / np.where(inside, 1.0, kappa))
    assert np.allclose(total, expected, atol=1e-10), np.abs(total - expected)


def test_rotated_rings_match_direct_kernels():
    for grid in (build_disk_grid(UNIT_DISK, 4, 8), build_half_disk_grid("-", 4, 8)):
        op = CauchyOperator(grid, grid.nodes, cache_mb=0)
        assert op._ring is not None, "node targets sit on mid-angle rays"
        direct = -cell_kernel(grid.nodes - grid.center, *_edges(grid), grid.radius).reshape(grid.size, -1) / np.pi
        assert np.allclose(op.apply(np.eye(grid.size)), direct, atol=1e-12)


def test_closed_form_is_exact_for_the_disk_indicator():
    grid = build_disk_grid(UNIT_DISK, 64, 128)
    field = ScalarField.from_evaluator(grid, chi_disk)
    rng = np.random.default_rng(7)
    inside = 0.95 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    outside = (1.05 + 0.5 * rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    targets = np.concatenate([inside, outside])

    values = cauchy_transform(field, targets).values
    err = np.max(np.abs(values - closed_form_chi_disk(targets)))
    assert err < 1e-9, f"max error {err}"


def test_closed_form_check_at_default_tolerance():
    report = closed_form_check(64, 64, n_targets=30, seed=3)
    record = report.get("cauchy_closed_form")
    assert record.passed and record.tolerance == 5e-3, record
def test_target_on_node_rejected():
    grid = build_disk_grid(UNIT_DISK, 4, 8)
    field = ScalarField.from_evaluator(grid, chi_disk)
    with pytest.raises(ValueError):
        cauchy_transform(field, grid.nodes[5])


def test_transform_is_linear():
    report = linearity_check(build_disk_grid(UNIT_DISK, 16, 32), seed=1)
    assert report.all_passed, report.failed()


def test_transform_is_holomorphic_outside_support():
    grid = build_disk_grid(UNIT_DISK, 16, 32)
    report = holomorphy_check(ScalarField.from_evaluator(grid, chi_disk))
    assert report.get("holomorphy_outside").passed, report.get("holomorphy_outside")
    assert report.get("decay_at_infinity").passed, report.get("decay_at_infinity")


@pytest.mark.parametrize("name, phi, dbar_phi, region", POMPEIU_FIXTURES, ids=[f[0] for f in POMPEIU_FIXTURES])
def test_pompeiu_fixtures(name, phi, dbar_phi, region):
    k = np.array([0.1 + 0.2j, -0.3j, 0.4, -0.45 + 0.1j])
    report = verify_pompeiu(phi, dbar_phi, region, k, nr=64, ntheta=128, name=name)
    assert report.all_passed, report.checks[0]


def test_pompeiu_rejects_boundary_samples():
    with pytest.raises(ValueError):
        verify_pompeiu(lambda z: z, lambda z: np.zeros_like(z), UNIT_DISK, [1.0])
    with pytest.raises(ValueError):
        verify_pompeiu(lambda z: z, lambda z: np.zeros_like(z), UNIT_DISK, [0.1], m=64)


def test_lemma1_bound_regimes():
    assert lemma1_bound(0.5, 0.5, 0.3) == pytest.approx(2 * np.pi)
    assert lemma1_bound(1.0, 1.0, 0.01) > lemma1_bound(1.0, 1.0, 0.1), "log bound grows as d shrinks"
    assert lemma1_bound(1.5, 1.5, 0.01) > lemma1_bound(1.5, 1.5, 0.1), "super bound grows as d shrinks"


def test_lemma1_sub_integral_within_bound():
    value = lemma1_integral(0.5, 0.5, 0j, 0.5 + 0j, n=128)
    assert np.isfinite(value) and value > 0
    assert value <= lemma1_bound(0.5, 0.5, 0.5), value


def test_lemma1_rejects_coincident_points():
    with pytest.raises(ValueError):
        lemma1_integral(0.5, 0.5, 0.1j, 0.1j)
    with pytest.raises(ValueError):
        lemma1_integral(2.5, 0.5, 0j, 0.5)


def test_cartesian_oracle_against_closed_form():
    for k in (0.3 + 0.2j, 1.5 - 0.5j):
        value = cauchy_oracle(chi_disk, UNIT_DISK, k, 256)
        err = abs(value - closed_form_chi_disk(np.array([k]))[0])
        assert err < 5e-2, f"k={k}: error {err}"


@pytest.mark.parametrize("mu, nu", [(1.5, 1.5), (1.2, 1.4)])
def test_lemma1_super_exponent_fit(mu, nu):
    k1 = 0.1 + 0.05j
    result = lemma1_check(mu, nu, k1, k1 + 0.2)
    assert result.regime == "super"
    assert abs(result.exponent_fit - (2 - mu - nu)) <= 0.1, result


@pytest.mark.parametrize("mu, nu", [(1.0, 1.0), (0.8, 1.2)])
def test_lemma1_log_growth_coefficient(mu, nu):
    k1 = 0.1 + 0.05j
    result = lemma1_check(mu, nu, k1, k1 + 0.2)
    assert result.regime == "log"
    assert 0 < result.exponent_fit <= 8 * np.pi * 1.1, result


def test_theorem3_exponent_on_a_random_field():
    grid = build_disk_grid(UNIT_DISK, 16, 64)
    rng = np.random.default_rng(11)
    values = rng.uniform(-1, 1, grid.size) + 1j * rng.uniform(-1, 1, grid.size)
    result = theorem3_check(ScalarField(grid, values), 4.0, 2000, seed=2)
    assert result.empirical_exponent >= 0.5 - 0.05, result
    assert np.isfinite(result.bound_ratio) and result.bound_ratio > 0


def test_theorem3_needs_p_above_two():
    grid = build_disk_grid(UNIT_DISK, 4, 8)
    with pytest.raises(ValueError):
        theorem3_check(ScalarField.from_evaluator(grid, chi_disk), 2.0, 200)
