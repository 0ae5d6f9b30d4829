import numpy as np
import pytest

from dbar_akns.errors import Divergence, SmallNormViolation
from dbar_akns.geometry.grids import build_component_grids
from dbar_akns.models.objects import NormParams
from dbar_akns.operator.evolution import R_active, evolve_R, nilpotent_split, piece_sign, piece_values
from dbar_akns.operator.estimates import HOLDER_REGION, estimate_operator_norm, rtc_evaluator
from dbar_akns.operator.rtc import RTCOperator, apply_RTC, node_gaps, rtc_direct_oracle
from dbar_akns.operator.solver import (
    contraction_ratio, dbar_refinement_check, dbar_residual, interpolate_psi, small_norm_threshold, solve_psi,
)
from dbar_akns.operator.spectral_data import SpectralData, zero_data
from dbar_akns.spaces.fields import IDENTITY, MatrixFamily
from dbar_akns.spaces.norms import holder_norm_estimate


BUMP = SpectralData.from_preset("annulus_bump", 0.05, 0.05j)


def test_split_is_exact_and_nilpotent():
    k = np.linspace(-1, 1, 11) + 0.3j
    R = evolve_R(BUMP, 0.7, k)
    w_minus, w_plus = nilpotent_split(R)
    assert np.array_equal(w_minus + w_plus, R)
    assert np.all(w_minus @ w_minus == 0) and np.all(w_plus @ w_plus == 0)


def test_pieces_live_where_their_exponential_is_bounded():
    assert piece_sign("minus", 1.0) == 1 and piece_sign("plus", 1.0) == -1
    assert piece_sign("minus", -1.0) == -1 and piece_sign("plus", -1.0) == 1
    with pytest.raises(AssertionError):
        piece_values(BUMP, "minus", 1.0, np.array([0.5 - 0.5j]))


def test_x_zero_rejected():
    with pytest.raises(ValueError):
        R_active(BUMP, 0.0, np.array([0.5j]))
    with pytest.raises(ValueError):
        solve_psi(BUMP, 0.0, build_component_grids(4, 16))


def test_r_active_keeps_one_entry_per_half_plane():
    k = np.array([0.5 + 0.2j, 0.5 - 0.2j])
    R = R_active(BUMP, 1.0, k)
    assert R[0, 0, 1] == 0 and R[0, 1, 0] != 0, "upper half-plane keeps R21 for x > 0"
    assert R[1, 1, 0] == 0 and R[1, 0, 1] != 0, "lower half-plane keeps R12 for x > 0"


def test_rtc_is_zero_for_zero_data():
    grids = build_component_grids(4, 16)
    op = RTCOperator(grids, zero_data(), 0.5, grids.nodes)
    assert op.is_zero
    assert np.all(op.apply(MatrixFamily.identity(grids)) == 0)


def test_rtc_is_linear_in_psi():
    grids = build_component_grids(6, 32)
    rng = np.random.default_rng(0)
    targets = rng.random(10) + 1j * rng.random(10) - (0.5 + 0.5j)
    op = RTCOperator(grids, BUMP, -0.5, targets, cache_mb=0)
    a = MatrixFamily.identity(grids)
    b = a.replace(rng.standard_normal(a.values.shape) + 0j)
    lhs = op.apply(a.replace(a.values + 3 * b.values))
    rhs = op.apply(a) + 3 * op.apply(b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(np.max(np.abs(rhs)), 1.0)


def test_zero_data_solves_to_identity():
    grids = build_component_grids(4, 16)
    result = solve_psi(zero_data(), 1.0, grids)
    assert result.iterations == 1
    assert result.residual == 0.0
    assert np.all(result.psi.values == IDENTITY)
    assert result.contraction_ratio == 0.0


def test_small_data_converges():
    grids = build_component_grids(8, 64)
    result = solve_psi(BUMP, 0.5, grids, tol=1e-10)
    assert result.residual < 1e-8, result.residual
    assert 0 <= result.contraction_ratio < 1, result.changes
    psi_off = interpolate_psi(result, BUMP, np.array([0.3 + 0.1j, 2.0 - 1.0j]))
    assert psi_off.shape == (2, 2, 2)
    assert np.all(np.isfinite(psi_off))


def test_large_data_diverges():
    grids = build_component_grids(6, 32)
    with pytest.raises(Divergence) as e:
        solve_psi(BUMP.scaled(1e5), 0.5, grids)
    assert isinstance(e.value, SmallNormViolation)
    assert e.value.exit_code == 2


def test_dbar_residual_of_zero_data():
    grids = build_component_grids(16, 64)
    result = solve_psi(zero_data(), -0.5, grids)
    assert dbar_residual(result.psi, zero_data(), -0.5) == 0.0
    with pytest.raises(ValueError):
        dbar_residual(MatrixFamily.identity(build_component_grids(4, 16)), zero_data(), 0.5)


def test_contraction_ratio_of_geometric_updates():
    assert abs(contraction_ratio([1.0, 0.5, 0.25, 0.125]) - 0.5) < 1e-12
    assert contraction_ratio([0.0]) == 0.0
    assert np.isnan(contraction_ratio([]))


def test_spectral_data_combinators():
    other = SpectralData.from_preset("rational_decay", 0.1, 0.0)
    total = BUMP.plus(other)
    k = np.array([0.5 + 0.1j, 2.0])
    assert np.allclose(total.r_plus(k), BUMP.r_plus(k) + other.r_plus(k))
    assert np.allclose(BUMP.scaled(2).r_minus(k), 2 * BUMP.r_minus(k))
    assert total.support_radius == np.inf
    assert BUMP.support_radius == pytest.approx(0.9)
    assert zero_data().is_zero and not BUMP.is_zero
    with pytest.raises(ValueError):
        SpectralData.from_preset("gaussian", 1.0, 1.0)


def test_apply_rtc_matches_operator():
    grids = build_component_grids(4, 32)
    targets = np.array([0.3 + 0.4j, -0.2 - 0.6j, 1.7j])
    psi = MatrixFamily.identity(grids)
    expected = RTCOperator(grids, BUMP, 0.5, targets, cache_mb=0).apply(psi)
    assert np.array_equal(apply_RTC(psi, BUMP, 0.5, targets), expected)


def test_small_norm_threshold_brackets_divergence():
    grids = build_component_grids(4, 32)
    unit = SpectralData.from_preset("annulus_bump", 1.0, 1.0)
    lo, hi = small_norm_threshold(unit, 0.5, grids, hi=1e4, steps=8, max_iter=100)
    assert 0 <= lo < hi <= 1e4
    assert hi - lo <= 1e4 / 2 ** 8 * (1 + 1e-12)
    if lo > 0:
        solve_psi(unit.scaled(lo), 0.5, grids, tol=1e-8, max_iter=100)
    with pytest.raises(ValueError):
        small_norm_threshold(zero_data(), 0.5, grids, hi=1.0, steps=1)


def test_apply_rtc_rejects_targets_on_nodes():
    grids = build_component_grids(4, 32)
    psi = MatrixFamily.identity(grids)
    for node in (grids.plus.nodes[3], grids.minus.nodes[7], grids.e2plus.nodes[5]):
        with pytest.raises(ValueError, match="coincides with a quadrature node"):
            apply_RTC(psi, BUMP, 0.5, [0.3j, node])
    gaps = node_gaps(grids, np.array([grids.minus.nodes[7], 0.3j, 3.0 + 1e-3j]))
    assert gaps[0] == 0 and np.all(gaps[1:] > 0)
    with pytest.raises(ValueError):
        apply_RTC(psi, BUMP, 0.5, [complex(np.inf, 0)])


@pytest.mark.parametrize("x", [0.5, -0.5])
def test_decomposed_operator_matches_direct_quadrature(x):
    grids = build_component_grids(128, 256)
    rng = np.random.default_rng(9)
    side = np.where(rng.random(10) < 0.5, 1.0, -1.0)
    targets = rng.uniform(-1.2, 1.2, 10) + 1j * side * rng.uniform(0.25, 0.8, 10)
    expected = rtc_direct_oracle(BUMP, x, targets)
    actual = RTCOperator(grids, BUMP, x, targets, cache_mb=0).apply(MatrixFamily.identity(grids))
    err = np.max(np.abs(actual - expected)) / np.max(np.abs(expected))
    assert err <= 2e-3, err


def test_direct_quadrature_preconditions():
    with pytest.raises(ValueError):
        rtc_direct_oracle(BUMP, 0.5, [0.4 + 0j])
    with pytest.raises(ValueError):
        rtc_direct_oracle(SpectralData.from_preset("rational_decay", 0.1, 0.0), 0.5, [0.4j])
    assert np.all(rtc_direct_oracle(zero_data(), 0.5, [0.4j, -2j]) == 0)


def test_exterior_nodes_are_filled_from_the_interior_solution():
    grids = build_component_grids(6, 32)
    interior = slice(0, 2 * grids.size)
    assert not RTCOperator(grids, BUMP, 0.5, grids.nodes[interior]).has_exterior

    result = solve_psi(BUMP, 0.5, grids, tol=1e-12)
    exterior = grids.nodes[2 * grids.size:]
    assert np.allclose(result.psi.values[2 * grids.size:], interpolate_psi(result, BUMP, exterior), atol=1e-13)
    assert not np.allclose(result.psi.values[2 * grids.size:], IDENTITY)


def test_dbar_residual_shrinks_under_refinement():
    report = dbar_refinement_check(BUMP, 0.5, build_component_grids(12, 64), levels=(1, 2))
    record = report.get("dbar_residual_refinement_x=0.5")
    assert record.passed, record
    assert record.details["exclusion"] == pytest.approx(3 * build_component_grids(12, 64).h)


def test_operator_norm_estimate_is_homogeneous():
    grids = build_component_grids(4, 32)
    params = NormParams()
    one = estimate_operator_norm(BUMP, params, [0.5], 10, 3, grids=grids, n_pairs=200)
    two = estimate_operator_norm(BUMP.scaled(2.0), params, [0.5], 10, 3, grids=grids, n_pairs=200)
    assert one.norm_lower_bound > 0
    assert two.norm_lower_bound == pytest.approx(2 * one.norm_lower_bound, rel=1e-8)


def test_contraction_and_hoelder_exponent_of_the_solution():
    grids = build_component_grids(8, 64)
    params = NormParams()
    result = solve_psi(BUMP, 0.5, grids, tol=1e-10)
    estimate = estimate_operator_norm(BUMP, params, [0.5], 10, 0, grids=grids, n_pairs=500)
    assert result.contraction_ratio <= estimate.norm_lower_bound + 0.1, (result.changes, estimate)

    hoelder = holder_norm_estimate(rtc_evaluator(result.psi, BUMP, 0.5), params.alpha, HOLDER_REGION, 2000, 0)
    assert hoelder.empirical_exponent >= params.alpha - 0.05, hoelder
