import numpy as np
import pytest

from dbar_akns.akns.checks import (
    born_order_check, lipschitz_probe, moment_identity_check, potential_bounds_check,
)
from dbar_akns.akns.moments import compute_moments, lemma4_split, potential_matrix
from dbar_akns.akns.potentials import akns_refinement, akns_residual, reconstruct_potentials
from dbar_akns.errors import Divergence, SmallNormViolation, exit_code_for
from dbar_akns.geometry.grids import build_component_grids
from dbar_akns.models.objects import NormParams
from dbar_akns.operator.estimates import OperatorEstimate
from dbar_akns.operator.solver import solve_psi
from dbar_akns.operator.spectral_data import SpectralData, zero_data
from dbar_akns.spaces.fields import MatrixFamily


UNIT_BUMP = SpectralData.from_preset("annulus_bump", 1.0, 1.0)
GRIDS = build_component_grids(8, 64)


def test_identity_moments_are_off_diagonal():
    moments = compute_moments(MatrixFamily.identity(GRIDS), UNIT_BUMP, 0.5)
    assert moments.total[0, 0] == 0 and moments.total[1, 1] == 0
    assert moments.diagonal_magnitude == 0.0
    assert moments.u == -2j * moments.total[0, 1]
    assert moments.v == 2j * moments.total[1, 0]

    Q = potential_matrix(moments)
    assert Q[0, 0] == 0 and Q[1, 1] == 0
    assert Q[0, 1] == moments.u and Q[1, 0] == moments.v


def test_zero_data_has_zero_potentials():
    sample = reconstruct_potentials(zero_data(), [-1.0, -0.5, 0.5, 1.0], build_component_grids(4, 64))
    assert sample.complete
    assert np.all(sample.u == 0) and np.all(sample.v == 0)
    assert sample.sup_u == 0.0 and sample.l2_v == 0.0
    assert np.all(sample.iterations == 1)


def test_reconstruct_sorts_x_and_rejects_zero():
    sample = reconstruct_potentials(UNIT_BUMP.scaled(0.01), [1.0, -1.0, 0.5], GRIDS)
    assert np.array_equal(sample.x_grid, [-1.0, 0.5, 1.0])
    assert sample.complete and np.all(sample.ok)
    with pytest.raises(ValueError):
        reconstruct_potentials(UNIT_BUMP, [0.0, 1.0], GRIDS)


def test_failed_x_values_are_kept_apart():
    sample = reconstruct_potentials(UNIT_BUMP.scaled(1e5), [0.5, 1.0], build_component_grids(6, 64))
    assert not sample.complete
    assert set(sample.failures) == {0.5, 1.0}
    assert isinstance(sample.worst_failure(), Divergence)
    assert exit_code_for(sample.failures.values()) == 2
    assert sample.sup_u == 0.0, "failed entries are excluded from the norms"


def test_small_data_potential_is_born_approximation():
    eps = 1e-3
    xs = [0.5, 1.0]
    identity = MatrixFamily.identity(GRIDS)
    u1 = np.array([compute_moments(identity, UNIT_BUMP, x).u for x in xs])
    u = reconstruct_potentials(UNIT_BUMP.scaled(eps), xs, GRIDS, tol=1e-14).u
    gap = np.max(np.abs(u - eps * u1))
    assert gap <= 1e-3 * np.max(np.abs(eps * u1)), gap


def test_born_order_of_zero_gap():
    report = born_order_check(zero_data(), [0.5], [1e-1, 1e-2], build_component_grids(4, 64))
    record = report.get("born_order")
    assert record.observed == float("inf") and record.passed


def test_moment_identity_holds_for_solved_psi():
    data = UNIT_BUMP.scaled(0.05)
    result = solve_psi(data, 0.5, GRIDS)
    targets = np.array([0.21 + 0.33j, -0.47 - 0.12j, 1.6 + 0.4j])
    report = moment_identity_check(result.psi, data, 0.5, targets)
    assert report.all_passed, report.checks[0]


def test_lemma4_split_records_both_brackets():
    data = UNIT_BUMP.scaled(0.05)
    result = solve_psi(data, -0.5, GRIDS)
    report = lemma4_split(result.psi, data, -0.5, NormParams())
    names = {c.name for c in report.checks}
    assert names == {"lemma4_u_interior", "lemma4_u_inverted", "lemma4_v_interior", "lemma4_v_inverted"}
    assert report.get("lemma4_u_interior").passed, report.get("lemma4_u_interior")
    assert report.get("lemma4_v_interior").passed, report.get("lemma4_v_interior")


def test_akns_residual_of_zero_data():
    value = akns_residual(zero_data(), 1.0, 0.2, np.array([0.3 + 0.2j, -1.5j]), build_component_grids(4, 64))
    assert value == 0.0
    with pytest.raises(ValueError):
        akns_residual(zero_data(), 0.1, 0.2, np.array([0.3j]), build_component_grids(4, 64))


def test_potential_bounds_need_small_norm():
    sample = reconstruct_potentials(zero_data(), [0.5, 1.0], build_component_grids(4, 64))
    params = NormParams()
    large = OperatorEstimate(1.2, -0.2, params.p, params.q, params.alpha)
    with pytest.raises(SmallNormViolation):
        potential_bounds_check(sample, zero_data(), params, large)

    small = OperatorEstimate(0.0, 1.0, params.p, params.q, params.alpha)
    report = potential_bounds_check(sample, zero_data(), params, small)
    assert report.all_passed, report.failed()


def test_lipschitz_probe_checks_data_norms():
    bump = UNIT_BUMP.scaled(0.01)
    with pytest.raises(SmallNormViolation):
        lipschitz_probe(zero_data(), bump, [0.5], NormParams(), 1e-6, GRIDS)


def test_lipschitz_ratio_is_stable_for_small_data():
    base = UNIT_BUMP.scaled(0.01)
    other = base.plus(UNIT_BUMP.scaled(0.005))
    result = lipschitz_probe(base, other, [0.5, 1.0], NormParams(), 1.0, GRIDS)
    assert result.passed, result.ratios
    assert all(r > 0 for r in result.ratios)


@pytest.mark.parametrize("x0", [0.8, -0.8])
def test_akns_residual_is_second_order_above_the_quadrature_floor(x0):
    rng = np.random.default_rng(4)
    k = 1.2 * np.sqrt(rng.random(8)) * np.exp(2j * np.pi * rng.random(8))
    study = akns_refinement(UNIT_BUMP.scaled(0.05), x0, 0.2, k, GRIDS)
    assert study.steps == (0.2, 0.1, 0.05)
    assert study.truncation[0] > study.truncation[1] > study.truncation[2] > 0, study
    assert study.factor >= 3.5, study
    assert np.isfinite(study.floor)
