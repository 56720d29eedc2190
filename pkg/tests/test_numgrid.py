import numpy as np
import pytest

from modules.errors import CalibrationError, ConvergenceError, DomainError, UsageError
from modules.numgrid import (
    GridFunction,
    GridSpec,
    angular_eigenvalues_oracle,
    radial_eigenvalues_oracle,
    verify_recurrence,
)
from modules.taubnut_model import TaubNutOscillator, TaubNutParams, TaubNutSector

TOL = 1e-8


@pytest.fixture
def osc():
    return TaubNutOscillator()


def test_grid_spec_validation():
    with pytest.raises(UsageError):
        GridSpec(nodes=2)
    with pytest.raises(UsageError):
        GridSpec(theta_margin=2.0)
    nodes = GridSpec(nodes=50).radial_nodes(4.0)
    assert nodes[0] == pytest.approx(0.05)
    assert nodes[-1] == pytest.approx(4.0)


def test_grid_function_rejects_bad_arrays():
    with pytest.raises(DomainError):
        GridFunction(np.array([0.2, 0.1]), np.zeros(2), np.zeros(2))
    with pytest.raises(DomainError):
        GridFunction(np.array([0.1, 0.2]), np.zeros(3), np.zeros(2))


@pytest.mark.parametrize("sector", [
    TaubNutSector(2, 2.0, 1.0, 0.5, 1.0),
    TaubNutSector(1, 3.0, 2.0, 1.0, 0.5),
    TaubNutSector(0, 1.0, 0.0, 0.0, 2.0),
    TaubNutSector(3, 4.0, 1.0, 0.0, 1.0),
])
def test_recurrences_hold_on_grid(osc, sector):
    for action in osc.recurrence_actions(sector):
        if action.skip_reason:
            continue
        report = verify_recurrence(action, engine=osc)
        assert report.sup_rel_residual < TOL, (action.operator, sector.labels, report)
        if not action.annihilates:
            assert report.fitted_coefficient == pytest.approx(action.coefficient, rel=1e-8)


@pytest.mark.parametrize("sector", [
    TaubNutSector(2, 2.0, 1.0, 0.5, 1.0),
    TaubNutSector(1, 3.0, 2.0, 1.0, 0.5),
])
def test_residuals_survive_grid_refinement(osc, sector):
    coarse, fine = GridSpec(nodes=400), GridSpec(nodes=800)
    for action in osc.recurrence_actions(sector):
        if action.skip_reason or action.annihilates:
            continue
        a = verify_recurrence(action, coarse, engine=osc)
        b = verify_recurrence(action, fine, engine=osc)
        assert a.sup_rel_residual < TOL and b.sup_rel_residual < TOL, action.operator
        assert b.fitted_coefficient == pytest.approx(a.fitted_coefficient, rel=1e-9)


@pytest.mark.parametrize("sector,variable", [
    (TaubNutSector(2, 2.0, 1.0, 0.5, 1.0), "r"),
    (TaubNutSector(1, 3.0, 0.0, 0.0, 2.0), "r"),
    (TaubNutSector(0, 3.0, 1.0, 0.5, 1.0), "theta"),
    (TaubNutSector(0, 4.0, 2.0, 1.0, 1.0), "theta"),
])
def test_sampled_derivative_matches_finite_differences(osc, sector, variable):
    nodes = GridSpec(nodes=2000).nodes_for(variable, sector.eps)
    sampled = GridFunction.sample(osc.wavefunction(sector, variable), nodes)
    numeric = np.gradient(sampled.values, sampled.nodes, edge_order=2)
    scale = np.max(np.abs(sampled.derivs))
    assert np.max(np.abs(numeric - sampled.derivs)[1:-1]) < 1e-3 * scale


def test_fitted_j_plus_coefficient(osc):
    action = osc.apply_angular_shift("plus", TaubNutSector(0, 3.0, 1.0, 0.0))
    report = verify_recurrence(action, engine=osc)
    assert report.fitted_coefficient == pytest.approx(-30.0, rel=1e-8)
    assert abs(report.fitted_coefficient - action.stated_coefficient) > 1.0


def test_printed_k_plus_form_fails(osc):
    action = osc.apply_radial_ladder("plus", TaubNutSector(1, 2.0, 1.0, 0.5), printed_form=True)
    assert verify_recurrence(action, engine=osc).sup_rel_residual > 1e-3


def test_skipped_action_is_not_evaluated(osc):
    action = osc.apply_radial_ladder("minus", TaubNutSector(0, 0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        verify_recurrence(action, engine=osc)


def test_metric_window_on_radial_grid(osc):
    action = osc.apply_radial_ladder("plus", TaubNutSector(1, 1.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        verify_recurrence(action, engine=osc, params=TaubNutParams(a=-1.0, b=1.0))


def test_calibration_picks_nu1(osc):
    family = [s for s in osc.sectors(0, 2, [[1.0, 0.5], [2.0, 1.0]], [1.0]) if s.lam >= 1]
    assert osc.calibrate_l3(family) == pytest.approx(1.0)
    assert osc.l3_form == "nu1"
    assert osc.findings["l3_scalarization"]["passing_forms"] == ["nu1"]


def test_calibration_errors(osc):
    with pytest.raises(UsageError):
        osc.calibrate_l3([])
    family = [TaubNutSector(0, 2.0, 1.0, 0.5)]
    with pytest.raises(CalibrationError):
        osc.calibrate_l3(family, tol=1e-30)


@pytest.mark.parametrize("beta,eps", [(0.0, 1.0), (1.0, 0.5), (2.0, 2.0), (0.5, 1.0), (1.5, 2.0)])
def test_radial_oracle(osc, beta, eps):
    values = radial_eigenvalues_oracle(osc.separation_constant(beta, 0.0), eps, 4)
    expected = [-eps * (4 * n + 2 * beta + 3) for n in range(4)]
    assert values == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("nu1,nu2", [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (2.0, 1.0)])
def test_angular_oracle(osc, nu1, nu2):
    values = angular_eigenvalues_oracle(nu1, nu2, 3)
    expected = [osc.separation_constant(nu1 + lam, nu2) for lam in range(3)]
    assert values == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_oracle_edge_cases():
    assert radial_eigenvalues_oracle(0.0, 1.0, 0) == []
    with pytest.raises(DomainError):
        radial_eigenvalues_oracle(0.0, -1.0, 2)
    with pytest.raises(DomainError):
        angular_eigenvalues_oracle(1.0, 1.5, 2)
    with pytest.raises(ConvergenceError):
        radial_eigenvalues_oracle(2.0, 1.0, 3, GridSpec(oracle_intervals=16, convergence_tol=1e-14))
