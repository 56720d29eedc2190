import itertools
import math

import pytest

from modules.defosc import evaluate
from modules.errors import DomainError, InvalidSectorError, ParameterError, UsageError
from modules.taubnut_model import TaubNutOscillator, TaubNutParams, TaubNutSector

FLAT_LIMIT = TaubNutParams(a=0.0, b=1.0, c1=0.0, d=0.0, c0=2.0, c4=0.0)


@pytest.fixture
def osc():
    return TaubNutOscillator()


def test_sector_invariants():
    s = TaubNutSector(2, 3.0, 1.0, 0.5, 2.0).check()
    assert s.lam == 2
    assert s.beta == pytest.approx(2.5)
    assert s.alpha == pytest.approx(3.0)
    assert s.eprime == pytest.approx(-2.0 * (8 + 6 - 1 + 3))
    with pytest.raises(InvalidSectorError):
        TaubNutSector(0, 0.5, 1.0, 0.0).check()
    with pytest.raises(InvalidSectorError):
        TaubNutSector(0, 1.0, 1.0, 1.5).check()
    with pytest.raises(InvalidSectorError):
        TaubNutSector(0, 1.0, 1.0, 0.0, eps=0.0).check()


def test_unknown_l3_form():
    with pytest.raises(UsageError):
        TaubNutOscillator(l3_form="nu2")


def test_sectors_box(osc):
    sectors = osc.sectors(1, 2, [[0, 0], [1, 0.5]], [1.0])
    assert len(sectors) == 2 * 2 * 3
    assert {s.l for s in sectors if s.nu1 == 1} == {1, 2, 3}


def test_j_plus_coefficient_differs_from_printed(osc):
    action = osc.apply_angular_shift("plus", TaubNutSector(0, 3.0, 1.0, 0.0))
    assert action.coefficient == pytest.approx(-30.0)
    assert action.stated_coefficient == pytest.approx(-18.0)
    assert action.target.l == 4.0
    # printed and true coincide when nu1 = 0
    same = osc.apply_angular_shift("plus", TaubNutSector(0, 2.0, 0.0, 0.0))
    assert same.coefficient == same.stated_coefficient


def test_ladder_targets(osc):
    s = TaubNutSector(1, 1.0, 0.0, 0.0)
    k_plus = osc.apply_radial_ladder("plus", s)
    assert (k_plus.target.n, k_plus.target.l) == (0, 3.0)
    assert k_plus.coefficient == pytest.approx(-2.0)
    k_minus = osc.apply_radial_ladder("minus", TaubNutSector(0, 0.0, 0.0, 0.0))
    assert k_minus.skip_reason
    assert osc.apply_radial_ladder("plus", TaubNutSector(0, 0.0, 0.0, 0.0)).annihilates
    with pytest.raises(UsageError):
        osc.apply_radial_ladder("sideways", s)


def test_d1_closed_form_against_composition(osc):
    action = osc.integrals_action("D1", TaubNutSector(1, 1.0, 0.0, 0.0, 1.0))
    assert action.closed_form == pytest.approx(-576.0)
    assert action.composition == pytest.approx(-432.0)
    assert action.closed_form / action.composition == pytest.approx(1 * 2 / 1.5)
    assert (action.target.n, action.target.l) == (0, 3.0)


def test_d2_annihilates_low_lambda(osc):
    action = osc.integrals_action("D2", TaubNutSector(0, 2.0, 1.0, 0.5))
    assert action.target is None
    assert action.coefficient == 0.0
    assert action.composition == 0.0
    with pytest.raises(UsageError):
        osc.integrals_action("D3", TaubNutSector(0, 2.0, 1.0, 0.5))


def test_d2_composition_matches_closed_form(osc):
    action = osc.integrals_action("D2", TaubNutSector(1, 4.0, 1.0, 0.5, 2.0))
    assert action.target is not None
    assert action.composition == pytest.approx(action.closed_form, rel=1e-12)


def test_d2_leaving_the_tower_with_nonzero_coefficient(osc):
    sector = TaubNutSector(0, 2.0, 1.0, 0.0)
    assert osc.d2_closed_coefficient(sector) == pytest.approx(-40.0)
    with pytest.raises(InvalidSectorError):
        osc.integrals_action("D2", sector)


@pytest.mark.parametrize("sector", [
    TaubNutSector(1, 4.0, 1.0, 0.5, 2.0),
    TaubNutSector(0, 3.0, 1.0, 0.0, 1.0),
    TaubNutSector(2, 5.0, 2.0, 1.0, 0.5),
])
def test_d2_composition_follows_the_action_chain(osc, sector):
    k_minus = osc.apply_radial_ladder("minus", sector)
    j_first = osc.apply_angular_shift("minus", sector)
    j_second = osc.apply_angular_shift("minus", j_first.target)
    assert j_second.source.l == sector.l - 1
    chain = (sector.l - 1.5) * k_minus.coefficient * j_first.coefficient * j_second.coefficient
    action = osc.integrals_action("D2", sector)
    assert action.composition == pytest.approx(chain, rel=1e-14)
    assert action.composition == pytest.approx(action.closed_form, rel=1e-12)


def test_d1_composition_annihilates_lowest_shell(osc):
    action = osc.integrals_action("D1", TaubNutSector(0, 1.0, 0.0, 0.0))
    assert action.target is None
    assert action.coefficient == 0.0
    assert action.composition == 0.0
    assert action.closed_form != 0.0


@pytest.mark.parametrize("B", [1.5, 2.5, 4.5, 7.5])
def test_products_are_shifted_copies(osc, B):
    args = (1.0, 0.5, -12.0, 2.0)
    assert osc.d2d1_closed_form(B, *args) == pytest.approx(osc.d1d2_closed_form(B + 2, *args), rel=1e-12)


@pytest.mark.parametrize("nu1,nu2,eps,B,Hp", [(1.0, 0.5, 1.0, 3.5, -9.0), (0.0, 0.0, 2.0, 2.5, -4.0)])
def test_structure_function_realizes_d1d2(osc, nu1, nu2, eps, B, Hp):
    phi = osc.build_structure_function_taubnut(nu1, nu2, eps)
    assert len(phi.factors) == 12
    assert sum(f.multiplicity for f in phi.factors) == 13
    assert evaluate(phi, B / 2, 0.0, Hp) == pytest.approx(osc.d1d2_closed_form(B, nu1, nu2, Hp, eps), rel=1e-12)
    assert evaluate(phi, B / 2 + 1, 0.0, Hp) == pytest.approx(osc.d2d1_closed_form(B, nu1, nu2, Hp, eps), rel=1e-12)


def test_verify_algebra_taubnut(osc):
    sectors = osc.sectors(2, 3, [[0, 0], [1, 0], [1, 0.5], [2, 1]], [0.5, 1.0])
    report = osc.verify_algebra_taubnut(sectors)
    assert report.passed, report.worst_offenders()
    assert set(report.waivers) == {"D1_composition", "D2_out_of_tower"}
    assert report.residuals["D1_composition"] > 1e-3
    assert report.residuals["D2_composition"] < 1e-12
    out = osc.findings["d2_out_of_tower"]["sectors"]
    assert {(s["nu1"], s["nu2"], s["l"]) for s in out} == {(1, 0, 2.0)}
    assert osc.findings["d2_composition"]["matches_closed_form"]
    assert osc.findings["d1_composition"]["sectors_compared"] > 0
    assert not osc.findings["d1_composition"]["sector_independent"]


def test_flat_limit_energy_is_linear():
    osc = TaubNutOscillator(FLAT_LIMIT)
    for N in (3.0, 5.0, 7.0):
        assert osc.solve_original_energy(N, 0.0) == [pytest.approx(N / 2)]


def test_original_energy_roundtrip(osc):
    N, nu2 = 5.0, 0.5
    roots = osc.solve_original_energy(N, nu2)
    assert roots
    for E in roots:
        assert abs(osc.energy_relation_residual(E, N, nu2)) < 1e-10
        Eprime, eps2 = osc.metamorphosis_map(E, nu2)
        assert Eprime == pytest.approx(-math.sqrt(eps2) * N, rel=1e-10)


def test_degenerate_energy_relation():
    osc = TaubNutOscillator(TaubNutParams(a=0.0, b=0.0, c1=0.0, d=0.0, c0=0.0, c4=0.0))
    with pytest.raises(ParameterError):
        osc.solve_original_energy(3.0, 0.0)


def test_metamorphosis_needs_positive_eps2(osc):
    with pytest.raises(DomainError):
        osc.metamorphosis_map(2.0, 0.0)


def test_metric_window():
    TaubNutParams().check_window(10.0)
    with pytest.raises(ParameterError):
        TaubNutParams(a=-1.0, b=1.0).check_window(2.0)
    with pytest.raises(ParameterError):
        TaubNutParams(c1=-1.0, d=0.1).check_window(10.0)


@pytest.mark.parametrize("params", [
    TaubNutParams(a=a, b=b, c1=c1, d=d, c0=2.0, c4=c4)
    for a, b, c1, d, c4 in itertools.product((0.0, 0.5, 1.0), (0.5, 1.0, 2.0), (0.0, 0.3), (0.0, 0.25), (0.0, 1.0))
])
def test_original_energy_roundtrip_over_branch_levels(params):
    osc = TaubNutOscillator(params)
    solved = 0
    for p in range(6):
        for nu1, nu2 in ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (2.0, 1.0)):
            for e2 in (1, -1):
                N = 4 * p - 2 * nu1 + 2 * e2 * nu2 + 3
                if N == 0:
                    continue
                for E in osc.solve_original_energy(N, nu2):
                    assert abs(osc.energy_relation_residual(E, N, nu2)) < 1e-10 * max(1.0, abs(N))
                    Eprime, eps2 = osc.metamorphosis_map(E, nu2)
                    assert Eprime == pytest.approx(-math.sqrt(eps2) * N, rel=1e-10, abs=1e-10)
                    solved += 1
    assert solved > 0
