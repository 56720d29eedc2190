import pytest

from modules.branch_catalog import (BRANCH_FAMILIES, catalog_branch, families_for, sign_grid, tag_branches,
                                     taubnut_substituted_phi)
from modules.defosc import boundary_solutions
from modules.errors import UsageError
from modules.taubnut_model import TaubNutOscillator

FLAT_FROZEN = {"omega": 1.0, "Qcharge": 1.0, "m": 1.0}


def test_flat_physical_branch_closed_form():
    for p in range(4):
        u, E = catalog_branch("flat_m", (1, 1, 1), p, FLAT_FROZEN)
        assert u == pytest.approx(1.5)
        assert E == pytest.approx(2 * p + 2.5)


def test_taubnut_branch_closed_form():
    u, E = catalog_branch("taubnut", (1, 1), 2, {"eps": 1.0, "nu1": 1.0, "nu2": 0.5})
    assert E == pytest.approx(-(8 - 2 + 1 + 3))
    assert u == pytest.approx(-2 * 2 + 1.0 - 0.5)


def test_catalog_lookup_errors():
    with pytest.raises(UsageError):
        catalog_branch("spherical", (1, 1), 0, FLAT_FROZEN)
    with pytest.raises(UsageError):
        catalog_branch("flat_m", (1, 0, 1), 0, FLAT_FROZEN)
    with pytest.raises(UsageError):
        catalog_branch("flat_m", (1, 1), 0, FLAT_FROZEN)
    with pytest.raises(UsageError):
        catalog_branch("taubnut", (1, 1), 0, {"eps": 1.0})


def test_family_listing():
    assert families_for("taubnut") == ["taubnut"]
    assert set(families_for("flat")) == {"flat_m", "flat_Q", "flat_uE_m", "flat_uE_Q"}
    assert len(sign_grid("flat_m")) == 8
    assert len(sign_grid("taubnut")) == 4
    assert all(entry["description"] for entry in BRANCH_FAMILIES.values())


@pytest.mark.parametrize("nu1,nu2,eps,p", [(0.0, 0.0, 1.0, 0), (1.0, 0.5, 2.0, 1), (2.0, 1.0, 0.5, 3)])
def test_taubnut_closed_branch_among_boundary_solutions(nu1, nu2, eps, p):
    sf = TaubNutOscillator().build_structure_function_taubnut(nu1, nu2, eps)
    tags = [matches for _, matches in tag_branches(boundary_solutions(sf, p))]
    assert any("taubnut(1, 1)" in matches for matches in tags)


def test_tag_branches_with_restricted_grid():
    sf = TaubNutOscillator().build_structure_function_taubnut(0.0, 0.0, 1.0)
    tagged = tag_branches(boundary_solutions(sf, 0), signs_grid={"taubnut": [(-1, -1)]})
    assert all("taubnut(1, 1)" not in matches for _, matches in tagged)


def test_substituted_taubnut_phi():
    frozen = {"eps": 1.0, "nu1": 0.0, "nu2": 0.0}
    assert taubnut_substituted_phi(1, (1, 1), 2, frozen) == -656916480.0
    assert taubnut_substituted_phi(0, (1, 1), 2, frozen) == 0.0
    assert taubnut_substituted_phi(3, (1, 1), 2, frozen) == 0.0
    sf = TaubNutOscillator().build_structure_function_taubnut(0.0, 0.0, 1.0)
    u, E = catalog_branch("taubnut", (1, 1), 2, sf.frozen_params)
    assert sf(1, u, E) == pytest.approx(-537477120.0)
