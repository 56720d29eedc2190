import pytest

from modules.defosc import (
    AffineFactor,
    StructureFunction,
    StructureFunctionBuilder,
    boundary_residual,
    boundary_solutions,
    evaluate,
    solve_unirreps,
    verify_branch_against_catalog,
)
from modules.errors import ParameterError
from modules.flat_model import FlatOscillator, FlatParams


def _two_factor(prefactor=1.0):
    # Φ = prefactor (x + u)(E - x)
    return (StructureFunctionBuilder(prefactor, model="toy")
            .add_factor(1, 1, 0, 0, label="x+u")
            .add_factor(-1, 0, 1, 0, label="E-x")
            .build())


def test_affine_factor_rejects_degenerate_input():
    with pytest.raises(ParameterError):
        AffineFactor(0, 0, 0, 0)
    with pytest.raises(ParameterError):
        AffineFactor(1, 0, 0, 0, multiplicity=0)


def test_evaluate_multiplies_factors_with_multiplicity():
    sf = (StructureFunctionBuilder(2.0)
          .add_factor(1, 0, 0, 0)
          .add_factor(1, -1, 0, 0, multiplicity=2)
          .build())
    assert evaluate(sf, 3, 1, 0) == pytest.approx(2 * 3 * 4)
    assert sf(3, 1, 0) == evaluate(sf, 3, 1, 0)


def test_boundary_solutions_enumerate_factor_pairs():
    sf = _two_factor()
    branches = boundary_solutions(sf, 2)
    assert [(b.u, b.E) for b in branches] == [(-3.0, 0.0), (0.0, 3.0)]
    for b in branches:
        assert b.positive
        assert b.phi_values == pytest.approx((2.0, 2.0))
        assert boundary_residual(sf, b) == 0.0


def test_positivity_filter():
    sf = _two_factor(prefactor=-1.0)
    assert len(boundary_solutions(sf, 2)) == 2
    assert solve_unirreps(sf, 2) == []
    # one-dimensional representations have no interior points
    assert len(solve_unirreps(sf, 0)) == 2


def test_negative_p_rejected():
    with pytest.raises(ParameterError):
        boundary_solutions(_two_factor(), -1)


def test_flat_structure_function_zero_and_positivity():
    phi = FlatOscillator(FlatParams(omega=1.0, Qcharge=1.0)).build_structure_function(1.0)
    assert len(phi.factors) == 13
    assert sum(f.multiplicity for f in phi.factors) == 14
    assert evaluate(phi, 1, 1.5, 2.5) == 0.0
    assert evaluate(phi, 1, 1.5, 6.5) > 0.0


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_flat_physical_branch_is_a_unirrep(p):
    phi = FlatOscillator(FlatParams(omega=1.0, Qcharge=1.0)).build_structure_function(1.0)
    found = [b for b in solve_unirreps(phi, p)
             if b.u == pytest.approx(1.5) and b.E == pytest.approx(2 * p + 2.5)]
    assert len(found) == 1
    assert boundary_residual(phi, found[0]) < 1e-10
    assert verify_branch_against_catalog(found[0], "flat_m", (1, 1, 1))
    assert not verify_branch_against_catalog(found[0], "flat_m", (1, 1, -1))


def _branch_set(branches):
    return {(round(b.u, 9), round(b.E, 9), b.positive) for b in branches}


@pytest.mark.parametrize("order", [
    lambda fs: fs[::-1],
    lambda fs: fs[1::2] + fs[0::2],
    lambda fs: fs[5:] + fs[:5],
])
@pytest.mark.parametrize("p", [0, 2, 4])
def test_solutions_do_not_depend_on_factor_order(order, p):
    phi = FlatOscillator(FlatParams(omega=2.0, Qcharge=0.5)).build_structure_function(1.5)
    shuffled = StructureFunction(phi.prefactor, tuple(order(list(phi.factors))), phi.frozen_params, phi.model)
    assert _branch_set(boundary_solutions(shuffled, p)) == _branch_set(boundary_solutions(phi, p))
    assert _branch_set(solve_unirreps(shuffled, p)) == _branch_set(solve_unirreps(phi, p))


def test_duplicate_solutions_collapse():
    # the squared factor and a parallel copy of it must not produce extra branches
    sf = (StructureFunctionBuilder(1.0)
          .add_factor(1, 1, 0, 0)
          .add_factor(2, 2, 0, 0)
          .add_factor(-1, 0, 1, 0, multiplicity=2)
          .build())
    assert [(b.u, b.E) for b in boundary_solutions(sf, 2)] == [(-3.0, 0.0), (0.0, 3.0)]


def test_magnitude_keeps_the_scale_of_a_cancelled_factor():
    sf = StructureFunctionBuilder(0.5).add_factor(1, 0, 1, -3.0).add_factor(0, 1, 0, 2.0).build()
    # first factor cancels at x + E = 3; its terms still count
    assert evaluate(sf, 1.0, 1.0, 2.0) == 0.0
    assert sf.magnitude(1.0, 1.0, 2.0) == pytest.approx(0.5 * 6.0 * 3.0)
    assert StructureFunctionBuilder(2.0).add_factor(1, 0, 0, 0).build().magnitude(0.0, 0.0, 0.0) == 2.0
