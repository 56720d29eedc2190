# modules/numgrid.py
"""
GRID VERIFICATION ENGINE
Recurrence residuals of the scalarized ladder/shift operators on sampled
wavefunctions, and finite-difference eigenvalue oracles for the separated ODEs
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError, UsageError
from .specfun import PolyEval
from .taubnut_model import RecurrenceAction, TaubNutOscillator, TaubNutParams

logger = logging.getLogger(__name__)

SCALE_FLOOR = 1e-290


@dataclass(frozen=True)
class GridSpec:
    nodes: int = 400
    r_min: float = 0.05
    r_max_scale: float = 8.0  # r_max = r_max_scale / sqrt(eps)
    theta_margin: float = 0.05  # rad
    oracle_intervals: int = 4000
    oracle_r_max_scale: float = 10.0
    convergence_tol: float = 1e-7

    def __post_init__(self):
        if self.nodes < 3:
            raise UsageError(f"grid.nodes={self.nodes} must be >= 3")
        if not 0 < self.r_min < self.r_max_scale:
            raise UsageError("grid.r_min must lie in (0, r_max_scale)")
        if not 0 < self.theta_margin < math.pi / 2:
            raise UsageError("grid.theta_margin must lie in (0, pi/2)")
        if self.oracle_intervals < 16:
            raise UsageError("grid.oracle_intervals must be >= 16")

    def radial_nodes(self, eps: float) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max_scale / math.sqrt(eps), self.nodes)

    def angular_nodes(self) -> np.ndarray:
        return np.linspace(self.theta_margin, math.pi - self.theta_margin, self.nodes)

    def nodes_for(self, variable: str, eps: float) -> np.ndarray:
        return self.radial_nodes(eps) if variable == "r" else self.angular_nodes()


@dataclass(frozen=True)
class GridFunction:
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        if not (len(self.nodes) == len(self.values) == len(self.derivs)):
            raise DomainError("grid function arrays must have equal lengths")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("grid nodes must be strictly increasing")

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], PolyEval], nodes: np.ndarray) -> "GridFunction":
        ev = func(nodes)
        return cls(np.asarray(nodes, dtype=float), np.asarray(ev.value, dtype=float),
                   np.asarray(ev.derivative, dtype=float))


@dataclass(frozen=True)
class ResidualReport:
    sup_rel_residual: float
    rms_residual: float
    reference_scale: float
    nodes_used: int
    predicted_coefficient: float = 0.0
    fitted_coefficient: float = 0.0
    shape_residual: float = 0.0

    def as_record(self) -> dict:
        return {
            "sup_rel_residual": self.sup_rel_residual,
            "rms_residual": self.rms_residual,
            "reference_scale": self.reference_scale,
            "nodes_used": self.nodes_used,
            "predicted_coefficient": self.predicted_coefficient,
            "fitted_coefficient": self.fitted_coefficient,
            "shape_residual": self.shape_residual,
        }


def verify_recurrence(action: RecurrenceAction, grid: GridSpec | None = None,
                      engine: TaubNutOscillator | None = None,
                      params: TaubNutParams | None = None) -> ResidualReport:
    """
    LHS = (operator applied to the source wavefunction) against
    RHS = coefficient × target wavefunction on the grid.

    Residuals are normalized by the largest of |LHS|, |RHS| and the individual
    operator terms, so annihilation cases are measured against the source scale.
    """
    if action.skip_reason:
        raise DomainError(f"{action.operator} on {action.source.labels}: {action.skip_reason}")
    grid = grid or GridSpec()
    engine = engine or TaubNutOscillator()
    nodes = grid.nodes_for(action.variable, action.source.eps)
    if params is not None and action.variable == "r" and np.any(params.f(nodes) <= 0):
        raise DomainError("radial grid enters the region where f(r) = a r^2 + b <= 0")

    source = GridFunction.sample(engine.wavefunction(action.source, action.variable), nodes)
    terms = action.differential.term_values(source.nodes, source.values, source.derivs)
    lhs = np.sum(terms, axis=0)
    if action.annihilates:
        target_values = np.zeros_like(lhs)
    else:
        target_values = GridFunction.sample(engine.wavefunction(action.target, action.variable), nodes).values
    rhs = action.coefficient * target_values

    scale = max(
        float(np.max(np.abs(lhs))),
        float(np.max(np.abs(rhs))),
        max(float(np.max(np.abs(t))) for t in terms),
        SCALE_FLOOR,
    )
    diff = lhs - rhs
    tt = float(np.dot(target_values, target_values))
    c_fit = float(np.dot(lhs, target_values)) / tt if tt > 0 else 0.0

    report = ResidualReport(
        sup_rel_residual=float(np.max(np.abs(diff))) / scale,
        rms_residual=float(np.sqrt(np.mean(diff * diff))) / scale,
        reference_scale=scale,
        nodes_used=int(len(nodes)),
        predicted_coefficient=float(action.coefficient),
        fitted_coefficient=c_fit,
        shape_residual=float(np.max(np.abs(lhs - c_fit * target_values))) / scale,
    )
    logger.debug("%s on %s: sup %.3e, fit %.6g", action.operator, action.source.labels,
                 report.sup_rel_residual, c_fit)
    return report


def _richardson(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    return (4.0 * fine - coarse) / 3.0


def _refine(solve: Callable[[int], np.ndarray], intervals: int, tol: float, what: str) -> np.ndarray:
    e1, e2, e4 = solve(intervals), solve(2 * intervals), solve(4 * intervals)
    r1 = _richardson(e1, e2)
    r2 = _richardson(e2, e4)
    gap = np.abs(r2 - r1)
    bound = tol * np.maximum(np.abs(r2), 1.0)
    if np.any(gap > bound):
        raise ConvergenceError(f"{what}: extrapolated eigenvalues moved by {gap.max():.3e} between refinements")
    return r2


def radial_eigenvalues_oracle(k1: float, eps: float, count: int, grid: GridSpec | None = None) -> list[float]:
    """
    Lowest `count` values E' of the separated radial equation with separation constant k1.

    u = r R turns it into -u'' + (k1/r^2 + eps^2 r^2) u = -E' u, solved by
    vertex finite differences with Dirichlet ends and Richardson extrapolation.
    Returned by node count, so E'_0 > E'_1 > ...
    """
    if count <= 0:
        return []
    if not eps > 0:
        raise DomainError(f"radial oracle needs eps > 0 (bound states), got {eps}")
    grid = grid or GridSpec()
    r_max = grid.oracle_r_max_scale / math.sqrt(eps)

    def solve(intervals: int) -> np.ndarray:
        h = r_max / intervals
        r = h * np.arange(1, intervals)
        diag = 2.0 / h**2 + k1 / r**2 + eps**2 * r**2
        off = np.full(intervals - 2, -1.0 / h**2)
        return eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, count - 1))

    lam = _refine(solve, grid.oracle_intervals, grid.convergence_tol, f"radial oracle k1={k1}, eps={eps}")
    return [float(-v) for v in np.sort(lam)]


def angular_eigenvalues_oracle(nu1: float, nu2: float, count: int, grid: GridSpec | None = None) -> list[float]:
    """
    Lowest `count` separation constants k1 of the angular equation.

    With z = cos θ and Θ = (1+z)^((nu1-2nu2)/2) (1-z)^(nu1/2) Z, the equation
    becomes -(p Z')' = μ w Z on (-1, 1) with p = (1-z)^(α+1)(1+z)^(β+1),
    w = (1-z)^α (1+z)^β, α = nu1, β = nu1 - 2nu2, and k1 = μ + c(c+1), c = (α+β)/2.
    """
    if count <= 0:
        return []
    a = float(nu1)
    b = float(nu1 - 2 * nu2)
    if a <= -1 or b <= -1:
        raise DomainError(f"angular oracle needs nu1 > -1 and nu1 - 2 nu2 > -1, got ({nu1}, {nu2})")
    grid = grid or GridSpec()
    c = 0.5 * (a + b)

    def solve(cells: int) -> np.ndarray:
        h = 2.0 / cells
        centers = -1.0 + h * (np.arange(cells) + 0.5)
        faces = -1.0 + h * np.arange(1, cells)
        p = (1 - faces) ** (a + 1) * (1 + faces) ** (b + 1)
        w = (1 - centers) ** a * (1 + centers) ** b
        flux = np.zeros(cells + 1)
        flux[1:-1] = p / h**2
        diag = (flux[:-1] + flux[1:]) / w
        off = -p / (h**2 * np.sqrt(w[:-1] * w[1:]))
        return eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, count - 1))

    mu = _refine(solve, grid.oracle_intervals, grid.convergence_tol, f"angular oracle nu=({nu1}, {nu2})")
    return [float(v + c * (c + 1)) for v in np.sort(mu)]
