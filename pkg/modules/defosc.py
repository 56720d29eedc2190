# modules/defosc.py
"""
DEFORMED OSCILLATOR ENGINE
Factored structure functions and finite-dimensional unirrep constraints
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_DEDUP_TOL = 1e-9
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class AffineFactor:
    """coeff_x*x + coeff_u*u + coeff_E*E + constant, raised to `multiplicity`."""

    coeff_x: float
    coeff_u: float
    coeff_E: float
    constant: float
    multiplicity: int = 1
    label: str = ""

    def __post_init__(self):
        if self.coeff_x == 0 and self.coeff_u == 0 and self.coeff_E == 0 and self.constant == 0:
            raise ParameterError(f"affine factor {self.label or '?'} is identically zero")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ParameterError(f"factor multiplicity must be a positive integer, got {self.multiplicity!r}")

    def value(self, x, u, E):
        return self.coeff_x * x + self.coeff_u * u + self.coeff_E * E + self.constant


@dataclass(frozen=True)
class StructureFunction:
    prefactor: float
    factors: tuple[AffineFactor, ...]
    frozen_params: Mapping[str, float] = field(default_factory=dict)
    model: str = ""

    def __call__(self, x, u, E):
        return evaluate(self, x, u, E)

    def magnitude(self, x, u, E) -> float:
        """
        Rounding scale of Φ at (x, u, E): |prefactor| times, per factor, the sum
        of its absolute terms (1 when every term vanishes).

        A factor that cancels to rounding noise keeps its term size here, so
        |Φ| / magnitude stays near machine epsilon at a computed zero.
        """
        scale = abs(self.prefactor)
        for f in self.factors:
            v = abs(f.coeff_x * x) + abs(f.coeff_u * u) + abs(f.coeff_E * E) + abs(f.constant)
            scale *= (v if v > 0.0 else 1.0) ** f.multiplicity
        return float(scale)


class StructureFunctionBuilder:
    def __init__(self, prefactor: float, model: str = "", **frozen_params: float):
        self.prefactor = prefactor
        self.model = model
        self.frozen_params = dict(frozen_params)
        self.factors: list[AffineFactor] = []

    def add_factor(self, coeff_x, coeff_u, coeff_E, constant, multiplicity=1, label=""):
        """Append one affine factor; returns self so factors chain."""
        self.factors.append(AffineFactor(float(coeff_x), float(coeff_u), float(coeff_E), float(constant),
                                         multiplicity, label))
        return self

    def build(self) -> StructureFunction:
        return StructureFunction(float(self.prefactor), tuple(self.factors), dict(self.frozen_params), self.model)


@dataclass(frozen=True)
class UnirrepBranch:
    u: float
    E: float
    p: int
    zero_factor_at_0: int
    zero_factor_at_p1: int
    phi_values: tuple[float, ...]
    phi_at_0: float = 0.0
    phi_at_p1: float = 0.0
    positive: bool = True
    frozen_params: Mapping[str, float] = field(default_factory=dict)
    model: str = ""

    def as_record(self) -> dict:
        record = {
            "model": self.model,
            "p": self.p,
            "u": self.u,
            "E": self.E,
            "zero_factor_at_0": self.zero_factor_at_0,
            "zero_factor_at_p1": self.zero_factor_at_p1,
            "phi_at_0": self.phi_at_0,
            "phi_at_p1": self.phi_at_p1,
            "min_interior_phi": min(self.phi_values) if self.phi_values else None,
            "positive": self.positive,
        }
        record.update({f"frozen_{k}": v for k, v in sorted(self.frozen_params.items())})
        return record


def evaluate(sf: StructureFunction, x, u, E):
    """Φ(x; u, E) = prefactor · Π factor_i^mult_i; numpy arrays broadcast."""
    result = sf.prefactor
    for f in sf.factors:
        result = result * f.value(x, u, E) ** f.multiplicity
    return result


def _pair_solutions(sf: StructureFunction, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (u, E) of every factor pair (i, j) with factor_i(0) = factor_j(p+1) = 0,
    by Cramer's rule over all pairs at once, plus the mask of solvable pairs.
    """
    cx = np.array([f.coeff_x for f in sf.factors])
    cu = np.array([f.coeff_u for f in sf.factors])
    cE = np.array([f.coeff_E for f in sf.factors])
    c0 = np.array([f.constant for f in sf.factors])

    bi = -c0[:, None]
    bj = -(c0 + cx * (p + 1))[None, :]
    ui, Ei = cu[:, None], cE[:, None]
    uj, Ej = cu[None, :], cE[None, :]
    det = ui * Ej - Ei * uj
    scale = (np.maximum(np.maximum(np.abs(ui), np.abs(Ei)), 1e-300)
             * np.maximum(np.maximum(np.abs(uj), np.abs(Ej)), 1e-300))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (bi * Ej - Ei * bj) / det
        E = (ui * bj - bi * uj) / det
    solvable = (np.abs(det) > 1e-14 * scale) & np.isfinite(u) & np.isfinite(E)
    return u, E, solvable


def _dedup_key(u: float, E: float, tol: float) -> tuple[int, int]:
    return round(u / (tol * max(1.0, abs(u)))), round(E / (tol * max(1.0, abs(E))))


def boundary_solutions(sf: StructureFunction, p: int, dedup_tol: float = DEFAULT_DEDUP_TOL) -> list[UnirrepBranch]:
    """
    Every deduplicated (u, E) with Φ(0) = Φ(p+1) = 0, before the positivity filter.

    Each factor pair (i, j) is solved as the 2x2 linear system
    factor_i(0, u, E) = 0, factor_j(p+1, u, E) = 0. Parallel pairs are
    skipped. Solutions are deduplicated on a rounded (u, E) key, the first
    pair in (i, j) order is kept, and Φ is then evaluated on all surviving
    solutions at x = 0, 1, ..., p+1 in one numpy call.
    """
    p = int(p)
    if p < 0:
        raise ParameterError(f"representation label p={p} must be >= 0")

    u_all, E_all, solvable = _pair_solutions(sf, p)
    seen: dict[tuple[int, int], int] = {}
    kept: list[tuple[int, int]] = []
    for i, j in zip(*np.nonzero(solvable)):
        u, E = float(u_all[i, j]), float(E_all[i, j])
        ku, kE = _dedup_key(u, E, dedup_tol)
        # neighbouring cells catch pairs that straddle a rounding boundary
        if any((ku + du, kE + dE) in seen for du in (-1, 0, 1) for dE in (-1, 0, 1)):
            continue
        seen[(ku, kE)] = len(kept)
        kept.append((int(i), int(j)))

    if not kept:
        logger.debug("p=%d: no boundary candidates from %d factors", p, len(sf.factors))
        return []

    rows, cols = np.array(kept).T
    us = u_all[rows, cols]
    Es = E_all[rows, cols]
    xs = np.arange(p + 2, dtype=float)[:, None]
    phi = np.asarray(evaluate(sf, xs, us[None, :], Es[None, :]), dtype=float)
    interior = phi[1:p + 1]
    positive = np.all(interior > 0.0, axis=0)

    branches = [
        UnirrepBranch(
            u=float(us[k]),
            E=float(Es[k]),
            p=p,
            zero_factor_at_0=int(rows[k]),
            zero_factor_at_p1=int(cols[k]),
            phi_values=tuple(float(v) for v in interior[:, k]),
            phi_at_0=float(phi[0, k]),
            phi_at_p1=float(phi[p + 1, k]),
            positive=bool(positive[k]),
            frozen_params=dict(sf.frozen_params),
            model=sf.model,
        )
        for k in range(len(kept))
    ]
    branches.sort(key=lambda b: (b.E, b.u))
    logger.debug("p=%d: %d boundary candidates from %d factors", p, len(branches), len(sf.factors))
    return branches


def solve_unirreps(sf: StructureFunction, p: int, dedup_tol: float = DEFAULT_DEDUP_TOL) -> list[UnirrepBranch]:
    """(p+1)-dimensional unirreps: boundary zeros at 0 and p+1 with Φ(1..p) > 0, sorted by E."""
    return [b for b in boundary_solutions(sf, p, dedup_tol) if b.positive]


def boundary_residual(sf: StructureFunction, branch: UnirrepBranch) -> float:
    """Largest |Φ| at the two boundary points, relative to the factor magnitude there."""
    worst = 0.0
    for x in (0, branch.p + 1):
        value = abs(float(evaluate(sf, x, branch.u, branch.E)))
        worst = max(worst, value / max(sf.magnitude(x, branch.u, branch.E), 1.0))
    return worst


def verify_branch_against_catalog(branch: UnirrepBranch, family: str, signs: Sequence[int],
                                tol: float = DEFAULT_DEDUP_TOL) -> bool:
    """True iff the branch matches the closed-form (u, E) of `family` with the given signs."""
    # Import here to avoid circular imports
    from .branch_catalog import catalog_branch

    u, E = catalog_branch(family, signs, branch.p, branch.frozen_params)
    return bool(np.isclose(branch.u, u, rtol=0.0, atol=tol) and np.isclose(branch.E, E, rtol=0.0, atol=tol))
