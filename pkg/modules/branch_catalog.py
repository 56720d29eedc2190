# modules/branch_catalog.py
"""
CLOSED-FORM UNIRREP BRANCH CATALOG
Energy and u constant of every listed representation branch, by family
"""

from __future__ import annotations

import itertools
from typing import Mapping, Sequence

from .defosc import DEFAULT_DEDUP_TOL, UnirrepBranch, verify_branch_against_catalog
from .errors import UsageError


def _flat_label_branch(label: str):
    def branch(signs, p, frozen):
        e1, e2, e3 = signs
        omega = frozen["omega"]
        q = frozen[label]
        u = 0.5 * (1 + 2 * e1 * q)
        E = 0.5 * e2 * omega * (2 + e3 * (1 + 4 * p) + 2 * e1 * q)
        return u, E
    return branch


def _flat_energy_branch(label: str):
    def branch(signs, p, frozen):
        e1, e2 = signs[0], signs[1]
        omega = frozen["omega"]
        q = frozen[label]
        E = 0.5 * e2 * omega * (3 + 2 * p + 2 * e1 * q)
        u = (omega + e1 * E) / omega
        return u, E
    return branch


def _taubnut_branch(signs, p, frozen):
    e1, e2 = signs[0], signs[1]
    eps = frozen["eps"]
    nu1 = frozen["nu1"]
    nu2 = frozen["nu2"]
    Eprime = -eps * (4 * p - 2 * nu1 + 2 * e2 * nu2 + 3)
    u = (e1 * Eprime + 2 * eps * (1 + nu2)) / (2 * eps)
    return u, Eprime


BRANCH_FAMILIES = {
    "flat_m": {
        "model": "flat",
        "sign_count": 3,
        "description": "u = (1 + 2 e1 m)/2, E = (e2 w/2)[2 + e3(1 + 4p) + 2 e1 m]",
        "physical_signs": (1, 1, 1),
        "solve": _flat_label_branch("m"),
    },
    "flat_Q": {
        "model": "flat",
        "sign_count": 3,
        "description": "u = (1 + 2 e1 Q)/2, E = (e2 w/2)[2 + e3(1 + 4p) + 2 e1 Q]",
        "physical_signs": None,
        "solve": _flat_label_branch("Qcharge"),
    },
    "flat_uE_m": {
        "model": "flat",
        "sign_count": 2,
        "description": "u = (w + e1 E)/w, E = (e2 w/2)(3 + 2p + 2 e1 m)",
        "physical_signs": (1, 1),
        "solve": _flat_energy_branch("m"),
    },
    "flat_uE_Q": {
        "model": "flat",
        "sign_count": 2,
        "description": "u = (w + e1 E)/w, E = (e2 w/2)(3 + 2p + 2 e1 Q)",
        "physical_signs": None,
        "solve": _flat_energy_branch("Qcharge"),
    },
    "taubnut": {
        "model": "taubnut",
        "sign_count": 2,
        "description": "u = (e1 E' + 2 eps(1 + nu2))/(2 eps), E' = -eps(4p - 2 nu1 + 2 e2 nu2 + 3)",
        "physical_signs": (1, 1),
        "solve": _taubnut_branch,
    },
}


def taubnut_substituted_phi(x, signs: Sequence[int], p: int, frozen: Mapping[str, float]):
    """
    Taub-NUT Φ(x) with the branch (u, E') of `signs` already substituted, in
    its printed factored form. Kept apart from the structure-function builder
    so the two can be compared on the branch.
    """
    e1, e2 = (int(s) for s in signs[:2])
    eps = frozen["eps"]
    nu1 = frozen["nu1"]
    nu2 = frozen["nu2"]
    shift = 4 * p + 2 * e2 * nu1 + 2 * nu2 + 3
    return (
        2 * eps**2
        * (2 * x - 2 * p + (e2 - 1) * nu1 - 2)
        * (2 * x - 2 * p + (e2 - 1) * nu1 - 2 * nu2 - 2)
        * (4 * x - shift * (1 + e1))
        * (2 * x - 2 * p + e2 * nu1 - 2 * nu2 - 1)
        * (4 * x - shift * (1 - e1))
        * (2 * x - 2 * p + e2 * nu1 - 2 * nu2 - 2)
        * (2 * x - 2 * p + e2 - 2)
        * (2 * x - 2 * p + e2 * nu1 - 3)
        * (2 * x - 2 * p + e2 * nu1 - 1)
        * (4 * p - 2 * x + 2 * e2 * nu1 + 5)
        * (2 * x - 2 * p + e2 * nu1 - 2) ** 2
        * (2 * x - 2 * p + (e2 - 1) * nu1 - 2 * nu2 - 1)
    )


def catalog_branch(family: str, signs: Sequence[int], p: int, frozen: Mapping[str, float]) -> tuple[float, float]:
    """
    Closed-form (u, E) of a catalog family.

    Flat families take (e1, e2, e3) signs; families with fewer signs ignore the
    trailing entries. Unknown families raise UsageError.
    """
    entry = BRANCH_FAMILIES.get(family)
    if entry is None:
        raise UsageError(f"unknown branch family {family!r}; expected one of {sorted(BRANCH_FAMILIES)}")
    signs = tuple(int(s) for s in signs)
    if len(signs) < entry["sign_count"] or any(s not in (1, -1) for s in signs):
        raise UsageError(f"family {family!r} needs {entry['sign_count']} signs of +1/-1, got {signs!r}")
    try:
        return entry["solve"](signs, p, frozen)
    except KeyError as exc:
        raise UsageError(f"family {family!r} needs frozen parameter {exc.args[0]!r}") from exc


def families_for(model: str) -> list[str]:
    return [name for name, entry in BRANCH_FAMILIES.items() if entry["model"] == model]


def sign_grid(family: str) -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=BRANCH_FAMILIES[family]["sign_count"]))


def tag_branches(branches: Sequence[UnirrepBranch], signs_grid: Mapping[str, Sequence[Sequence[int]]] | None = None,
                 tol: float = DEFAULT_DEDUP_TOL) -> list[tuple[UnirrepBranch, list[str]]]:
    """Pair every branch with the catalog families (and signs) it reproduces."""
    tagged = []
    for branch in branches:
        matches = []
        for family in families_for(branch.model):
            grid = signs_grid.get(family, ()) if signs_grid is not None else sign_grid(family)
            for signs in grid:
                if verify_branch_against_catalog(branch, family, signs, tol):
                    matches.append(f"{family}{tuple(signs)}")
        tagged.append((branch, matches))
    return tagged
