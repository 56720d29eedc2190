# modules/taubnut_model.py
"""
GENERALIZED TAUB-NUT MIC-HARMONIC OSCILLATOR ENGINE
Separated wavefunctions, radial ladders K±, angular shifts J±, the integrals
D1 = K+ J+ J+ B and D2 = B J- J- K-, their algebra and the original-energy map
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .defosc import StructureFunction, StructureFunctionBuilder, evaluate
from .errors import CalibrationError, DomainError, InvalidSectorError, ParameterError, UsageError
from .flat_model import AlgebraReport, relative_residual
from .specfun import PolyEval, jacobi, laguerre

logger = logging.getLogger(__name__)

# candidate scalars standing in for L3 inside the angular shift operators
L3_FORMS = {
    "nu1": lambda nu1, nu2: nu1,
    "nu1-nu2": lambda nu1, nu2: nu1 - nu2,
    "nu1-2nu2": lambda nu1, nu2: nu1 - 2 * nu2,
}


@dataclass(frozen=True)
class TaubNutParams:
    a: float = 0.5
    b: float = 1.0
    c1: float = 0.3
    d: float = 0.25
    c0: float = 2.0
    c4: float = 1.0

    def f(self, r):
        return self.a * np.asarray(r, dtype=float) ** 2 + self.b

    def check_window(self, r_max: float) -> None:
        """f(r) = a r^2 + b > 0 and 1 + c1 r^2 + d r^4 > 0 on [0, r_max]."""
        t_max = float(r_max) ** 2
        if self.b <= 0 or self.a * t_max + self.b <= 0:
            raise ParameterError(f"f(r) = {self.a} r^2 + {self.b} is not positive on [0, {r_max}]")
        # 1 + c1 t + d t^2 on t = r^2 in [0, t_max]
        candidates = [0.0, t_max]
        if self.d != 0:
            vertex = -self.c1 / (2 * self.d)
            if 0.0 < vertex < t_max:
                candidates.append(vertex)
        if min(1 + self.c1 * t + self.d * t * t for t in candidates) <= 0:
            raise ParameterError(f"1 + {self.c1} r^2 + {self.d} r^4 is not positive on [0, {r_max}]")


@dataclass(frozen=True)
class TaubNutSector:
    n: int
    l: float
    nu1: float
    nu2: float
    eps: float = 1.0

    @property
    def lam(self) -> int:
        return int(round(self.l - self.nu1))

    @property
    def beta(self) -> float:
        return self.l - self.nu2  # radial power r^(l - nu2)

    @property
    def alpha(self) -> float:
        return self.l - self.nu2 + 0.5  # Laguerre parameter, also the B - Q eigenvalue

    @property
    def jacobi_exp_plus(self) -> float:
        return 0.5 * (self.nu1 - 2 * self.nu2)  # power of (1 + cos θ)

    @property
    def jacobi_exp_minus(self) -> float:
        return 0.5 * self.nu1  # power of (1 - cos θ)

    @property
    def eprime(self) -> float:
        return -self.eps * (4 * self.n + 2 * self.l - 2 * self.nu2 + 3)

    @property
    def labels(self) -> dict:
        return {"n": self.n, "l": self.l, "nu1": self.nu1, "nu2": self.nu2, "eps": self.eps}

    def check(self) -> "TaubNutSector":
        problems = []
        if int(self.n) != self.n or self.n < 0:
            problems.append("n must be a nonnegative integer")
        if abs((self.l - self.nu1) - self.lam) > 1e-12 or self.lam < 0:
            problems.append("l - nu1 must be a nonnegative integer")
        if self.nu1 <= -1 or self.nu1 - 2 * self.nu2 <= -1:
            problems.append("Jacobi parameters nu1 and nu1 - 2 nu2 must exceed -1")
        if self.alpha <= -1:
            problems.append("Laguerre parameter l - nu2 + 1/2 must exceed -1")
        if not (math.isfinite(self.eps) and self.eps > 0):
            problems.append("eps must be > 0")
        if problems:
            raise InvalidSectorError(tuple(self.labels.values()), "; ".join(problems))
        return self


@dataclass(frozen=True)
class SectorScalars:
    s: float  # B - Q
    q: float  # Q
    l3: float
    Eprime: float


@dataclass(frozen=True)
class OperatorTerm:
    weight: Callable[[np.ndarray], np.ndarray]
    order: int  # 0: multiplies the function, 1: multiplies its derivative
    label: str = ""


@dataclass(frozen=True)
class FirstOrderOperator:
    """Sum of weight(x)·f(x) and weight(x)·f'(x) terms on a 1-D grid."""

    variable: str
    terms: tuple[OperatorTerm, ...]

    def term_values(self, nodes, values, derivs) -> list[np.ndarray]:
        out = []
        for term in self.terms:
            base = derivs if term.order == 1 else values
            out.append(np.broadcast_to(term.weight(nodes), np.shape(nodes)) * base)
        return out

    def __call__(self, nodes, values, derivs) -> np.ndarray:
        return np.sum(self.term_values(nodes, values, derivs), axis=0)


@dataclass(frozen=True)
class RecurrenceAction:
    operator: str  # K+, K-, J+, J-
    source: TaubNutSector
    target: TaubNutSector
    coefficient: float
    stated_coefficient: float
    differential: FirstOrderOperator
    skip_reason: str | None = None

    @property
    def variable(self) -> str:
        return self.differential.variable

    @property
    def annihilates(self) -> bool:
        """Target index fell below the tower, so the predicted right-hand side is the zero function."""
        if self.variable == "r":
            return self.target.n < 0
        return self.target.lam < 0


@dataclass(frozen=True)
class IntegralAction:
    which: str
    source: TaubNutSector
    target: TaubNutSector | None
    closed_form: float
    composition: float

    @property
    def coefficient(self) -> float:
        return 0.0 if self.target is None else self.closed_form


def _constant(value: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.full(np.shape(x), value, dtype=float)


class TaubNutOscillator:
    def __init__(self, params: TaubNutParams | None = None, l3_form: str = "nu1"):
        if l3_form not in L3_FORMS:
            raise UsageError(f"unknown L3 scalarization {l3_form!r}; expected one of {sorted(L3_FORMS)}")
        self.params = params or TaubNutParams()
        self.l3_form = l3_form
        self.findings = {}
        self._phi_cache = {}

    # ------------------------------------------------------------- scalars

    def separation_constant(self, l: float, nu2: float) -> float:
        """k1 = (l - nu2)(l - nu2 + 1)."""
        return (l - nu2) * (l - nu2 + 1)

    def l3_scalar(self, nu1: float, nu2: float, form: str | None = None) -> float:
        return L3_FORMS[form or self.l3_form](nu1, nu2)

    def sector_scalars(self, sector: TaubNutSector, l3_form: str | None = None) -> SectorScalars:
        return SectorScalars(
            s=sector.alpha,
            q=sector.nu2,
            l3=self.l3_scalar(sector.nu1, sector.nu2, l3_form),
            Eprime=sector.eprime,
        )

    def sectors(self, n_max: int, lambda_max: int, nu_pairs: Iterable[Sequence[float]],
                eps_values: Iterable[float]) -> list[TaubNutSector]:
        out = []
        for nu1, nu2 in nu_pairs:
            for eps in eps_values:
                for n in range(n_max + 1):
                    for lam in range(lambda_max + 1):
                        out.append(TaubNutSector(n, nu1 + lam, nu1, nu2, eps).check())
        return out

    # ------------------------------------------------------- wavefunctions

    def radial_wavefunction(self, sector: TaubNutSector) -> Callable[[np.ndarray], PolyEval]:
        """ψ(r) = exp(-eps r^2/2) r^(l-nu2) L^(l-nu2+1/2)_n(eps r^2), unnormalized; n = -1 is the zero function."""
        beta = sector.beta
        alpha = sector.alpha
        eps = sector.eps
        n = sector.n
        if alpha <= -1:
            raise DomainError(f"Laguerre parameter {alpha} <= -1 for sector {sector.labels}")

        def psi(r) -> PolyEval:
            r = np.asarray(r, dtype=float)
            if np.any(r <= 0):
                raise DomainError("radial nodes must be > 0")
            x = eps * r * r
            lag = laguerre(n, alpha, x)
            envelope = np.exp(-0.5 * x) * r**beta
            value = envelope * lag.value
            deriv = value * (-eps * r + beta / r) + envelope * 2 * eps * r * lag.derivative
            return PolyEval(value, deriv)

        return psi

    def angular_wavefunction(self, sector: TaubNutSector) -> Callable[[np.ndarray], PolyEval]:
        """Θ(θ) = sin^nu1(θ/2) cos^(nu1-2nu2)(θ/2) P^(nu1, nu1-2nu2)_(l-nu1)(cos θ); λ = -1 is the zero function."""
        a = sector.nu1
        b = sector.nu1 - 2 * sector.nu2
        lam = sector.lam
        if a <= -1 or b <= -1:
            raise DomainError(f"Jacobi parameters ({a}, {b}) out of domain for sector {sector.labels}")

        def theta_fn(theta) -> PolyEval:
            theta = np.asarray(theta, dtype=float)
            if np.any(theta <= 0) or np.any(theta >= np.pi):
                raise DomainError("angular nodes must lie strictly inside (0, pi)")
            sh = np.sin(0.5 * theta)
            ch = np.cos(0.5 * theta)
            prefactor = sh**a * ch**b
            z = np.clip(np.cos(theta), -1.0, 1.0)
            jac = jacobi(lam, a, b, z)
            value = prefactor * jac.value
            dprefactor = prefactor * (0.5 * a * ch / sh - 0.5 * b * sh / ch)
            deriv = dprefactor * jac.value - prefactor * jac.derivative * np.sin(theta)
            return PolyEval(value, deriv)

        return theta_fn

    def wavefunction(self, sector: TaubNutSector, variable: str) -> Callable[[np.ndarray], PolyEval]:
        if variable == "r":
            return self.radial_wavefunction(sector)
        if variable == "theta":
            return self.angular_wavefunction(sector)
        raise UsageError(f"unknown variable {variable!r}")

    # ------------------------------------------------------------ ladders

    def apply_radial_ladder(self, direction: str, sector: TaubNutSector, printed_form: bool = False) -> RecurrenceAction:
        """
        K+ ψ^α_n = -2 eps^2 ψ^(α+2)_(n-1) and K- ψ^α_n = -2(n+1)(n+α) ψ^(α-2)_(n+1).

        K+ = (s+1)/r d/dr - E'/2 - (s+1)(s-1/2)/r^2 and
        K- = -(s-1)/r d/dr - E'/2 - (s-1)(s+1/2)/r^2, with s = l - nu2 + 1/2.
        printed_form flips the sign of the K+ inverse-square term to its
        printed form, which does not satisfy the recurrence.
        """
        sector.check()
        s = sector.alpha
        Ep = sector.eprime
        n = sector.n
        if direction == "plus":
            inverse_square = (s + 1) * (s - 0.5) * (1.0 if printed_form else -1.0)
            op = FirstOrderOperator("r", (
                OperatorTerm(lambda r: (s + 1) / r, 1, "(s+1)/r d/dr"),
                OperatorTerm(_constant(-0.5 * Ep), 0, "-E'/2"),
                OperatorTerm(lambda r: inverse_square / r**2, 0, "(s+1)(s-1/2)/r^2"),
            ))
            coefficient = -2.0 * sector.eps**2
            return RecurrenceAction("K+", sector, replace(sector, n=n - 1, l=sector.l + 2),
                                    coefficient, coefficient, op)
        if direction == "minus":
            op = FirstOrderOperator("r", (
                OperatorTerm(lambda r: -(s - 1) / r, 1, "-(s-1)/r d/dr"),
                OperatorTerm(_constant(-0.5 * Ep), 0, "-E'/2"),
                OperatorTerm(lambda r: -(s - 1) * (s + 0.5) / r**2, 0, "-(s-1)(s+1/2)/r^2"),
            ))
            coefficient = -2.0 * (n + 1) * (n + s)
            target = replace(sector, n=n + 1, l=sector.l - 2)
            skip = None
            if target.alpha <= -1:
                skip = f"target Laguerre parameter {target.alpha} <= -1"
            return RecurrenceAction("K-", sector, target, coefficient, coefficient, op, skip)
        raise UsageError(f"unknown ladder direction {direction!r}; expected 'plus' or 'minus'")

    def apply_angular_shift(self, direction: str, sector: TaubNutSector, l3: float | None = None) -> RecurrenceAction:
        """
        J = c1 sin θ d/dθ + c2 cos θ + c3 with c3 = -2 nu2 (l3 - nu2).

        J+ raises λ = l - nu1 with coefficient -2(λ+1)(λ+2nu1-2nu2+1); the
        printed -2(λ+1)(λ-2nu2+1) is kept as stated_coefficient. J- lowers λ
        with coefficient -2 l (l - 2nu2).
        """
        sector.check()
        nu1, nu2, l = sector.nu1, sector.nu2, sector.l
        lam = sector.lam
        if l3 is None:
            l3 = self.l3_scalar(nu1, nu2)
        c3 = -2.0 * nu2 * (l3 - nu2)
        if direction == "plus":
            sigma = l - nu2 + 1
            c1, c2 = -2.0 * sigma, -2.0 * sigma**2
            coefficient = -2.0 * (lam + 1) * (lam + 2 * nu1 - 2 * nu2 + 1)
            stated = -2.0 * (lam + 1) * (lam - 2 * nu2 + 1)
            target = replace(sector, l=l + 1)
            name = "J+"
        elif direction == "minus":
            tau = l - nu2
            c1, c2 = 2.0 * tau, -2.0 * tau**2
            coefficient = stated = -2.0 * l * (l - 2 * nu2)
            target = replace(sector, l=l - 1)
            name = "J-"
        else:
            raise UsageError(f"unknown shift direction {direction!r}; expected 'plus' or 'minus'")
        op = FirstOrderOperator("theta", (
            OperatorTerm(lambda t: c1 * np.sin(t), 1, "c1 sin θ d/dθ"),
            OperatorTerm(lambda t: c2 * np.cos(t), 0, "c2 cos θ"),
            OperatorTerm(_constant(c3), 0, "-2Q(L3-Q)"),
        ))
        return RecurrenceAction(name, sector, target, coefficient, stated, op)

    def recurrence_actions(self, sector: TaubNutSector) -> list[RecurrenceAction]:
        return [
            self.apply_radial_ladder("plus", sector),
            self.apply_radial_ladder("minus", sector),
            self.apply_angular_shift("plus", sector),
            self.apply_angular_shift("minus", sector),
        ]

    def calibrate_l3(self, family: Sequence[TaubNutSector], grid=None, tol: float = 1e-6) -> float:
        """
        Pick the L3 scalarization that makes both J± recurrences hold on the grid.

        Every candidate form is scored by its worst shape residual over the
        family; the best form must pass `tol`. The chosen form is stored on the
        engine and in findings; the return value is its scalar for family[0].
        """
        # Import here to avoid circular imports
        from .numgrid import GridSpec, verify_recurrence

        family = list(family)
        if not family:
            raise UsageError("calibrate_l3 needs at least one sector")
        grid = grid or GridSpec()

        scores = {}
        for form in L3_FORMS:
            worst = 0.0
            for sector in family:
                l3 = self.l3_scalar(sector.nu1, sector.nu2, form)
                for direction in ("plus", "minus"):
                    action = self.apply_angular_shift(direction, sector, l3=l3)
                    report = verify_recurrence(action, grid, engine=self)
                    worst = max(worst, report.shape_residual)
            scores[form] = worst
            logger.debug("L3 candidate %s: worst shape residual %.3e", form, worst)

        best = min(L3_FORMS, key=lambda f: scores[f])
        passing = [f for f in L3_FORMS if scores[f] < tol]
        self.findings["l3_scalarization"] = {
            "form": best,
            "passing_forms": passing,
            "residuals": scores,
            "sectors": len(family),
        }
        if scores[best] >= tol:
            raise CalibrationError(f"no L3 scalarization reproduces the J recurrences below {tol:g}: {scores}")
        self.l3_form = best
        logger.info("L3 scalarization calibrated to %s over %d sectors", best, len(family))
        return self.l3_scalar(family[0].nu1, family[0].nu2)

    # ----------------------------------------------------------- integrals

    @staticmethod
    def _chain_product(actions: Sequence[RecurrenceAction]) -> float:
        """Product of the coefficients along a chain; zero once any step reaches the zero function."""
        product = 1.0
        for action in actions:
            if action.annihilates:
                return 0.0
            product *= action.coefficient
        return product

    def d1_closed_coefficient(self, sector: TaubNutSector) -> float:
        l, nu2, lam = sector.l, sector.nu2, sector.lam
        return (-8.0 * sector.eps**2 * l * (l + 1) * (lam + 1) * (lam - 2 * nu2 + 1)
                * (lam + 2) * (lam - 2 * nu2 + 2))

    def d2_closed_coefficient(self, sector: TaubNutSector) -> float:
        n, l, nu2 = sector.n, sector.l, sector.nu2
        return (-8.0 * l * (l - 1) * (l - 2 * nu2) * (l - 2 * nu2 - 1) * (l - 1.5)
                * (n + 1) * (n + l - nu2 + 0.5))

    def integrals_action(self, which: str, sector: TaubNutSector) -> IntegralAction:
        """
        Closed-form D1, D2 actions together with the product of their factor actions.

        D1 -> (n-1, l+2) with -8 eps^2 l(l+1)(λ+1)(λ-2nu2+1)(λ+2)(λ-2nu2+2);
        D2 -> (n+1, l-2) with -8 l(l-1)(l-2nu2)(l-2nu2-1)(l-3/2)(n+1)(n+l-nu2+1/2).

        The composition applies K+, J+, J+ (resp. J-, J-, K-) one after the
        other, each on the sector the previous step produced, with B
        contributing its eigenvalue. D1 on n = 0 is zero because K+
        annihilates. A nonzero closed-form D2 whose target leaves the tower
        raises InvalidSectorError.
        """
        sector.check()
        n, l = sector.n, sector.l
        if which == "D1":
            closed = self.d1_closed_coefficient(sector)
            k_plus = self.apply_radial_ladder("plus", sector)
            j_first = self.apply_angular_shift("plus", sector)
            j_second = self.apply_angular_shift("plus", j_first.target)
            composition = (l + 0.5) * self._chain_product((j_first, j_second, k_plus))
            target = replace(sector, n=n - 1, l=l + 2)
            if closed == 0 or k_plus.annihilates:
                target = None
            return IntegralAction("D1", sector, target, closed, composition)

        if which == "D2":
            closed = self.d2_closed_coefficient(sector)
            target = replace(sector, n=n + 1, l=l - 2)
            k_minus = self.apply_radial_ladder("minus", sector)
            j_first = self.apply_angular_shift("minus", sector)
            chain = [k_minus, j_first]
            if not j_first.annihilates:
                chain.append(self.apply_angular_shift("minus", j_first.target))
            leaves_tower = target.lam < 0 or k_minus.skip_reason is not None
            if leaves_tower and closed != 0:
                raise InvalidSectorError(tuple(target.labels.values()),
                                         f"D2 on {sector.labels} has coefficient {closed:g} but leaves the tower")
            composition = 0.0 if leaves_tower else (l - 1.5) * self._chain_product(chain)
            if closed == 0 or leaves_tower:
                target = None
            return IntegralAction("D2", sector, target, closed, composition)

        raise UsageError(f"unknown integral {which!r}; expected 'D1' or 'D2'")

    def d1d2_closed_form(self, B, L3, Q, Hp, eps) -> float:
        return (
            (B - 2) / 256 * (2 * B - 5) * (2 * B - 3) ** 2 * (2 * B - 2 * L3 - 4 * Q - 1)
            * (2 * B - 2 * L3 - 1) * (2 * B - 4 * Q - 3) * (2 * B - 4 * Q - 1)
            * (2 * B - 2 * L3 - 4 * Q - 3) * (2 * B - 1) * (2 * B - 2 * L3 - 3)
            * (Hp - 2 * eps * (B - Q - 1)) * (Hp + 2 * eps * (B - Q - 1))
        )

    def d2d1_closed_form(self, B, L3, Q, Hp, eps) -> float:
        return (
            B / 256 * (2 * B - 1) * (2 * B + 1) ** 2 * (2 * B - 2 * L3 - 4 * Q + 3)
            * (2 * B - 2 * L3 + 3) * (2 * B - 4 * Q + 1) * (2 * B - 4 * Q + 3)
            * (2 * B - 2 * L3 - 4 * Q + 1) * (2 * B + 3) * (2 * B - 2 * L3 + 1)
            * (Hp - 2 * eps * (B - Q + 1)) * (Hp + 2 * eps * (B - Q + 1))
        )

    def build_structure_function_taubnut(self, nu1: float, nu2: float, eps: float,
                                         l3_form: str | None = None) -> StructureFunction:
        """Φ(x; u, H') with B = 2x + u and nu1, nu2, eps frozen; L3 enters through its calibrated scalar."""
        l3 = self.l3_scalar(nu1, nu2, l3_form)
        key = (nu1, nu2, eps, l3)
        if key not in self._phi_cache:
            Q = nu2
            builder = StructureFunctionBuilder(1.0 / 256, model="taubnut", eps=eps, nu1=nu1, nu2=nu2, l3=l3)
            builder.add_factor(2, 1, 0, -2, label="2x+u-2")
            builder.add_factor(4, 2, 0, -3, multiplicity=2, label="2(2x+u)-3")
            builder.add_factor(4, 2, 0, -2 * l3 - 1, label="2(2x+u)-2L3-1")
            builder.add_factor(4, 2, 0, -1, label="2(2x+u)-1")
            builder.add_factor(4, 2, 0, -2 * l3 - 3, label="2(2x+u)-2L3-3")
            builder.add_factor(4, 2, 0, -5, label="2(2x+u)-5")
            builder.add_factor(4, 2, 0, -2 * l3 - 4 * Q - 3, label="2(2x+u)-2L3-4Q-3")
            builder.add_factor(-4 * eps, -2 * eps, 1, 2 * eps * (Q + 1), label="H'-2eps(2x+u-Q-1)")
            builder.add_factor(4, 2, 0, -4 * Q - 1, label="2(2x+u)-4Q-1")
            builder.add_factor(4 * eps, 2 * eps, 1, -2 * eps * (Q + 1), label="H'+2eps(2x+u-Q-1)")
            builder.add_factor(4, 2, 0, -4 * Q - 3, label="2(2x+u)-4Q-3")
            builder.add_factor(4, 2, 0, -2 * l3 - 4 * Q - 1, label="2(2x+u)-2L3-4Q-1")
            self._phi_cache[key] = builder.build()
        return self._phi_cache[key]

    def verify_algebra_taubnut(self, sectors: Iterable[TaubNutSector], tol: float = 1e-10,
                               l3_form: str | None = None) -> AlgebraReport:
        """
        Check the D1/D2 algebra over a sector box.

        Gated checks: H' bookkeeping, [B, D1] = 2 D1, [B, D2] = -2 D2, the D1 D2
        and D2 D1 closed forms against products of the single actions, the
        Φ(ℵ) and Φ(ℵ+1) realizations and the D2 composition. The D1
        composition and any D2 that leaves the tower are waived, with the
        reason carried into the report summary.
        """
        report = AlgebraReport(tolerance=tol, waivers={
            "D1_composition": "closed-form D1 and the K+ J+ J+ B product differ by a sector-dependent "
                              "factor; see findings.d1_composition",
            "D2_out_of_tower": "closed-form D2 is nonzero on sectors whose target leaves the tower; "
                               "see findings.d2_out_of_tower",
        })
        d1_ratios = []
        out_of_tower = []
        for sector in sectors:
            sc = self.sector_scalars(sector, l3_form)
            B = sector.l + 0.5
            Ep = sector.eprime
            labels = sector.labels

            d1 = self.integrals_action("D1", sector)
            try:
                d2 = self.integrals_action("D2", sector)
            except InvalidSectorError:
                closed = self.d2_closed_coefficient(sector)
                out_of_tower.append({**labels, "closed_form": closed})
                report.record("D2_out_of_tower", 1.0, **labels)
                d2 = IntegralAction("D2", sector, None, closed, 0.0)

            for action, shift in ((d1, 2.0), (d2, -2.0)):
                if action.target is None:
                    continue
                report.record("eprime_bookkeeping", abs(action.target.eprime - Ep) / max(abs(Ep), 1.0),
                              op=action.which, **labels)
                report.record(f"commutator_B_{action.which}", abs((action.target.l - sector.l) - shift),
                              **labels)

            d1d2 = d2.coefficient * (self.integrals_action("D1", d2.target).coefficient if d2.target else 0.0)
            d2d1 = d1.coefficient * (self.integrals_action("D2", d1.target).coefficient if d1.target else 0.0)
            closed_d1d2 = self.d1d2_closed_form(B, sc.l3, sc.q, Ep, sector.eps)
            closed_d2d1 = self.d2d1_closed_form(B, sc.l3, sc.q, Ep, sector.eps)

            phi = self.build_structure_function_taubnut(sector.nu1, sector.nu2, sector.eps, l3_form)
            x = B / 2
            scale = phi.magnitude(x, 0.0, Ep)
            scale_shifted = phi.magnitude(x + 1, 0.0, Ep)
            report.record("product_D1D2", relative_residual(d1d2, closed_d1d2, scale), **labels)
            report.record("product_D2D1", relative_residual(d2d1, closed_d2d1, scale_shifted), **labels)
            report.record("phi_realization", relative_residual(d1d2, evaluate(phi, x, 0.0, Ep), scale), **labels)
            report.record("phi_shifted_realization",
                          relative_residual(d2d1, evaluate(phi, x + 1, 0.0, Ep), scale_shifted), **labels)

            report.record("D2_composition", relative_residual(d2.composition, d2.coefficient), **labels)
            report.record("D1_composition", relative_residual(d1.composition, d1.coefficient), **labels)
            if d1.composition != 0 and d1.coefficient != 0:
                d1_ratios.append(d1.closed_form / d1.composition)

            report.records.append({
                **labels,
                "Eprime": Ep,
                "d1_closed": d1.closed_form,
                "d1_composition": d1.composition,
                "d2_closed": d2.closed_form,
                "d2_composition": d2.composition,
                "d1d2": d1d2,
                "d1d2_closed": closed_d1d2,
                "d2d1": d2d1,
                "d2d1_closed": closed_d2d1,
            })

        spread = (max(d1_ratios) - min(d1_ratios)) if d1_ratios else 0.0
        self.findings["d1_composition"] = {
            "sectors_compared": len(d1_ratios),
            "ratio_min": min(d1_ratios, default=None),
            "ratio_max": max(d1_ratios, default=None),
            "sector_independent": spread <= tol * max((abs(r) for r in d1_ratios), default=1.0),
            "note": "closed-form D1 over the K+ J+ J+ B product; equals l(l+1)/(l+1/2) when nu1 = 0",
        }
        self.findings["d2_composition"] = {"matches_closed_form": report.residuals.get("D2_composition", 0.0) <= tol}
        self.findings["d2_out_of_tower"] = {
            "sectors": out_of_tower,
            "note": "the J- J- chain reaches the zero function while the closed form stays nonzero",
        }
        logger.info("taubnut algebra: %d sectors, worst residual %.3e, passed=%s",
                    len(report.records), report.worst_residual, report.passed)
        return report

    # --------------------------------------------------- original problem

    def _energy_terms(self, nu2: float) -> tuple[float, float]:
        p = self.params
        return p.c1 * nu2**2 + p.c4, p.c0 / 2 + p.d * nu2**2

    def solve_original_energy(self, N: float, nu2: float) -> list[float]:
        """
        Energies E with (2bE - c1 nu2^2 - c4)/sqrt(c0/2 - 2aE + d nu2^2) = N.

        The squared relation is a quadratic in E; roots survive when the
        radicand is strictly positive and 2bE - K carries the sign of N.
        """
        p = self.params
        K, S = self._energy_terms(nu2)
        A2 = 4 * p.b**2
        A1 = 2 * p.a * N**2 - 4 * p.b * K
        A0 = K**2 - N**2 * S

        if A2 == 0:
            if A1 == 0:
                if A0 == 0:
                    raise ParameterError(f"energy relation degenerates to 0 = 0 for N={N}, nu2={nu2}")
                return []
            roots = [-A0 / A1]
        else:
            disc = A1 * A1 - 4 * A2 * A0
            if disc < 0:
                return []
            q = -0.5 * (A1 + math.copysign(math.sqrt(disc), A1))
            roots = [q / A2, A0 / q] if q != 0 else [0.0]

        survivors = []
        for E in sorted(roots):
            radicand = S - 2 * p.a * E
            if radicand <= 0:
                logger.info("excluded root E=%.17g: radicand %.3e is not positive", E, radicand)
                continue
            if np.sign(2 * p.b * E - K) != np.sign(N):
                logger.debug("excluded root E=%.17g: sign mismatch with N=%g", E, N)
                continue
            if survivors and abs(E - survivors[-1]) <= 1e-12 * max(1.0, abs(E)):
                continue
            survivors.append(E)
        return survivors

    def energy_relation_residual(self, E: float, N: float, nu2: float) -> float:
        K, S = self._energy_terms(nu2)
        return (2 * self.params.b * E - K) / math.sqrt(S - 2 * self.params.a * E) - N

    def metamorphosis_map(self, E: float, nu2: float) -> tuple[float, float]:
        """(E', eps^2) = (c4 + c1 nu2^2 - 2bE, c0/2 - 2aE + d nu2^2)."""
        K, S = self._energy_terms(nu2)
        eps2 = S - 2 * self.params.a * E
        if eps2 <= 0:
            raise DomainError(f"eps^2 = {eps2:g} <= 0 at E={E}, nu2={nu2}")
        return K - 2 * self.params.b * E, eps2
