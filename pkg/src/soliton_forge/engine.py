"""Expansion-method pipeline: balance, ansatz, collection and solving.

A reduced ODE in U(xi) is substituted with the ansatz
``U = a0 + a1 phi + ... + aN phi^N``; every power of ``phi`` must vanish,
which yields an exact polynomial system in the ``a_k`` and ``eta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares

from .algebra import ParamPoly, PhiPoly, differentiate, symbol_index, symbol_name
from .errors import (
    AlphaZero,
    BalanceError,
    DegenerateAmplitude,
    DegenerateDirection,
    NonIntegerBalance,
    NoNonlinearTerm,
    NoSolutionFound,
)

DEDUP_TOL = 1e-6
DEGENERATE_TOL = 1e-9
RESIDUAL_TOL = 1e-10
SEED_BOX = 10.0


class SetTag(str, enum.Enum):
    SET1 = "SET1"
    SET2 = "SET2"
    NUMERIC = "NUMERIC"


Factor = tuple  # (derivative order, power)


@dataclass(frozen=True)
class ODETerm:
    coefficient: ParamPoly
    factors: tuple  # tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(tuple(f) for f in self.factors))
        if self.coefficient.is_zero():
            raise ValueError("ODE term coefficients must be nonzero")
        if not self.factors or any(o < 0 or p < 1 for o, p in self.factors):
            raise ValueError(f"bad factor list {self.factors}")

    @property
    def total_power(self) -> int:
        return sum(p for _, p in self.factors)


@dataclass(frozen=True)
class ReducedODE:
    """Sum of ``coefficient * prod_j (d^{order_j} U)^{power_j}`` terms."""

    terms: tuple

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, ODETerm) else ODETerm(ParamPoly.coerce(t[0]), t[1])
            for t in self.terms
        )
        if not terms:
            raise ValueError("a reduced ODE needs at least one term")
        object.__setattr__(self, "terms", terms)


def bkp_reduced_ode() -> ReducedODE:
    """n^3 m U'' + alpha n^2 m U^2 + eta U = 0 (the integrated BKP traveling-wave ODE)."""
    n, m = ParamPoly.symbol("n"), ParamPoly.symbol("m")
    alpha, eta = ParamPoly.symbol("alpha"), ParamPoly.symbol("eta")
    return ReducedODE((
        (n ** 3 * m, ((2, 1),)),
        (alpha * n ** 2 * m, ((0, 2),)),
        (eta, ((0, 1),)),
    ))


def bkp_third_order_ode() -> ReducedODE:
    """n^3 m U''' + 2 alpha n^2 m U U' + eta U' = 0 (before integrating once)."""
    n, m = ParamPoly.symbol("n"), ParamPoly.symbol("m")
    alpha, eta = ParamPoly.symbol("alpha"), ParamPoly.symbol("eta")
    return ReducedODE((
        (n ** 3 * m, ((3, 1),)),
        (2 * alpha * n ** 2 * m, ((0, 1), (1, 1))),
        (eta, ((1, 1),)),
    ))


def balance_number(ode: ReducedODE) -> int:
    """Homogeneous-balance degree N of the ansatz.

    A factor ``(d^k U)^p`` has phi-degree ``p (N + k)``, so each term's degree
    is linear in N. The highest linear derivative is balanced against the
    nonlinear term that dominates for large N.
    """
    linear = [t.factors[0][0] for t in ode.terms if len(t.factors) == 1 and t.factors[0][1] == 1]
    if not linear:
        raise BalanceError("no linear derivative term to balance")
    top_order = max(linear)

    nonlinear = [
        (sum(p for _, p in t.factors), sum(o * p for o, p in t.factors))
        for t in ode.terms
        if t.total_power >= 2
    ]
    if not nonlinear:
        raise NoNonlinearTerm("balance needs a nonlinear term")
    slope, offset = max(nonlinear)

    # N + top_order = slope * N + offset
    num, den = top_order - offset, slope - 1
    if num <= 0 or num % den:
        raise NonIntegerBalance(f"N = {num}/{den} is not a positive integer")
    return num // den


def build_ansatz(N: int) -> PhiPoly:
    if N < 1:
        raise ValueError("ansatz degree must be at least 1")
    return PhiPoly([ParamPoly.symbol(f"a{k}") for k in range(N + 1)])


@dataclass(frozen=True)
class AlgebraicSystem:
    """``equations[k]`` is the coefficient of ``phi^k``; all must vanish."""

    equations: tuple
    unknowns: tuple

    def __str__(self):
        return "\n".join(f"phi^{k}: {eq} = 0" for k, eq in enumerate(self.equations))


def collect_system(ode: ReducedODE, ansatz: PhiPoly, check_balance: bool = True) -> AlgebraicSystem:
    """Substitute ``ansatz`` into ``ode`` and split by powers of phi."""
    if check_balance and ansatz.degree != balance_number(ode):
        raise ValueError(
            f"ansatz degree {ansatz.degree} != balance number {balance_number(ode)}"
        )
    derivs: dict = {}
    total = PhiPoly()
    for term in ode.terms:
        product = PhiPoly([term.coefficient])
        for order, power in term.factors:
            if order not in derivs:
                derivs[order] = differentiate(ansatz, order)
            product = product * derivs[order] ** power
        total = total + product

    equations = tuple(total.coeff(k) for k in range(total.degree + 1))
    present = set().union(*(eq.symbols() for eq in equations)) if equations else set()
    unknowns = [f"a{k}" for k in range(ansatz.degree + 1)]
    if "eta" in present:
        unknowns.append("eta")
    return AlgebraicSystem(equations, tuple(unknowns))


@lru_cache(maxsize=None)
def bkp_system() -> AlgebraicSystem:
    ode = bkp_reduced_ode()
    return collect_system(ode, build_ansatz(balance_number(ode)))


# ---------------------------------------------------------------------------
# numeric side


class _NumericSystem:
    """Equations with every non-unknown symbol bound to floats.

    Each equation becomes ``sum_j c_j prod_i x_i^{E_ji}``; evaluation and the
    Jacobian are vectorized over monomials.
    """

    def __init__(self, system: AlgebraicSystem, fixed: Mapping[str, float]):
        self.unknowns = system.unknowns
        slot = {symbol_index(u): i for i, u in enumerate(self.unknowns)}
        missing = set().union(*(eq.symbols() for eq in system.equations)) - set(
            self.unknowns
        ) - set(fixed)
        if missing:
            raise ValueError(f"unbound symbols: {sorted(missing)}")
        self.rows = []
        for eq in system.equations:
            merged: dict = {}
            for mono, c in eq.terms.items():
                coeff = float(c)
                exps = [0] * len(self.unknowns)
                for idx, e in mono:
                    if idx in slot:
                        exps[slot[idx]] = e
                    else:
                        coeff *= fixed[symbol_name(idx)] ** e
                key = tuple(exps)
                merged[key] = merged.get(key, 0.0) + coeff
            keys = list(merged)
            self.rows.append((
                np.array([merged[k] for k in keys], dtype=float),
                np.array(keys, dtype=int).reshape(len(keys), len(self.unknowns)),
            ))

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.array([c @ np.prod(x ** E, axis=1) for c, E in self.rows])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        if not hasattr(self, "_dterms"):
            self._dterms = []
            for c, E in self.rows:
                per_var = []
                for i in range(E.shape[1]):
                    active = E[:, i] > 0
                    Ei = E[active].copy()
                    Ei[:, i] -= 1
                    per_var.append((c[active] * E[active, i], Ei))
                self._dterms.append(per_var)
        return np.array([
            [dc @ np.prod(x ** Ei, axis=1) if dc.size else 0.0 for dc, Ei in per_var]
            for per_var in self._dterms
        ])


@dataclass
class ParamSet:
    eta: float
    a: list
    set_tag: SetTag
    residual_norm: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([*self.a, self.eta])

    def to_record(self) -> dict:
        return {
            "set_tag": self.set_tag.value,
            "eta": self.eta,
            "a": list(self.a),
            "residual_norm": self.residual_norm,
        }


def system_residual(system: AlgebraicSystem, fixed: Mapping[str, float], params: ParamSet) -> float:
    """max_i |equation_i| with the parameter set substituted."""
    values = dict(fixed)
    values.update({f"a{k}": v for k, v in enumerate(params.a)})
    values["eta"] = params.eta
    return max(abs(eq.evaluate(values)) for eq in system.equations)


def paper_parameter_sets(B: float, C: float, n: float, m: float, alpha: float) -> list[ParamSet]:
    """The two closed-form coefficient families, residual-checked against the BKP system."""
    if alpha == 0:
        raise AlphaZero("alpha must be nonzero")
    if B - C - 1 == 0:
        raise DegenerateAmplitude("B - C - 1 = 0 forces a2 = 0")
    a1 = 6 * (B * B * n - 3 * B * C * n - B * n + 2 * C * C * n + 2 * C * n) / alpha
    a2 = -6 * n * (B - C - 1) ** 2 / alpha
    set1 = ParamSet(
        eta=4 * C * m * n ** 3 - B * B * m * n ** 3,
        a=[-6 * C * n * (-B + C + 1) / alpha, a1, a2],
        set_tag=SetTag.SET1,
    )
    set2 = ParamSet(
        eta=m * n ** 3 * (B * B - 4 * C),
        a=[(-B * B * n + 6 * B * C * n - 6 * C * C * n - 2 * C * n) / alpha, a1, a2],
        set_tag=SetTag.SET2,
    )
    system = bkp_system()
    fixed = dict(B=B, C=C, n=n, m=m, alpha=alpha)
    for ps in (set1, set2):
        ps.residual_norm = system_residual(system, fixed, ps)
    return [set1, set2]


def _polish(num: _NumericSystem, x: np.ndarray, steps: int = 3) -> np.ndarray:
    # Gauss-Newton refinement after the damped phase
    for _ in range(steps):
        r = num.residual(x)
        dx, *_ = np.linalg.lstsq(num.jacobian(x), -r, rcond=None)
        if not np.all(np.isfinite(dx)):
            break
        x = x + dx
    return x


def solve_system(
    system: AlgebraicSystem,
    fixed: Mapping[str, float],
    seeds: int = 64,
    rng_seed: int = 0,
) -> list[ParamSet]:
    """Multi-start Levenberg-Marquardt roots of ``system`` with ``fixed`` bound.

    The damped phase runs on the system deflated by ``1/|a_N|`` and a few
    undamped Gauss-Newton steps on the raw system finish it. Starting points are uniform in [-10, 10] per unknown from a deterministic
    stream. Roots with a vanishing top coefficient (including the trivial
    all-zero family) or residual above 1e-10 are dropped; survivors closer
    than 1e-6 are merged.
    """
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    if "eta" not in system.unknowns:
        raise ValueError("system has no eta unknown")
    num = _NumericSystem(system, fixed)
    n_unknowns = len(system.unknowns)
    top = n_unknowns - 2  # a_N; eta is last
    rng = np.random.default_rng(rng_seed)
    starts = rng.uniform(-SEED_BOX, SEED_BOX, size=(seeds, n_unknowns))

    # Deflate the a_N = 0 family: F / |a_N| keeps every nondegenerate root but
    # stops the damped phase from sliding into the trivial solutions.
    def deflated(x):
        return num.residual(x) / abs(x[top])

    def deflated_jac(x):
        jac = num.jacobian(x) / abs(x[top])
        jac[:, top] -= num.residual(x) / (x[top] * abs(x[top]))
        return jac

    found = []
    for x0 in starts:
        try:
            with np.errstate(all="ignore"):
                fit = least_squares(
                    deflated, x0, jac=deflated_jac, method="lm",
                    xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200,
                )
                x = _polish(num, fit.x)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(x)):
            continue
        res = float(np.max(np.abs(num.residual(x))))
        if res >= RESIDUAL_TOL or abs(x[top]) <= DEGENERATE_TOL:
            continue
        found.append((x, res))

    found.sort(key=lambda item: tuple(np.round(item[0], 9)))
    unique: list = []
    for x, res in found:
        if all(np.max(np.abs(x - y)) >= DEDUP_TOL for y, _ in unique):
            unique.append((x, res))
    if not unique:
        raise NoSolutionFound(f"no nondegenerate root from {seeds} seeds")

    eta_slot = system.unknowns.index("eta")
    out = []
    for x, res in unique:
        a = [float(v) for i, v in enumerate(x) if i != eta_slot]
        out.append(ParamSet(eta=float(x[eta_slot]), a=a, set_tag=SetTag.NUMERIC, residual_norm=res))
    return out


def eta_from_p(p: float, n: float, m: float) -> float:
    return -(2 * n * n + m * m + 2 * n * p + m * p)


def p_from_eta(eta: float, n: float, m: float) -> float:
    """Wave speed from the dispersion relation eta = -(2n^2 + m^2 + 2np + mp)."""
    if 2 * n + m == 0:
        raise DegenerateDirection("2n + m = 0")
    return -(eta + 2 * n * n + m * m) / (2 * n + m)


def matches(a: ParamSet, b: ParamSet, tol: float = 1e-8) -> bool:
    """Coefficient-wise agreement, relative for large entries."""
    va, vb = a.as_vector(), b.as_vector()
    return va.shape == vb.shape and bool(
        np.all(np.abs(va - vb) <= tol * np.maximum(1.0, np.abs(vb)))
    )


def is_finite_set(ps: ParamSet) -> bool:
    return math.isfinite(ps.eta) and all(math.isfinite(v) for v in ps.a)
