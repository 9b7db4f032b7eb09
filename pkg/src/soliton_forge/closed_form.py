"""Closed-form traveling-wave profiles.

The auxiliary equation ``G'' + B G' + C G + A C = 0`` is solved in its
exponential (Lambda = B^2 - 4C > 0) or trigonometric (Lambda < 0) branch.
``eval_phi`` works from ``G``; ``eval_U`` evaluates the printed bracket form
of the four solution families directly. The two routes agree only if the
bracket really is ``G'/(G' + G + A)``, which the test-suite relies on.

Samples at poles of the expansion variable come back as NaN; the same
points are reported by :func:`phi_singular` / :func:`bracket_singular`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .engine import ParamSet, SetTag, p_from_eta, paper_parameter_sets
from .errors import (
    AlphaZero,
    CaseMismatch,
    DegenerateAmplitude,
    DegenerateDirection,
    LambdaZero,
    SingularPath,
    ValidationError,
)

SINGULAR_RTOL = 1e-12
W_ABS_TOL = 1e-10


class CaseTag(str, enum.Enum):
    EXP = "EXP"
    TRIG = "TRIG"


@dataclass(frozen=True)
class SolutionKind:
    set_tag: SetTag
    case_tag: CaseTag

    @property
    def label(self) -> str:
        """U11, U12, U21 or U22."""
        first = "1" if self.set_tag == SetTag.SET1 else "2"
        second = "1" if self.case_tag == CaseTag.EXP else "2"
        return f"U{first}{second}"


ALL_KINDS = tuple(SolutionKind(s, c) for s in (SetTag.SET1, SetTag.SET2) for c in CaseTag)


@dataclass(frozen=True)
class WaveConfig:
    """Numeric inputs for one traveling wave.

    ``p`` is derived from the dispersion relation unless given explicitly.
    ``corruption`` holds ``(name, rel)`` pairs that scale a coefficient by
    ``1 + rel``; it exists to prove the residual checks can fail.
    """

    B: float
    C: float
    C1: float = 1.0
    C2: float = 1.0
    n: float = 1.0
    m: float = 1.0
    alpha: float = 1.0
    t: float = 1.0
    A: float = 0.0
    set_tag: SetTag = SetTag.SET1
    p_override: float | None = None
    corruption: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "set_tag", SetTag(self.set_tag))
        object.__setattr__(self, "corruption", tuple(tuple(c) for c in self.corruption))
        if self.set_tag == SetTag.NUMERIC:
            raise ValidationError("closed forms exist only for SET1 and SET2")
        if self.alpha == 0:
            raise AlphaZero("alpha must be nonzero")
        if 2 * self.n + self.m == 0:
            raise DegenerateDirection("2n + m = 0")
        if self.C1 == 0 and self.C2 == 0:
            raise ValidationError("C1 and C2 cannot both vanish")
        if self.B - self.C - 1 == 0:
            raise DegenerateAmplitude("B - C - 1 = 0 forces a2 = 0")
        if self.Lambda == 0:
            raise LambdaZero("B^2 - 4C = 0 has no closed form here")
        for name, _ in self.corruption:
            if name not in ("a0", "a1", "a2", "eta"):
                raise ValidationError(f"cannot corrupt {name!r}")

    @property
    def Lambda(self) -> float:
        return self.B * self.B - 4 * self.C

    @property
    def case_tag(self) -> CaseTag:
        return CaseTag.EXP if self.Lambda > 0 else CaseTag.TRIG

    @property
    def kind(self) -> SolutionKind:
        return SolutionKind(self.set_tag, self.case_tag)

    def param_set(self, set_tag: SetTag | None = None) -> ParamSet:
        tag = SetTag(set_tag or self.set_tag)
        sets = paper_parameter_sets(self.B, self.C, self.n, self.m, self.alpha)
        ps = sets[0] if tag == SetTag.SET1 else sets[1]
        if self.corruption:
            values = {"a0": ps.a[0], "a1": ps.a[1], "a2": ps.a[2], "eta": ps.eta}
            for name, rel in self.corruption:
                values[name] = values[name] * (1 + rel) if values[name] else rel
            ps = ParamSet(values["eta"], [values["a0"], values["a1"], values["a2"]], ps.set_tag)
        return ps

    def coefficients(self, set_tag: SetTag | None = None) -> tuple:
        return tuple(self.param_set(set_tag).a)

    def eta(self, set_tag: SetTag | None = None) -> float:
        return self.param_set(set_tag).eta

    @property
    def p(self) -> float:
        if self.p_override is not None:
            return self.p_override
        return p_from_eta(self.eta(), self.n, self.m)

    def symbol_values(self, set_tag: SetTag | None = None) -> dict:
        """Numeric bindings for every ParamPoly symbol."""
        ps = self.param_set(set_tag)
        values = dict(A=self.A, B=self.B, C=self.C, n=self.n, m=self.m, alpha=self.alpha, eta=ps.eta)
        values.update({f"a{k}": v for k, v in enumerate(ps.a)})
        return values


def xi(config: WaveConfig, x, y):
    return config.n * np.asarray(x, dtype=float) + config.m * np.asarray(y, dtype=float) - config.p * config.t


def _out(values, like):
    return values if np.ndim(like) else float(values)


def _check_case(kind: SolutionKind, config: WaveConfig):
    if kind.case_tag != config.case_tag:
        raise CaseMismatch(f"{kind.label} needs Lambda {'>' if kind.case_tag == CaseTag.EXP else '<'} 0")


def eval_G(config: WaveConfig, xi_values):
    """Solution of the auxiliary ODE.

    C1 rides the root (-B - sqrt(Lambda))/2 so that G'/(G' + G + A) reproduces
    the printed brackets with the same constants.
    """
    z = np.asarray(xi_values, dtype=float)
    B, C1, C2, lam = config.B, config.C1, config.C2, config.Lambda
    if lam > 0:
        s = math.sqrt(lam)
        g = C1 * np.exp((-B - s) / 2 * z) + C2 * np.exp((-B + s) / 2 * z)
    else:
        w = math.sqrt(-lam) / 2
        g = np.exp(-B * z / 2) * (C1 * np.cos(w * z) + C2 * np.sin(w * z))
    return _out(g - config.A, xi_values)


def _phi_parts(config: WaveConfig, z: np.ndarray):
    B, C1, C2, lam = config.B, config.C1, config.C2, config.Lambda
    if lam > 0:
        s = math.sqrt(lam)
        r1, r2 = (-B - s) / 2, (-B + s) / 2
        top = np.maximum(r1 * z, r2 * z)
        e1, e2 = np.exp(r1 * z - top), np.exp(r2 * z - top)
        h, dh = C1 * e1 + C2 * e2, C1 * r1 * e1 + C2 * r2 * e2
        scale = np.abs(C1 * (r1 + 1) * e1) + np.abs(C2 * (r2 + 1) * e2)
    else:
        w = math.sqrt(-lam) / 2
        c, sn = np.cos(w * z), np.sin(w * z)
        h = C1 * c + C2 * sn
        dh = -B / 2 * h + w * (C2 * c - C1 * sn)
        scale = np.abs((1 - B / 2) * C1 + w * C2) * np.abs(c) + np.abs((1 - B / 2) * C2 - w * C1) * np.abs(sn)
    return dh, dh + h, scale


def phi_singular(config: WaveConfig, xi_values):
    z = np.asarray(xi_values, dtype=float)
    _, den, scale = _phi_parts(config, z)
    return _out(np.abs(den) <= SINGULAR_RTOL * scale, xi_values)


def eval_phi(config: WaveConfig, xi_values):
    """phi = G'/(G' + G + A); the constant A cancels before evaluation."""
    z = np.asarray(xi_values, dtype=float)
    num, den, scale = _phi_parts(config, z)
    singular = np.abs(den) <= SINGULAR_RTOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(singular, np.nan, num / np.where(singular, 1.0, den))
    return _out(phi, xi_values)


def _bracket_parts(config: WaveConfig, z: np.ndarray):
    B, C1, C2, lam = config.B, config.C1, config.C2, config.Lambda
    if lam > 0:
        s = math.sqrt(lam)
        P, Q = C1 * (B + s), C2 * (B - s)
        R, S = C1 * (B + s - 2), C2 * (B - s - 2)
        grow = s * z > 0
        # divide through by exp(s*xi) where it dominates
        e = np.exp(np.where(grow, -s * z, s * z))
        num = np.where(grow, P * e + Q, P + Q * e)
        den = np.where(grow, R * e + S, R + S * e)
        scale = np.where(grow, np.abs(R * e) + abs(S), abs(R) + np.abs(S * e))
    else:
        r = math.sqrt(-lam)
        sn, cs = np.sin(r / 2 * z), np.cos(r / 2 * z)
        num = sn * (B * C2 + C1 * r) + cs * (B * C1 - C2 * r)
        dp, dq = (B - 2) * C2 + C1 * r, (B - 2) * C1 - C2 * r
        den = sn * dp + cs * dq
        scale = np.abs(sn * dp) + np.abs(cs * dq)
    return num, den, scale


def bracket_singular(config: WaveConfig, xi_values):
    z = np.asarray(xi_values, dtype=float)
    _, den, scale = _bracket_parts(config, z)
    return _out(np.abs(den) <= SINGULAR_RTOL * scale, xi_values)


def eval_bracket(config: WaveConfig, xi_values):
    """The printed bracket ratio of the closed-form solutions."""
    z = np.asarray(xi_values, dtype=float)
    num, den, scale = _bracket_parts(config, z)
    singular = np.abs(den) <= SINGULAR_RTOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(singular, np.nan, num / np.where(singular, 1.0, den))
    return _out(value, xi_values)


def eval_U(kind: SolutionKind, config: WaveConfig, xi_values):
    _check_case(kind, config)
    a0, a1, a2 = config.coefficients(kind.set_tag)
    b = np.asarray(eval_bracket(config, xi_values))
    return _out(a0 + b * (a1 + a2 * b), xi_values)


def poles(config: WaveConfig, lo: float, hi: float) -> np.ndarray:
    """Zeros of the bracket denominator in [lo, hi], from the closed form."""
    B, C1, C2, lam = config.B, config.C1, config.C2, config.Lambda
    if lam > 0:
        s = math.sqrt(lam)
        R, S = C1 * (B + s - 2), C2 * (B - s - 2)
        if S == 0 or -R / S <= 0:
            return np.empty(0)
        z = math.log(-R / S) / s
        return np.array([z]) if lo <= z <= hi else np.empty(0)
    r = math.sqrt(-lam)
    dp, dq = (B - 2) * C2 + C1 * r, (B - 2) * C1 - C2 * r
    # dp sin(th) + dq cos(th) = |.| sin(th + delta)
    delta = math.atan2(dq, dp)
    k_lo = math.ceil((r / 2 * lo + delta) / math.pi)
    k_hi = math.floor((r / 2 * hi + delta) / math.pi)
    z = (np.arange(k_lo, k_hi + 1) * math.pi - delta) * 2 / r
    return z[(z >= lo) & (z <= hi)]


def period(config: WaveConfig) -> float:
    if config.Lambda > 0:
        return math.inf
    return 2 * math.pi / math.sqrt(-config.Lambda)


def _quad_U(kind, config, a, b) -> float:
    if abs(b - a) <= 1e-12 * max(1.0, abs(a), abs(b)):
        return float(eval_U(kind, config, 0.5 * (a + b))) * (b - a)
    value, _ = quad(lambda s: eval_U(kind, config, s), a, b, epsabs=W_ABS_TOL * 1e-2, epsrel=1e-12, limit=400)
    return value


def _segment_integrals(kind, config, a, b) -> np.ndarray:
    """Integrals of U over [a_i, b_i].

    Two Gauss-Legendre orders run vectorized; segments where they disagree
    by more than the tolerance go to adaptive quadrature.
    """
    if not a.size:
        return np.zeros(0)
    with np.errstate(all="ignore"):
        low = w_increment(kind, config, a, b - a, nodes=16)
        high = w_increment(kind, config, a, b - a, nodes=24)
    bad = ~np.isfinite(high) | (np.abs(high - low) > W_ABS_TOL * 1e-2)
    for i in np.flatnonzero(bad):
        high[i] = _quad_U(kind, config, a[i], b[i])
    return high


def eval_w(kind: SolutionKind, config: WaveConfig, xi_values, xi0: float | None = None):
    """Antiderivative of U with w(xi0) = 0, by adaptive quadrature.

    ``xi0`` defaults to the smallest requested point. Raises SingularPath if
    any segment between xi0 and a requested point crosses a pole.
    """
    _check_case(kind, config)
    z = np.atleast_1d(np.asarray(xi_values, dtype=float))
    if xi0 is None:
        xi0 = float(z.min())
    lo, hi = min(xi0, float(z.min())), max(xi0, float(z.max()))
    bad = poles(config, lo, hi)
    if bad.size:
        raise SingularPath(f"pole at xi={bad[0]:.6g} between {lo:.6g} and {hi:.6g}")

    knots = np.unique(np.append(z, xi0))
    pieces = _segment_integrals(kind, config, knots[:-1], knots[1:])
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    cumulative -= cumulative[np.searchsorted(knots, xi0)]
    w = cumulative[np.searchsorted(knots, z)]
    return w if np.ndim(xi_values) else float(w[0])


def eval_w_segments(kind: SolutionKind, config: WaveConfig, xi_values):
    """w on a grid that may straddle poles.

    Each pole-free stretch is integrated from its own first sample (w = 0
    there); samples sitting on a pole are NaN.
    """
    z = np.asarray(xi_values, dtype=float)
    out = np.full(z.shape, np.nan)
    if not z.size:
        return out
    sing = np.asarray(bracket_singular(config, z), dtype=bool)
    cuts = poles(config, float(z.min()), float(z.max()))
    edges = np.concatenate([[-np.inf], cuts, [np.inf]])
    for left, right in zip(edges[:-1], edges[1:]):
        mask = (z > left) & (z < right) & ~sing
        if mask.any():
            pts = z[mask]
            out[mask] = eval_w(kind, config, pts, float(pts.min()))
    return out


def w_increment(kind: SolutionKind, config: WaveConfig, start, delta, nodes: int = 16):
    """w(start + delta) - w(start) by fixed Gauss-Legendre, vectorized.

    Meant for the short stencil offsets of the PDE residual, where an
    adaptive rule per point would be far too slow.
    """
    x, wts = np.polynomial.legendre.leggauss(nodes)
    start = np.asarray(start, dtype=float)[..., None]
    delta = np.asarray(delta, dtype=float)[..., None]
    samples = eval_U(kind, config, start + delta * (x + 1) / 2)
    return (samples * wts).sum(axis=-1) * delta[..., 0] / 2
