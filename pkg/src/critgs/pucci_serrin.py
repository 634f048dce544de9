"""Uniqueness condition for positive radial solutions of ``Δu + f(u) = 0``.

With ``f(u) = -ωu + u^p + u^q`` (q critical) and ``F`` its primitive, the
condition ``d/du[F/f] ≥ (d-2)/(2d)`` is equivalent to ``g(u) ≥ 0`` where

    g = q f² - (q+1) F f' = A₂ω²u² + A_{p+1}ωu^{p+1} + A_{q+1}ωu^{q+1} + A_{2p}u^{2p} + A_{p+q}u^{p+q}.

``check_condition`` certifies ``g ≥ 0`` exactly when the coefficients allow it
(all nonnegative, or the quadratic ``Q(r) = A₂ + A_{p+1}r + A_{2p}r²`` has a
nonpositive discriminant) and otherwise scans u, confirming near-zero minima
with interval arithmetic.  In dimension d ≥ 7 the coefficient A_{q+1} is
negative and ``g(ω^a) < 0`` for large ω, which ``remark_c1_witness`` exhibits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import mpmath
import numpy as np

from .errors import InvalidParameterError, WitnessNotFoundError

Number = Union[int, float, Fraction]
SCAN_PER_DECADE = 10_000
NEAR_ZERO = 1e-6
HOLD_TOL = -1e-12
WITNESS_OMEGA_MAX = 1e16


def as_rational(x: Number) -> Fraction:
    """Exact rational for ``x``; floats within 1e-15 of a small-denominator fraction snap to it."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    f = Fraction(x)
    g = f.limit_denominator(10**6)
    return g if abs(float(g) - x) <= 1e-15 * max(1.0, abs(x)) else f


def critical_q(d: int) -> Fraction:
    return Fraction(d + 2, d - 2)


@dataclass(frozen=True)
class PSCoefficients:
    """Exact coefficients of the expansion of g."""

    d: int
    p: Fraction
    a2: Fraction
    a_p1: Fraction
    a_q1: Fraction
    a_2p: Fraction
    a_pq: Fraction

    @property
    def q(self) -> Fraction:
        return critical_q(self.d)

    def as_floats(self) -> dict[str, float]:
        return {"A2": float(self.a2), "A_p+1": float(self.a_p1), "A_q+1": float(self.a_q1),
                "A_2p": float(self.a_2p), "A_p+q": float(self.a_pq)}

    @property
    def q_discriminant(self) -> Fraction:
        """``4A₂A_{2p} - A_{p+1}²``; nonnegative iff Q(r) ≥ 0 for all real r."""
        return 4 * self.a2 * self.a_2p - self.a_p1**2

    def q_min(self) -> Fraction:
        """``min_{r≥0} Q(r)`` (exact)."""
        if self.a_p1 >= 0:
            return self.a2
        return self.a2 - self.a_p1**2 / (4 * self.a_2p)


def ps_coefficients(d: int, p: Number) -> PSCoefficients:
    """A₂, A_{p+1}, A_{q+1}, A_{2p}, A_{p+q} in exact rational arithmetic.

    Raises
    ------
    InvalidParameterError
        d < 3, p <= 1 or p = q.  The expansion is an algebraic identity, so
        supercritical p > q is accepted (A_2p is then negative).
    """
    if int(d) != d or d < 3:
        raise InvalidParameterError(f"dimension must be an integer >= 3, got {d}")
    d = int(d)
    p = as_rational(p)
    q = critical_q(d)
    if not p > 1 or p == q:
        raise InvalidParameterError(f"need p > 1 and p != {q} for d={d}, got p={p}")
    a2 = (q - 1) / 2
    a_p1 = ((p * p - 3 * p - 2) * q + p * p + p + 2) / (2 * (p + 1))
    a_q1 = (q - 1) * (q - 2) / 2
    a_2p = (q - p) / (p + 1)
    a_pq = (q - p) * (p + 1 - q) / (p + 1)
    return PSCoefficients(d, p, a2, a_p1, a_q1, a_2p, a_pq)


# ----------------------------------------------------------------------------
# g and friends


def _pow(u, e):
    """u**e keeping Fractions exact for integer exponents."""
    if isinstance(u, Fraction) and isinstance(e, Fraction) and e.denominator == 1:
        return u ** int(e)
    return u ** (float(e) if isinstance(e, Fraction) else e)


def f_terms(u, d: int, p: Number, omega):
    """(f, F, f') at u."""
    p = as_rational(p)
    q = critical_q(d)
    up, uq = _pow(u, p), _pow(u, q)
    f = -omega * u + up + uq
    F = -omega * u * u / 2 + _pow(u, p + 1) / _coerce(p + 1, u) + _pow(u, q + 1) / _coerce(q + 1, u)
    fp = -omega + _coerce(p, u) * _pow(u, p - 1) + _coerce(q, u) * _pow(u, q - 1)
    return f, F, fp


def _coerce(c: Fraction, like):
    return c if isinstance(like, Fraction) else float(c)


def g_eval(u, d: int, p: Number, omega) -> float:
    """``q f(u)² - (q+1) F(u) f'(u)`` evaluated directly."""
    if u < 0:
        raise InvalidParameterError("g is defined for u >= 0")
    if u == 0:
        return 0 * u
    q = critical_q(d)
    f, F, fp = f_terms(u, d, p, omega)
    return _coerce(q, u) * f * f - _coerce(q + 1, u) * F * fp


def g_expansion(u, coeffs: PSCoefficients, omega):
    """g from the five-term expansion."""
    if u == 0:
        return 0 * u
    p, q = coeffs.p, coeffs.q
    c = lambda a: _coerce(a, u)
    return (c(coeffs.a2) * omega * omega * u * u
            + c(coeffs.a_p1) * omega * _pow(u, p + 1)
            + c(coeffs.a_q1) * omega * _pow(u, q + 1)
            + c(coeffs.a_2p) * _pow(u, 2 * p)
            + c(coeffs.a_pq) * _pow(u, p + q))


def c1_margin(u: float, d: int, p: Number, omega: float) -> float:
    """``d/du[F/f] - (d-2)/(2d) = 1 - F f'/f² - (d-2)/(2d)``; same sign as g where f ≠ 0."""
    f, F, fp = f_terms(float(u), d, p, float(omega))
    return 1.0 - F * fp / (f * f) - (d - 2) / (2.0 * d)


def _normalized_scan(coeffs: PSCoefficients, omega: float, u: np.ndarray):
    """g/u² and the sum of absolute terms (both divided by u²), vectorized."""
    p, q = float(coeffs.p), float(coeffs.q)
    terms = np.vstack([
        np.full_like(u, float(coeffs.a2) * omega**2),
        float(coeffs.a_p1) * omega * u ** (p - 1),
        float(coeffs.a_q1) * omega * u ** (q - 1),
        float(coeffs.a_2p) * u ** (2 * p - 2),
        float(coeffs.a_pq) * u ** (p + q - 2),
    ])
    return terms.sum(axis=0), np.abs(terms).sum(axis=0)


def _g_mp(u, coeffs: PSCoefficients, omega, ctx):
    """g/u² in an mpmath context (``mpmath.mp`` or ``mpmath.iv``)."""
    conv = lambda x: ctx.mpf(x.numerator) / ctx.mpf(x.denominator)
    p, q = conv(coeffs.p), conv(coeffs.q)
    om = ctx.mpf(omega) if not isinstance(omega, Fraction) else conv(omega)
    return (conv(coeffs.a2) * om**2
            + conv(coeffs.a_p1) * om * u ** (p - 1)
            + conv(coeffs.a_q1) * om * u ** (q - 1)
            + conv(coeffs.a_2p) * u ** (2 * p - 2)
            + conv(coeffs.a_pq) * u ** (p + q - 2))


def _interval_nonneg(coeffs: PSCoefficients, omega: float, lo: float, hi: float, depth: int = 40) -> bool:
    """Prove g/u² ≥ 0 on [lo, hi] by natural interval extension with bisection."""
    stack = [(lo, hi, 0)]
    iv = mpmath.iv
    while stack:
        a, b, k = stack.pop()
        val = _g_mp(iv.mpf([a, b]), coeffs, omega, iv)
        if val.a >= 0:
            continue
        if k >= depth:
            return False
        m = math.sqrt(a * b)
        stack.append((a, m, k + 1))
        stack.append((m, b, k + 1))
    return True


def _confirm_negative(coeffs: PSCoefficients, omega: float, u: float) -> Optional[float]:
    """Rigorous sign of g at a point via a point interval; returns g(u) if provably negative."""
    iv = mpmath.iv
    val = _g_mp(iv.mpf(u), coeffs, omega, iv) * iv.mpf(u) ** 2
    if val.b < 0:
        with mpmath.workdps(30):
            return float(_g_mp(mpmath.mpf(u), coeffs, omega, mpmath.mp) * mpmath.mpf(u) ** 2)
    return None


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Witness:
    omega: float
    u: float
    g: float


@dataclass(frozen=True)
class PSCheckReport:
    d: int
    p: float
    omega: Optional[float]
    coefficients: PSCoefficients
    verdict: str
    g_min: float
    u_min: float
    certificate: str
    witness: Optional[Witness] = None
    scan: Optional[tuple[float, float, int]] = None
    hint: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)


def remark_c1_witness(d: int, p: Number, omega_max: float = WITNESS_OMEGA_MAX) -> Witness:
    """Failure witness for d ≥ 7: doubling ω from 1 until ``g(ω^a) < 0``.

    ``a`` is the midpoint of ``(1/(q-1), 1/(p-1))``; the negativity is confirmed
    with interval arithmetic.
    """
    if int(d) != d or d < 7:
        raise InvalidParameterError(f"the failure witness needs d >= 7, got {d}")
    coeffs = ps_coefficients(d, p)
    q = float(coeffs.q)
    pf = float(coeffs.p)
    a = 0.5 * (1.0 / (q - 1.0) + 1.0 / (pf - 1.0))
    omega = 1.0
    while omega <= omega_max:
        u = omega**a
        val = _confirm_negative(coeffs, omega, u)
        if val is not None:
            return Witness(omega, u, val)
        omega *= 2.0
    raise WitnessNotFoundError(f"no witness with omega <= {omega_max:g} for d={d}, p={p}")


def exact_certificate(coeffs: PSCoefficients) -> Optional[str]:
    """An ω-independent proof of g ≥ 0 from the coefficients, or None."""
    c = coeffs
    if not (c.a2 > 0 and c.a_2p > 0 and c.a_q1 >= 0 and c.a_pq >= 0):
        return None
    if c.a_p1 >= 0:
        return "exact: all five coefficients nonnegative"
    if c.q_discriminant >= 0:
        return (f"exact: A2, A_2p > 0, A_q+1, A_p+q >= 0 and Q discriminant "
                f"4*A2*A_2p - A_p+1^2 = {c.q_discriminant} >= 0")
    return None


def scan_range(p: float, omega: float, m_star: Optional[float] = None) -> tuple[float, float]:
    hi = 10.0 * omega ** (1.0 / (p - 1.0))
    if m_star is not None:
        hi = max(hi, 2.0 * m_star)
    return hi * 1e-10, hi


def check_condition(d: int, p: Number, omega: Optional[float] = None,
                    m_star: Optional[float] = None,
                    per_decade: int = SCAN_PER_DECADE) -> PSCheckReport:
    """Verdict on ``g ≥ 0`` for u > 0.

    With ``omega=None`` the question is "for every ω > 0": an exact
    coefficient certificate proves it, and for d ≥ 7 the large-ω witness
    disproves it.  With a given ω the u-range up to
    ``max(2 m_star, 10 ω^{1/(p-1)})`` is scanned at ``per_decade`` points per
    decade; negative values are confirmed with interval arithmetic, and
    near-zero minima are certified the same way or reported inconclusive.
    """
    coeffs = ps_coefficients(d, p)
    pf = float(coeffs.p)
    notes = []
    cert = exact_certificate(coeffs)
    if d == 3 and 4 <= coeffs.p < 5:
        notes.append(f"2(p+1)A_p+1 = 6p^2-14p-8 = {6 * coeffs.p**2 - 14 * coeffs.p - 8}")
    if 4 <= d <= 6:
        notes.append(f"min_r>=0 Q(r) = {coeffs.q_min()}")

    if omega is None:
        if cert is not None:
            return PSCheckReport(d, pf, None, coeffs, "holds", float(coeffs.q_min()), math.nan,
                                 cert, notes=tuple(notes))
        if d >= 7:
            w = remark_c1_witness(d, coeffs.p)
            return PSCheckReport(d, pf, w.omega, coeffs, "fails", w.g, w.u,
                                 "witness g(omega^a) < 0 confirmed by interval arithmetic",
                                 witness=w, notes=tuple(notes))
        return PSCheckReport(d, pf, None, coeffs, "inconclusive", math.nan, math.nan,
                             "no exact certificate", hint="rerun with a specific omega to scan",
                             notes=tuple(notes))

    omega = float(omega)
    if not omega > 0:
        raise InvalidParameterError("omega must be positive")
    lo, hi = scan_range(pf, omega, m_star)
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    u = np.geomspace(lo, hi, n)
    val, mag = _normalized_scan(coeffs, omega, u)
    rel = val / mag
    i = int(np.argmin(rel))
    g_min = float(val[i] * u[i] ** 2)
    scan = (lo, hi, n)

    if rel[i] < 0:
        neg = np.nonzero(rel < 0)[0]
        j = int(neg[np.argmin(rel[neg])])
        gval = _confirm_negative(coeffs, omega, float(u[j]))
        if gval is not None:
            w = Witness(omega, float(u[j]), gval)
            return PSCheckReport(d, pf, omega, coeffs, "fails", g_min, float(u[i]),
                                 "scan; negative value confirmed by interval arithmetic",
                                 witness=w, scan=scan, notes=tuple(notes))
        if rel[i] < HOLD_TOL:
            return PSCheckReport(d, pf, omega, coeffs, "inconclusive", g_min, float(u[i]),
                                 "scan", scan=scan, hint="negative float value not confirmed; refine the scan",
                                 notes=tuple(notes))

    if cert is not None:
        return PSCheckReport(d, pf, omega, coeffs, "holds", g_min, float(u[i]), cert, scan=scan,
                             notes=tuple(notes))
    if rel[i] < NEAR_ZERO:
        a = float(u[max(i - 1, 0)])
        b = float(u[min(i + 1, n - 1)])
        if _interval_nonneg(coeffs, omega, a, b):
            return PSCheckReport(d, pf, omega, coeffs, "holds", g_min, float(u[i]),
                                 f"scan of {n} points; near-zero minimum certified by interval arithmetic on [{a:.6g}, {b:.6g}]",
                                 scan=scan, notes=tuple(notes))
        return PSCheckReport(d, pf, omega, coeffs, "inconclusive", g_min, float(u[i]), "scan", scan=scan,
                             hint=f"minimum within {NEAR_ZERO:g} of zero near u={u[i]:.6g}; "
                                  f"increase per_decade", notes=tuple(notes))
    return PSCheckReport(d, pf, omega, coeffs, "holds", g_min, float(u[i]),
                         f"scan of {n} points, relative margin {rel[i]:.3g}", scan=scan, notes=tuple(notes))


# ----------------------------------------------------------------------------
# the dimension-specific polynomials


def h_d4(p: Number) -> Fraction:
    """``(p+1)(3-p) - (p²-2p-1)²``; positive on [2, 1+√2]."""
    p = as_rational(p)
    return -p**4 + 4 * p**3 - 3 * p**2 - 2 * p + 2


def h_d5(p: Number) -> Fraction:
    """``8(7-3p)(p+1) - (5p²-9p-4)² = (p-1)²(-25p²+40p+40)``."""
    p = as_rational(p)
    return 8 * (7 - 3 * p) * (p + 1) - (5 * p**2 - 9 * p - 4) ** 2


def h_d5_factor(p: Number) -> Fraction:
    p = as_rational(p)
    return -25 * p**2 + 40 * p + 40


def h_d6(p: Number) -> Fraction:
    """``8(p+1) - (2-p)(3p+1)²``; zero at p = 1 and increasing on [1, 2)."""
    p = as_rational(p)
    return 8 * (p + 1) - (2 - p) * (3 * p + 1) ** 2


def h_d6_prime(p: Number) -> Fraction:
    p = as_rational(p)
    return 27 * p**2 - 24 * p - 3


def d5_sign_roots() -> tuple[float, float]:
    """Roots ``(9 ± √161)/10`` of 5p² - 9p - 4."""
    s = math.sqrt(161.0)
    return (9.0 - s) / 10.0, (9.0 + s) / 10.0


def d6_boundary_diagnostic() -> dict[str, Fraction]:
    """The p → 1 endpoint of the d = 6 analysis (p = 1 itself is outside the hypothesis).

    ``min_{r≥0} Q`` is ``h(p) / (16(p+1))`` there, so it vanishes with h(1) = 0.
    """
    p = Fraction(1)
    return {"h(1)": h_d6(p), "min_Q(1)": Fraction(1, 2) * (1 - (2 - p) * (3 * p + 1) ** 2 / (8 * (p + 1)))}


def in_certified_range(d: int, p: Number) -> bool:
    """3 ≤ d ≤ 6, p > 1, 4/(d-2) ≤ p < (d+2)/(d-2)."""
    p = as_rational(p)
    return 3 <= d <= 6 and p > 1 and Fraction(4, d - 2) <= p < critical_q(d)
