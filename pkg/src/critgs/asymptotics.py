"""Large-ω sweeps, the asymptotic ratio β/α, exponential decay and the bubble test functions.

``sweep`` solves one ground state per ω and records the rescaled quantities
that should converge as ω grows: α, β → 0, β/α → ``limit_constant(d, p)``, and
Φ̃ → W in Ḣ¹ and L^q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy import integrate as _integrate

from .domain import (
    ProblemParams,
    critical_power,
    gradient_sq,
    lp_integral,
    nehari_root,
    sphere_area,
    talenti,
    talenti_prime,
    talenti_profile,
)
from .errors import (
    CritGSError,
    DivergentNormError,
    InconclusiveError,
    InvalidInputError,
    InvalidParameterError,
)
from .radial_ode import ShootingResult, shoot
from .rescale import RescaledState, h1dot_norm, rescale, talenti_distance

SWEEP_TOL = 1e-14


class ResultCache(Protocol):
    def load(self, params: ProblemParams, tol: float) -> Optional[ShootingResult]: ...

    def store(self, result: ShootingResult, tol: float) -> None: ...


# ----------------------------------------------------------------------------
# limit constant


def limit_constant(d: int, p: float) -> float:
    """``2(p+1)/(4-(d-2)(p-1)) · ‖W‖₂² / ‖W‖_{p+1}^{p+1}``, the limit of β/α."""
    if d < 5:
        raise DivergentNormError(f"W is not in L^2 for d = {d}")
    q = critical_power(d)
    if not 1.0 < p < q:
        raise InvalidParameterError(f"need 1 < p < {q:g}, got {p}")
    if not p + 1.0 > d / (d - 2.0):
        raise DivergentNormError(f"W is not in L^{p + 1:g} for d = {d}")
    w = talenti_profile(d)
    gamma = 4.0 - (d - 2) * (p - 1.0)
    return 2.0 * (p + 1.0) / gamma * lp_integral(w, 2.0) / lp_integral(w, p + 1.0)


def extrapolate_ratio(alphas: Sequence[float], ratios: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``β/α ≈ Λ + c·√α``; returns (Λ, c).

    The ratio approaches its limit only at rate √α, so finite sweeps sit well
    below Λ; this linear fit in √α estimates the limit from the rows.
    """
    x = np.sqrt(np.asarray(alphas, dtype=float))
    y = np.asarray(ratios, dtype=float)
    if x.size < 2:
        raise InvalidInputError("need at least two rows to extrapolate")
    c, lam = np.polyfit(x, y, 1)
    return float(lam), float(c)


# ----------------------------------------------------------------------------
# decay diagnostics


@dataclass(frozen=True)
class ExpDecayCheck:
    """Outcome of testing ``Φ̃ ≤ C₀ α^{(d-2)/4} e^{-√α r/2}`` for ``r ≥ L₀ α^{-1/2}``.

    ``margin`` is the smallest ratio of the observed log-decay rate to √α/2,
    minus one; positive means the profile decays strictly faster than the bound.
    ``n_nodes`` counts computed grid nodes in the region (tail-model samples
    beyond the grid are checked too but not counted).
    """

    holds: bool
    l0: float
    c0: float
    margin: float
    n_nodes: int


def exp_decay_check(state: RescaledState, n_tail: int = 200) -> ExpDecayCheck:
    """Find workable (L₀, C₀) for the exponential bound and verify it beyond L₀α^{-1/2}.

    L₀ is the larger of 2(d-1) and the first radius past which the potential
    ``α - βΦ̃^{p-1} - Φ̃^{4/(d-2)}`` stays above α/2, in units of α^{-1/2}.
    C₀ is the sup of ``Φ̃ / (α^{(d-2)/4} e^{-√α r/2})`` over the region.
    """
    a, b = state.alpha, state.beta
    d, p = state.params.d, state.params.p
    if not a > 0:
        return ExpDecayCheck(True, math.inf, 0.0, math.inf, 0)
    prof = state.profile
    r, u, du = prof.grid.nodes, prof.values, prof.derivs
    sa = math.sqrt(a)
    pot = a - b * u ** (p - 1) - u ** (4.0 / (d - 2))
    bad = np.nonzero(pot < 0.5 * a)[0]
    r_pot = r[bad[-1] + 1] if bad.size and bad[-1] + 1 < r.size else (r[0] if not bad.size else math.inf)
    if not math.isfinite(r_pot):
        # the potential condition is only met on the tail model
        r_pot = prof.grid.r_max
    l0 = max(2.0 * (d - 1), r_pot * sa)
    start = l0 / sa
    mask = r >= start
    rr = r[mask]
    uu, dd = u[mask], du[mask]
    ext = np.geomspace(max(start, prof.grid.r_max), max(start, prof.grid.r_max) * 4.0, n_tail)
    ue, de = prof.evaluate(ext)
    rr = np.concatenate([rr, ext])
    uu = np.concatenate([uu, ue])
    dd = np.concatenate([dd, de])
    ratio = uu / (a ** ((d - 2) / 4.0) * np.exp(-0.5 * sa * rr))
    c0 = float(np.max(ratio))
    rate = -dd / uu
    margin = float(np.min(rate) / (0.5 * sa) - 1.0)
    holds = bool(math.isfinite(c0) and margin > 0 and np.all(uu > 0))
    return ExpDecayCheck(holds, float(l0), c0, margin, int(mask.sum()))


def decay_sup(state: RescaledState) -> float:
    """``sup_i (1 + r_i)^{d-2} Φ̃(r_i)`` over the grid."""
    prof = state.profile
    return float(np.max((1.0 + prof.grid.nodes) ** (prof.d - 2) * prof.values))


def pointwise_sup(result: ShootingResult) -> float:
    """``sup_i ω^{1/4} r_i^{(d-1)/2} Φ(r_i)``."""
    prof, params = result.profile, result.params
    r = prof.grid.nodes
    return float(np.max(params.omega ** 0.25 * r ** (0.5 * (prof.d - 1)) * prof.values))


def rescaled_identity_gap(state: RescaledState) -> float:
    """Relative gap in ``(α/d)‖Φ̃‖² = (2*-(p+1))/(2*(p+1)) β ‖Φ̃‖_{p+1}^{p+1}``."""
    d, p = state.params.d, state.params.p
    s = 2.0 * d / (d - 2)
    lhs = state.alpha / d * lp_integral(state.profile, 2.0)
    rhs = (s - p - 1.0) / (s * (p + 1.0)) * state.beta * lp_integral(state.profile, p + 1.0)
    return abs(lhs - rhs) / abs(rhs)


# ----------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = ("omega", "m_star", "alpha", "beta", "beta_over_alpha",
                 "h1dot_dist", "l2_dist", "decay_sup", "exp_tail_ok")


@dataclass(frozen=True)
class SweepRow:
    omega: float
    m_star: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan
    beta_over_alpha: float = math.nan
    h1dot_dist: float = math.nan
    l2_dist: float = math.nan
    decay_sup: float = math.nan
    exp_tail_ok: bool = False
    grad_norm: float = math.nan
    mass_scaled: float = math.nan
    pointwise_sup: float = math.nan
    exp_c0: float = math.nan
    exp_l0: float = math.nan
    exp_margin: float = math.nan
    identity_gap: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def sweep_row(params: ProblemParams, tol: float = SWEEP_TOL,
              cache: Optional[ResultCache] = None,
              shoot_options: Optional[dict] = None) -> tuple[SweepRow, Optional[RescaledState]]:
    """One sweep row; solver errors are recorded in ``error``.

    ``shoot_options`` are extra keyword arguments for ``shoot`` (step, rtol, atol).
    """
    try:
        result = cache.load(params, tol) if cache is not None else None
        if result is None:
            result = shoot(params, tol=tol, **(shoot_options or {}))
            if cache is not None:
                cache.store(result, tol)
        state = rescale(result, params)
        l2_divergent = params.d < 5
        dist = talenti_distance(state, () if l2_divergent else (2.0,))
        exp = exp_decay_check(state)
        mass = lp_integral(result.profile, 2.0)
        row = SweepRow(
            omega=params.omega,
            m_star=state.m_omega,
            alpha=state.alpha,
            beta=state.beta,
            beta_over_alpha=state.beta_over_alpha,
            h1dot_dist=dist["h1dot"],
            l2_dist=math.nan if l2_divergent else dist["L2"],
            decay_sup=decay_sup(state),
            exp_tail_ok=exp.holds,
            grad_norm=h1dot_norm(result.profile),
            mass_scaled=math.sqrt(mass * params.omega),
            pointwise_sup=pointwise_sup(result),
            exp_c0=exp.c0,
            exp_l0=exp.l0,
            exp_margin=exp.margin,
            identity_gap=rescaled_identity_gap(state),
        )
        return row, state
    except (CritGSError, ArithmeticError) as exc:
        return SweepRow(omega=params.omega, error=f"{type(exc).__name__}: {exc}"), None


def sweep(d: int, p: float, omega_list: Sequence[float], tol: float = SWEEP_TOL,
          cache: Optional[ResultCache] = None, shoot_options: Optional[dict] = None) -> list[SweepRow]:
    """One row per ω, in the given (increasing) order.

    The default bisection tolerance is tighter than ``shoot``'s so the computed
    profile reaches the exponential-decay region of the larger ω.
    """
    omegas = [float(w) for w in omega_list]
    if not omegas:
        raise InvalidInputError("empty omega list")
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise InvalidInputError("omega list must be strictly increasing")
    ProblemParams(d, p, omegas[0])  # validate once up front
    return [sweep_row(ProblemParams(d, p, w), tol, cache, shoot_options)[0] for w in omegas]


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


# ----------------------------------------------------------------------------
# cut-off bubble test functions


def smoothstep_cutoff(r):
    """χ = 1 on [0,1], 0 on [2,∞), quintic smoothstep between (C² and non-increasing)."""
    r = np.asarray(r, dtype=float)
    x = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def smoothstep_cutoff_prime(r):
    r = np.asarray(r, dtype=float)
    x = np.clip(r - 1.0, 0.0, 1.0)
    return -30.0 * x**2 * (1.0 - x) ** 2


def bubble(d: int, eps: float, r):
    """``W_ε(r) = ε^{(d-2)/4}(ε + r²/(d(d-2)))^{-(d-2)/2} = ε^{-(d-2)/4} W(r/√ε)``."""
    s = math.sqrt(eps)
    return eps ** (-(d - 2) / 4.0) * talenti(d, np.asarray(r, dtype=float) / s)


def bubble_prime(d: int, eps: float, r):
    s = math.sqrt(eps)
    return eps ** (-(d - 2) / 4.0) / s * talenti_prime(d, np.asarray(r, dtype=float) / s)


def _radial_quad(fn, a, b, d, points=()):
    """``|S^{d-1}| ∫_a^b fn(r) r^{d-1} dr``, in log r when a > 0."""
    area = sphere_area(d)
    if a == 0:
        a_t = -60.0
    else:
        a_t = math.log(a)
    b_t = math.log(b) if math.isfinite(b) else math.inf

    def g(t):
        r = math.exp(t)
        return float(fn(r)) * r**d

    pts = [math.log(x) for x in points if a < x < b]
    if math.isinf(b_t):
        # stop before r^d overflows and close with a log-linear remainder
        t_end = 650.0 / d
        total, lo = 0.0, a_t
        for pt in sorted(pts) + [0.5 * (a_t + t_end), t_end]:
            total += _integrate.quad(g, lo, pt, epsabs=0, epsrel=1e-13, limit=400)[0]
            lo = pt
        f1, f0 = g(t_end), g(t_end - 1.0)
        if f1 > 0 and f0 > f1:
            total += f1 / math.log(f0 / f1)
        return area * total
    val = _integrate.quad(g, a_t, b_t, epsabs=0, epsrel=1e-13, limit=400,
                          points=pts or None)[0]
    return area * val


@dataclass(frozen=True)
class ApxAReport:
    """Energies of the cut-off bubbles ``V_ε = χ W_ε`` and the fitted rates.

    ``fits`` maps each quantity to ``(fitted exponent, predicted exponent)``.
    ``m_upper`` is ``S_ω(τ_{ε,0}V_ε)`` for each ε, to be compared with
    ``sigma_d2 / d``.
    """

    d: int
    p: float
    omega: float
    epsilons: tuple[float, ...]
    sigma_d2: float
    grad_sq: tuple[float, ...]
    l2s: tuple[float, ...]
    l2: tuple[float, ...]
    lp1: tuple[float, ...]
    grad_dev: tuple[float, ...]
    l2s_dev: tuple[float, ...]
    y_max: tuple[float, ...]
    tau0: tuple[float, ...]
    m_upper: tuple[float, ...]
    fits: dict = field(default_factory=dict)
    inconclusive: tuple[str, ...] = ()

    @property
    def strict_bound(self) -> bool:
        """``S_ω(τ_{ε,0}V_ε) < σ^{d/2}/d`` at the smallest ε."""
        i = int(np.argmin(self.epsilons))
        return self.m_upper[i] < self.sigma_d2 / self.d


def lq_rate(d: int, q: float) -> tuple[float, bool]:
    """Predicted exponent of ``‖V_ε‖_{q+1}^{q+1}`` and whether a |log ε| factor is present."""
    if q > 2.0 / (d - 2):
        return (2.0 * d - (d - 2) * (q + 1.0)) / 4.0, False
    if q == 2.0 / (d - 2):
        return d / 4.0, True
    return (d - 2) * (q + 1.0) / 4.0, False


def _fit(eps, dev, log_factor=False) -> float:
    """Exponent k in ``|dev| ≈ C x^k e^{bε}`` by linear least squares in logs.

    ``x = ε`` or ``ε|log ε|``.  The deviations are ε^k times a smooth function
    of ε, so the ``bε`` term absorbs the first correction and keeps the larger
    ε values from biasing k.
    """
    eps = np.asarray(eps, float)
    dev = np.abs(np.asarray(dev, float))
    x = eps * np.abs(np.log(eps)) if log_factor else eps
    A = np.vstack([np.ones_like(eps), np.log(x), eps]).T
    coef = np.linalg.lstsq(A, np.log(dev), rcond=None)[0]
    return float(coef[1])


def _monotone(d, eps, dev) -> bool:
    """Deviations shrink with ε once the bubble sits inside the unit ball (ε d(d-2) < 1)."""
    eps = np.asarray(eps, float)
    keep = eps * d * (d - 2) < 1.0
    order = np.argsort(eps[keep])
    v = np.abs(np.asarray(dev, float))[keep][order]
    return bool(v.size >= 2 and np.all(np.diff(v) > 0) and np.all(v > 0))


def apxa_expansion(d: int, p: float, omega: float = 1.0,
                   eps_list: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4)) -> ApxAReport:
    """Quadrature of the bubble energies and log-log fits of their ε-rates.

    Deviations from σ^{d/2} are integrated directly over ``r > 1``, where
    V_ε and W_ε differ, so they are not lost to cancellation.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 4:
        raise InvalidInputError("need at least 4 values of epsilon for the fits")
    if not all(0 < e < 1 for e in eps_list):
        raise InvalidInputError("epsilon values must lie in (0, 1)")
    if d < 3 or int(d) != d:
        raise InvalidParameterError("dimension must be an integer >= 3")
    q_c = critical_power(d)
    if not 1.0 < p < q_c:
        raise InvalidParameterError(f"need 1 < p < {q_c:g}")
    s = 2.0 * d / (d - 2)
    w = talenti_profile(d)
    sigma_d2 = gradient_sq(w)
    chi, dchi = smoothstep_cutoff, smoothstep_cutoff_prime

    cols = {k: [] for k in ("grad", "l2s", "l2", "lp1", "gdev", "sdev", "y", "tau", "m")}
    for e in eps_list:
        we = lambda r: bubble(d, e, r)
        dwe = lambda r: bubble_prime(d, e, r)
        v_d = lambda r: chi(r) * dwe(r) + dchi(r) * we(r)
        v = lambda r: chi(r) * we(r)
        gdev = _radial_quad(lambda r: v_d(r) ** 2, 1.0, 2.0, d) \
            - _radial_quad(lambda r: dwe(r) ** 2, 1.0, math.inf, d)
        sdev = _radial_quad(lambda r: v(r) ** s, 1.0, 2.0, d) \
            - _radial_quad(lambda r: we(r) ** s, 1.0, math.inf, d)
        pts = (math.sqrt(e),)
        l2 = _radial_quad(lambda r: v(r) ** 2, 0.0, 1.0, d, pts) + _radial_quad(lambda r: v(r) ** 2, 1.0, 2.0, d)
        lp1 = _radial_quad(lambda r: v(r) ** (p + 1), 0.0, 1.0, d, pts) \
            + _radial_quad(lambda r: v(r) ** (p + 1), 1.0, 2.0, d)
        grad = sigma_d2 + gdev
        l2s = sigma_d2 + sdev
        y = (1.0 / d) * (grad / l2s ** (2.0 / s)) ** (d / 2.0) * (1.0 + omega * l2 / grad) ** (d / 2.0)
        tau = nehari_root(grad + omega * l2, lp1, l2s, p, s)
        m_up = 0.5 * tau**2 * (grad + omega * l2) - tau ** (p + 1) / (p + 1) * lp1 - tau**s / s * l2s
        for k, val in zip(cols, (grad, l2s, l2, lp1, gdev, sdev, y, tau, m_up)):
            cols[k].append(float(val))

    lp_exp, lp_log = lq_rate(d, p)
    y_dev = [yv - sigma_d2 / d for yv in cols["y"]]
    if d == 3:
        y_pred, y_log = 0.5, False
    elif d == 4:
        y_pred, y_log = 1.0, True
    else:
        y_pred, y_log = 1.0, False
    l2_pred, l2_log = {3: (0.5, False), 4: (1.0, True)}.get(d, (1.0, False))
    series = {
        "grad_sq": (cols["gdev"], (d - 2) / 2.0, False),
        "l2s": (cols["sdev"], d / 2.0, False),
        "lp1": (cols["lp1"], lp_exp, lp_log),
        "l2": (cols["l2"], l2_pred, l2_log),
        "y_max": (y_dev, y_pred, y_log),
    }
    fits, bad = {}, []
    for name, (dev, pred, log_factor) in series.items():
        if not _monotone(d, eps_list, dev):
            bad.append(name)
            fits[name] = (math.nan, pred)
            continue
        fits[name] = (_fit(eps_list, dev, log_factor), pred)

    return ApxAReport(
        d, float(p), float(omega), eps_list, sigma_d2,
        tuple(cols["grad"]), tuple(cols["l2s"]), tuple(cols["l2"]), tuple(cols["lp1"]),
        tuple(cols["gdev"]), tuple(cols["sdev"]), tuple(cols["y"]), tuple(cols["tau"]),
        tuple(cols["m"]), fits, tuple(bad),
    )


def require_conclusive(report: ApxAReport) -> ApxAReport:
    if report.inconclusive:
        raise InconclusiveError(f"non-monotone deviations for {', '.join(report.inconclusive)}")
    return report
