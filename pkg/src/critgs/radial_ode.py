"""Radial shooting for ``u'' + (d-1)/r u' = ωu - u^p - u^q``.

Each shot starts from a Taylor series at a tiny radius and runs an adaptive
8th-order Runge-Kutta scheme (scipy's DOP853).  The ODE is integrated in units
where the central value is 1 and the fastest of the three rates
``ω, M^{p-1}, M^{q-1}`` is 1, so the same tolerances serve every (ω, M).

A shot ends in one of

* ``CROSSING``: u hits zero at finite radius (M too large),
* ``UNDERSHOOT``: u' turns nonnegative while u > 0 (M too small),
* ``DECAY``: u fell below the decay floor still decreasing (only when asked),
* ``INCONCLUSIVE``: the horizon ran out first.

The ground state height is the common boundary of the undershoot and crossing
sets, located by bisection.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from .domain import (
    DEFAULT_STEP,
    ProblemParams,
    RadialGrid,
    RadialProfile,
    TailModel,
    functionals,
    log_derivative,
)
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    NoGroundStateError,
    SolverError,
    StiffnessError,
)

RTOL = 1e-12
ATOL = 1e-14
SERIES_START = 1e-6  # in unit variables
DECAY_FLOOR = 1e-8
DIVERGENCE_TOL = 1e-6
M_SEARCH = (1e-3, 1e9)


@dataclass(frozen=True)
class RadialEquation:
    """``u'' + (d-1)/r u' = ω u - sub·u^p - crit·u^q`` with q critical.

    ``sub = 0`` gives the pure-power problem of the limiting profile U;
    ``omega = sub = 0`` gives the critical equation solved by W.
    """

    d: int
    p: float
    omega: float
    sub: float = 1.0
    crit: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise InvalidParameterError(f"dimension must be >= 3, got {self.d}")
        if min(self.omega, self.sub, self.crit) < 0:
            raise InvalidParameterError("coefficients must be nonnegative")
        if self.sub == 0 and self.crit == 0:
            raise InvalidParameterError("at least one nonlinear term is needed")

    @classmethod
    def from_params(cls, params: ProblemParams) -> "RadialEquation":
        return cls(params.d, params.p, params.omega)

    @property
    def q(self) -> float:
        return (self.d + 2) / (self.d - 2)

    def source(self, u):
        """Right-hand side ``ωu - sub u^p - crit u^q`` for u >= 0 (odd extension below)."""
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        return self.omega * u - self.sub * a ** (self.p - 1) * u - self.crit * a ** (self.q - 1) * u

    def length_scale(self, M: float) -> float:
        rate = max(self.omega, self.sub * M ** (self.p - 1), self.crit * M ** (self.q - 1))
        return 1.0 / math.sqrt(rate)

    def tail_shape(self) -> tuple[float, float]:
        """(rate k, algebraic power s) of the linear decay at infinity."""
        if self.omega > 0:
            return math.sqrt(self.omega), 0.5 * (self.d - 1)
        return 0.0, float(self.d - 2)


EquationLike = Union[ProblemParams, RadialEquation]


def _as_equation(eq: EquationLike) -> RadialEquation:
    if isinstance(eq, ProblemParams):
        return RadialEquation.from_params(eq)
    if isinstance(eq, RadialEquation):
        return eq
    raise InvalidInputError(f"expected ProblemParams or RadialEquation, got {type(eq).__name__}")


class ShotKind(enum.Enum):
    CROSSING = "crossing"
    UNDERSHOOT = "undershoot"
    DECAY = "decay"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ShotClass:
    kind: ShotKind
    radius: float
    divergent: bool = False

    def __str__(self):
        return f"{self.kind.value}@{self.radius:.6g}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A shot in original variables; ``sample`` evaluates the dense solution."""

    equation: RadialEquation
    M: float
    scale: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    _dense: object = field(repr=False, default=None)

    @property
    def r_end(self) -> float:
        return float(self.r[-1])

    def sample(self, r) -> tuple[np.ndarray, np.ndarray]:
        if self._dense is None:
            raise InvalidInputError("trajectory was integrated without dense output")
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r > self.r_end * (1 + 1e-12)):
            raise InvalidInputError("sample radius beyond the end of the trajectory")
        s = np.clip(r / self.scale, self.r[0] / self.scale, self.r_end / self.scale)
        y = self._dense(np.log(s))
        return self.M * y[0], self.M * y[1] / (s * self.scale)


def integrate(eq: EquationLike, M: float, horizon: Optional[float] = None,
              rtol: float = RTOL, atol: float = ATOL, dense: bool = False,
              stop_on_decay: bool = False, max_step: float = np.inf) -> tuple[Trajectory, ShotClass]:
    """Shoot from ``u(0) = M`` and classify the outcome.

    Parameters
    ----------
    eq : ProblemParams or RadialEquation
    M : float
        Central height, must be positive.
    horizon : float, optional
        Largest radius in original units.  Defaults to 200 decay lengths past
        the core.
    rtol, atol : float
        Integrator tolerances in unit variables.
    dense : bool
        Keep the dense interpolant so the trajectory can be resampled.
    stop_on_decay : bool
        End with ``DECAY`` once u < DECAY_FLOOR·M while still decreasing.

    Returns
    -------
    (Trajectory, ShotClass)
    """
    eq = _as_equation(eq)
    if not (M > 0 and math.isfinite(M)):
        raise InvalidInputError(f"central height must be positive and finite, got {M}")
    d, p, q = eq.d, eq.p, eq.q
    L = eq.length_scale(M)
    a = eq.omega * L * L
    b = eq.sub * L * L * M ** (p - 1)
    c = eq.crit * L * L * M ** (q - 1)
    if horizon is None:
        s_end = 200.0 / math.sqrt(a) + 50.0 if a > 0 else 1e6
    else:
        s_end = horizon / L

    f0 = a - b - c
    A = f0 / (2 * d)
    B = (a - p * b - q * c) * A / (4 * (d + 2))
    s0 = SERIES_START
    y0 = [1.0 + A * s0**2 + B * s0**4, 2 * A * s0 + 4 * B * s0**3]

    def traj(t, y, dense_fn):
        sv = np.exp(t)
        return Trajectory(eq, M, L, sv * L, M * y[0], M * y[1] / (sv * L), dense_fn)

    t0, t_end = math.log(s0), math.log(s_end)
    if f0 >= 0:
        # u'' > 0 at the centre: u rises immediately
        w0 = 2 * A * s0**2
        return traj(np.array([t0]), np.array([[y0[0]], [w0]]), None), ShotClass(ShotKind.UNDERSHOOT, s0 * L)

    # t = log s and w = s v' remove the 1/s singularity and give geometric steps:
    #   v_t = w,  w_t = -(d-2) w + s^2 f(v)
    def rhs(t, y):
        v = y[0]
        av = abs(v)
        s2 = math.exp(2.0 * t)
        return [y[1], -(d - 2) * y[1] + s2 * (a * v - b * av ** (p - 1) * v - c * av ** (q - 1) * v)]

    def crossing(t, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    def turning(t, y):
        return y[1]

    turning.terminal = True
    turning.direction = 1

    events = [crossing, turning]
    if stop_on_decay:
        def floor(t, y):
            return y[0] - DECAY_FLOOR

        floor.terminal = True
        floor.direction = -1
        events.append(floor)

    y0 = [y0[0], y0[1] * s0]
    # w ~ s^2 near the centre, so it gets its own tiny absolute tolerance
    sol = solve_ivp(rhs, (t0, t_end), y0, method="DOP853", rtol=rtol, atol=[atol, atol * 1e-10],
                    events=events, dense_output=dense, max_step=max_step)
    if sol.status == -1:
        raise StiffnessError(f"integration failed at M={M:.17g}: {sol.message}")
    out = traj(sol.t, sol.y, sol.sol if dense else None)
    if sol.t_events[0].size:
        return out, ShotClass(ShotKind.CROSSING, math.exp(sol.t_events[0][0]) * L)
    if sol.t_events[1].size:
        return out, ShotClass(ShotKind.UNDERSHOOT, math.exp(sol.t_events[1][0]) * L)
    if stop_on_decay and sol.t_events[2].size:
        return out, ShotClass(ShotKind.DECAY, math.exp(sol.t_events[2][0]) * L)
    return out, ShotClass(ShotKind.INCONCLUSIVE, math.exp(sol.t[-1]) * L)


def energy(profile: RadialProfile, eq: EquationLike) -> np.ndarray:
    """``H = u'^2/2 - ωu^2/2 + sub u^{p+1}/(p+1) + crit u^{2*}/2*`` at the nodes.

    Along solutions ``H' = -(d-1)/r u'^2 <= 0``.
    """
    eq = _as_equation(eq)
    u, du = profile.values, profile.derivs
    s = 2.0 * eq.d / (eq.d - 2)
    return (0.5 * du**2 - 0.5 * eq.omega * u**2
            + eq.sub * np.abs(u) ** (eq.p + 1) / (eq.p + 1) + eq.crit * np.abs(u) ** s / s)


def ode_residual(profile: RadialProfile, eq: EquationLike) -> float:
    """Max of ``|u'' + (d-1)/r u' - (ωu - u^p - u^q)|`` relative to the largest source term.

    u'' comes from a fourth-order difference of the stored u' in log r.
    """
    eq = _as_equation(eq)
    g = profile.grid
    r = g.nodes
    u, du = profile.values, profile.derivs
    d2u = log_derivative(du, g.step) / r
    res = d2u + (eq.d - 1) / r * du - eq.source(u)
    scale = np.max(eq.omega * np.abs(u) + eq.sub * np.abs(u) ** eq.p + eq.crit * np.abs(u) ** eq.q)
    return float(np.max(np.abs(res)) / scale)


# ----------------------------------------------------------------------------
# shooting


@dataclass(frozen=True, eq=False)
class ShootingResult:
    """Located ground state and the evidence behind it."""

    params: EquationLike
    m_star: float
    bracket: tuple[float, float]
    profile: RadialProfile
    trace: tuple[tuple[float, ShotClass], ...]
    ode_residual: float
    cut_radius: float

    @property
    def n_shots(self) -> int:
        return len(self.trace)


def _classify(eq, M, trace, horizon=None, rtol=RTOL, atol=ATOL):
    _, cls = integrate(eq, M, horizon=horizon, rtol=rtol, atol=atol)
    if cls.kind is ShotKind.INCONCLUSIVE:
        # a longer horizon usually settles a slow tail
        _, cls = integrate(eq, M, horizon=4 * cls.radius, rtol=rtol, atol=atol)
    trace.append((M, cls))
    return cls.kind


def find_bracket(eq: RadialEquation, trace: list, m_range=M_SEARCH,
                 rtol: float = RTOL, atol: float = ATOL) -> tuple[float, float]:
    """Expand geometrically from M = 1 until an undershoot and a crossing are adjacent."""
    lo_lim, hi_lim = m_range
    M = min(max(1.0, lo_lim), hi_lim)
    kind = _classify(eq, M, trace, rtol=rtol, atol=atol)
    if kind is ShotKind.UNDERSHOOT:
        while True:
            nxt = 2.0 * M
            if nxt > hi_lim:
                break
            k2 = _classify(eq, nxt, trace, rtol=rtol, atol=atol)
            if k2 is ShotKind.CROSSING:
                return M, nxt
            M = nxt
    elif kind is ShotKind.CROSSING:
        while True:
            nxt = 0.5 * M
            if nxt < lo_lim:
                break
            k2 = _classify(eq, nxt, trace, rtol=rtol, atol=atol)
            if k2 is ShotKind.UNDERSHOOT:
                return nxt, M
            M = nxt
    raise NoGroundStateError(
        f"no undershoot/crossing bracket for M in [{lo_lim:g}, {hi_lim:g}] "
        f"(last shot {trace[-1][1]}); check the parameter regime"
    )


def bisect_height(eq: RadialEquation, lo: float, hi: float, tol: float, trace: list,
                  rtol: float = RTOL, atol: float = ATOL) -> tuple[float, float]:
    """Shrink an (undershoot, crossing) bracket to relative width ``tol``."""
    while (hi - lo) > tol * lo:
        mid = math.sqrt(lo * hi) if hi > 1.5 * lo else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        kind = _classify(eq, mid, trace, rtol=rtol, atol=atol)
        if kind is ShotKind.UNDERSHOOT:
            lo = mid
        elif kind is ShotKind.CROSSING:
            hi = mid
        else:
            raise SolverError(f"inconclusive shot inside the bracket at M={mid:.17g}")
    return lo, hi


def _cut_radius(lo: Trajectory, hi: Trajectory, M: float) -> float:
    """Largest radius where both shots agree to DIVERGENCE_TOL and u > DECAY_FLOOR·M."""
    r_end = min(lo.r_end, hi.r_end)
    r = np.geomspace(lo.r[0] * 10, r_end, 20001)
    ul, dul = lo.sample(r)
    uh, duh = hi.sample(r)
    um = 0.5 * (ul + uh)
    bad = (np.abs(ul - uh) > DIVERGENCE_TOL * np.abs(um)) | (um < DECAY_FLOOR * M) | (0.5 * (dul + duh) >= 0)
    idx = np.argmax(bad) if np.any(bad) else r.size
    if idx < 2:
        raise SolverError("shots diverge immediately; bracket too wide")
    return float(r[idx - 1])


def profile_from_bracket(eq: RadialEquation, lo_M: float, hi_M: float,
                         step: float = DEFAULT_STEP, r0_factor: float = 1e-4,
                         rtol: float = RTOL, atol: float = ATOL) -> tuple[RadialProfile, float]:
    """Profile from the mean of the two bracketing shots, up to where they separate.

    The exterior carries the linear tail ``A r^{-s} e^{-k r}`` matched at the cut.
    """
    # steps no longer than the node spacing keep the dense output at step accuracy
    lo, _ = integrate(eq, lo_M, dense=True, max_step=step, rtol=rtol, atol=atol)
    hi, _ = integrate(eq, hi_M, dense=True, max_step=step, rtol=rtol, atol=atol)
    M = 0.5 * (lo_M + hi_M)
    R = _cut_radius(lo, hi, M)
    L = eq.length_scale(M)
    grid = RadialGrid.geometric(eq.d, r0_factor * L, R, step)
    ul, dul = lo.sample(grid.nodes)
    uh, duh = hi.sample(grid.nodes)
    u = 0.5 * (ul + uh)
    du = 0.5 * (dul + duh)
    k, s = eq.tail_shape()
    amp = u[-1] * R**s * math.exp(k * R)
    return RadialProfile(grid, u, du, tail=TailModel(amp, k, s)), R


def shoot(eq: EquationLike, tol: float = 1e-12, step: float = DEFAULT_STEP,
          m_range: tuple[float, float] = M_SEARCH, residual_tol: float = 1e-6,
          rtol: float = RTOL, atol: float = ATOL) -> ShootingResult:
    """Locate the ground-state height M* by bisection and build its profile.

    Parameters
    ----------
    eq : ProblemParams or RadialEquation
    tol : float
        Relative bracket width at which bisection stops.
    step : float
        Log-spacing of the profile grid.
    m_range : (float, float)
        Heights searched for the initial bracket.
    residual_tol : float
        Largest acceptable ``ode_residual`` of the returned profile.
    rtol, atol : float
        Integrator tolerances passed to every shot.

    Raises
    ------
    NoGroundStateError
        No bracket inside ``m_range``.
    SolverError
        Inconclusive shots inside the bracket or a poor residual.
    """
    if isinstance(eq, ProblemParams) and eq.d == 3 and not 3 < eq.p < 5:
        raise InvalidParameterError("in dimension 3 the ground state needs 3 < p < 5")
    equation = _as_equation(eq)
    trace: list = []
    lo, hi = find_bracket(equation, trace, m_range, rtol, atol)
    lo, hi = bisect_height(equation, lo, hi, tol, trace, rtol, atol)
    profile, R = profile_from_bracket(equation, lo, hi, step, rtol=rtol, atol=atol)
    res = ode_residual(profile, equation)
    if not res <= residual_tol:
        raise SolverError(f"ground-state residual {res:.3g} exceeds {residual_tol:g}")
    m_star = 0.5 * (lo + hi)
    return ShootingResult(eq, m_star, (lo, hi), profile, tuple(trace), res, R)


# ----------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class Candidate:
    m_star: float
    bracket: tuple[float, float]
    action: float
    error: str = ""


@dataclass(frozen=True)
class CensusReport:
    """Classification scan over central heights.

    ``transitions`` counts undershoot → crossing changes in increasing M;
    ``reverse`` counts crossing → undershoot changes.
    """

    params: ProblemParams
    heights: np.ndarray
    kinds: tuple[ShotKind, ...]
    transitions: int
    reverse: int
    intervals: tuple[tuple[float, float], ...]
    inconclusive: tuple[float, ...]
    candidates: tuple[Candidate, ...] = ()

    @property
    def ground_state_index(self) -> Optional[int]:
        """Candidate with the least action, if any."""
        ok = [i for i, c in enumerate(self.candidates) if not c.error]
        if not ok:
            return None
        return min(ok, key=lambda i: self.candidates[i].action)


def _census_shot(args):
    eq, M = args
    _, cls = integrate(eq, M)
    return cls.kind


def ground_state_census(params: ProblemParams, m_range: tuple[float, float] = M_SEARCH,
                        samples: int = 400, refine: bool = True, tol: float = 1e-12,
                        workers: int = 1) -> CensusReport:
    """Count classification changes over ``samples`` log-spaced heights in ``m_range``.

    Each undershoot → crossing interval is bisected to a candidate whose action
    is recorded, so several candidates can be compared.  Inconclusive shots are
    reported and skipped when counting.
    """
    if samples < 100:
        raise InvalidInputError("census needs at least 100 samples")
    lo, hi = m_range
    if not 0 < lo < hi:
        raise InvalidInputError(f"invalid height range {m_range}")
    eq = RadialEquation.from_params(params)
    heights = np.geomspace(lo, hi, samples)
    jobs = [(eq, float(M)) for M in heights]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            kinds = list(pool.map(_census_shot, jobs, chunksize=8))
    else:
        kinds = [_census_shot(j) for j in jobs]

    inconclusive = tuple(float(M) for M, k in zip(heights, kinds) if k is ShotKind.INCONCLUSIVE)
    known = [(float(M), k) for M, k in zip(heights, kinds)
             if k in (ShotKind.UNDERSHOOT, ShotKind.CROSSING)]
    forward, back, intervals = 0, 0, []
    for (m1, k1), (m2, k2) in zip(known, known[1:]):
        if k1 is ShotKind.UNDERSHOOT and k2 is ShotKind.CROSSING:
            forward += 1
            intervals.append((m1, m2))
        elif k1 is ShotKind.CROSSING and k2 is ShotKind.UNDERSHOOT:
            back += 1

    candidates = []
    if refine:
        for a, b in intervals:
            try:
                a2, b2 = bisect_height(eq, a, b, tol, [])
                prof, _ = profile_from_bracket(eq, a2, b2)
                action = functionals(prof, params).action
                candidates.append(Candidate(0.5 * (a2 + b2), (a2, b2), action))
            except (SolverError, ArithmeticError, ValueError) as exc:
                candidates.append(Candidate(math.nan, (a, b), math.nan, str(exc)))
    return CensusReport(params, heights, tuple(kinds), forward, back, tuple(intervals),
                        inconclusive, tuple(candidates))


def shot_classes(eq: EquationLike, heights: Sequence[float]) -> list[ShotClass]:
    """Classify a list of heights (convenience for scripts)."""
    eq = _as_equation(eq)
    return [integrate(eq, float(M))[1] for M in heights]
