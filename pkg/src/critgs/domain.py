"""Core radial types, the Talenti family, radial quadrature and the action functionals.

Radial functions on R^d live on geometric grids ``r_i = r_0 rho^i``.  Integrals
are taken in ``t = log r`` with composite Boole weights, so the surface factor
``|S^{d-1}| r^{d-1} dr = |S^{d-1}| r^d dt`` is folded into the weights.  The ball
``r < r_0`` and the exterior ``r > r_N`` are integrated separately from the
profile's core and tail models.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    DivergentNormError,
    IncompleteProfileError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidParameterError,
)

DEFAULT_STEP = 0.004
TALENTI_R0 = 1e-4
TALENTI_RMAX = 1e6


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _check_dimension(d) -> int:
    if int(d) != d or d < 3:
        raise InvalidDimensionError(f"dimension must be an integer >= 3, got {d}")
    return int(d)


def critical_power(d: int) -> float:
    """(d+2)/(d-2), the exponent of the critical nonlinearity."""
    return (d + 2) / (d - 2)


@dataclass(frozen=True)
class ProblemParams:
    """Parameters of ``-Δu + ωu = u^p + u^{(d+2)/(d-2)}`` on R^d."""

    d: int
    p: float
    omega: float

    def __post_init__(self):
        _check_dimension(self.d)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "omega", float(self.omega))
        if not 1.0 < self.p < self.q_crit:
            raise InvalidParameterError(
                f"need 1 < p < {self.q_crit:g} for d={self.d}, got p={self.p}"
            )
        if not self.omega > 0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")

    @property
    def q_crit(self) -> float:
        return critical_power(self.d)

    @property
    def two_star(self) -> float:
        return 2.0 * self.d / (self.d - 2)

    @property
    def gamma(self) -> float:
        return 4.0 - (self.d - 2) * (self.p - 1.0)


# ----------------------------------------------------------------------------
# grids and profiles


def _boole_weights(n: int, h: float) -> np.ndarray:
    if n < 5 or (n - 1) % 4:
        raise ValueError(f"Boole rule needs n = 4m + 1 >= 5 nodes, got {n}")
    w = np.empty(n)
    w[0::4] = 14.0
    w[1::2] = 32.0
    w[2::4] = 12.0
    w[0] = w[-1] = 7.0
    return w * (2.0 * h / 45.0)


def log_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order derivative d/dt of samples on a uniform t-grid with spacing h."""
    f = np.asarray(values, dtype=float)
    n = f.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    out = np.empty(n)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12.0 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12.0 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12.0 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12.0 * h)
    return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Geometric radial grid with quadrature weights including ``|S^{d-1}| r^{d-1}``.

    ``n`` must be of the form ``4m + 1`` (composite Boole rule in log r).
    """

    d: int
    r0: float
    r_max: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_dimension(self.d)
        if not (0 < self.r0 < self.r_max):
            raise ValueError(f"need 0 < r0 < r_max, got {self.r0}, {self.r_max}")
        t = np.linspace(math.log(self.r0), math.log(self.r_max), self.n)
        nodes = np.exp(t)
        nodes[0], nodes[-1] = self.r0, self.r_max
        w = _boole_weights(self.n, self.step) * sphere_area(self.d) * nodes ** self.d
        nodes.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @classmethod
    def geometric(cls, d: int, r0: float, r_max: float, step: float = DEFAULT_STEP) -> "RadialGrid":
        """Grid with log-spacing at most ``step`` between ``r0`` and ``r_max``."""
        m = max(1, math.ceil(math.log(r_max / r0) / (4.0 * step)))
        return cls(d, r0, r_max, 4 * m + 1)

    @property
    def step(self) -> float:
        return math.log(self.r_max / self.r0) / (self.n - 1)

    def shell_volume(self) -> float:
        return sphere_area(self.d) * (self.r_max**self.d - self.r0**self.d) / self.d

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.d == other.d and self.n == other.n
            and self.r0 == other.r0 and self.r_max == other.r_max
        )


@dataclass(frozen=True)
class TailModel:
    """``u(r) ≈ A r^{-s} e^{-k r}`` beyond the last grid node."""

    amplitude: float
    rate: float
    power: float

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * r ** (-self.power) * np.exp(-self.rate * r)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        return -(self.rate + self.power / r) * self.value(r)


ExactFn = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial function sampled on a grid, with models for ``r < r_0`` and ``r > r_N``.

    ``core`` is ``None`` for functions smooth at the origin (quadratic extension
    from the first node).  Otherwise it stores the tail model of the Kelvin image,
    i.e. ``u(r) = r^{-(d-2)} core(1/r)`` for ``r < r_0``.  ``exact``, when given,
    is a closed form ``r -> (u, u')`` used in place of interpolation.
    """

    grid: RadialGrid
    values: np.ndarray
    derivs: np.ndarray
    tail: Optional[TailModel] = None
    core: Optional[TailModel] = None
    exact: Optional[ExactFn] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        dv = np.array(self.derivs, dtype=float)
        if v.shape != (self.grid.n,) or dv.shape != (self.grid.n,):
            raise InvalidInputError("values and derivs must match the grid size")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
            raise InvalidInputError("profile values must be finite")
        v.setflags(write=False)
        dv.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivs", dv)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def center_value(self) -> float:
        """Value extrapolated to r = 0."""
        if self.exact is not None:
            return float(self.exact(np.array([0.0]))[0][0])
        if self.core is None:
            return float(self.values[0] - 0.5 * self.derivs[0] * self.grid.r0)
        return math.nan

    def is_zero(self) -> bool:
        return not np.any(self.values) and (self.tail is None or self.tail.amplitude == 0)

    def is_positive_decreasing(self) -> bool:
        return bool(np.all(self.values > 0) and np.all(np.diff(self.values) < 0))

    def scaled(self, lam: float) -> "RadialProfile":
        tail = core = exact = None
        if self.tail is not None:
            tail = TailModel(lam * self.tail.amplitude, self.tail.rate, self.tail.power)
        if self.core is not None:
            core = TailModel(lam * self.core.amplitude, self.core.rate, self.core.power)
        if self.exact is not None:
            f = self.exact

            def exact(r):
                u, du = f(r)
                return lam * u, lam * du

        return RadialProfile(self.grid, lam * self.values, lam * self.derivs, tail, core, exact)

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        t = np.log(self.grid.nodes)
        return CubicHermiteSpline(t, self.values, self.derivs * self.grid.nodes)

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """Values and radial derivatives at arbitrary radii ``r >= 0``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.exact is not None:
            u, du = self.exact(r)
            return np.asarray(u, dtype=float), np.asarray(du, dtype=float)
        u = np.empty_like(r)
        du = np.empty_like(r)
        g = self.grid
        inner = r < g.r0
        outer = r > g.r_max
        mid = ~(inner | outer)
        if np.any(mid):
            t = np.log(r[mid])
            u[mid] = self._spline(t)
            du[mid] = self._spline(t, 1) / r[mid]
        if np.any(inner):
            ri = r[inner]
            if self.core is None:
                u0, du0 = self.values[0], self.derivs[0]
                u[inner] = u0 - du0 * (g.r0**2 - ri**2) / (2.0 * g.r0)
                du[inner] = du0 * ri / g.r0
            else:
                n = g.d - 2
                rho = 1.0 / ri
                tv, td = self.core.value(rho), self.core.deriv(rho)
                u[inner] = ri ** (-n) * tv
                du[inner] = -n * ri ** (-n - 1) * tv - ri ** (-n - 2) * td
        if np.any(outer):
            if self.tail is None:
                raise IncompleteProfileError("profile has no tail model beyond its grid")
            ro = r[outer]
            u[outer] = self.tail.value(ro)
            du[outer] = self.tail.deriv(ro)
        return u, du


# ----------------------------------------------------------------------------
# integration


def ensure_integrable(profile: RadialProfile, power: float, *, gradient: bool = False,
                      what: str = "integral") -> None:
    """Raise DivergentNormError when ``∫|u|^power`` (or ``∫|∇u|^2``) diverges at 0 or ∞.

    Only algebraic (rate 0) tails or cores can diverge; the test compares the
    decay exponent of the integrand with the dimension.
    """
    d = profile.d
    tail = profile.tail
    if tail is not None and tail.rate == 0 and tail.amplitude != 0:
        decay = 2.0 * (tail.power + 1.0) if gradient else power * tail.power
        if decay <= d:
            raise DivergentNormError(
                f"{what} diverges at infinity: integrand ~ r^-{decay:g} against r^{d - 1}"
            )
    core = profile.core
    if core is not None and core.rate == 0 and core.amplitude != 0:
        growth = core.power - (d - 2)
        exponent = 2.0 * (growth - 1.0) if gradient else power * growth
        if exponent + d <= 0:
            raise DivergentNormError(f"{what} diverges at the origin")


def _quad(fn, a, b) -> float:
    with warnings.catch_warnings():
        # roundoff warnings only mean the 1e-12 target was not certified
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        val, _ = _integrate.quad(fn, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
    return float(val)


Integrand = Callable[..., np.ndarray]


def radial_integral(integrand: Integrand, profiles: Sequence[RadialProfile],
                    grid: Optional[RadialGrid] = None) -> float:
    """``∫_{R^d} integrand(r, (u1, u1'), (u2, u2'), ...) dx`` for radial profiles.

    Nodes come from ``grid`` (default: the first profile's grid); the inner ball
    and exterior are integrated adaptively from each profile's core and tail.
    """
    profiles = list(profiles)
    if grid is None:
        grid = profiles[0].grid
    d = grid.d
    area = sphere_area(d)

    def sample(r, on_nodes=False):
        out = []
        for prof in profiles:
            if on_nodes and prof.exact is None and prof.grid.same_as(grid):
                out.append((prof.values, prof.derivs))
            else:
                out.append(prof.evaluate(r))
        return out

    body = grid.integrate(integrand(grid.nodes, *sample(grid.nodes, True)))

    def core_fn(r):
        rr = np.array([r])
        return float(integrand(rr, *sample(rr))[0]) * area * r ** (d - 1)

    r0, rn = grid.r0, grid.r_max

    def tail_fn(t):
        r = rn * math.exp(t)
        rr = np.array([r])
        return float(integrand(rr, *sample(rr))[0]) * area * r**d

    inner = _quad(core_fn, 0.0, r0)
    # stop before r^d overflows, then close with a log-linear remainder
    t_end = max(8.0, 700.0 / d - math.log(rn))
    t_mid = min(40.0, 0.5 * t_end)
    outer = _quad(tail_fn, 0.0, t_mid) + _quad(tail_fn, t_mid, t_end)
    f1, f0 = tail_fn(t_end), tail_fn(t_end - 1.0)
    if f1 != 0.0 and f0 != 0.0 and f1 / f0 > 0:
        kappa = math.log(f0 / f1)
        if kappa <= 0:
            raise DivergentNormError("integrand does not decay beyond the grid")
        outer += f1 / kappa
    return body + inner + outer


def lp_integral(u: RadialProfile, power: float) -> float:
    """``∫ |u|^power dx``."""
    ensure_integrable(u, power, what=f"L^{power:g} norm")
    return radial_integral(lambda r, a: np.abs(a[0]) ** power, [u])


def gradient_sq(u: RadialProfile) -> float:
    """``∫ |∇u|^2 dx``."""
    ensure_integrable(u, 2.0, gradient=True, what="Dirichlet energy")
    return radial_integral(lambda r, a: a[1] ** 2, [u])


# ----------------------------------------------------------------------------
# Talenti family


def _talenti_base(d: int, r):
    return 1.0 + np.asarray(r, dtype=float) ** 2 / (d * (d - 2))


def talenti(d: int, r):
    """``W(r) = (1 + r^2/(d(d-2)))^{-(d-2)/2}``, the critical bubble with W(0) = 1."""
    _check_dimension(d)
    if np.any(np.asarray(r) < 0):
        raise InvalidInputError("radius must be nonnegative")
    out = _talenti_base(d, r) ** (-(d - 2) / 2)
    return float(out) if np.ndim(out) == 0 else out


def talenti_prime(d: int, r):
    _check_dimension(d)
    r = np.asarray(r, dtype=float)
    out = -(r / d) * _talenti_base(d, r) ** (-d / 2)
    return float(out) if np.ndim(out) == 0 else out


def talenti_second(d: int, r):
    _check_dimension(d)
    r = np.asarray(r, dtype=float)
    b = _talenti_base(d, r)
    out = -(1.0 / d) * b ** (-d / 2) + (r**2 / (d * (d - 2))) * b ** (-d / 2 - 1)
    return float(out) if np.ndim(out) == 0 else out


def lambda_w(d: int, r):
    """``ΛW = (d-2)/2 W + r W'``, the generator of the scaling family of W."""
    _check_dimension(d)
    if np.any(np.asarray(r) < 0):
        raise InvalidInputError("radius must be nonnegative")
    r = np.asarray(r, dtype=float)
    out = 0.5 * (d - 2) * talenti(d, r) + r * talenti_prime(d, r)
    return float(out) if np.ndim(out) == 0 else out


def lambda_w_prime(d: int, r):
    r = np.asarray(r, dtype=float)
    return 0.5 * d * talenti_prime(d, r) + r * talenti_second(d, r)


def talenti_profile(d: int, r0: float = TALENTI_R0, r_max: float = TALENTI_RMAX,
                    step: float = DEFAULT_STEP, grid: Optional[RadialGrid] = None) -> RadialProfile:
    """W as a profile with exact evaluation and its algebraic tail model."""
    d = _check_dimension(d)
    g = grid if grid is not None else RadialGrid.geometric(d, r0, r_max, step)
    c = d * (d - 2.0)
    tail = TailModel(c ** ((d - 2) / 2), 0.0, d - 2.0)
    return RadialProfile(g, talenti(d, g.nodes), talenti_prime(d, g.nodes), tail=tail,
                         exact=lambda r: (talenti(d, r) * np.ones_like(r), talenti_prime(d, r)))


def lambda_w_profile(d: int, r0: float = TALENTI_R0, r_max: float = TALENTI_RMAX,
                     step: float = DEFAULT_STEP, grid: Optional[RadialGrid] = None) -> RadialProfile:
    d = _check_dimension(d)
    g = grid if grid is not None else RadialGrid.geometric(d, r0, r_max, step)
    c = d * (d - 2.0)
    tail = TailModel(-0.5 * (d - 2) * c ** ((d - 2) / 2), 0.0, d - 2.0)
    return RadialProfile(g, lambda_w(d, g.nodes), lambda_w_prime(d, g.nodes), tail=tail,
                         exact=lambda r: (lambda_w(d, r) * np.ones_like(r), lambda_w_prime(d, r)))


def sobolev_sigma(d: int) -> float:
    """Best Sobolev constant σ = ‖∇W‖² / ‖W‖_{2*}², computed by quadrature."""
    w = talenti_profile(d)
    two_star = 2.0 * d / (d - 2)
    return gradient_sq(w) / lp_integral(w, two_star) ** (2.0 / two_star)


# ----------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class FunctionalReport:
    action: float
    nehari: float
    pohozaev: float
    i_func: float
    grad_sq: float
    mass: float
    lp1: float
    l2s: float

    @classmethod
    def from_norms(cls, params: ProblemParams, grad_sq: float, mass: float,
                   lp1: float, l2s: float) -> "FunctionalReport":
        p1, s = params.p + 1.0, params.two_star
        w = params.omega
        action = 0.5 * grad_sq + 0.5 * w * mass - lp1 / p1 - l2s / s
        nehari = grad_sq + w * mass - lp1 - l2s
        pohozaev = grad_sq / s + 0.5 * w * mass - lp1 / p1 - l2s / s
        i_func = (params.p - 1.0) / (2.0 * p1) * (grad_sq + w * mass) \
            + params.gamma / (2.0 * params.d * p1) * l2s
        return cls(action, nehari, pohozaev, i_func, grad_sq, mass, lp1, l2s)

    def identity_grad(self, params: ProblemParams) -> tuple[float, float]:
        """(S - P, ‖∇u‖²/d)."""
        return self.action - self.pohozaev, self.grad_sq / params.d

    def identity_mass(self, params: ProblemParams) -> tuple[float, float]:
        s, p1 = params.two_star, params.p + 1.0
        lhs = self.pohozaev - self.nehari / s
        rhs = params.omega / params.d * self.mass - (s - p1) / (s * p1) * self.lp1
        return lhs, rhs

    def identity_mixed(self, params: ProblemParams) -> tuple[float, float]:
        s, p1 = params.two_star, params.p + 1.0
        lhs = self.pohozaev - self.nehari / p1
        rhs = (params.p - 1.0) / (2.0 * p1) * params.omega * self.mass \
            - (s - p1) / (s * p1) * (self.grad_sq - self.l2s)
        return lhs, rhs


def functionals(u: RadialProfile, params: ProblemParams) -> FunctionalReport:
    """Action, Nehari, Pohozaev and I functionals of a radial profile."""
    if u.d != params.d:
        raise InvalidInputError("profile dimension does not match params")
    if u.is_zero():
        return FunctionalReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    if u.tail is None and u.exact is None:
        raise IncompleteProfileError("functionals need a tail model")
    return FunctionalReport.from_norms(
        params,
        gradient_sq(u),
        lp_integral(u, 2.0),
        lp_integral(u, params.p + 1.0),
        lp_integral(u, params.two_star),
    )


def nehari_scale(u: RadialProfile, params: ProblemParams,
                 report: Optional[FunctionalReport] = None) -> float:
    """The unique λ > 0 with N_ω(λu) = 0."""
    if u.is_zero():
        raise InvalidInputError("the zero profile has no Nehari scaling")
    rep = report if report is not None else functionals(u, params)
    return nehari_root(rep.grad_sq + params.omega * rep.mass, rep.lp1, rep.l2s,
                       params.p, params.two_star)


def nehari_root(quad: float, lp1: float, l2s: float, p: float, two_star: float) -> float:
    """Positive root of ``λ² quad − λ^{p+1} lp1 − λ^{2*} l2s``."""
    if quad <= 0 or lp1 + l2s <= 0:
        raise InvalidInputError("degenerate norms: no positive Nehari root")

    def phi(x):  # reduced equation in x = log λ, strictly decreasing
        return quad - math.exp((p - 1) * x) * lp1 - math.exp((two_star - 2) * x) * l2s

    lo, hi = -1.0, 1.0
    while phi(lo) <= 0:
        lo *= 2
    while phi(hi) >= 0:
        hi *= 2
    return math.exp(optimize.brentq(phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def lemma45_check(d: int, q: float, step: float = DEFAULT_STEP) -> tuple[float, float]:
    """Both sides of ``∫ W^q ΛW = −(4−(d−2)(q−1)) / (2(q+1)) ‖W‖_{q+1}^{q+1}``."""
    d = _check_dimension(d)
    qc = critical_power(d)
    if not 1.0 <= q <= qc + 1e-12:
        raise InvalidParameterError(f"need 1 <= q <= {qc:g}, got {q}")
    if (d - 2) * (q + 1) <= d:
        raise DivergentNormError(f"W^{q + 1:g} is not integrable in dimension {d}")
    w = talenti_profile(d, step=step)
    lw = lambda_w_profile(d, grid=w.grid)
    lhs = radial_integral(lambda r, a, b: a[0] ** q * b[0], [w, lw])
    coeff = 4.0 - (d - 2) * (q - 1.0)
    if abs(coeff) < 1e-12:
        coeff = 0.0
    rhs = -coeff / (2.0 * (q + 1.0)) * lp_integral(w, q + 1.0)
    return lhs, rhs
