"""Critical rescaling, Kelvin inversion and distances to the Talenti bubble.

With ``M = Φ(0)`` the rescaled profile ``Φ̃(x) = Φ(M^{-2/(d-2)} x) / M`` has
``Φ̃(0) = 1`` and solves

    -ΔΦ̃ + αΦ̃ = βΦ̃^p + Φ̃^{(d+2)/(d-2)},   α = ω M^{-4/(d-2)},  β = M^{p-1-4/(d-2)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .domain import (
    ProblemParams,
    RadialGrid,
    RadialProfile,
    TailModel,
    ensure_integrable,
    radial_integral,
    talenti_profile,
)
from .errors import IncompleteProfileError, InvalidInputError, OutOfRangeError
from .radial_ode import RadialEquation, ShootingResult, ode_residual


@dataclass(frozen=True, eq=False)
class RescaledState:
    """``(M, α, β)`` and the rescaled profile Φ̃ of one ground state."""

    params: ProblemParams
    m_omega: float
    alpha: float
    beta: float
    profile: RadialProfile

    @property
    def equation(self) -> RadialEquation:
        """The rescaled ODE, with coefficients (α, β, 1)."""
        return RadialEquation(self.params.d, self.params.p, self.alpha, self.beta, 1.0)

    @property
    def beta_over_alpha(self) -> float:
        return self.beta / self.alpha

    def residual(self) -> float:
        return ode_residual(self.profile, self.equation)


def scaling_coefficients(params: ProblemParams, m: float) -> tuple[float, float]:
    """(α, β) for central height ``m``."""
    d, p = params.d, params.p
    e = 4.0 / (d - 2)
    return params.omega * m ** (-e), m ** (p - 1.0 - e)


def dilate(u: RadialProfile, length: float, height: float) -> RadialProfile:
    """``x -> height · u(x / length)`` as a profile on the dilated grid."""
    g = u.grid
    grid = RadialGrid(g.d, g.r0 * length, g.r_max * length, g.n)
    tail = core = None
    if u.tail is not None:
        t = u.tail
        tail = TailModel(height * t.amplitude * length**t.power, t.rate / length, t.power)
    if u.core is not None:
        # core stores T with u(r) = r^{-(d-2)} T(1/r); in 1/r the dilation inverts
        c = u.core
        n = g.d - 2
        core = TailModel(height * c.amplitude * length**n * length ** (-c.power),
                         c.rate * length, c.power)
    return RadialProfile(grid, height * u.values, height * u.derivs / length, tail, core)


def rescale(result: ShootingResult, params: Optional[ProblemParams] = None) -> RescaledState:
    """Critical rescaling of a located ground state."""
    params = params if params is not None else result.params
    if not isinstance(params, ProblemParams):
        raise InvalidInputError("rescaling needs ProblemParams")
    m = result.profile.center_value
    if not m > 0:
        raise InvalidInputError("ground-state profile must have a positive centre")
    alpha, beta = scaling_coefficients(params, m)
    prof = dilate(result.profile, m ** (2.0 / (params.d - 2)), 1.0 / m)
    return RescaledState(params, m, alpha, beta, prof)


# ----------------------------------------------------------------------------
# Kelvin transform


def kelvin(u: RadialProfile, d: Optional[int] = None) -> RadialProfile:
    """``K[u](ρ) = ρ^{-(d-2)} u(1/ρ)``, sampled on the inverted grid.

    The tail of u becomes the core of K[u] and vice versa; a smooth centre
    ``u(0)`` becomes the algebraic tail ``u(0) ρ^{-(d-2)}``.
    """
    d = u.d if d is None else d
    if d != u.d:
        raise InvalidInputError("dimension does not match the profile")
    if u.tail is None and u.exact is None:
        raise IncompleteProfileError("Kelvin transform needs the tail model of u")
    n = d - 2
    g = u.grid
    image = RadialGrid(d, 1.0 / g.r_max, 1.0 / g.r0, g.n)
    rho = image.nodes
    uv, du = u.values[::-1], u.derivs[::-1]
    values = rho ** (-n) * uv
    derivs = -n * rho ** (-n - 1) * uv - rho ** (-n - 2) * du

    if u.core is None:
        tail = TailModel(u.center_value, 0.0, float(n))
    else:
        tail = u.core
    exact = None
    if u.exact is not None:
        f = u.exact

        def exact(r):
            r = np.asarray(r, dtype=float)
            val, der = f(1.0 / r)
            return r ** (-n) * val, -n * r ** (-n - 1) * val - r ** (-n - 2) * der

    return RadialProfile(image, values, derivs, tail=tail, core=u.tail, exact=exact)


# ----------------------------------------------------------------------------
# distances


def _check_lq(d: int, q: float) -> None:
    if not q > d / (d - 2):
        raise OutOfRangeError(f"L^{q:g} distance needs q > d/(d-2) = {d / (d - 2):g}")


def profile_distance(u: RadialProfile, v: RadialProfile, norm: Union[str, float] = "h1dot",
                     grid: Optional[RadialGrid] = None) -> float:
    """``‖u - v‖`` in Ḣ¹ (``norm="h1dot"``) or in L^q (``norm=q``).

    Both profiles are evaluated on ``grid`` (default: the finer of their grids)
    and beyond it through their own core and tail models.
    """
    if u.d != v.d:
        raise InvalidInputError("profiles live in different dimensions")
    if grid is None:
        grid = u.grid if u.grid.step <= v.grid.step else v.grid
    if norm == "h1dot":
        for w in (u, v):
            ensure_integrable(w, 2.0, gradient=True, what="Dirichlet energy")
        val = radial_integral(lambda r, a, b: (a[1] - b[1]) ** 2, [u, v], grid)
        return math.sqrt(max(val, 0.0))
    q = float(norm)
    if q < 1:
        raise InvalidInputError(f"L^q distance needs q >= 1, got {q}")
    val = radial_integral(lambda r, a, b: np.abs(a[0] - b[0]) ** q, [u, v], grid)
    return max(val, 0.0) ** (1.0 / q)


def h1dot_norm(u: RadialProfile) -> float:
    ensure_integrable(u, 2.0, gradient=True, what="Dirichlet energy")
    return math.sqrt(radial_integral(lambda r, a: a[1] ** 2, [u]))


def talenti_distance(state: Union[RescaledState, RadialProfile],
                     q_list: Iterable[float] = (2.0,)) -> dict[str, float]:
    """Distances from Φ̃ to W: key ``"h1dot"`` plus ``"L<q>"`` for each q.

    W is evaluated in closed form on the nodes of Φ̃.  Each q must exceed
    d/(d-2), the range where W - Φ̃ is in L^q.
    """
    prof = state.profile if isinstance(state, RescaledState) else state
    d = prof.d
    q_list = [float(q) for q in q_list]
    for q in q_list:
        _check_lq(d, q)
    w = talenti_profile(d, grid=prof.grid)
    out = {"h1dot": profile_distance(prof, w, "h1dot", prof.grid)}
    for q in q_list:
        out[f"L{q:g}"] = profile_distance(prof, w, q, prof.grid)
    return out
