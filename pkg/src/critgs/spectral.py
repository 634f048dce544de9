"""Radial Schrödinger operators ``-Δ + V(r)`` and their spectrum near zero.

The operator is discretized by finite volumes on a sinh-stretched grid
``r = a sinh(t)``: uniform (spacing ≈ a h) through the core, geometric in the
far field.  With cell volumes ``m_i = ∫ r^{d-1} dr`` and face fluxes
``K = r_f^{d-1} / Δr`` the weak form ``∫ r^{d-1}(u'v' + V uv)`` becomes
``S + diag(m V)`` with S symmetric tridiagonal.  The symmetric matrix
``H = m^{-1/2} S m^{-1/2} + diag(V)`` is handed to ARPACK in shift-invert mode.

Boundary conditions: the face at r = 0 carries no flux (radial symmetry).  At
the outer radius R either ``u(R) = 0`` (``"dirichlet"``) or the Robin
condition ``u'(R) = -κ u(R)`` matching the decaying solution of
``-Δu + V(R)u = 0`` (``"decay"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.special import kve

from .domain import ProblemParams, RadialProfile, critical_power, lambda_w, log_derivative, talenti
from .errors import InvalidInputError, IterationLimitError
from .radial_ode import RadialEquation, ShootingResult
from .rescale import RescaledState

PotentialFn = Callable[[np.ndarray], np.ndarray]
DEFAULT_H = 0.004
RESIDUAL_TOL = 1e-6


def _decay_rate(d: int, mass_sq: float, R: float) -> float:
    """κ = -u'/u at R for the decaying solution of ``-Δu + m² u = 0``."""
    if mass_sq <= 0:
        return (d - 2) / R
    m = math.sqrt(mass_sq)
    nu = 0.5 * (d - 2)
    # u = r^{-ν} K_ν(m r);  u'/u = -m K_{ν+1}(mr)/K_ν(mr)
    return m * kve(nu + 1, m * R) / kve(nu, m * R)


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """``-Δ_rad + V`` on ``[0, R]`` discretized on a sinh grid.

    ``scale`` converts eigenvalues to the units of the original problem (for
    operators built on a rescaled profile).
    """

    d: int
    potential_fn: PotentialFn
    radius: float
    core: float = 1.0
    h: float = DEFAULT_H
    bc: str = "dirichlet"
    scale: float = 1.0
    label: str = ""
    nodes: np.ndarray = field(init=False, repr=False)
    faces: np.ndarray = field(init=False, repr=False)
    volumes: np.ndarray = field(init=False, repr=False)
    potential: np.ndarray = field(init=False, repr=False)
    stiffness: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.bc not in ("dirichlet", "decay"):
            raise InvalidInputError(f"unknown boundary condition {self.bc!r}")
        if not (self.radius > 0 and self.core > 0 and self.h > 0):
            raise InvalidInputError("radius, core and h must be positive")
        d = self.d
        t_max = math.asinh(self.radius / self.core)
        n = max(8, int(math.ceil(t_max / self.h)))
        ht = t_max / n
        faces = self.core * np.sinh(ht * np.arange(n + 1))
        faces[-1] = self.radius
        nodes = self.core * np.sinh(ht * (np.arange(n) + 0.5))
        volumes = np.diff(faces**d) / d
        pot = np.asarray(self.potential_fn(nodes), dtype=float)
        if not np.all(np.isfinite(pot)):
            raise InvalidInputError("potential is not finite on the grid")
        flux = faces[1:-1] ** (d - 1) / np.diff(nodes)
        diag = np.zeros(n)
        diag[:-1] += flux
        diag[1:] += flux
        R = self.radius
        gap = R - nodes[-1]
        if self.bc == "dirichlet":
            diag[-1] += R ** (d - 1) / gap
        else:
            kappa = _decay_rate(d, float(pot[-1]), R)
            # u(R) ≈ u_N / (1 + κ gap) from the one-sided Robin relation
            diag[-1] += R ** (d - 1) * kappa / (1.0 + kappa * gap)
        S = sparse.diags([-flux, diag, -flux], [-1, 0, 1], format="csr")
        for name, val in (("nodes", nodes), ("faces", faces), ("volumes", volumes),
                          ("potential", pot), ("stiffness", S)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.nodes.size

    def matrix(self) -> sparse.csr_matrix:
        """Symmetric H = m^{-1/2} S m^{-1/2} + diag(V)."""
        w = sparse.diags(1.0 / np.sqrt(self.volumes))
        return (w @ self.stiffness @ w + sparse.diags(self.potential)).tocsr()

    def refined(self, factor: float = 2.0) -> "RadialOperator":
        """The same operator with ``factor`` times as many cells."""
        return replace(self, h=self.h / factor)

    def widened(self, factor: float = 2.0) -> "RadialOperator":
        return replace(self, radius=self.radius * factor)

    def apply(self, profile: RadialProfile) -> np.ndarray:
        """``(-Δ + V) u`` at the profile's nodes, with u'' from a 4th-order difference of u'."""
        if profile.d != self.d:
            raise InvalidInputError("dimension mismatch")
        g = profile.grid
        r = g.nodes
        d2u = log_derivative(profile.derivs, g.step) / r
        return -d2u - (self.d - 1) / r * profile.derivs + self.potential_fn(r) * profile.values


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenpairs of a RadialOperator closest to zero.

    ``eigenvalues`` are in the operator's own units (multiply by ``scale`` for
    the original problem).  ``vectors[:, j]`` holds nodal values normalized in
    the weighted L² norm.  ``refinement_delta`` is the relative change of the
    gap when the cell count is doubled and ``truncation_delta`` when R is.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    gap: float
    radius: float
    scale: float
    n_cells: int
    refinement_delta: float = math.nan
    truncation_delta: float = math.nan
    vectors: Optional[np.ndarray] = field(default=None, repr=False)
    nodes: Optional[np.ndarray] = field(default=None, repr=False)
    volumes: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gap_original_units(self) -> float:
        return self.gap * self.scale

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.eigenvalues < 0))


def _eigs(op: RadialOperator, k: int):
    H = op.matrix()
    k = min(k, op.n - 2)
    try:
        vals, vecs = eigsh(H, k=k, sigma=0.0, which="LM", tol=0, maxiter=20 * op.n)
    except ArpackNoConvergence as exc:
        raise IterationLimitError(
            f"ARPACK did not converge for {op.label or 'operator'} "
            f"({len(exc.eigenvalues)} of {k} eigenpairs)"
        ) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # relative to max(1, |λ|) so operators in original units are judged fairly
    res = np.linalg.norm(H @ vecs - vecs * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    res = res / np.maximum(1.0, np.abs(vals))
    u = vecs / np.sqrt(op.volumes)[:, None]
    return vals, res, u


def spectrum_near_zero(op: RadialOperator, k: int = 5, refine: bool = True,
                       truncation: bool = False, residual_tol: float = RESIDUAL_TOL) -> SpectrumReport:
    """k eigenpairs nearest 0 by shift-invert, with refinement diagnostics.

    Raises
    ------
    IterationLimitError
        ARPACK fails to converge or a residual exceeds ``residual_tol``.
    """
    if k < 3:
        raise InvalidInputError("k must be at least 3")
    vals, res, u = _eigs(op, k)
    if np.any(res > residual_tol):
        raise IterationLimitError(f"eigen-residual {res.max():.3g} exceeds {residual_tol:g}")
    gap = float(np.min(np.abs(vals)))
    ref = trunc = math.nan
    if refine:
        v2 = _eigs(op.refined(), k)[0]
        ref = abs(float(np.min(np.abs(v2))) - gap) / gap
    if truncation:
        v3 = _eigs(op.widened(), k)[0]
        trunc = abs(float(np.min(np.abs(v3))) - gap) / gap
    return SpectrumReport(vals, res, gap, op.radius, op.scale, op.n, ref, trunc, u,
                          op.nodes, op.volumes)


# ----------------------------------------------------------------------------
# operators of interest


def _half_radius(profile: RadialProfile) -> float:
    u = profile.values
    idx = int(np.argmax(u < 0.5 * u[0]))
    return float(profile.grid.nodes[idx]) if idx > 0 else float(profile.grid.r_max)


def _decay_radius(profile: RadialProfile, level: float) -> float:
    """Smallest radius where the profile (with its tail) falls below ``level·u(0)``."""
    u0 = profile.values[0]
    r = profile.grid.nodes
    below = np.nonzero(profile.values < level * u0)[0]
    if below.size:
        return float(r[below[0]])
    R = profile.grid.r_max
    for _ in range(200):
        R *= 1.25
        if profile.evaluate(R)[0][0] < level * u0:
            return R
    raise InvalidInputError("profile does not decay to the requested level")


def _profile_values(profile: RadialProfile) -> Callable[[np.ndarray], np.ndarray]:
    def f(r):
        r = np.asarray(r, dtype=float)
        return np.maximum(profile.evaluate(r)[0], 0.0)

    return f


def linearize(u: RadialProfile, params: ProblemParams, radius: Optional[float] = None,
              h: float = DEFAULT_H, level: float = 1e-10) -> RadialOperator:
    """``L_u = -Δ + ω - p u^{p-1} - (d+2)/(d-2) u^{4/(d-2)}`` in the units of u.

    The wall sits where u < ``level``·u(0) unless ``radius`` is given.
    """
    d, p, w = params.d, params.p, params.omega
    q = critical_power(d)
    f = _profile_values(u)

    def pot(r):
        v = f(r)
        return w - p * v ** (p - 1) - q * v ** (q - 1)

    R = radius if radius is not None else _decay_radius(u, level)
    return RadialOperator(d, pot, R, core=_half_radius(u), h=h, label=f"L_u d={d} p={p:g} omega={w:g}")


def linearize_rescaled(state: RescaledState, radius: Optional[float] = None,
                       h: float = DEFAULT_H, level: float = 1e-10) -> RadialOperator:
    """``-Δ + α - pβΦ̃^{p-1} - (d+2)/(d-2)Φ̃^{4/(d-2)}``, i.e. L_Φ in rescaled units.

    Eigenvalues of L_Φ are ``M^{4/(d-2)}`` times these; ``scale`` records the factor.
    """
    d, p = state.params.d, state.params.p
    q = critical_power(d)
    a, b = state.alpha, state.beta
    f = _profile_values(state.profile)

    def pot(r):
        v = f(r)
        return a - p * b * v ** (p - 1) - q * v ** (q - 1)

    R = radius if radius is not None else _decay_radius(state.profile, level)
    return RadialOperator(d, pot, R, core=1.0, h=h, scale=state.m_omega ** (4.0 / (d - 2)),
                          label=f"L_Phi d={d} p={p:g} omega={state.params.omega:g}")


def linearize_equation(result: ShootingResult, radius: Optional[float] = None,
                       h: float = DEFAULT_H, level: float = 1e-10) -> RadialOperator:
    """Linearization of a general RadialEquation solution (e.g. the pure-power U)."""
    eq = result.params
    if isinstance(eq, ProblemParams):
        eq = RadialEquation.from_params(eq)
    f = _profile_values(result.profile)

    def pot(r):
        v = f(r)
        return eq.omega - eq.sub * eq.p * v ** (eq.p - 1) - eq.crit * eq.q * v ** (eq.q - 1)

    R = radius if radius is not None else _decay_radius(result.profile, level)
    return RadialOperator(eq.d, pot, R, core=_half_radius(result.profile), h=h,
                          label=f"L d={eq.d} p={eq.p:g}")


def critical_operator(d: int, radius: float = 1e3, h: float = 2.5e-4,
                      bc: str = "decay") -> RadialOperator:
    """``-Δ - (d+2)/(d-2) W^{4/(d-2)}``, whose radial kernel is spanned by ΛW."""
    q = critical_power(d)

    def pot(r):
        return -q * talenti(d, np.asarray(r, dtype=float)) ** (q - 1)

    return RadialOperator(d, pot, radius, core=1.0, h=h, bc=bc, label=f"critical d={d}")


def free_operator(d: int, omega: float, radius: float = 20.0, h: float = DEFAULT_H) -> RadialOperator:
    """``-Δ + ω`` with a Dirichlet wall."""
    return RadialOperator(d, lambda r: np.full_like(np.asarray(r, dtype=float), omega), radius,
                          core=1.0, h=h, label=f"free d={d}")


# ----------------------------------------------------------------------------
# kernel diagnostics


def _weighted_norm(profile: RadialProfile, values: np.ndarray) -> float:
    return math.sqrt(profile.grid.integrate(values**2))


def kernel_witness_check(op: RadialOperator, candidate: RadialProfile) -> float:
    """``‖L c‖ / ‖c‖`` in L²(r^{d-1}dr) over the candidate's grid inside the wall."""
    if candidate.is_zero():
        raise InvalidInputError("candidate must be nonzero")
    Lc = op.apply(candidate)
    mask = candidate.grid.nodes <= op.radius
    w = candidate.grid.weights * mask
    num = float(np.dot(w, Lc**2))
    den = float(np.dot(w, candidate.values**2))
    return math.sqrt(num / den)


def eigenfunction_match(report: SpectrumReport, target: Callable[[np.ndarray], np.ndarray]) -> tuple[int, float]:
    """Index of the eigenvector with largest overlap with ``target`` and their relative L² mismatch.

    Both are normalized in ``L²(r^{d-1}dr)`` over the truncated ball and the
    sign is aligned before differencing.
    """
    if report.vectors is None:
        raise InvalidInputError("report carries no eigenvectors")
    m = report.volumes
    t = np.asarray(target(report.nodes), dtype=float)
    t = t / math.sqrt(np.dot(m, t**2))
    best, best_ov = 0, -1.0
    for j in range(report.vectors.shape[1]):
        v = report.vectors[:, j]
        ov = abs(np.dot(m, v * t)) / math.sqrt(np.dot(m, v**2))
        if ov > best_ov:
            best, best_ov = j, ov
    v = report.vectors[:, best]
    v = v / math.sqrt(np.dot(m, v**2))
    v = v * np.sign(np.dot(m, v * t))
    return best, float(math.sqrt(np.dot(m, (v - t) ** 2)))


def lambda_w_target(d: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: lambda_w(d, np.asarray(r, dtype=float))
