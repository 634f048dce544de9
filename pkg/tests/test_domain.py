import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from critgs.domain import (
    FunctionalReport,
    ProblemParams,
    RadialGrid,
    RadialProfile,
    TailModel,
    critical_power,
    ensure_integrable,
    functionals,
    gradient_sq,
    lambda_w,
    lambda_w_prime,
    lemma45_check,
    log_derivative,
    lp_integral,
    nehari_root,
    nehari_scale,
    radial_integral,
    sobolev_sigma,
    sphere_area,
    talenti,
    talenti_prime,
    talenti_profile,
    talenti_second,
)
from critgs.errors import (
    DivergentNormError,
    IncompleteProfileError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidParameterError,
)


def gaussian(d, a=1.0, amp=1.0, r_max=8.0):
    """``amp·exp(-a r²)`` sampled on a grid with a matching (fast) tail."""
    grid = RadialGrid.geometric(d, 1e-4, r_max, 0.01)
    r = grid.nodes
    u = amp * np.exp(-a * r**2)
    # exponential tail matching value and slope at r_max; the remainder is negligible
    k = 2 * a * r_max
    tail = TailModel(amp * math.exp(a * r_max**2), k, 0.0)
    return RadialProfile(grid, u, -2 * a * r * u, tail=tail)


# ----------------------------------------------------------------------------
# parameters


class TestProblemParams:
    def test_valid(self):
        p = ProblemParams(5, 2, 1)
        assert p.q_crit == pytest.approx(7 / 3)
        assert p.two_star == pytest.approx(10 / 3)
        assert p.gamma == pytest.approx(1.0)
        assert isinstance(p.p, float)

    @pytest.mark.parametrize("d", [2, 1, 4.5])
    def test_bad_dimension(self, d):
        with pytest.raises(InvalidDimensionError):
            ProblemParams(d, 1.5, 1.0)

    @pytest.mark.parametrize("p", [1.0, 0.5, 7 / 3, 3.0])
    def test_bad_power(self, p):
        with pytest.raises(InvalidParameterError):
            ProblemParams(5, p, 1.0)

    @pytest.mark.parametrize("w", [0.0, -1.0])
    def test_bad_omega(self, w):
        with pytest.raises(InvalidParameterError):
            ProblemParams(5, 2.0, w)

    def test_frozen(self):
        p = ProblemParams(4, 2, 1)
        with pytest.raises(AttributeError):
            p.d = 5


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


# ----------------------------------------------------------------------------
# grids and quadrature


class TestGrid:
    def test_geometric_is_boole_sized(self):
        g = RadialGrid.geometric(5, 1e-3, 10.0, 0.01)
        assert (g.n - 1) % 4 == 0
        assert g.step <= 0.01
        assert g.nodes[0] == 1e-3 and g.nodes[-1] == 10.0

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            RadialGrid(3, 0.1, 1.0, 10)

    def test_rejects_bad_range(self):
        with pytest.raises(ValueError):
            RadialGrid(3, 1.0, 0.5, 9)

    def test_weights_integrate_shell_volume(self):
        g = RadialGrid.geometric(4, 0.01, 3.0, 0.01)
        assert g.integrate(np.ones(g.n)) == pytest.approx(g.shell_volume(), rel=1e-10)

    def test_arrays_read_only(self):
        g = RadialGrid.geometric(3, 0.1, 1.0)
        with pytest.raises(ValueError):
            g.nodes[0] = 1.0

    @settings(max_examples=15)
    @given(st.integers(3, 7), st.floats(0.3, 3.0))
    def test_gaussian_mass(self, d, a):
        # ∫ e^{-2a r²} dx = (π/(2a))^{d/2}
        u = gaussian(d, a, r_max=12.0 / math.sqrt(a))
        assert lp_integral(u, 2.0) == pytest.approx((math.pi / (2 * a)) ** (d / 2), rel=1e-9)


def test_log_derivative_fourth_order():
    errs = []
    for h in (0.02, 0.01):
        t = np.arange(0, 2, h)
        errs.append(np.max(np.abs(log_derivative(np.sin(t), h) - np.cos(t))))
    assert errs[1] < errs[0] / 10


# ----------------------------------------------------------------------------
# profiles


class TestProfile:
    def test_read_only_and_shape(self):
        g = RadialGrid.geometric(3, 0.1, 1.0, 0.05)
        with pytest.raises(InvalidInputError):
            RadialProfile(g, np.ones(3), np.ones(3))
        with pytest.raises(InvalidInputError):
            RadialProfile(g, np.full(g.n, np.nan), np.zeros(g.n))

    def test_interpolation_and_tail(self):
        u = gaussian(3)
        r = np.array([0.0, 0.5e-4, 0.3, 1.7, 8.5])
        val, der = u.evaluate(r)
        # cubic Hermite in log r at step 0.01
        assert np.allclose(val[:4], np.exp(-r[:4] ** 2), rtol=1e-8, atol=1e-12)
        assert np.allclose(der[:4], -2 * r[:4] * np.exp(-r[:4] ** 2), atol=1e-8)
        assert val[4] < val[3]

    def test_missing_tail(self):
        g = RadialGrid.geometric(3, 0.1, 1.0, 0.05)
        u = RadialProfile(g, np.ones(g.n), np.zeros(g.n))
        with pytest.raises(IncompleteProfileError):
            u.evaluate(2.0)
        with pytest.raises(IncompleteProfileError):
            functionals(u, ProblemParams(3, 4, 1.0))

    def test_scaled(self):
        u = gaussian(4)
        v = u.scaled(3.0)
        assert np.allclose(v.values, 3 * u.values)
        assert v.tail.amplitude == pytest.approx(3 * u.tail.amplitude)

    def test_center_value(self):
        assert gaussian(5, amp=2.0).center_value == pytest.approx(2.0, rel=1e-7)


# ----------------------------------------------------------------------------
# Talenti bubble


@given(st.integers(3, 7), st.one_of(st.just(0.0), st.floats(1e-6, 1e4)))
def test_talenti_solves_critical_equation(d, r):
    q = critical_power(d)
    if r == 0.0:
        res = d * talenti_second(d, r) + 1.0  # limit of the radial Laplacian at 0
    else:
        res = talenti_second(d, r) + (d - 1) / r * talenti_prime(d, r) + talenti(d, r) ** q
    assert abs(res) <= 1e-8


@given(st.integers(3, 7), st.floats(1e-3, 1e3))
def test_lambda_w_definition(d, r):
    expect = 0.5 * (d - 2) * talenti(d, r) + r * talenti_prime(d, r)
    assert lambda_w(d, r) == pytest.approx(expect, rel=1e-12, abs=1e-15)
    h = 1e-4 * r
    fd = (lambda_w(d, r + h) - lambda_w(d, r - h)) / (2 * h)
    assert lambda_w_prime(d, r) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_talenti_scalar_and_negative():
    assert isinstance(talenti(5, 1.0), float)
    assert talenti(5, 0.0) == 1.0
    with pytest.raises(ValueError):
        talenti(5, -1.0)


@pytest.mark.parametrize("d", [3, 4, 5, 6, 7])
def test_talenti_norms_against_beta_oracle(d):
    w = talenti_profile(d)
    s = 2 * d / (d - 2)
    assert gradient_sq(w) == pytest.approx(oracles.TALENTI_GRAD_SQ[d], rel=1e-10)
    assert lp_integral(w, s) == pytest.approx(oracles.TALENTI_GRAD_SQ[d], rel=1e-10)


def test_frozen_oracle_matches_formula():
    for d, val in oracles.TALENTI_GRAD_SQ.items():
        assert oracles.w_grad_sq(d) == pytest.approx(val, rel=1e-14)
        assert oracles.w_lp(d, 2 * d / (d - 2)) == pytest.approx(val, rel=1e-14)


@pytest.mark.parametrize("d", [3, 4])
def test_w_not_in_l2_low_dimensions(d):
    with pytest.raises(DivergentNormError):
        lp_integral(talenti_profile(d), 2.0)


def test_ensure_integrable_gradient_ok():
    ensure_integrable(talenti_profile(3), 2.0, gradient=True)


def test_sobolev_sigma_power():
    d = 5
    assert sobolev_sigma(d) ** (d / 2) == pytest.approx(oracles.TALENTI_GRAD_SQ[d], rel=1e-9)


# ----------------------------------------------------------------------------
# functionals


def test_zero_profile_functionals():
    g = RadialGrid.geometric(5, 0.1, 1.0, 0.05)
    z = RadialProfile(g, np.zeros(g.n), np.zeros(g.n))
    rep = functionals(z, ProblemParams(5, 2, 1.0))
    assert rep == FunctionalReport(0, 0, 0, 0, 0, 0, 0, 0)


norms = st.floats(0.01, 100.0)


@given(norms, norms, norms, norms, st.floats(1.05, 2.3), st.floats(0.1, 10.0))
def test_identities_hold_for_any_norms(g, m, lp1, l2s, p, w):
    params = ProblemParams(5, p, w)
    rep = FunctionalReport.from_norms(params, g, m, lp1, l2s)
    for lhs, rhs in (rep.identity_grad(params), rep.identity_mass(params), rep.identity_mixed(params)):
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * (g + w * m + lp1 + l2s))


@settings(max_examples=8)
@given(st.floats(0.3, 3.0), st.floats(0.5, 5.0))
def test_nehari_scale_zeroes_nehari(a, w):
    params = ProblemParams(5, 2.0, w)
    u = gaussian(5, a, r_max=12 / math.sqrt(a))
    lam = nehari_scale(u, params)
    assert functionals(u.scaled(lam), params).nehari == pytest.approx(0.0, abs=1e-8 * lam**2)


def test_nehari_root_monotone_solution():
    lam = nehari_root(3.0, 1.0, 1.0, 2.0, 10 / 3)
    assert 3.0 - lam * 1.0 - lam ** (4 / 3) == pytest.approx(0.0, abs=1e-12)


def test_radial_integral_two_profiles():
    u, v = gaussian(3, 1.0), gaussian(3, 2.0)
    val = radial_integral(lambda r, a, b: a[0] * b[0], [u, v])
    assert val == pytest.approx((math.pi / 3) ** 1.5, rel=1e-9)


# ----------------------------------------------------------------------------
# ∫ W^q ΛW identity


@pytest.mark.parametrize("d,q", [(5, 2.0), (5, 7 / 3), (6, 2.0), (7, 1.5)])
def test_weighted_identity_against_oracle(d, q):
    lhs, rhs = lemma45_check(d, q)
    scale = oracles.w_lp(d, q + 1)
    assert abs(lhs - rhs) <= 1e-6 * scale
    assert rhs == pytest.approx(oracles.lemma45_rhs(d, q), rel=1e-9, abs=1e-9 * scale)


def test_weighted_identity_rejects_divergent():
    with pytest.raises(DivergentNormError):
        lemma45_check(3, 1.5)


def test_weighted_identity_rejects_range():
    with pytest.raises(InvalidParameterError):
        lemma45_check(5, 3.0)
