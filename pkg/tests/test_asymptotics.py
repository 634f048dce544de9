import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from critgs.asymptotics import (
    SWEEP_COLUMNS,
    _fit,
    apxa_expansion,
    bubble,
    bubble_prime,
    decay_sup,
    exp_decay_check,
    extrapolate_ratio,
    fit_slope,
    limit_constant,
    lq_rate,
    require_conclusive,
    rescaled_identity_gap,
    smoothstep_cutoff,
    smoothstep_cutoff_prime,
    sweep,
    sweep_row,
)
from critgs.domain import ProblemParams, talenti
from critgs.errors import DivergentNormError, InconclusiveError, InvalidInputError, InvalidParameterError


class DictCache:
    def __init__(self):
        self.data, self.loads, self.stores = {}, 0, 0

    def load(self, params, tol):
        self.loads += 1
        return self.data.get((params, tol))

    def store(self, result, tol):
        self.stores += 1
        self.data[(result.params, tol)] = result


# ----------------------------------------------------------------------------
# limit constant


def test_limit_constant_frozen():
    assert limit_constant(5, 2.0) == pytest.approx(oracles.LIMIT_CONSTANT_5_2, rel=1e-10)


@pytest.mark.parametrize("d,p", [(5, 1.5), (6, 1.5), (7, 1.4)])
def test_limit_constant_against_beta_oracle(d, p):
    assert limit_constant(d, p) == pytest.approx(oracles.limit_constant(d, p), rel=1e-10)


@pytest.mark.parametrize("d", [3, 4])
def test_limit_constant_low_dimension(d):
    with pytest.raises(DivergentNormError):
        limit_constant(d, 1.5)


def test_limit_constant_power_range():
    with pytest.raises(InvalidParameterError):
        limit_constant(5, 2.5)


# ----------------------------------------------------------------------------
# fitting helpers


@given(st.floats(10.0, 100.0), st.floats(-50.0, 50.0))
def test_extrapolate_ratio_recovers_line(lam, c):
    a = np.array([1e-2, 4e-3, 1e-3, 2e-4])
    lam_fit, c_fit = extrapolate_ratio(a, lam + c * np.sqrt(a))
    assert lam_fit == pytest.approx(lam, rel=1e-9)
    assert c_fit == pytest.approx(c, rel=1e-6, abs=1e-6)


def test_extrapolate_ratio_needs_two_rows():
    with pytest.raises(InvalidInputError):
        extrapolate_ratio([1e-3], [1.0])


@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
def test_fit_slope_power_law(k, c):
    x = np.geomspace(1.0, 1e4, 5)
    assert fit_slope(x, c * x**k) == pytest.approx(k, abs=1e-9)


@given(st.floats(0.5, 3.0), st.floats(-5.0, 5.0), st.booleans())
def test_fit_model_recovers_exponent(k, b, log_factor):
    eps = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    x = eps * np.abs(np.log(eps)) if log_factor else eps
    assert _fit(eps, 3.0 * x**k * np.exp(b * eps), log_factor) == pytest.approx(k, abs=1e-8)


@pytest.mark.parametrize("d,q,expect", [
    (5, 2.0, ((10 - 9) / 4, False)),
    (6, 0.5, (6 / 4, True)),
    (6, 0.25, (4 * 1.25 / 4, False)),
])
def test_lq_rate(d, q, expect):
    got = lq_rate(d, q)
    assert got[0] == pytest.approx(expect[0]) and got[1] == expect[1]


# ----------------------------------------------------------------------------
# cut-off and bubbles


@given(st.floats(0.0, 5.0))
def test_cutoff_shape(r):
    chi = float(smoothstep_cutoff(r))
    assert 0.0 <= chi <= 1.0
    if r <= 1:
        assert chi == 1.0
    if r >= 2:
        assert chi == 0.0
    assert float(smoothstep_cutoff_prime(r)) <= 0.0


def test_cutoff_derivative():
    r = np.linspace(0.5, 2.5, 41)
    h = 1e-6
    fd = (smoothstep_cutoff(r + h) - smoothstep_cutoff(r - h)) / (2 * h)
    assert np.allclose(fd, smoothstep_cutoff_prime(r), atol=1e-6)


@given(st.integers(3, 7), st.floats(1e-4, 1.0), st.floats(0.0, 10.0))
def test_bubble_scaling(d, eps, r):
    direct = eps ** ((d - 2) / 4) * (eps + r**2 / (d * (d - 2))) ** (-(d - 2) / 2)
    assert float(bubble(d, eps, r)) == pytest.approx(direct, rel=1e-12)
    assert float(bubble(d, 1.0, r)) == pytest.approx(talenti(d, r), rel=1e-14)
    h = 1e-6 * (r + math.sqrt(eps))
    if r > h:
        fd = (bubble(d, eps, r + h) - bubble(d, eps, r - h)) / (2 * h)
        assert float(bubble_prime(d, eps, r)) == pytest.approx(float(fd), rel=1e-5, abs=1e-9)


# ----------------------------------------------------------------------------
# cut-off bubble expansion


class TestApxA:
    def test_d4_runs_and_bounds(self):
        rep = apxa_expansion(4, 2.0)
        assert rep.strict_bound
        assert rep.fits["grad_sq"][0] == pytest.approx(1.0, rel=0.1)
        assert len(rep.m_upper) == 4

    def test_grad_deviation_sign(self):
        rep = apxa_expansion(5, 2.0)
        # the cut-off adds Dirichlet energy and removes L^{2*} mass, both vanishing with ε
        assert all(g > 0 for g in rep.grad_dev)
        assert all(s < 0 for s in rep.l2s_dev)
        assert abs(rep.grad_dev[-1]) < abs(rep.grad_dev[0])

    @pytest.mark.parametrize("eps", [(1e-1, 1e-2, 1e-3), (0.5, 2.0, 1e-3, 1e-4)])
    def test_rejects_bad_eps(self, eps):
        with pytest.raises(InvalidInputError):
            apxa_expansion(5, 2.0, eps_list=eps)

    def test_rejects_bad_power(self):
        with pytest.raises(InvalidParameterError):
            apxa_expansion(5, 3.0)

    def test_require_conclusive(self):
        rep = apxa_expansion(5, 2.0)
        assert require_conclusive(rep) is rep
        bad = type(rep)(**{**rep.__dict__, "inconclusive": ("l2",)})
        with pytest.raises(InconclusiveError):
            require_conclusive(bad)


# ----------------------------------------------------------------------------
# sweep pieces


def test_sweep_columns_order():
    assert ",".join(SWEEP_COLUMNS) == (
        "omega,m_star,alpha,beta,beta_over_alpha,h1dot_dist,l2_dist,decay_sup,exp_tail_ok")


def test_sweep_rejects_unsorted():
    with pytest.raises(InvalidInputError):
        sweep(5, 2.0, [10.0, 1.0])
    with pytest.raises(InvalidInputError):
        sweep(5, 2.0, [])


def test_sweep_row_records_errors():
    row, state = sweep_row(ProblemParams(3, 2.0, 1.0))
    assert not row.ok and "InvalidParameterError" in row.error
    assert state is None and math.isnan(row.m_star)


def test_sweep_row_uses_cache(gs_521):
    cache = DictCache()
    cache.store(gs_521, 1e-12)
    row, _ = sweep_row(ProblemParams(5, 2.0, 1.0), 1e-12, cache)
    assert cache.loads == 1 and cache.stores == 1
    assert row.m_star == pytest.approx(gs_521.profile.center_value)


def test_state_diagnostics(state_521):
    assert exp_decay_check(state_521).holds
    assert decay_sup(state_521) > 1.0
    assert rescaled_identity_gap(state_521) < 1e-6


def test_sweep_rows_shape(sweep_521):
    for w, (row, state) in sweep_521.items():
        assert row.ok and row.omega == w
        assert row.exp_tail_ok and row.identity_gap < 1e-6
        assert row.l2_dist > row.h1dot_dist > 0
