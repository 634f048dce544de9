import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critgs.domain import ProblemParams, functionals, talenti
from critgs.errors import InvalidInputError, InvalidParameterError, NoGroundStateError
from critgs.radial_ode import (
    RadialEquation,
    ShotKind,
    energy,
    ground_state_census,
    integrate,
    ode_residual,
    shoot,
    shot_classes,
)

# [DERIVED] scripts/oracle_ground_state_height.py: mpmath Taylor shooting in r,
# 20 digits, final bracket [36.8388838199899, 36.8388838202227]
M_STAR_521 = 36.8388838201063
M_STAR_521_REL = 1e-11 + 0.12e-9 / 36.84


class TestEquation:
    def test_from_params(self):
        eq = RadialEquation.from_params(ProblemParams(5, 2, 3.0))
        assert (eq.d, eq.p, eq.omega, eq.sub, eq.crit) == (5, 2.0, 3.0, 1.0, 1.0)
        assert eq.q == pytest.approx(7 / 3)

    def test_source(self):
        eq = RadialEquation(5, 2.0, 1.0)
        # u'' + (d-1)/r u' = source(u) = ωu - u^p - u^q, odd below zero
        assert eq.source(2.0) == pytest.approx(2.0 - 4.0 - 2 ** (7 / 3))
        assert eq.source(-2.0) == pytest.approx(-eq.source(2.0))

    def test_length_scale_shrinks_with_height(self):
        eq = RadialEquation(5, 2.0, 1.0)
        assert eq.length_scale(100.0) < eq.length_scale(1.0) <= 1.0

    def test_tail_shape(self):
        assert RadialEquation(5, 2.0, 4.0).tail_shape() == (2.0, 2.0)
        assert RadialEquation(5, 2.0, 0.0, sub=0.0).tail_shape() == (0.0, 3.0)


class TestIntegrate:
    def test_low_height_undershoots(self):
        _, cls = integrate(ProblemParams(5, 2, 1.0), 1.0)
        assert cls.kind is ShotKind.UNDERSHOOT

    def test_high_height_crosses(self):
        _, cls = integrate(ProblemParams(5, 2, 1.0), 1e3)
        assert cls.kind is ShotKind.CROSSING

    def test_source_nonnegative_start_is_undershoot(self):
        # f(M) = -M + M² + M^{7/3} < 0 only for small M
        _, cls = integrate(ProblemParams(5, 2, 1.0), 1e-3)
        assert cls.kind is ShotKind.UNDERSHOOT

    def test_rejects_nonpositive_height(self):
        with pytest.raises((InvalidInputError, ValueError)):
            integrate(ProblemParams(5, 2, 1.0), 0.0)

    def test_critical_case_reproduces_talenti(self):
        # ω = 0 and no subcritical term: u(0) = 1 gives exactly W
        eq = RadialEquation(5, 2.0, 0.0, sub=0.0, crit=1.0)
        tr, _ = integrate(eq, 1.0, dense=True, horizon=1e3)
        r = np.geomspace(1e-3, 1e2, 60)
        u, _ = tr.sample(r)
        w = talenti(5, r)
        assert np.max(np.abs(u - w) / w) < 1e-6

    @settings(max_examples=10)
    @given(st.floats(0.5, 50.0))
    def test_scaling_symmetry_of_critical_equation(self, lam):
        # u_λ(r) = λ u(λ^{2/(d-2)} r) solves the same critical equation
        eq = RadialEquation(5, 2.0, 0.0, sub=0.0, crit=1.0)
        tr, _ = integrate(eq, lam, dense=True, horizon=1e2)
        r = np.geomspace(1e-2, 10.0, 20) / lam ** (2 / 3)
        u, _ = tr.sample(r)
        assert np.allclose(u, lam * talenti(5, lam ** (2 / 3) * r), rtol=1e-6)

    def test_shot_classes_helper(self):
        kinds = [c.kind for c in shot_classes(ProblemParams(5, 2, 1.0), [1.0, 1e3])]
        assert kinds == [ShotKind.UNDERSHOOT, ShotKind.CROSSING]


class TestShoot:
    def test_height_matches_frozen_value(self, gs_521):
        assert gs_521.m_star == pytest.approx(M_STAR_521, rel=M_STAR_521_REL)
        lo, hi = gs_521.bracket
        assert lo < gs_521.m_star < hi and (hi - lo) <= 1e-12 * lo

    def test_profile_is_positive_decreasing(self, gs_521):
        prof = gs_521.profile
        assert prof.is_positive_decreasing()
        assert prof.tail is not None and prof.tail.rate == pytest.approx(1.0)
        assert prof.center_value == pytest.approx(gs_521.m_star, rel=1e-6)

    def test_residual(self, gs_521):
        assert gs_521.ode_residual <= 1e-6
        eq = RadialEquation.from_params(gs_521.params)
        assert ode_residual(gs_521.profile, eq) == pytest.approx(gs_521.ode_residual)

    def test_energy_decreases(self, gs_521):
        e = energy(gs_521.profile, RadialEquation.from_params(gs_521.params))
        assert np.all(np.diff(e) <= 1e-9 * abs(e[0]))

    def test_nehari_and_pohozaev_vanish(self, gs_521):
        rep = functionals(gs_521.profile, gs_521.params)
        scale = rep.grad_sq + rep.mass
        assert abs(rep.nehari) <= 1e-6 * scale
        assert abs(rep.pohozaev) <= 1e-6 * scale

    def test_trace_records_shots(self, gs_521):
        assert gs_521.n_shots == len(gs_521.trace) > 10

    def test_d3_requires_p_between_3_and_5(self):
        with pytest.raises(InvalidParameterError):
            shoot(ProblemParams(3, 2.0, 1.0))

    def test_no_bracket(self):
        with pytest.raises(NoGroundStateError):
            shoot(ProblemParams(5, 2, 1.0), m_range=(1e-3, 2.0))

    def test_pure_power_ground_state(self):
        # the subcritical problem without the critical term still has a ground state
        res = shoot(RadialEquation(5, 2.0, 1.0, sub=1.0, crit=0.0))
        assert res.profile.is_positive_decreasing()
        assert res.ode_residual <= 1e-6


class TestCensus:
    def test_single_transition(self):
        rep = ground_state_census(ProblemParams(5, 2, 1.0), (1.0, 1e3), samples=100)
        assert rep.transitions == 1 and rep.reverse == 0
        assert len(rep.candidates) == 1
        assert rep.candidates[0].m_star == pytest.approx(M_STAR_521, rel=1e-9)
        assert rep.ground_state_index == 0
        assert math.isfinite(rep.candidates[0].action)

    def test_without_refinement(self):
        rep = ground_state_census(ProblemParams(5, 2, 1.0), (1.0, 1e3), samples=100, refine=False)
        assert rep.candidates == () and rep.ground_state_index is None
        a, b = rep.intervals[0]
        assert a < M_STAR_521 < b

    def test_rejects_small_sample(self):
        with pytest.raises(InvalidInputError):
            ground_state_census(ProblemParams(5, 2, 1.0), samples=10)

    def test_rejects_bad_range(self):
        with pytest.raises(InvalidInputError):
            ground_state_census(ProblemParams(5, 2, 1.0), (10.0, 1.0))
