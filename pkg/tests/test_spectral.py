
import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh
from scipy.special import jn_zeros, spherical_jn

import oracles
from critgs.domain import ProblemParams, RadialGrid, RadialProfile, TailModel, lambda_w_profile, talenti_profile
from critgs.errors import InvalidInputError
from critgs.radial_ode import RadialEquation, shoot
from critgs.spectral import (
    RadialOperator,
    _decay_rate,
    critical_operator,
    eigenfunction_match,
    free_operator,
    kernel_witness_check,
    lambda_w_target,
    linearize,
    linearize_equation,
    linearize_rescaled,
    spectrum_near_zero,
)


class TestOperator:
    def test_free_operator_spectrum(self):
        d, w, R = 5, 2.0, 20.0
        rep = spectrum_near_zero(free_operator(d, w, R), k=4)
        assert np.all(rep.eigenvalues >= w)
        # Dirichlet ball: ω + (j_{ν,k}/R)² with ν = (d-2)/2; for d = 5 these are the zeros of j_1
        zeros = [brentq(lambda x: spherical_jn(1, x), k * np.pi + 0.1, (k + 1) * np.pi - 0.1) for k in range(1, 5)]
        expect = w + (np.array(zeros) / R) ** 2
        assert np.allclose(rep.eigenvalues, expect, rtol=5e-5)
        assert rep.refinement_delta < 1e-5

    def test_free_operator_even_dimension(self):
        d, w, R = 4, 1.0, 15.0
        rep = spectrum_near_zero(free_operator(d, w, R), k=3)
        expect = w + (jn_zeros(1, 3) / R) ** 2
        assert np.allclose(rep.eigenvalues, expect, rtol=5e-5)

    def test_zero_profile_spectrum_above_omega(self):
        g = RadialGrid.geometric(5, 1e-3, 50.0, 0.01)
        z = RadialProfile(g, np.zeros(g.n), np.zeros(g.n), tail=TailModel(0.0, 1.0, 0.0))
        rep = spectrum_near_zero(linearize(z, ProblemParams(5, 2, 3.0), radius=30.0), k=4)
        assert np.all(rep.eigenvalues >= 3.0)

    def test_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            RadialOperator(5, lambda r: 0 * r, 10.0, bc="neumann")
        with pytest.raises(InvalidInputError):
            RadialOperator(5, lambda r: 0 * r, -1.0)
        with pytest.raises(InvalidInputError):
            spectrum_near_zero(free_operator(5, 1.0), k=2)

    def test_matrix_symmetric(self):
        H = critical_operator(5, radius=50.0, h=0.01).matrix()
        assert abs(H - H.T).max() <= 1e-14 * abs(H).max()

    def test_decay_rate(self):
        assert _decay_rate(5, 0.0, 10.0) == pytest.approx(0.3)
        # d = 3: u = e^{-mr}/r, so -u'/u = m + 1/r
        assert _decay_rate(3, 4.0, 10.0) == pytest.approx(2.0 + 0.1, rel=1e-12)


class TestCritical:
    @pytest.fixture(scope="class")
    def op(self):
        return critical_operator(5)

    def test_lambda_w_is_kernel_witness(self, op):
        assert kernel_witness_check(op, lambda_w_profile(5)) <= 1e-6

    def test_w_is_not(self, op):
        # L W = -(q-1) W^q
        got = kernel_witness_check(op, talenti_profile(5))
        assert got == pytest.approx(oracles.kernel_ratio_w(5, op.radius), rel=1e-3)

    def test_near_zero_eigenvector_is_lambda_w(self, op):
        rep = spectrum_near_zero(op, k=4, refine=False)
        idx, mismatch = eigenfunction_match(rep, lambda_w_target(5))
        assert abs(rep.eigenvalues[idx]) < 1e-6
        assert mismatch <= 1e-4

    def test_match_improves_with_grid(self):
        mm = []
        for h in (2e-3, 1e-3):
            rep = spectrum_near_zero(critical_operator(5, h=h), k=3, refine=False)
            mm.append(eigenfunction_match(rep, lambda_w_target(5))[1])
        assert mm[1] < mm[0] / 3  # second order in h

    def test_one_negative_direction(self):
        # the critical linearization has exactly one negative radial eigenvalue
        H = critical_operator(5, radius=50.0, h=0.01).matrix()
        vals = np.sort(eigsh(H, k=2, sigma=-2.0, which="LM", return_eigenvectors=False))
        # the second one is the ΛW kernel mode, zero up to discretization error
        assert vals[0] < -0.1 and abs(vals[1]) < 1e-4

    def test_needs_vectors(self, op):
        rep = spectrum_near_zero(op, k=3, refine=False)
        rep_no = type(rep)(rep.eigenvalues, rep.residuals, rep.gap, rep.radius, rep.scale, rep.n_cells)
        with pytest.raises(InvalidInputError):
            eigenfunction_match(rep_no, lambda_w_target(5))


class TestGroundStateOperators:
    def test_potential_far_field(self, gs_521):
        op = linearize(gs_521.profile, gs_521.params)
        assert op.potential_fn(np.array([op.radius]))[0] == pytest.approx(1.0, rel=1e-6)

    def test_action_on_ground_state(self, gs_521):
        # L_u u = -(p-1) u^p - 4/(d-2) u^q for a solution u
        params = gs_521.params
        u = gs_521.profile
        op = linearize(u, params)
        lhs = op.apply(u)[2:-2]
        v = u.values[2:-2]
        rhs = -(params.p - 1) * v**params.p - 4 / 3 * v ** (7 / 3)
        assert np.max(np.abs(lhs - rhs)) <= 1e-5 * np.max(np.abs(rhs))

    def test_gap_positive_and_scaled(self, gs_521, state_521):
        rep = spectrum_near_zero(linearize(gs_521.profile, gs_521.params), k=4)
        rep_s = spectrum_near_zero(linearize_rescaled(state_521), k=4)
        assert rep.gap > 0 and rep_s.gap > 0
        assert rep_s.gap_original_units == pytest.approx(rep.gap, rel=1e-2)
        assert np.all(rep.residuals <= 1e-6)

    def test_lambda_w_not_in_kernel_of_l_phi(self, sweep_521):
        state = sweep_521[1e3][1]
        op = linearize_rescaled(state)
        assert kernel_witness_check(op, lambda_w_profile(5)) > 1e-4

    def test_pure_power_operator_nondegenerate(self):
        res = shoot(RadialEquation(5, 2.0, 1.0, sub=1.0, crit=0.0))
        rep = spectrum_near_zero(linearize_equation(res), k=4)
        assert rep.gap > 0.1
        assert rep.refinement_delta < 0.2
