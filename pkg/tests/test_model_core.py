"""Unit tests for the model charts and closed-form quantities.

Golden values below were derived by hand from the defining formulas and are
frozen here on purpose; if an implementation change moves them, the
implementation is wrong.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonic_flow import (
    ComplexSlope,
    CriticalLocus,
    DopingProfile,
    EntropyViolation,
    ModelParams,
    NotConstantDoping,
    SonicDoping,
    SonicSingularity,
    State,
    TransformedState,
    c1_trajectory_slope,
    c1_transition_slope,
    critical_point_analysis,
    rh_jump,
    rhs_primal,
    rhs_rho_independent,
    rhs_transformed,
    supersonic_min_density_bracket,
    tau0_bound,
    undamped_energy_potential,
    xi_curve,
)


def _params(tau, b, gamma=1.0):
    return ModelParams(tau=tau, doping=DopingProfile.constant(b), gamma=gamma)


# ---------------------------------------------------------------------------
# doping profiles


class TestDopingProfile:
    def test_constant(self):
        d = DopingProfile.constant(1.5)
        assert d(0.3) == 1.5
        assert d.b_lower == d.b_upper == 1.5
        assert d.is_constant and not d.is_sonic

    def test_sonic_detection(self):
        assert DopingProfile.constant(1.0).is_sonic
        assert not DopingProfile.constant(1.0 + 1e-9).is_sonic

    def test_sine_bounds(self):
        d = DopingProfile.sine_perturbed(1.0, -0.2, 1.0)
        x = np.linspace(0, 1, 101)
        vals = d(x)
        assert d.b_lower - 1e-12 <= vals.min() and vals.max() <= d.b_upper + 1e-12
        assert d.b_lower == pytest.approx(0.8, abs=1e-6)
        assert not d.is_constant

    def test_piecewise(self):
        d = DopingProfile.piecewise_constant([0.5], [2.0, 0.5])
        assert d(0.2) == 2.0 and d(0.7) == 0.5
        assert d.b_lower == 0.5 and d.b_upper == 2.0

    def test_tabulated_interpolates(self):
        d = DopingProfile.tabulated([0.0, 0.5, 1.0], [1.0, 2.0, 1.0])
        assert d(0.25) == pytest.approx(1.5)
        assert d.b_upper == 2.0

    def test_positivity_enforced(self):
        with pytest.raises(ValueError):
            DopingProfile.constant(-1.0)
        with pytest.raises(ValueError):
            DopingProfile.piecewise_constant([0.5], [1.0, 0.0])

    def test_round_trip_dict(self):
        d = DopingProfile.sine_perturbed(1.2, 0.1, 2.0)
        d2 = DopingProfile.from_dict(d.to_dict())
        assert d2(0.37) == pytest.approx(d(0.37), abs=0)


# ---------------------------------------------------------------------------
# states


class TestStates:
    def test_regime_tags(self):
        assert State(0.0, 1.0, 0.0).regime() == "sonic"
        assert State(0.0, 1.2, 0.0).regime() == "subsonic"
        assert State(0.0, 0.8, 0.0).regime() == "supersonic"

    def test_positive_density_required(self):
        with pytest.raises(ValueError):
            State(0.0, -0.1, 0.0)

    def test_transform_round_trip(self):
        p = _params(2.0, 1.2)
        s = State(0.3, 1.3, 0.2)
        t = TransformedState.from_state(s, p)
        back = t.to_state(0.3, p)
        assert back.rho == pytest.approx(s.rho, abs=1e-15)
        assert back.e == pytest.approx(s.e, abs=1e-15)

    def test_transform_values(self):
        p = _params(2.0, 1.2)
        t = TransformedState.from_state(State(0.0, 1.25, 0.9), p)
        assert t.n == pytest.approx(0.25)
        assert t.f == pytest.approx(0.9 - 1.0 / (2.0 * 1.25))


# ---------------------------------------------------------------------------
# primal chart


class TestRhsPrimal:
    def test_zero_at_equilibrium(self):
        p = _params(2.0, 1.5)
        d_rho, d_e = rhs_primal(State(0.0, 1.5, 1.0 / (2.0 * 1.5)), p)
        assert d_rho == pytest.approx(0.0, abs=1e-15)
        assert d_e == pytest.approx(0.0, abs=1e-15)

    def test_critical_locus_zero_slope(self):
        # rho*E = 1/tau with rho != b: density stationary, field not
        p = _params(1.0, 1.5)
        d_rho, d_e = rhs_primal(State(0.3, 2.0, 0.5), p)
        assert d_rho == pytest.approx(0.0, abs=1e-15)
        assert d_e == pytest.approx(0.5)

    def test_sonic_guard(self):
        p = _params(1.0, 1.5)
        with pytest.raises(SonicSingularity):
            rhs_primal(State(0.0, 1.0005, 0.3), p)

    @pytest.mark.parametrize("tau,b", [(0.5, 1.5), (2.0, 0.5), (15.0, 2.0)])
    def test_equilibrium_family(self, tau, b):
        p = _params(tau, b)
        d_rho, d_e = rhs_primal(State(0.1, b, 1.0 / (tau * b)), p)
        assert abs(d_rho) < 1e-14 and abs(d_e) < 1e-14

    def test_isentropic_coefficient(self):
        # gamma = 2: coefficient rho - rho^-2
        p = _params(1.0, 1.5, gamma=2.0)
        d_rho, _ = rhs_primal(State(0.0, 2.0, 1.0), p)
        assert d_rho == pytest.approx((2.0 - 1.0) / (2.0 - 0.25))


class TestRhsTransformed:
    def test_zero_at_saddle(self):
        p = _params(0.5, 1.5)
        d_n, d_f = rhs_transformed(TransformedState(0.5, 0.0), 0.0, p)
        assert d_n == pytest.approx(0.0, abs=1e-15)
        assert d_f == pytest.approx(0.0, abs=1e-15)

    def test_zero_field_derivative_on_xi(self):
        p = _params(0.1, 1.5)
        f = xi_curve(0.25, p)
        assert f == pytest.approx(0.01125, abs=1e-15)
        _, d_f = rhs_transformed(TransformedState(0.25, f), 0.0, p)
        assert d_f == pytest.approx(0.0, abs=1e-12)

    def test_chain_rule_against_primal(self):
        # same trajectory direction in either chart
        p = _params(2.0, 1.2)
        s = State(0.4, 1.3, 0.2)
        t = TransformedState.from_state(s, p)
        d_n, d_f = rhs_transformed(t, s.x, p)
        d_rho, d_e = rhs_primal(s, p)
        assert d_n == pytest.approx(d_rho, rel=1e-10)
        # F = E - 1/(tau rho) => F_x = E_x + rho_x/(tau rho^2)
        assert d_f == pytest.approx(d_e + d_rho / (p.tau * s.rho ** 2), rel=1e-10)

    def test_guard_near_sonic(self):
        p = _params(2.0, 1.2)
        with pytest.raises(SonicSingularity):
            rhs_transformed(TransformedState(1e-12, 0.1), 0.0, p)

    def test_gamma_rejected(self):
        p = _params(2.0, 1.2, gamma=1.4)
        with pytest.raises(ValueError):
            rhs_transformed(TransformedState(0.2, 0.1), 0.0, p)


class TestRhsRhoIndependent:
    def test_flat_at_sonic_line(self):
        p = _params(15.0, 1.5)
        dedr, dxdr = rhs_rho_independent(1.0, -0.5, p)
        assert dedr == pytest.approx(0.0, abs=1e-15)
        assert dxdr == pytest.approx(0.0, abs=1e-15)

    def test_golden_value(self):
        p = _params(15.0, 1.5)
        dedr, dxdr = rhs_rho_independent(0.8, -1.0, p)
        assert dedr == pytest.approx(-0.45432692307692285, rel=1e-12)
        assert dxdr == pytest.approx(0.6490384615384612, rel=1e-12)

    def test_critical_guard(self):
        p = _params(2.0, 1.5)
        with pytest.raises(CriticalLocus):
            rhs_rho_independent(2.0, 0.25, p)  # rho*E = 0.5 = 1/tau

    def test_variable_doping_needs_x(self):
        p = ModelParams(tau=2.0, doping=DopingProfile.sine_perturbed(1.5, 0.1))
        with pytest.raises(NotConstantDoping):
            rhs_rho_independent(0.8, -1.0, p)
        dedr, _ = rhs_rho_independent(0.8, -1.0, p, x=0.25)
        assert np.isfinite(dedr)

    @pytest.mark.parametrize(
        "rho,e", [(0.7, -0.8), (1.4, 0.6), (2.2, 0.4), (0.5, 1.2)]
    )
    def test_chart_consistency(self, rho, e):
        # (drho, de)/dx from the primal chart matches the rho-chart ratios
        p = _params(2.0, 1.3)
        if abs(rho * e - p.inv_tau) < 1e-2 or abs(rho - 1.0) < 1e-2:
            pytest.skip("too close to a singular set for the comparison")
        d_rho, d_e = rhs_primal(State(0.0, rho, e), p)
        dedr, dxdr = rhs_rho_independent(rho, e, p)
        assert dxdr * d_rho == pytest.approx(1.0, rel=1e-10)
        assert dedr * d_rho == pytest.approx(d_e, rel=1e-10)


# ---------------------------------------------------------------------------
# critical point


class TestCriticalPoint:
    def test_saddle_golden(self):
        info = critical_point_analysis(_params(15.0, 1.5))
        assert info.point[0] == pytest.approx(1.5, abs=0)
        assert info.point[1] == pytest.approx(2.0 / 45.0, rel=1e-14)
        assert info.kind == "saddle"
        eigs = sorted(e.real for e in info.eigenvalues)
        assert eigs[1] == pytest.approx(1.6836544649043486, rel=1e-10)
        assert eigs[0] == pytest.approx(-1.6036544649043485, rel=1e-10)

    def test_saddle_small_tau(self):
        info = critical_point_analysis(_params(0.5, 1.5))
        assert info.point == (1.5, pytest.approx(4.0 / 3.0))
        assert info.kind == "saddle"

    def test_stable_focus(self):
        info = critical_point_analysis(_params(15.0, 0.5))
        assert info.point[1] == pytest.approx(2.0 / 15.0)
        assert info.kind == "stable_focus"
        assert info.eigenvalues[0].real == pytest.approx(-0.022222222222222223, rel=1e-10)
        assert abs(info.eigenvalues[0].imag) == pytest.approx(0.4076430295076476, rel=1e-10)

    def test_stable_node_small_tau(self):
        # heavy damping turns the focus into a node
        info = critical_point_analysis(_params(0.05, 0.5))
        assert info.kind == "stable_node"
        assert all(e.imag == 0 and e.real < 0 for e in info.eigenvalues)

    @pytest.mark.parametrize("b", [0.3, 0.8, 1.2, 2.0, 3.0])
    def test_eigenvalue_product_sign(self, b):
        # product of eigenvalues is -b^3/(b^2-1): saddle iff b > 1
        info = critical_point_analysis(_params(1.0, b))
        prod = info.eigenvalues[0] * info.eigenvalues[1]
        assert prod.imag == pytest.approx(0.0, abs=1e-12)
        assert prod.real == pytest.approx(-b ** 3 / (b * b - 1.0), rel=1e-10)
        assert (info.kind == "saddle") == (b > 1.0)

    def test_guards(self):
        with pytest.raises(SonicDoping):
            critical_point_analysis(_params(1.0, 1.0))
        p = ModelParams(tau=1.0, doping=DopingProfile.sine_perturbed(1.5, 0.1))
        with pytest.raises(NotConstantDoping):
            critical_point_analysis(p)


# ---------------------------------------------------------------------------
# Xi curve


class TestXiCurve:
    def test_golden_value(self):
        assert xi_curve(0.25, _params(0.1, 1.5)) == pytest.approx(0.01125, abs=1e-16)

    def test_zeros(self):
        p = _params(0.3, 1.7)
        assert xi_curve(0.0, p) == 0.0
        assert xi_curve(0.7, p) == pytest.approx(0.0, abs=1e-15)

    def test_concavity(self):
        p = _params(0.2, 1.4)
        n = np.linspace(-0.9, 2.0, 400)
        vals = xi_curve(n, p)
        second = np.diff(vals, 2)
        assert np.all(second < 0.0)

    @given(
        n=st.floats(-0.9, 3.0),
        tau=st.floats(0.01, 50.0),
        b=st.floats(0.1, 3.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_defining_formula(self, n, tau, b):
        p = _params(tau, b)
        expected = -tau * (n + 1.0 - b) * (2.0 + n) * n / (1.0 + n)
        assert xi_curve(n, p) == pytest.approx(expected, rel=1e-12, abs=1e-300)


# ---------------------------------------------------------------------------
# jump conditions


class TestRhJump:
    def test_golden_pairs(self):
        assert rh_jump(0.8, -0.3) == (pytest.approx(1.25), -0.3)
        assert rh_jump(0.5, 0.0)[0] == pytest.approx(2.0)

    def test_momentum_flux_preserved(self):
        rho_r, _ = rh_jump(0.8, 0.1)
        assert 0.8 + 1.0 / 0.8 == pytest.approx(rho_r + 1.0 / rho_r, abs=1e-15)

    def test_entropy_violation(self):
        with pytest.raises(EntropyViolation):
            rh_jump(1.1, 0.0)
        with pytest.raises(EntropyViolation):
            rh_jump(1.0, 0.0)

    @given(rho_l=st.floats(1e-3, 1.0 - 1e-9), e=st.floats(-5.0, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_reciprocal_involution(self, rho_l, e):
        rho_r, e_r = rh_jump(rho_l, e)
        assert rho_r > 1.0 and e_r == e
        back, _ = rh_jump(1.0 / rho_r, e_r)
        assert back == pytest.approx(rho_r, rel=1e-14)


# ---------------------------------------------------------------------------
# transition slope and smallness thresholds


class TestC1Slope:
    def test_golden(self):
        assert c1_transition_slope(1.5, 0.1) == pytest.approx(0.05051025721682212, rel=1e-13)
        assert c1_trajectory_slope(1.5, 0.1) == pytest.approx(0.10102051443364424, rel=1e-13)

    def test_vanishes_as_b_to_one(self):
        assert c1_transition_slope(1.0 + 1e-12, 0.1) == pytest.approx(0.0, abs=1e-10)

    def test_complex_slope(self):
        # 1/tau^2 < 8(b-1) makes the quadratic discriminant negative
        with pytest.raises(ComplexSlope):
            c1_transition_slope(1.5, 0.6)

    def test_requires_b_above_one(self):
        with pytest.raises(ValueError):
            c1_transition_slope(0.9, 0.1)

    @pytest.mark.parametrize("b", [1.1, 1.3, 1.8])
    def test_slope_positive_and_increasing_in_b(self, b):
        tau = 0.05
        assert 0.0 < c1_transition_slope(b, tau) < c1_transition_slope(b + 0.1, tau)


class TestTau0Bound:
    def test_goldens(self):
        assert tau0_bound(1.5) == pytest.approx(0.15097027121927942, rel=1e-12)
        assert tau0_bound(2.0) == pytest.approx(0.10540925533894598, rel=1e-12)

    def test_limit_b_to_one(self):
        # 1/(3 sqrt 2): the slope term is inactive just above b = 1
        assert tau0_bound(1.0 + 1e-12) == pytest.approx(0.23570226039528014, rel=1e-9)

    def test_below_complex_slope_threshold(self):
        for b in (1.2, 1.5, 2.0, 3.0):
            tau = tau0_bound(b)
            # slope must be real for every tau below the bound
            assert c1_transition_slope(b, tau * 0.999) > 0.0


# ---------------------------------------------------------------------------
# frictionless energy relation and supersonic bracket


class TestUndampedQuantities:
    def test_potential_derivative(self):
        # d Psi / d rho = (rho - b)(rho^2 - 1)/rho^3, checked by central FD
        b = 1.5
        for rho in (0.4, 0.9, 1.3, 2.1):
            h = 1e-6
            fd = (undamped_energy_potential(rho + h, b) - undamped_energy_potential(rho - h, b)) / (2 * h)
            assert fd == pytest.approx((rho - b) * (rho ** 2 - 1.0) / rho ** 3, rel=1e-7)

    def test_bracket_golden(self):
        beta, gam = supersonic_min_density_bracket(1.0, 1.5)
        assert beta == pytest.approx(0.24631954606086112, rel=1e-12)
        assert gam == pytest.approx(0.9990659359788854, rel=1e-12)
        assert 0.0 < beta < gam < 1.0

    def test_bracket_orders_with_length(self):
        b1 = supersonic_min_density_bracket(0.5, 1.5)
        b2 = supersonic_min_density_bracket(1.5, 1.5)
        assert b2[0] < b1[0] and b2[1] < b1[1]
