# Recurrence solver tests
# Forward solve, gauge map, residuals and growth fits on closed-form solutions

import math

import numpy as np
import pytest

from coeffs import builtin
from core.errors import DegenerateWindow
from core.recurrence import (EQ1, EQ2, RecurrenceSolution, energy_profile, estimate_growth, gauge_map,
                             orthonormal_polynomials, residuals, solve, subexponential_profile)


class TestSolve:
    """Forward recurrence on models with known solutions"""

    def test_free_eq1_at_zero_is_linear(self, free_model):
        """a = 1, b = 0, lambda = 0 in eq1 gives y_n = n + 1"""
        sol = solve(free_model, 0.0, EQ1, N=200)
        np.testing.assert_allclose(sol.values(), np.arange(1, 202), rtol=1e-14)
        assert sol.start_index == 0
        assert sol.end_index == 200

    def test_free_eq2_at_two_is_periodic(self, free_model):
        """eq2 at lambda = 2 gives the period-4 sequence 1, 0, -1, 0"""
        sol = solve(free_model, 2.0, EQ2, N=8)
        np.testing.assert_array_equal(sol.values(), [1, 0, -1, 0, 1, 0, -1, 0, 1])

    def test_orthonormal_polynomials_are_chebyshev(self, free_model):
        """On the free model p(n; 2 + 2cos t) = sin((n+1)t) / sin t"""
        t = 0.7
        sol = orthonormal_polynomials(free_model, 2.0 + 2.0 * math.cos(t), N=50)
        n = np.arange(51)
        assert sol.form == EQ2
        np.testing.assert_allclose(sol.values(), np.sin((n + 1) * t) / math.sin(t), atol=1e-11)

    def test_no_overflow_on_fast_growth(self, free_model):
        """Growth far beyond the float range stays finite in log form"""
        sol = solve(free_model, -10.0, EQ1, N=5000)
        log_y = sol.log_abs()
        assert np.all(np.isfinite(log_y))
        assert log_y[-1] > 1e4
        root = 6.0 + math.sqrt(35.0)
        assert (log_y[-1] - log_y[-1001]) / 1000 == pytest.approx(math.log(root), rel=1e-9)

    def test_rejects_short_lattice(self, free_model):
        """N below 2 is rejected"""
        with pytest.raises(ValueError):
            solve(free_model, 0.0, EQ1, N=1)

    def test_rejects_unknown_form(self, free_model):
        """Only eq1 and eq2 are accepted"""
        with pytest.raises(ValueError):
            solve(free_model, 0.0, 'eq3', N=10)

    def test_wimp_residuals_small(self, wimp_model):
        """The solved Wimp sequence satisfies its recurrence to rounding"""
        sol = solve(wimp_model, 1.5, EQ1, N=2000)
        assert sol.start_index == 1
        assert np.max(residuals(sol, wimp_model)) < 1e-12

    def test_rescaling_period_does_not_change_values(self, wimp_model):
        """Power-of-two rescaling is exact"""
        coarse = solve(wimp_model, 0.5, EQ1, N=300, rescale_period=1000)
        fine = solve(wimp_model, 0.5, EQ1, N=300, rescale_period=3)
        np.testing.assert_allclose(coarse.log_abs(), fine.log_abs(), rtol=0, atol=1e-12)


class TestGauge:
    """The (-1)^n map between eq1 and eq2"""

    def test_gauge_maps_eq1_to_eq2(self, wimp_model):
        """gauge_map of the eq1 solution is the eq2 solution at the same lambda"""
        lam = 0.75
        mapped = gauge_map(solve(wimp_model, lam, EQ1, N=400))
        direct = solve(wimp_model, lam, EQ2, N=400)
        assert mapped.form == EQ2
        np.testing.assert_array_equal(mapped.mantissas, direct.mantissas)
        np.testing.assert_array_equal(mapped.log_scales, direct.log_scales)

    def test_gauge_is_involution(self, free_model):
        """Applying the map twice returns the original solution"""
        sol = solve(free_model, 1.0, EQ1, N=50)
        twice = gauge_map(gauge_map(sol))
        assert twice.form == EQ1
        np.testing.assert_array_equal(twice.mantissas, sol.mantissas)


class TestGrowth:
    """Energy-profile growth fits"""

    def test_linear_solution_is_polynomial(self, free_model):
        """y_n = n + 1 fits theta = 1 and prefers the polynomial model"""
        sol = solve(free_model, 0.0, EQ1, N=4000)
        est = estimate_growth(sol, (2000, 4000))
        assert est.theta_hat == pytest.approx(1.0, abs=1e-2)
        assert est.beta_hat < 1e-3
        assert est.preferred == 'polynomial'
        assert est.theta_rms < est.beta_rms
        assert est.fit_window == (2000, 4000)

    def test_exponential_solution_rate(self, free_model):
        """Outside [0, 4] the rate is the log of the larger characteristic root"""
        sol = solve(free_model, -10.0, EQ1, N=2000)
        est = estimate_growth(sol, (1000, 2000))
        assert est.beta_hat == pytest.approx(math.log(6.0 + math.sqrt(35.0)), rel=1e-6)
        assert est.preferred == 'exponential'
        assert est.log_C2_hat < 1.0

    def test_prefactors_majorize(self, free_model):
        """C2 e^{beta n} bounds |y_n| on the fit window"""
        sol = solve(free_model, 0.0, EQ1, N=1000)
        est = estimate_growth(sol, (500, 1000))
        n = np.arange(500, 1001)
        log_y = sol.log_abs()[500:]
        assert np.all(log_y <= est.log_C2_hat + est.beta_hat * n + 1e-12)
        assert np.all(log_y <= est.log_C4_hat + est.theta_hat * np.log(n + 1.0) + 1e-12)

    def test_short_window_rejected(self, free_model):
        """Windows shorter than 16 samples are degenerate"""
        sol = solve(free_model, 0.0, EQ1, N=100)
        with pytest.raises(DegenerateWindow):
            estimate_growth(sol, (10, 20))
        with pytest.raises(DegenerateWindow):
            estimate_growth(sol, (50, 150))

    def test_vanishing_window_rejected(self):
        """A window where most samples are zero cannot be fitted"""
        log_abs = np.full(100, -np.inf)
        log_abs[0] = 0.0
        sol = RecurrenceSolution.from_log_values(log_abs)
        with pytest.raises(DegenerateWindow):
            estimate_growth(sol, (10, 90))

    def test_energy_profile_monotone(self, free_model):
        """The cumulative energy never decreases, zeros included"""
        sol = solve(free_model, 2.0, EQ2, N=40)
        profile = energy_profile(sol)
        assert np.all(np.diff(profile) >= 0)
        assert profile[0] == 0.0

    def test_subexponential_profile(self, free_model):
        """log C3(0) is the window maximum of log|y_n|"""
        sol = solve(free_model, 0.0, EQ1, N=300)
        profile = subexponential_profile(sol, (100, 300), [0.0, 0.01])
        assert profile[0] == pytest.approx(math.log(301.0))
        assert profile[1] == pytest.approx(max(math.log(n + 1.0) - 0.01 * n for n in range(100, 301)))
