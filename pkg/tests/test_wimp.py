# Weighted-example reproduction tests
# Long runs on a_n = sqrt(n(n+1)): tapered certificates, growth below the spectrum
# and convergence of the section spectrum on [0, 3]

import numpy as np
import pytest

from core.eigen import eigenvalues, spectrum_gaps
from core.operator import finite_section
from core.recurrence import EQ1, estimate_growth, solve
from core.shnol import CERTIFICATE_MARGIN, COSINE_TAPER, LINEAR_TAPER, SHARP, optimize_certificate

R_GRID = [1000, 3000, 10000, 30000, 100000]
WIDTHS = (0.25, 0.5)
POSITIVE_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 3.0)


@pytest.fixture(scope='module')
def long_solutions():
    """Solutions reaching the largest certificate radius, keyed by lambda"""
    from coeffs import builtin
    model = builtin('wimp')
    N = max(R_GRID) + CERTIFICATE_MARGIN
    return model, {lam: solve(model, lam, EQ1, N=N) for lam in POSITIVE_LAMBDAS}


@pytest.mark.slow
class TestTaperedCertificates:
    """Certificates inside the spectrum"""

    def test_tapered_bounds_small(self, long_solutions):
        """Linear and cosine tapers bound the distance by 0.05 across (0, 3]"""
        model, solutions = long_solutions
        for lam, sol in solutions.items():
            cert = optimize_certificate(model, lam, sol, R_GRID, [LINEAR_TAPER, COSINE_TAPER], widths=WIDTHS)
            assert cert.bound <= 0.05, f"lambda={lam}: bound {cert.bound}"
            assert cert.window.kind in (LINEAR_TAPER, COSINE_TAPER)

    def test_sharp_cut_fails(self, long_solutions):
        """A sharp cut leaves a boundary residual of order one"""
        model, solutions = long_solutions
        for lam, sol in solutions.items():
            sharp = optimize_certificate(model, lam, sol, R_GRID, [SHARP])
            tapered = optimize_certificate(model, lam, sol, R_GRID, [LINEAR_TAPER, COSINE_TAPER], widths=WIDTHS)
            assert sharp.bound > 10.0 * tapered.bound
            if lam >= 1.0:
                assert sharp.bound > 1.0, f"lambda={lam}: sharp bound {sharp.bound}"


@pytest.mark.slow
class TestGrowthBelowSpectrum:
    """Solutions at negative lambda and the decay of fitted rates inside"""

    def test_square_root_growth(self, wimp_model):
        """log|y_n| grows like 2 sqrt(|lambda| n) at lambda = -1"""
        sol = solve(wimp_model, -1.0, EQ1, N=100000)
        n = sol.indices.astype(float)
        keep = n >= 10000
        slope = np.polyfit(2.0 * np.sqrt(n[keep]), sol.log_abs()[keep], 1)[0]
        assert slope == pytest.approx(1.0, abs=0.05)

    def test_beta_decreases_over_windows(self, wimp_model):
        """Inside the spectrum the fitted exponential rate falls as the window moves out"""
        sol = solve(wimp_model, 1.0, EQ1, N=2 ** 16 + 8)
        betas = [estimate_growth(sol, (2 ** k, 2 ** (k + 1))).beta_hat for k in range(8, 16)]
        assert betas[-1] < 0.01
        assert betas[-1] < betas[0] / 4.0
        assert sum(later < earlier for earlier, later in zip(betas, betas[1:])) >= len(betas) - 2


@pytest.mark.slow
class TestSectionSpectrum:
    """Largest gap of the section spectrum inside [0, 3]"""

    def test_gap_closes_with_N(self, wimp_model):
        """The gap shrinks with N: above 0.05 at N = 2000, below at N = 20000"""
        window = (0.0, 3.0)
        coarse = spectrum_gaps(eigenvalues(finite_section(wimp_model, 2000), window=window), window)
        fine = spectrum_gaps(eigenvalues(finite_section(wimp_model, 20000), window=window), window)
        assert coarse > 0.05
        assert fine <= 0.05
