# Certificate tests
# Cutoff windows, Weyl certificates, tail weights, pigeonhole indices and the difference bound

import math

import numpy as np
import pytest

from core.eigen import count_below, eigenvalues, spectral_distance
from core.errors import BadGeometry, HypothesisViolated, MarginTooSmall, ZeroVector
from core.operator import finite_section
from core.recurrence import EQ1, RecurrenceSolution, estimate_growth, solve
from core.shnol import (COSINE_TAPER, LINEAR_TAPER, SHARP, TailWeight, candidate_windows,
                        difference_bound_campaign, make_window,
                        optimize_certificate, pigeonhole_certificates, pigeonhole_sequence, shnol_bound_curve,
                        shnol_ratio, tail_weight, theorem4_check, weyl_certificate)


class TestWindows:
    """Cutoff profiles and their validation"""

    def test_profiles(self):
        """Sharp, linear and cosine windows agree on the plateau and differ on the taper"""
        n = np.arange(-1, 12)
        sharp = make_window(SHARP, 0, 10).values(n)
        linear = make_window(LINEAR_TAPER, 0, 10, 4).values(n)
        cosine = make_window(COSINE_TAPER, 0, 10, 4).values(n)
        np.testing.assert_array_equal(sharp, [0] + [1] * 11 + [0])
        np.testing.assert_allclose(linear[1:8], 1.0)
        assert linear[9] == pytest.approx(0.5)
        assert linear[8] == pytest.approx(0.75)
        assert cosine[9] == pytest.approx(0.5)
        assert cosine[8] == pytest.approx(0.5 * (1.0 + math.cos(math.pi / 4)))
        assert linear[11] == 0.0 and cosine[11] == 0.0 and linear[0] == 0.0

    def test_geometry_checks(self):
        """Inconsistent kind, width or extent is rejected"""
        with pytest.raises(BadGeometry):
            make_window('gaussian', 0, 10)
        with pytest.raises(BadGeometry):
            make_window(SHARP, 0, 10, 2)
        with pytest.raises(BadGeometry):
            make_window(LINEAR_TAPER, 0, 10, 0)
        with pytest.raises(BadGeometry):
            make_window(SHARP, 0, 1)
        with pytest.raises(BadGeometry):
            make_window(COSINE_TAPER, 0, 10, 10)
        assert make_window(SHARP, 0, 2).r == 2

    def test_candidate_order(self):
        """r ascending, then sharp, linear, cosine, then W ascending"""
        windows = list(candidate_windows(0, [100, 40], [COSINE_TAPER, SHARP], widths=(0.5, 0.25)))
        assert [(w.r, w.kind, w.W) for w in windows] == [
            (40, SHARP, 0), (40, COSINE_TAPER, 10), (40, COSINE_TAPER, 20),
            (100, SHARP, 0), (100, COSINE_TAPER, 25), (100, COSINE_TAPER, 50),
        ]

    def test_candidate_unknown_kind(self):
        """Unknown kinds are reported"""
        with pytest.raises(BadGeometry):
            list(candidate_windows(0, [100], ['box']))


class TestWeylCertificate:
    """Exact residuals of windowed solutions"""

    def test_free_inside_spectrum(self, free_model):
        """lambda = 2 is in [0, 4]; a sharp window of length 1e4 certifies distance below 0.03"""
        r = 10000
        sol = solve(free_model, 2.0, EQ1, N=r + 10)
        cert = weyl_certificate(free_model, 2.0, sol, make_window(SHARP, 0, r))
        assert cert.bound <= 0.03
        assert cert.bound == pytest.approx(1.0 / math.sqrt(r // 2 + 1), rel=1e-9)
        assert cert.residual_norm == pytest.approx(1.0, rel=1e-12)

    def test_free_outside_spectrum(self, free_model):
        """Any certificate at lambda = -1 bounds at least the true distance 1"""
        sol = solve(free_model, -1.0, EQ1, N=300)
        cert = weyl_certificate(free_model, -1.0, sol, make_window(COSINE_TAPER, 0, 200, 50))
        assert cert.bound >= 1.0 - 1e-9

    def test_bound_above_distance_wimp(self, wimp_model):
        """The bound never undercuts the true distance to the section spectrum limit"""
        lam = -0.5
        sol = solve(wimp_model, lam, EQ1, N=500)
        cert = weyl_certificate(wimp_model, lam, sol, make_window(LINEAR_TAPER, 1, 400, 100))
        assert cert.bound >= 0.5 - 1e-9

    def test_sound_against_sections(self, free_model, wimp_model):
        """Random certificates never undercut the distance to a section spectrum holding the window"""
        rng = np.random.default_rng(3)
        models = (free_model, wimp_model)
        kinds = (SHARP, LINEAR_TAPER, COSINE_TAPER)
        for _ in range(60):
            model = models[int(rng.integers(0, 2))]
            kind = kinds[int(rng.integers(0, 3))]
            lam = float(rng.uniform(-1.0, 5.0))
            start = model.start_index
            r = start + int(rng.integers(50, 300))
            W = 0 if kind == SHARP else (r - start) // 4
            sol = solve(model, lam, EQ1, N=r + 10)
            cert = weyl_certificate(model, lam, sol, make_window(kind, start, r, W))
            N = r - start + 2 + int(rng.integers(0, 20))
            spec = eigenvalues(finite_section(model, N, EQ1))
            assert spectral_distance(spec, lam) <= cert.bound + 1e-8

    @pytest.mark.slow
    def test_sound_full_campaign(self, free_model, wimp_model):
        """A thousand random certificates against section spectra, windows up to r = 1000"""
        rng = np.random.default_rng(2025)
        models = (free_model, wimp_model)
        kinds = (SHARP, LINEAR_TAPER, COSINE_TAPER)
        for _ in range(1000):
            model = models[int(rng.integers(0, 2))]
            kind = kinds[int(rng.integers(0, 3))]
            lam = float(rng.uniform(-2.0, 6.0))
            start = model.start_index
            r = start + int(rng.integers(20, 1000))
            W = 0 if kind == SHARP else int(rng.integers(1, (r - start) // 2 + 1))
            sol = solve(model, lam, EQ1, N=r + 10)
            cert = weyl_certificate(model, lam, sol, make_window(kind, start, r, W))
            N = r - start + 2 + int(rng.integers(0, 50))
            sec = finite_section(model, N, EQ1)
            reach = cert.bound + 1e-8
            assert count_below(sec, lam + reach) > count_below(sec, lam - reach)

    def test_scale_invariance(self, wimp_model):
        """Rescaling the solution leaves the bound unchanged"""
        sol = solve(wimp_model, 1.2, EQ1, N=300)
        shifted = RecurrenceSolution(sol.lam, sol.form, sol.mantissas, sol.log_scales + 50.0, sol.start_index)
        window = make_window(COSINE_TAPER, 1, 250, 60)
        a = weyl_certificate(wimp_model, 1.2, sol, window)
        b = weyl_certificate(wimp_model, 1.2, shifted, window)
        assert b.bound == pytest.approx(a.bound, rel=1e-12)
        assert b.log_reference == pytest.approx(a.log_reference + 50.0)

    def test_interior_noise_dropped(self, wimp_model):
        """Only the two sites at the cut carry residual for a sharp window"""
        r = 200
        sol = solve(wimp_model, 0.8, EQ1, N=300)
        cert = weyl_certificate(wimp_model, 0.8, sol, make_window(SHARP, 1, r))
        sites = np.nonzero(cert.residual.values)[0] + cert.residual.start
        assert set(sites.tolist()) <= {r, r + 1}
        assert cert.dropped_norm < 1e-6 * cert.residual_norm

    def test_margin(self, free_model):
        """The solution must extend past r + 4"""
        sol = solve(free_model, 1.0, EQ1, N=100)
        with pytest.raises(MarginTooSmall):
            weyl_certificate(free_model, 1.0, sol, make_window(SHARP, 0, 98))

    def test_window_below_solution(self, wimp_model):
        """Windows cannot start below the solution"""
        sol = solve(wimp_model, 1.0, EQ1, N=100)
        with pytest.raises(BadGeometry):
            weyl_certificate(wimp_model, 1.0, sol, make_window(SHARP, 0, 50))

    def test_zero_vector(self, free_model):
        """A solution vanishing on the window has no certificate"""
        log_abs = np.full(30, -np.inf)
        log_abs[0] = 0.0
        sol = RecurrenceSolution.from_log_values(log_abs, lam=1.0)
        with pytest.raises(ZeroVector):
            weyl_certificate(free_model, 1.0, sol, make_window(SHARP, 2, 20))

    def test_row(self, free_model):
        """CSV row order"""
        sol = solve(free_model, 2.0, EQ1, N=60)
        cert = weyl_certificate(free_model, 2.0, sol, make_window(SHARP, 0, 50), threshold=1e-8)
        row = cert.row()
        assert row[:5] == (2.0, SHARP, 0, 50, 0)
        assert row[-1] == 1e-8


class TestOptimize:
    """Search over r, kind and W"""

    def test_taper_beats_sharp(self, free_model):
        """Inside the spectrum a taper wins over the sharp cut"""
        sol = solve(free_model, 1.0, EQ1, N=2100)
        sharp = optimize_certificate(free_model, 1.0, sol, [2000], [SHARP])
        best = optimize_certificate(free_model, 1.0, sol, [500, 2000], [SHARP, LINEAR_TAPER, COSINE_TAPER])
        assert best.window.kind != SHARP
        assert best.bound < sharp.bound
        assert best.window.r == 2000

    def test_empty_search(self, free_model):
        """Empty grids are rejected"""
        sol = solve(free_model, 1.0, EQ1, N=100)
        with pytest.raises(BadGeometry):
            optimize_certificate(free_model, 1.0, sol, [], [SHARP])
        with pytest.raises(BadGeometry):
            optimize_certificate(free_model, 1.0, sol, [1], [SHARP])


class TestTailWeight:
    """F(r) and pigeonhole indices"""

    def test_tail_weight_values(self, free_model):
        """F(r) = sum_{n=1}^{r} (n+1)^2 for y_n = n + 1 and a = 1"""
        sol = solve(free_model, 0.0, EQ1, N=20)
        F = tail_weight(free_model, sol, 0, 20)
        assert F.log_F(0) == -np.inf
        assert F.log_F(1) == pytest.approx(math.log(4.0))
        assert F.log_F(2) == pytest.approx(math.log(13.0))
        assert F.r_max == 20
        with pytest.raises(BadGeometry):
            F.log_F(21)

    def test_tail_weight_survives_overflow(self, free_model):
        """log F stays finite when F itself overflows"""
        sol = solve(free_model, -10.0, EQ1, N=1000)
        F = tail_weight(free_model, sol, 0, 1000)
        assert np.isfinite(F.log_F(1000))
        assert F.F_values[-1] == np.inf

    def test_linear_weight_qualifies(self):
        """F(r) = r with beta = 0, delta1 = 0.1 qualifies from r = 60 on"""
        F = TailWeight.from_values(0, np.arange(0, 201, dtype=float))
        assert pigeonhole_sequence(F, 0.0, 0.1, 64) == list(range(64, 197))
        assert pigeonhole_sequence(F, 0.0, 0.1, 10)[0] == 60

    def test_exponential_weight_never_qualifies(self):
        """F(r) = e^{2r} outruns e^{delta1}"""
        F = TailWeight(0, 2.0 * np.arange(0, 200, dtype=float))
        assert pigeonhole_sequence(F, 0.0, 0.1, 10) == []
        assert pigeonhole_sequence(F, 6.0, 0.1, 10) == list(range(10, 196))

    def test_wimp_weight_exponent(self, wimp_model):
        """Inside the spectrum the Wimp tail weight grows like r^{5/2}"""
        sol = solve(wimp_model, 1.0, EQ1, N=20000)
        F = tail_weight(wimp_model, sol, sol.start_index, sol.end_index)
        r = np.arange(2000, F.r_max + 1)
        slope = np.polyfit(np.log(r), F.log_values[r - F.n0], 1)[0]
        assert 2.4 <= slope <= 2.6

    def test_delta_must_be_positive(self):
        """delta1 = 0 is rejected"""
        F = TailWeight.from_values(0, np.arange(1, 50, dtype=float))
        with pytest.raises(ValueError):
            pigeonhole_sequence(F, 0.0, 0.0, 10)

    def test_pigeonhole_certificates(self, free_model):
        """Sharp certificates at the first qualifying indices"""
        sol = solve(free_model, 2.0, EQ1, N=500)
        certs = pigeonhole_certificates(free_model, 2.0, sol, beta=0.0, delta1=0.1, r_min=64, limit=3)
        assert [p.r for p in certs] == [64, 65, 66]
        assert all(p.certificate.window.kind == SHARP for p in certs)
        assert all(p.certificate.bound < 0.2 for p in certs)
        assert certs[0].budget == pytest.approx(math.expm1(0.1))


class TestDifferenceBound:
    """sum a^2 (Delta y)^2 against the weighted energy"""

    def test_alternating_sequence(self):
        """a = 1, y = (-1)^k, C1 = 0 gives 400 against 404"""
        a = np.ones(101)
        y = (-1.0) ** np.arange(101)
        result = theorem4_check(a, y, 0.0, 1, 1, 100, 100)
        assert result.lhs == pytest.approx(400.0)
        assert result.rhs == pytest.approx(404.0)
        assert result.holds

    def test_recurrence_solution(self, free_model):
        """Holds on a solved sequence"""
        sol = solve(free_model, 1.0, EQ1, N=80)
        result = theorem4_check(np.ones(81), sol.values(), 0.0, 2, 3, 50, 60)
        assert result.holds
        assert result.lhs > 0

    def test_random_sequences(self):
        """The bound holds for random weights obeying the ratio hypothesis"""
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(4, 60))
            C1 = float(rng.uniform(0.1, 0.9))
            steps = 1.0 + C1 * rng.uniform(-0.999, 0.999, size=n)
            a = rng.uniform(0.5, 2.0) * np.concatenate(([1.0], np.cumprod(steps)))
            y = rng.standard_normal(n + 1) * 10.0 ** rng.uniform(-3, 3)
            m, r, s = np.sort(rng.integers(1, n + 1, size=3))
            result = theorem4_check(a, y, C1, int(m), int(r), int(s), n)
            assert result.holds

    @pytest.mark.slow
    def test_random_sequences_full_campaign(self):
        """Ten thousand random weight/vector/geometry draws all satisfy the bound"""
        rng = np.random.default_rng(2024)
        for _ in range(10000):
            n = int(rng.integers(4, 200))
            C1 = float(rng.uniform(0.05, 3.0))
            # ratios in [1/(1 + C1), 1 + C1]
            steps = np.exp(math.log1p(C1) * rng.uniform(-0.999, 0.999, size=n))
            a = rng.uniform(0.5, 2.0) * np.concatenate(([1.0], np.cumprod(steps)))
            y = rng.standard_normal(n + 1) * 10.0 ** rng.uniform(-3, 3)
            m, r, s = np.sort(rng.integers(1, n + 1, size=3))
            result = theorem4_check(a, y, C1, int(m), int(r), int(s), n)
            assert result.holds

    def test_ratio_violation(self):
        """A jump in a beyond C1 is reported with its site"""
        a = np.ones(20)
        a[2] = 5.0
        with pytest.raises(HypothesisViolated) as info:
            theorem4_check(a, np.ones(20), 1.0, 1, 1, 10, 15)
        assert info.value.index == 1

    def test_nonpositive_weight(self):
        """A zero a is reported with its site"""
        a = np.ones(20)
        a[3] = 0.0
        with pytest.raises(HypothesisViolated) as info:
            theorem4_check(a, np.ones(20), 1.0, 1, 1, 10, 15)
        assert info.value.index == 3

    def test_geometry(self):
        """Indices must satisfy 1 <= m <= r <= s <= n"""
        with pytest.raises(BadGeometry):
            theorem4_check(np.ones(10), np.ones(10), 1.0, 0, 1, 2, 3)
        with pytest.raises(BadGeometry):
            theorem4_check(np.ones(10), np.ones(10), 1.0, 1, 3, 2, 4)


class TestDifferenceBoundCampaign:
    """Seeded randomized difference-bound trials over a coefficient sequence"""

    def test_same_seed_same_result(self, wimp_model):
        """A seed replays its trials exactly; another seed draws different ones"""
        first = difference_bound_campaign(wimp_model, 2.0, 2, 5000, 200, seed=5)
        again = difference_bound_campaign(wimp_model, 2.0, 2, 5000, 200, seed=5)
        other = difference_bound_campaign(wimp_model, 2.0, 2, 5000, 200, seed=6)
        assert first == again
        assert other.worst_ratio != first.worst_ratio
        assert first.seed == 5 and first.trials == 200

    def test_wimp_no_violations(self, wimp_model):
        """sqrt(n(n+1)) with its measured C1 never breaks the bound"""
        C1 = math.sqrt(3.0) - 1.0
        result = difference_bound_campaign(wimp_model, C1, 1, 20000, 1000, seed=0)
        assert result.holds
        assert 0.0 < result.worst_ratio <= 1.0 + 1e-12

    def test_free_no_violations(self, free_model):
        """Constant coefficients pass with C1 = 0"""
        result = difference_bound_campaign(free_model, 0.0, 0, 500, 1000, seed=1)
        assert result.violations == 0
        assert result.worst_ratio <= 1.0 + 1e-12

    def test_exponential_rescaled(self):
        """Windows of e^{n} far out are rescaled before checking"""
        from coeffs import builtin
        model = builtin('exponential', [1.0])
        result = difference_bound_campaign(model, math.e - 1.0, 0, 5000, 300, seed=2)
        assert result.holds

    def test_text_block(self, free_model):
        """The campaign reports as key=value lines"""
        text = difference_bound_campaign(free_model, 0.0, 0, 100, 10, seed=3).to_text()
        assert text.startswith('campaign_seed=3\ncampaign_trials=10\ncampaign_violations=0\n')

    def test_short_range(self, free_model):
        """A range without a single step is rejected"""
        with pytest.raises(BadGeometry):
            difference_bound_campaign(free_model, 0.0, 10, 10, 5)


class TestBoundShape:
    """(e^{2 beta} - 1)^{1/2}"""

    def test_curve(self):
        """Zero at beta = 0 and increasing"""
        curve = shnol_bound_curve([0.0, 0.1, 0.5])
        assert curve[0] == 0.0
        assert curve[2] == pytest.approx(math.sqrt(math.e - 1.0))
        assert curve[0] < curve[1] < curve[2]
        with pytest.raises(ValueError):
            shnol_bound_curve([-0.1])

    def test_ratio(self):
        """distance over the shape, with the beta = 0 limits"""
        assert shnol_ratio(0.0, 0.0) == 0.0
        assert shnol_ratio(0.1, 0.0) == math.inf
        assert shnol_ratio(0.2, 0.5) == pytest.approx(0.2 / math.sqrt(math.e - 1.0))

    def test_free_shape_bounded(self, free_model):
        """Below the free spectrum d/(e^{2 beta} - 1)^{1/2} stays under one constant"""
        ratios = []
        for lam in np.linspace(-1.0, -0.01, 100):
            est = estimate_growth(solve(free_model, lam, EQ1, N=2000), (1000, 2000))
            assert est.beta_hat == pytest.approx(math.acosh(1.0 - lam / 2.0), rel=0.02)
            ratios.append(shnol_ratio(-lam, est.beta_hat))
        assert max(ratios) <= 0.6
