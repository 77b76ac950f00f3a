import math

import numpy as np
import pytest

from breathing_billiard import radius
from breathing_billiard.errors import PreconditionError
from breathing_billiard.radius import RadiusProfile

EPS = 0.5
PI2 = math.pi * math.pi


class TestEval:
    def test_constant(self):
        p = RadiusProfile(1.0)
        assert p.eval(0.37) == (1.0, 0.0, 0.0)

    def test_single_harmonic_quarter(self):
        # d/dt (M + d sin(2 pi t)) at t = 1/4: slope 0, curvature -4 pi^2 d
        p = RadiusProfile(2.0, ((1, 0.1),))
        r, dr, ddr = p.eval(0.25)
        assert r == pytest.approx(2.1, abs=1e-15)
        assert dr == pytest.approx(0.0, abs=1e-15)
        assert ddr == pytest.approx(-0.1 * 4 * PI2, rel=1e-14)

    def test_periodicity(self):
        p = RadiusProfile(2.0, ((3, 0.05), (1, 0.02)))
        rng = np.random.default_rng(0)
        for t in rng.uniform(-5, 5, size=50):
            a = p.eval(float(t))
            b = p.eval(float(t) + 1.0)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_positivity_guard(self):
        with pytest.raises(PreconditionError):
            RadiusProfile(0.1, ((1, 0.2),))

    def test_json_round_trip(self):
        p = RadiusProfile(9000.0, ((1, 0.05),))
        assert RadiusProfile.from_json(p.to_json()) == p
        with pytest.raises(PreconditionError):
            RadiusProfile.from_json("{not json")


class TestBounds:
    def test_two_harmonic_closed_forms(self):
        # frequencies k = 5 and 1 peak together, so the extremes and the
        # slope norm have exact closed forms
        m, d, k = 100.0, 0.01, 5
        p = RadiusProfile(m, ((k, d), (1, d)))
        b = radius.bounds(p, EPS)
        assert b.r_min == pytest.approx(m - 2 * d, rel=1e-12)
        assert b.r_max == pytest.approx(m + 2 * d, rel=1e-12)
        assert b.dR_norm == pytest.approx(2 * math.pi * d * (k + 1), rel=1e-10)

    def test_constant_sigma_infinite(self):
        b = radius.bounds(RadiusProfile(1.0), EPS)
        assert b.sigma == math.inf
        assert b.dR_norm == 0.0

    def test_reference_sigma(self, reference_profile):
        # independently recomputed via dense sampling of the closed forms
        b = radius.bounds(reference_profile, EPS)
        ts = np.linspace(0, 1, 2_000_001)
        r = 9000.0 + 0.05 * np.sin(2 * np.pi * ts)
        dr = 0.05 * 2 * np.pi * np.cos(2 * np.pi * ts)
        ddr = -0.05 * 4 * PI2 * np.sin(2 * np.pi * ts)
        dd2 = np.abs(2 * (dr**2 + r * ddr)).max()
        alpha = math.sqrt(1 + math.sqrt(1 - EPS**2))
        sigma_ref = min(r.min() / (2 * np.abs(dr).max()),
                        2 * alpha * r.min() / math.sqrt(dd2))
        assert b.sigma == pytest.approx(sigma_ref, rel=1e-9)
        assert b.sigma == pytest.approx(130.4447, abs=1e-3)

    def test_norms_dominate_samples(self):
        p = RadiusProfile(3.0, ((2, 0.1), (5, 0.03)))
        b = radius.bounds(p, EPS)
        rng = np.random.default_rng(1)
        slack = 1 + 1e-9
        for t in rng.uniform(0, 1, size=10_000):
            r, dr, _ = p.eval(float(t))
            assert b.r_min * (2 - slack) <= r <= b.r_max * slack
            assert abs(dr) <= b.dR_norm * slack
            assert abs(p.dd_radius_sq(float(t))) <= b.ddR2_norm * slack

    def test_grid_precondition(self):
        with pytest.raises(PreconditionError):
            radius.bounds(RadiusProfile(1.0), EPS, grid_n=100)


class TestStationaryPoints:
    def test_single_harmonic(self):
        p = RadiusProfile(1.0, ((1, 0.05),))
        pts = radius.stationary_points(p)
        ts = sorted(t for t, _ in pts)
        assert ts == pytest.approx([0.25, 0.75], abs=1e-10)
        dd = dict((round(t, 6), v) for t, v in pts)
        assert dd[0.25] == pytest.approx(-4 * PI2 * 0.05, rel=1e-9)
        assert dd[0.75] == pytest.approx(+4 * PI2 * 0.05, rel=1e-9)

    def test_root_residual(self):
        p = RadiusProfile(5.0, ((7, 0.01), (1, 0.05)))
        for t, _ in radius.stationary_points(p):
            assert abs(p.d_radius(t)) < 1e-10

    def test_constant_rejected(self):
        with pytest.raises(PreconditionError):
            radius.stationary_points(RadiusProfile(1.0))


class TestClassify:
    def test_constant_is_R(self):
        v = radius.classify(RadiusProfile(1.0), EPS)
        assert v.klass == "R"
        assert v.degenerate
        assert v.witnesses == ()

    def test_reference_is_R_tilde(self, reference_profile):
        v = radius.classify(reference_profile, EPS)
        assert v.klass == "R_tilde"
        assert v.witnesses[0][0] == pytest.approx(0.25, abs=1e-9)
        assert all(m > 0 for m in v.margins.values())

    def test_large_amplitude_is_none(self):
        # sigma's slope term is r_min/(2||Rdot||) = 0.8/(0.8 pi) < 2
        v = radius.classify(RadiusProfile(1.0, ((1, 0.2),)), EPS)
        assert v.klass == "none"
        assert v.bounds.sigma < 2

    def test_tilde_implies_R(self, reference_profile):
        v = radius.classify(reference_profile, EPS)
        assert v.klass == "R_tilde"
        assert v.bounds.sigma > 2  # the class-R test passes a fortiori
        assert v.margins["sigma_gt_2"] > 0


class TestFamilyFormulas:
    def test_k_threshold(self):
        # closed form evaluated independently
        a2 = 1 + math.sqrt(1 - 0.25)
        expected = (a2 + math.sqrt(2 * a2 * a2 - 1)) / (a2 - 1)
        got = radius.two_harmonic_k_threshold(0.5)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(4.975, abs=1e-3)
        assert math.ceil(got) == 5

    def test_delta_window_k5(self):
        lo, hi = radius.delta_window(5)
        assert lo == pytest.approx(1 / (4 * PI2 * 26), rel=1e-14)
        assert hi == pytest.approx(1 / (2 * math.pi * 6), rel=1e-14)
        assert lo == pytest.approx(9.75e-4, rel=1e-2)
        assert hi == pytest.approx(2.653e-2, rel=1e-3)

    def test_single_harmonic_threshold(self):
        got = radius.single_harmonic_eps_max()
        assert got == pytest.approx(math.sqrt(1 - 1 / (math.pi - 1) ** 2), rel=1e-14)
        assert got == pytest.approx(0.8839, abs=1e-3)
        assert 0.5 < got  # eps = 0.5 is admissible for the single-harmonic family

    def test_appendix_bound_k1(self):
        # the conservative sufficient bound dwarfs what the classifier needs
        assert radius.sufficient_mean_bound(1, 0.05) == pytest.approx(
            2 * 0.05 + 216 * PI2 * 4, rel=1e-12)


class TestFindMember:
    def test_single_harmonic_member(self):
        mean, v = radius.find_member(1, 0.05, EPS)
        assert v.klass == "R_tilde"
        # idempotence: the returned mean re-classifies
        check = radius.classify(radius.family_profile(1, 0.05, mean), EPS)
        assert check.klass == "R_tilde"
        assert mean < radius.sufficient_mean_bound(1, 0.05)

    def test_min_window_variant(self):
        mean, v = radius.find_member(1, 0.05, EPS, min_window=1.0)
        assert v.window is not None
        assert v.window[1] - v.window[0] > 1.0
        mean_plain, _ = radius.find_member(1, 0.05, EPS)
        assert mean > mean_plain

    def test_two_harmonic_member(self):
        mean, v = radius.find_member(5, 0.01, EPS)
        assert v.klass == "R_tilde"
        prof = radius.family_profile(5, 0.01, mean)
        assert len(prof.harmonics) == 2

    def test_hint_above_threshold_descends(self):
        mean_plain, _ = radius.find_member(1, 0.05, EPS)
        mean_hinted, v = radius.find_member(1, 0.05, EPS, M_hint=10_000.0)
        assert v.klass == "R_tilde"
        assert mean_hinted == pytest.approx(mean_plain, rel=0.3)

    def test_rejections_name_the_inequality(self):
        with pytest.raises(PreconditionError, match="k_bar"):
            radius.find_member(3, 0.01, EPS)
        with pytest.raises(PreconditionError, match="window"):
            radius.find_member(5, 0.5, EPS)
        with pytest.raises(PreconditionError, match="single-harmonic"):
            radius.find_member(1, 0.05, 0.95)
