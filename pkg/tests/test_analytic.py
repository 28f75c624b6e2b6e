import math

import numpy as np
import pytest

from vlcnoma import analytic as an
from vlcnoma.analytic import AnalyticModel
from vlcnoma.channel import LedGeometry, channel_gain, incidence_angle
from vlcnoma.link import NomaConfig, PowerAllocation, TargetRates, eta_thresholds
from vlcnoma.population import MobilityConfig, sample_user_arrays
from vlcnoma.quadrature import QuadratureConfig, integrate_adaptive
from vlcnoma.scheduling import FeedbackKind, FeedbackScheme
from vlcnoma.simulate import empirical_cdf

GEOM = LedGeometry.from_degrees(2.0, 60.0, 1e-4, 50.0)
MOB = MobilityConfig.from_degrees(0.0, 10.0, 25.0, 155.0, 25.0, 20)
MODEL = AnalyticModel(geom=GEOM, mobility=MOB)
NOMA = NomaConfig(PowerAllocation(63.0 / 64.0, 1.0 / 64.0), TargetRates(2.0, 10.0))
THETA_TH = math.radians(5.0)


def model_with(delta_phi_deg=25.0, scheme=None):
    mob = MobilityConfig.from_degrees(0.0, 10.0, delta_phi_deg, 180.0 - delta_phi_deg, delta_phi_deg, 20)
    return AnalyticModel(geom=GEOM, mobility=mob, scheme=scheme)


class TestQuadratureWrapper:
    def test_polynomial(self):
        val, err = integrate_adaptive(lambda x: 3.0 * x * x, 0.0, 2.0, QuadratureConfig())
        assert val == pytest.approx(8.0, abs=1e-10)
        assert err < 1e-8

    def test_empty_interval(self):
        assert integrate_adaptive(lambda x: 1.0, 2.0, 2.0, QuadratureConfig()) == (0.0, 0.0)

    def test_breakpoints_help_with_kinks(self):
        f = lambda x: 1.0 if x < 1.0 / 3.0 else 0.0
        val, _ = integrate_adaptive(f, 0.0, 1.0, QuadratureConfig(), breakpoints=(1.0 / 3.0,))
        assert val == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(abs_tol=0.0)


class TestFovProbability:
    def test_zero_half_angle(self):
        assert an.fov_probability(MODEL, 5.0, 0.0) == 0.0

    def test_full_half_angle(self):
        assert an.fov_probability(MODEL, 5.0, math.pi) == pytest.approx(1.0)

    def test_conditional_monte_carlo_oracle(self):
        rng = np.random.default_rng(0)
        n = 400_000
        r = 5.0
        _, _, phi = sample_user_arrays(MOB, rng, n)
        theta = incidence_angle(np.full(n, r), phi, GEOM.ell)
        frac = (np.abs(theta) <= GEOM.half_fov).mean()
        pred = an.fov_probability(MODEL, r, GEOM.half_fov)
        assert abs(frac - pred) <= 3.0 * math.sqrt(pred * (1.0 - pred) / n)


class TestNonzeroProbability:
    def test_all_inside_config(self):
        # a tight cone around the boresight keeps every draw inside the FOV
        mob = MobilityConfig.from_degrees(0.0, 1.0, 85.0, 95.0, 2.0, 5)
        model = AnalyticModel(geom=GEOM, mobility=mob)
        assert an.nonzero_gain_probability(model) == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_layers_reduce_to_length_fraction(self):
        geom = LedGeometry.from_degrees(2.0, 60.0, 1e-4, 30.0)
        mob = MobilityConfig.from_degrees(0.0, 10.0, 120.0, 120.0, 0.0, 5)
        model = AnalyticModel(geom=geom, mobility=mob)
        # |teta| <= 30 deg at mean angle 120 deg requires atan(ell/r) >= 30 deg
        r_edge = 2.0 / math.tan(math.radians(30.0))
        assert an.nonzero_gain_probability(model) == pytest.approx(r_edge / 10.0, abs=1e-9)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(1)
        n = 2_000_000
        d, _, phi = sample_user_arrays(MOB, rng, n)
        frac = (channel_gain(GEOM, d, phi) > 0.0).mean()
        pred = an.nonzero_gain_probability(MODEL)
        assert abs(frac - pred) <= 3.0 * math.sqrt(pred * (1.0 - pred) / n)


class TestCountPmf:
    def test_untruncated_is_plain_binomial(self):
        from scipy.stats import binom

        p = an.nonzero_gain_probability(MODEL)
        for k in (0, 3, 10, 20):
            assert an.nonzero_count_pmf(MODEL, k, 0) == pytest.approx(binom.pmf(k, 20, p), rel=1e-12)

    def test_normalization(self):
        total = sum(an.nonzero_count_pmf(MODEL, k, 10) for k in range(21))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_zero_below_minimum(self):
        assert an.nonzero_count_pmf(MODEL, 9, 10) == 0.0

    def test_conditional_histogram(self):
        rng = np.random.default_rng(2)
        n = 150_000
        d, _, phi = sample_user_arrays(MOB, rng, n * 20)
        counts = (channel_gain(GEOM, d.reshape(n, 20), phi.reshape(n, 20)) > 0.0).sum(axis=1)
        kept = counts[counts >= 10]
        for k in (10, 11, 12):
            q = an.nonzero_count_pmf(MODEL, k, 10)
            freq = (kept == k).mean()
            assert abs(freq - q) <= 3.0 * math.sqrt(q * (1.0 - q) / kept.size)


class TestBoundaryAngles:
    def test_zero_level_gives_cap(self):
        capped, floored = an.clipped_gain_angles(GEOM, 0.0, 3.0, GEOM.half_fov)
        assert capped == pytest.approx(GEOM.half_fov)
        assert floored == pytest.approx(math.pi / 2.0)

    def test_saturated_level(self):
        x = GEOM.gain_factor(3.0) ** 2 * 1.5  # above the max squared gain at r = 3
        capped, floored = an.clipped_gain_angles(GEOM, float(x), 3.0, GEOM.half_fov)
        assert capped == 0.0
        assert floored == pytest.approx(GEOM.half_fov)

    def test_recovers_incidence_angle(self):
        # by construction h^2 / g^2 = cos^2(theta)
        target = math.radians(20.0)
        x = float(GEOM.gain_factor(4.0) ** 2) * math.cos(target) ** 2
        assert an.gain_boundary_angle(GEOM, x, 4.0) == pytest.approx(target, abs=1e-12)

    def test_boundary_distance_round_trip(self):
        x = 1e-13
        r = an.gain_boundary_distance(GEOM, x)
        assert float(GEOM.gain_factor(r) ** 2) == pytest.approx(x, rel=1e-10)
        assert an.gain_boundary_distance(GEOM, 1.0) == 0.0
        assert an.gain_boundary_distance(GEOM, 0.0) == math.inf


class TestUnorderedCdf:
    def test_zero_at_origin(self):
        assert an.unordered_gain_cdf(MODEL, 0.0) == 0.0

    def test_one_beyond_support(self):
        top = float(GEOM.gain_factor(MOB.d_min) ** 2)
        assert an.unordered_gain_cdf(MODEL, top * 1.0001) == 1.0

    def test_monte_carlo_sup_distance(self):
        rng = np.random.default_rng(3)
        d, _, phi = sample_user_arrays(MOB, rng, 400_000)
        g2 = channel_gain(GEOM, d, phi) ** 2
        sup = empirical_cdf(g2[g2 > 0.0]).sup_distance(lambda x: an.unordered_gain_cdf(MODEL, x), 250)
        assert sup <= 0.008

    def test_monotone_on_grid(self):
        xs = np.geomspace(1e-17, 1e-9, 200)
        vals = [an.unordered_gain_cdf(MODEL, float(x)) for x in xs]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)


class TestOrderedCdf:
    def test_forced_full_count_gives_max_power(self):
        x = 1e-12
        u = an.unordered_gain_cdf(MODEL, x)
        assert an.ordered_gain_cdf(MODEL, x, 20, 20) == pytest.approx(u**20, rel=1e-9)

    def test_one_beyond_support(self):
        top = float(GEOM.gain_factor(MOB.d_min) ** 2)
        assert an.ordered_gain_cdf(MODEL, top * 1.01, 10, 10) == pytest.approx(1.0)

    def test_stochastic_ordering(self):
        xs = np.geomspace(1e-16, 1e-10, 40)
        for x in xs:
            f1 = an.ordered_gain_cdf(MODEL, float(x), 1, 10)
            f5 = an.ordered_gain_cdf(MODEL, float(x), 5, 10)
            f10 = an.ordered_gain_cdf(MODEL, float(x), 10, 10)
            assert f1 >= f5 - 1e-12 >= f10 - 2e-12

    def test_rank_validation(self):
        with pytest.raises(ValueError):
            an.ordered_gain_cdf(MODEL, 1e-12, 0, 10)
        with pytest.raises(ValueError):
            an.ordered_gain_cdf(MODEL, 1e-12, 11, 10)


class TestGroupCdfs:
    def test_lower_edges(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        mm = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_MEAN, 1.0, THETA_TH))
        assert an.group_gain_cdf_instant(mi, 0.0, an.WEAK) == 0.0
        assert an.group_gain_cdf_instant(mi, 0.0, an.STRONG) == 0.0
        assert an.group_gain_cdf_mean(mm, -1e-30, an.WEAK) == 0.0
        # mean-report weak group keeps an atom at zero for nonzero deviation
        assert an.group_gain_cdf_mean(mm, 0.0, an.WEAK) > 0.1
        assert an.group_gain_cdf_mean(mm, 0.0, an.STRONG) == pytest.approx(0.0, abs=1e-12)

    def test_upper_edges(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        top = float(GEOM.gain_factor(0.0) ** 2)
        assert an.group_gain_cdf_instant(mi, top, an.STRONG) == pytest.approx(1.0)
        top_weak = float(GEOM.gain_factor(1.0) ** 2)
        assert an.group_gain_cdf_instant(mi, top_weak, an.WEAK) == pytest.approx(1.0)

    def test_static_deviation_collapses_mean_onto_instant(self):
        mi = model_with(0.0, FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        mm = model_with(0.0, FeedbackScheme(FeedbackKind.TWO_BIT_MEAN, 1.0, THETA_TH))
        for x in np.geomspace(1e-16, 1e-10, 25):
            for role in (an.WEAK, an.STRONG):
                a = an.group_gain_cdf_mean(mm, float(x), role)
                b = an.group_gain_cdf_instant(mi, float(x), role)
                assert abs(a - b) <= 1e-6

    def test_strong_group_degeneracy_matches_unordered(self):
        scheme = FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, d_threshold=MOB.d_max, theta_threshold=GEOM.half_fov)
        mi = model_with(scheme=scheme)
        for x in np.geomspace(1e-16, 1e-10, 20):
            assert an.group_gain_cdf_instant(mi, float(x), an.STRONG) == pytest.approx(
                an.unordered_gain_cdf(MODEL, float(x)), abs=1e-9
            )

    def test_requires_matching_scheme(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        with pytest.raises(ValueError):
            an.group_gain_cdf_mean(mi, 1e-12, an.WEAK)
        with pytest.raises(ValueError):
            an.group_gain_cdf_instant(MODEL, 1e-12, an.WEAK)

    def test_angle_threshold_cannot_exceed_fov(self):
        with pytest.raises(ValueError):
            model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, math.radians(60.0)))


class TestGroupProbabilities:
    def test_strong_membership_plateau_value(self):
        # 10 deg window inside the flat part of the angle law: 0.1 * 10/130
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        stats = an.group_probabilities(mi, "instant")
        assert stats.p_strong == pytest.approx(0.1 * 10.0 / 130.0, rel=1e-6)

    def test_membership_monte_carlo(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        stats = an.group_probabilities(mi, "instant")
        rng = np.random.default_rng(4)
        n = 500_000
        d, _, phi = sample_user_arrays(MOB, rng, n)
        theta = incidence_angle(d, phi, GEOM.ell)
        w = ((d > 1.0) & (np.abs(theta) > THETA_TH)).mean()
        s = ((d <= 1.0) & (np.abs(theta) <= THETA_TH)).mean()
        assert abs(w - stats.p_weak) <= 3.0 * math.sqrt(stats.p_weak * (1 - stats.p_weak) / n)
        assert abs(s - stats.p_strong) <= 3.0 * math.sqrt(stats.p_strong * (1 - stats.p_strong) / n)


class TestOutage:
    def test_individual_high_snr_limit(self):
        pw, ps = an.individual_outage(MODEL, NOMA, 1e30, 1, 10)
        assert pw == pytest.approx(0.0, abs=1e-12)
        assert ps == pytest.approx(0.0, abs=1e-12)

    def test_individual_low_snr_limit(self):
        pw, ps = an.individual_outage(MODEL, NOMA, 1e-6, 1, 10)
        assert pw == pytest.approx(1.0, abs=1e-12)
        assert ps == pytest.approx(1.0, abs=1e-12)

    def test_individual_monte_carlo_midpoint(self):
        rng = np.random.default_rng(5)
        n = 150_000
        d, _, phi = sample_user_arrays(MOB, rng, n * 20)
        g2 = channel_gain(GEOM, d.reshape(n, 20), phi.reshape(n, 20)) ** 2
        masked = np.where(g2 > 0.0, g2, np.inf)
        masked.sort(axis=1)
        keep = (g2 > 0.0).sum(axis=1) >= 10
        w, s = masked[keep, 0], masked[keep, 9]
        for gdb in (160.0, 185.0):
            gamma = 10.0 ** (gdb / 10.0)
            thr = eta_thresholds(NOMA.targets, NOMA.alloc, gamma)
            pw, ps = an.individual_outage(MODEL, NOMA, gamma, 1, 10)
            assert abs((w <= thr.eta_weak).mean() - pw) <= max(3.0 * math.sqrt(pw * (1 - pw) / w.size), 1e-4)
            assert abs((s <= thr.eta_strong).mean() - ps) <= max(3.0 * math.sqrt(ps * (1 - ps) / s.size), 1e-4)

    def test_group_high_snr_floor_is_fov_mismatch(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        pw, ps = an.group_outage(mi, NOMA, 1e28, "instant")
        # strong group members always have nonzero gain; weak keeps the out-of-FOV share
        assert ps == pytest.approx(0.0, abs=1e-9)
        den, _ = an._weak_membership_instant(mi)
        num, _ = an._weak_band_normalizer_instant(mi)
        assert pw == pytest.approx(1.0 - num / den, abs=1e-9)

    def test_group_low_snr_limit(self):
        mm = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_MEAN, 1.0, THETA_TH))
        pw, ps = an.group_outage(mm, NOMA, 1e-6, "mean")
        assert pw == pytest.approx(1.0, abs=1e-12)
        assert ps == pytest.approx(1.0, abs=1e-12)

    def test_infeasible_allocation_propagates(self):
        from vlcnoma.link import InfeasibleAllocationError

        bad = NomaConfig(PowerAllocation(0.6, 0.4), TargetRates(2.0, 10.0))
        with pytest.raises(InfeasibleAllocationError):
            an.individual_outage(MODEL, bad, 1e15, 1, 10)


class TestSweep:
    def test_individual_sweep_structure(self):
        grid = (150.0, 180.0, 215.0, 230.0)
        curves = an.sum_rate_sweep(MODEL, NOMA, grid, "individual")
        assert set(curves) == {"noma-full-csi", "oma"}
        assert [p.gamma_db for p in curves["noma-full-csi"]] == list(grid)
        assert curves["noma-full-csi"][-2].sum_rate == pytest.approx(12.0, abs=0.01)
        assert curves["noma-full-csi"][-1].sum_rate == pytest.approx(12.0, abs=1e-4)
        for noma_pt, oma_pt in zip(curves["noma-full-csi"], curves["oma"]):
            assert noma_pt.sum_rate >= oma_pt.sum_rate - 1e-9

    def test_single_point_grid(self):
        curves = an.sum_rate_sweep(MODEL, NOMA, (170.0,), "individual", include_oma=False)
        assert len(curves["noma-full-csi"]) == 1

    def test_group_sweep_conditioning_rate(self):
        mi = model_with(scheme=FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, 1.0, THETA_TH))
        curves = an.sum_rate_sweep(mi, NOMA, (170.0, 215.0), "group-instant", include_oma=False)
        stats = an.group_probabilities(mi, "instant")
        assert curves["noma-two-bit-instant"][0].conditioning_rate == pytest.approx(stats.both_nonempty)

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            an.sum_rate_sweep(MODEL, NOMA, (170.0,), "telepathy")


class TestQuadratureStability:
    def test_halving_within_reported_error(self):
        half = AnalyticModel(geom=GEOM, mobility=MOB, quad=QuadratureConfig().halved())
        rng = np.random.default_rng(6)
        for x in 10.0 ** rng.uniform(-16, -10.5, 10):
            v1, e1 = an.unordered_gain_cdf(MODEL, float(x), with_error=True)
            v2, _ = an.unordered_gain_cdf(half, float(x), with_error=True)
            assert abs(v2 - v1) <= max(e1, 1e-14)
