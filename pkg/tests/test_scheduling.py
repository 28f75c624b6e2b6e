import math

import numpy as np
import pytest

from vlcnoma.channel import LedGeometry, incidence_angle
from vlcnoma.population import MobilityConfig, PopulationSnapshot, sample_population
from vlcnoma.scheduling import (
    FeedbackKind,
    FeedbackScheme,
    GroupAssignment,
    ScheduleDecision,
    group_users,
    group_users_one_bit,
    one_bit_feedback,
    order_distance,
    order_full_csi,
    order_mean_gain,
    select_group_pair,
    select_individual,
    two_bit_feedback,
)


@pytest.fixture
def geom():
    return LedGeometry.from_degrees(2.0, 60.0, 1e-4, 50.0)


@pytest.fixture
def mobility():
    return MobilityConfig.from_degrees(0.0, 10.0, 25.0, 155.0, 25.0, 20)


def snapshot_from(gains=None, mean_gains=None, d=None):
    n = len(gains if gains is not None else (mean_gains if mean_gains is not None else d))
    zeros = np.zeros(n)
    return PopulationSnapshot(
        d=np.asarray(d, float) if d is not None else zeros,
        mean_phi=zeros,
        phi=zeros,
        gains=np.asarray(gains, float) if gains is not None else zeros,
        mean_gains=np.asarray(mean_gains, float) if mean_gains is not None else zeros,
    )


class TestOrderings:
    def test_full_csi_excludes_zeros(self):
        order = order_full_csi(snapshot_from(gains=[0.0, 3e-6, 1e-6]))
        assert order.tolist() == [2, 1]

    def test_full_csi_all_zero(self):
        assert order_full_csi(snapshot_from(gains=[0.0, 0.0])).tolist() == []

    def test_full_csi_matches_naive_sort(self, geom, mobility):
        snap = sample_population(mobility, geom, np.random.default_rng(0))
        order = order_full_csi(snap)
        naive = sorted((g, i) for i, g in enumerate(snap.gains) if g > 0.0)
        assert order.tolist() == [i for _, i in naive]

    def test_ties_break_by_index(self):
        order = order_full_csi(snapshot_from(gains=[2e-6, 1e-6, 1e-6]))
        assert order.tolist() == [1, 2, 0]

    def test_distance_descending(self):
        assert order_distance(snapshot_from(d=[1.0, 9.0, 5.0])).tolist() == [1, 2, 0]

    def test_distance_ties_break_by_index(self):
        assert order_distance(snapshot_from(d=[5.0, 5.0, 1.0])).tolist() == [0, 1, 2]

    def test_distance_keeps_everyone(self, geom, mobility):
        snap = sample_population(mobility, geom, np.random.default_rng(1))
        order = order_distance(snap)
        assert len(order) == len(snap)
        assert order[0] == int(np.argmax(snap.d))

    def test_mean_ordering_equals_full_when_static(self, geom):
        mob = MobilityConfig.from_degrees(0.0, 10.0, 0.0, 180.0, 0.0, 20)
        for seed in range(20):
            snap = sample_population(mob, geom, np.random.default_rng(seed))
            assert order_mean_gain(snap).tolist() == order_full_csi(snap).tolist()

    def test_mean_ordering_differs_when_dynamic(self, geom, mobility):
        differs = 0
        for seed in range(50):
            snap = sample_population(mobility, geom, np.random.default_rng(seed))
            if order_mean_gain(snap).tolist() != order_full_csi(snap).tolist():
                differs += 1
        assert differs > 10

    def test_mean_ordering_can_schedule_dead_user(self, geom, mobility):
        # a user ranked by its mean gain may still have zero true gain
        found = False
        for seed in range(200):
            snap = sample_population(mobility, geom, np.random.default_rng(seed))
            order = order_mean_gain(snap)
            if len(order) and np.any(snap.gains[order] == 0.0):
                found = True
                break
        assert found

    def test_scale_invariance(self, geom, mobility):
        snap = sample_population(mobility, geom, np.random.default_rng(3))
        scaled = PopulationSnapshot(snap.d, snap.mean_phi, snap.phi, snap.gains * 17.5, snap.mean_gains * 17.5)
        assert order_full_csi(snap).tolist() == order_full_csi(scaled).tolist()
        assert order_mean_gain(snap).tolist() == order_mean_gain(scaled).tolist()

    def test_full_csi_weak_never_stronger(self, geom, mobility):
        for seed in range(30):
            snap = sample_population(mobility, geom, np.random.default_rng(seed))
            order = order_full_csi(snap)
            if len(order) >= 10:
                decision = select_individual(order, 1, 10)
                assert snap.gains[decision.weak_index] <= snap.gains[decision.strong_index]


class TestSelectIndividual:
    def test_too_few_candidates(self):
        decision = select_individual(np.arange(9), 1, 10)
        assert not decision.complete
        assert decision.nonzero_count == 9

    def test_selects_requested_ranks(self):
        decision = select_individual(np.arange(100, 115), 1, 10)
        assert (decision.weak_index, decision.strong_index) == (100, 109)

    def test_exact_fit(self):
        decision = select_individual(np.array([4, 7]), 1, 2)
        assert (decision.weak_index, decision.strong_index) == (4, 7)

    def test_rejects_bad_ranks(self):
        with pytest.raises(ValueError):
            select_individual(np.arange(5), 2, 2)


class TestTwoBitFeedback:
    def scheme(self, kind=FeedbackKind.TWO_BIT_INSTANT):
        return FeedbackScheme(kind, d_threshold=1.0, theta_threshold=math.radians(5.0))

    def test_boundary_inclusive(self, geom):
        scheme = self.scheme()
        # place the receiver so |theta| is exactly the threshold at d = d_th
        c = math.pi - math.atan2(geom.ell, 1.0)
        bit_d, bit_t = two_bit_feedback(1.0, c - scheme.theta_threshold, scheme, geom)
        assert bool(bit_d) and bool(bit_t)

    def test_weak_signature(self, geom):
        scheme = self.scheme()
        c = math.pi - math.atan2(geom.ell, 5.0)
        bit_d, bit_t = two_bit_feedback(5.0, c - math.radians(20.0), scheme, geom)
        assert not bool(bit_d) and not bool(bit_t)

    def test_paper_thresholds_inside(self, geom):
        scheme = self.scheme()
        c = math.pi - math.atan2(geom.ell, 0.5)
        bit_d, bit_t = two_bit_feedback(0.5, c - math.radians(3.0), scheme, geom)
        assert bool(bit_d) and bool(bit_t)

    def test_mean_kind_uses_mean_angle(self, geom, mobility):
        scheme_i = self.scheme()
        scheme_m = self.scheme(FeedbackKind.TWO_BIT_MEAN)
        snap = sample_population(mobility, geom, np.random.default_rng(0))
        bits_i = two_bit_feedback(snap.d, snap.phi, scheme_i, geom)
        bits_m = two_bit_feedback(snap.d, snap.mean_phi, scheme_m, geom)
        assert np.array_equal(bits_i[0], bits_m[0])  # distance bit agrees
        theta = incidence_angle(snap.d, snap.phi, geom.ell)
        theta_bar = incidence_angle(snap.d, snap.mean_phi, geom.ell)
        assert np.array_equal(bits_i[1], np.abs(theta) <= scheme_i.theta_threshold)
        assert np.array_equal(bits_m[1], np.abs(theta_bar) <= scheme_m.theta_threshold)

    def test_static_orientation_kinds_coincide(self, geom):
        mob = MobilityConfig.from_degrees(0.0, 10.0, 0.0, 180.0, 0.0, 20)
        for seed in range(20):
            snap = sample_population(mob, geom, np.random.default_rng(seed))
            bits_i = two_bit_feedback(snap.d, snap.phi, self.scheme(), geom)
            bits_m = two_bit_feedback(snap.d, snap.mean_phi, self.scheme(FeedbackKind.TWO_BIT_MEAN), geom)
            assert np.array_equal(bits_i[1], bits_m[1])

    def test_requires_two_bit_scheme(self, geom):
        with pytest.raises(ValueError):
            two_bit_feedback(1.0, 1.0, FeedbackScheme(FeedbackKind.FULL_CSI), geom)

    def test_membership_implies_conditions(self, geom, mobility):
        scheme = self.scheme()
        snap = sample_population(mobility, geom, np.random.default_rng(9))
        groups = group_users(*two_bit_feedback(snap.d, snap.phi, scheme, geom))
        theta = incidence_angle(snap.d, snap.phi, geom.ell)
        assert np.all(snap.d[groups.weak_group] > scheme.d_threshold)
        assert np.all(np.abs(theta[groups.weak_group]) > scheme.theta_threshold)
        assert np.all(snap.d[groups.strong_group] <= scheme.d_threshold)
        assert np.all(np.abs(theta[groups.strong_group]) <= scheme.theta_threshold)

    def test_mean_membership_discrepancy_bounded(self, geom, mobility):
        scheme = self.scheme(FeedbackKind.TWO_BIT_MEAN)
        snap = sample_population(mobility, geom, np.random.default_rng(10))
        theta = incidence_angle(snap.d, snap.phi, geom.ell)
        theta_bar = incidence_angle(snap.d, snap.mean_phi, geom.ell)
        assert np.all(np.abs(theta - theta_bar) <= mobility.delta_phi + 1e-12)


class TestGrouping:
    def test_all_strong_leaves_weak_empty(self):
        groups = group_users([True, True], [True, True])
        assert groups.weak_group.size == 0
        assert groups.strong_group.tolist() == [0, 1]

    def test_mixed_reports_unscheduled(self):
        groups = group_users([False, True, True], [False, True, False])
        assert groups.weak_group.tolist() == [0]
        assert groups.strong_group.tolist() == [1]

    def test_one_bit_examples(self):
        assert bool(one_bit_feedback(0.0, 1.0))
        assert not bool(one_bit_feedback(2.0, 1.0))
        assert bool(one_bit_feedback(0.99, 1.0))

    def test_one_bit_grouping(self):
        groups = group_users_one_bit(one_bit_feedback(np.array([0.5, 2.0, 0.2]), 1.0))
        assert groups.weak_group.tolist() == [1]
        assert groups.strong_group.tolist() == [0, 2]


class TestSelectGroupPair:
    def test_singletons_deterministic(self):
        groups = GroupAssignment(np.array([3]), np.array([7]))
        decision = select_group_pair(groups, np.random.default_rng(0))
        assert (decision.weak_index, decision.strong_index) == (3, 7)
        assert decision.complete

    def test_empty_strong_leaves_slot_open(self):
        groups = GroupAssignment(np.array([3, 4]), np.array([], dtype=int))
        decision = select_group_pair(groups, np.random.default_rng(0))
        assert decision.strong_index is None
        assert decision.weak_index in (3, 4)
        assert not decision.complete

    def test_uniform_pick_frequencies(self):
        groups = GroupAssignment(np.arange(5), np.array([9]))
        rng = np.random.default_rng(11)
        n = 100_000
        counts = np.zeros(5)
        for _ in range(n):
            counts[select_group_pair(groups, rng).weak_index] += 1
        expected = n / 5.0
        sigma = math.sqrt(n * 0.2 * 0.8)
        assert np.all(np.abs(counts - expected) <= 3.0 * sigma)

    def test_schedule_decision_rejects_same_user(self):
        with pytest.raises(ValueError):
            ScheduleDecision(2, 2, 5)


class TestSchemeValidation:
    def test_two_bit_requires_thresholds(self):
        with pytest.raises(ValueError):
            FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, d_threshold=1.0)

    def test_one_bit_requires_distance_threshold(self):
        with pytest.raises(ValueError):
            FeedbackScheme(FeedbackKind.ONE_BIT_DISTANCE)

    def test_thresholds_must_be_positive(self):
        with pytest.raises(ValueError):
            FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, d_threshold=-1.0, theta_threshold=0.1)

    def test_plain_kinds_need_no_thresholds(self):
        assert not FeedbackScheme(FeedbackKind.FULL_CSI).is_group
        assert FeedbackScheme(FeedbackKind.ONE_BIT_DISTANCE, d_threshold=1.0).is_group
