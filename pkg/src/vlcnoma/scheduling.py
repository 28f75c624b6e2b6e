"""Feedback encodings and user selection for the NOMA transmitter.

Individual scheduling ranks all users by a per-user quality report and serves
the users at two configured ranks; the ranking report is one of

  * full CSI        -- instantaneous gain, zero-gain users excluded,
  * mean angle      -- gain recomputed at the mean vertical angle,
  * distance only   -- farthest user ranks weakest, nobody excluded.

Group scheduling quantizes each user's report to bits: a two-bit report
thresholds distance and |incidence|, a one-bit report thresholds distance only.
Users reporting all-ones form the strong candidate group, all-zeros the weak
group, and one member of each group is served.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .channel import incidence_angle


class FeedbackKind(Enum):
    FULL_CSI = "full-csi"
    MEAN_ANGLE = "mean-angle"
    DISTANCE_ONLY = "distance"
    TWO_BIT_INSTANT = "two-bit-instant"
    TWO_BIT_MEAN = "two-bit-mean"
    ONE_BIT_DISTANCE = "one-bit"


GROUP_KINDS = (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN, FeedbackKind.ONE_BIT_DISTANCE)


@dataclass(frozen=True)
class FeedbackScheme:
    """Feedback kind plus the thresholds the quantized kinds require."""

    kind: FeedbackKind
    d_threshold: Optional[float] = None
    theta_threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind in (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN):
            if self.d_threshold is None or self.theta_threshold is None:
                raise ValueError(f"{self.kind.value} needs d_threshold and theta_threshold")
        if self.kind is FeedbackKind.ONE_BIT_DISTANCE and self.d_threshold is None:
            raise ValueError("one-bit feedback needs d_threshold")
        if self.d_threshold is not None and self.d_threshold <= 0.0:
            raise ValueError("d_threshold must be positive")
        if self.theta_threshold is not None and self.theta_threshold <= 0.0:
            raise ValueError("theta_threshold must be positive")

    @property
    def is_group(self):
        return self.kind in GROUP_KINDS


@dataclass(frozen=True)
class ScheduleDecision:
    """Selected weak/strong user indices (None marks no transmission for a slot)."""

    weak_index: Optional[int]
    strong_index: Optional[int]
    nonzero_count: int

    def __post_init__(self):
        if self.weak_index is not None and self.weak_index == self.strong_index:
            raise ValueError("weak and strong slots must pick distinct users")

    @property
    def complete(self):
        return self.weak_index is not None and self.strong_index is not None


@dataclass(frozen=True)
class GroupAssignment:
    """Index sets of the all-zeros (weak) and all-ones (strong) reporters."""

    weak_group: np.ndarray
    strong_group: np.ndarray


def _ascending_order(values, mask=None):
    # stable argsort => ties broken by ascending user index
    if mask is None:
        return np.argsort(values, kind="stable")
    idx = np.flatnonzero(mask)
    return idx[np.argsort(values[idx], kind="stable")]


def order_full_csi(snapshot):
    """Users with nonzero true gain, weakest first."""
    return _ascending_order(snapshot.gains, snapshot.gains > 0.0)


def order_mean_gain(snapshot):
    """Users with nonzero mean gain ordered by it; their true gain may still be zero."""
    return _ascending_order(snapshot.mean_gains, snapshot.mean_gains > 0.0)


def order_by_gain_arrays(gains):
    """Ascending order of a raw (possibly estimated) gain array, zeros excluded."""
    return _ascending_order(np.asarray(gains, float), np.asarray(gains, float) > 0.0)


def order_distance(snapshot):
    """All users, farthest (presumed weakest) first; no FOV information used."""
    return order_by_distance_array(snapshot.d)


def order_by_distance_array(d):
    return np.argsort(-np.asarray(d, float), kind="stable")


def select_individual(ordering, rank_weak, rank_strong):
    """Pick the users at the two ranks, or no transmission if too few candidates."""
    if not 1 <= rank_weak < rank_strong:
        raise ValueError("need 1 <= rank_weak < rank_strong")
    count = len(ordering)
    if count < rank_strong:
        return ScheduleDecision(None, None, count)
    return ScheduleDecision(int(ordering[rank_weak - 1]), int(ordering[rank_strong - 1]), count)


def two_bit_feedback(d, angle, scheme, geom):
    """Two bits (distance below threshold, |incidence| below threshold).

    ``angle`` is the instantaneous vertical angle for the instantaneous-kind
    scheme and the mean vertical angle for the mean kind; the boundary counts
    as inside (Pi[x] = 1 iff |x| <= 1).  Array friendly.
    """
    if scheme.kind not in (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN):
        raise ValueError("two_bit_feedback needs a two-bit scheme")
    theta = incidence_angle(np.asarray(d, float), angle, geom.ell)
    bit_d = np.asarray(d, float) <= scheme.d_threshold
    bit_theta = np.abs(theta) <= scheme.theta_threshold
    return bit_d, bit_theta


def one_bit_feedback(d, d_threshold):
    """Single distance bit: 1 iff d <= d_threshold."""
    return np.asarray(d, float) <= d_threshold


def group_users(bit_d, bit_theta):
    """Split reporters into the all-zeros (weak) and all-ones (strong) groups.

    Mixed reports (0,1)/(1,0) join neither group and are never scheduled.
    """
    bit_d = np.asarray(bit_d, bool)
    bit_theta = np.asarray(bit_theta, bool)
    return GroupAssignment(
        weak_group=np.flatnonzero(~bit_d & ~bit_theta),
        strong_group=np.flatnonzero(bit_d & bit_theta),
    )


def group_users_one_bit(bit_d):
    """One-bit grouping: distance bit 0 -> weak group, 1 -> strong group."""
    bit_d = np.asarray(bit_d, bool)
    return GroupAssignment(weak_group=np.flatnonzero(~bit_d), strong_group=np.flatnonzero(bit_d))


def select_group_pair(groups, rng):
    """Uniformly pick one member per nonempty group; an empty group leaves its slot open.

    Weak pick is drawn before the strong pick so streams replay deterministically.
    """
    weak = None
    if len(groups.weak_group) > 0:
        weak = int(groups.weak_group[rng.integers(len(groups.weak_group))])
    strong = None
    if len(groups.strong_group) > 0:
        strong = int(groups.strong_group[rng.integers(len(groups.strong_group))])
    return ScheduleDecision(weak, strong, len(groups.weak_group) + len(groups.strong_group))
