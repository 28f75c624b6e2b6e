"""SINR, rate, threshold and sum-rate arithmetic for a two-user NOMA pair plus OMA.

Power-domain superposition with successive interference cancellation: the
stronger user first decodes the weaker user's message (cross SINR), removes it,
then decodes its own interference-free.  Rates use the optical-intensity
capacity form R = 1/2 * log2(1 + (e/2pi) * SINR), so a target rate Rt maps to
the SINR threshold eps = (2^(2*Rt) - 1) * (2*pi/e).

Both outage conditions reduce to squared-gain thresholds:

    weak user   h^2 > eta_weak  = (eps_w/gamma) / (share_w - share_s*eps_w)
    strong user h^2 > eta_strong = max(eta_weak, (eps_s/gamma)/share_s)

feasible only while share_w - share_s*eps_w > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RATE_SCALE = math.e / (2.0 * math.pi)  # SINR prefactor of the intensity-channel rate


class InfeasibleAllocationError(ValueError):
    """The weak user's target rate is unreachable under the given power split."""


@dataclass(frozen=True)
class PowerAllocation:
    """Power shares (beta^2 values) of the weak and strong NOMA users."""

    share_weak: float
    share_strong: float

    def __post_init__(self):
        if abs(self.share_weak + self.share_strong - 1.0) > 1e-12:
            raise ValueError("power shares must sum to 1")
        if not (0.0 < self.share_strong < self.share_weak < 1.0):
            raise ValueError("need 0 < share_strong < share_weak < 1")

    @classmethod
    def from_config(cls, value_weak, value_strong, interpretation="power"):
        """Build from configured coefficients, read as power shares or amplitudes."""
        if interpretation == "power":
            return cls(value_weak, value_strong)
        if interpretation == "amplitude":
            total = value_weak**2 + value_strong**2
            return cls(value_weak**2 / total, value_strong**2 / total)
        raise ValueError(f"unknown power interpretation {interpretation!r}")


def epsilon_threshold(target_rate):
    """SINR threshold (2^(2*rate) - 1) * 2*pi/e for a spectral-efficiency target."""
    if target_rate < 0.0:
        raise ValueError("target rate must be nonnegative")
    return (2.0 ** (2.0 * target_rate) - 1.0) / RATE_SCALE


def rate_from_sinr(sinr):
    """Achievable spectral efficiency 1/2 * log2(1 + (e/2pi)*sinr)."""
    return 0.5 * np.log2(1.0 + RATE_SCALE * np.asarray(sinr, float))


@dataclass(frozen=True)
class TargetRates:
    """Per-user QoS target rates [bit/s/Hz]; SINR thresholds derive from them."""

    rate_weak: float
    rate_strong: float

    def __post_init__(self):
        if self.rate_weak < 0.0 or self.rate_strong < 0.0:
            raise ValueError("target rates must be nonnegative")

    @property
    def eps_weak(self):
        return epsilon_threshold(self.rate_weak)

    @property
    def eps_strong(self):
        return epsilon_threshold(self.rate_strong)

    @property
    def ceiling(self):
        """Sum rate when neither user is in outage."""
        return self.rate_weak + self.rate_strong


@dataclass(frozen=True)
class NomaConfig:
    """Power split plus target rates for one NOMA pair."""

    alloc: PowerAllocation
    targets: TargetRates


@dataclass(frozen=True)
class GainThresholds:
    """Squared-gain outage thresholds at one transmit SNR."""

    eta_weak: float
    eta_strong: float


def sinr_cross(h_strong_sq, alloc, gamma):
    """SINR at the strong user while decoding the weak user's message."""
    if gamma <= 0.0:
        raise ValueError("transmit SNR must be positive")
    h_sq = np.asarray(h_strong_sq, float)
    return h_sq * alloc.share_weak / (h_sq * alloc.share_strong + 1.0 / gamma)


def sinr_own(h_sq, alloc, gamma, is_strongest):
    """SINR of a user decoding its own message.

    The strongest user has cancelled all interference; the weak user sees the
    strong user's share as interference (identical to the cross SINR for L=2).
    """
    if gamma <= 0.0:
        raise ValueError("transmit SNR must be positive")
    h_sq = np.asarray(h_sq, float)
    if is_strongest:
        return h_sq * alloc.share_strong * gamma
    return sinr_cross(h_sq, alloc, gamma)


def eta_thresholds(targets, alloc, gamma):
    """Squared-gain thresholds equivalent to the SINR outage conditions."""
    eps_w = targets.eps_weak
    margin = alloc.share_weak - alloc.share_strong * eps_w
    if margin <= 0.0:
        raise InfeasibleAllocationError(
            "weak user's rate is unreachable at any gain: "
            f"share_weak - share_strong*eps_weak = {margin:.6g} <= 0"
        )
    eta_weak = (eps_w / gamma) / margin
    eta_strong = max(eta_weak, (targets.eps_strong / gamma) / alloc.share_strong)
    return GainThresholds(eta_weak=eta_weak, eta_strong=eta_strong)


def noma_pair_outcome(h_weak_sq, h_strong_sq, thresholds):
    """(weak_in_outage, strong_in_outage); success requires strictly exceeding eta."""
    weak_out = np.asarray(h_weak_sq, float) <= thresholds.eta_weak
    strong_out = np.asarray(h_strong_sq, float) <= thresholds.eta_strong
    if weak_out.ndim == 0:
        return bool(weak_out), bool(strong_out)
    return weak_out, strong_out


def noma_sum_rate(outage_probs, targets):
    """Sum over the pair of (1 - outage) * target rate."""
    p_weak, p_strong = outage_probs
    _check_probability(p_weak)
    _check_probability(p_strong)
    return (1.0 - p_weak) * targets.rate_weak + (1.0 - p_strong) * targets.rate_strong


def oma_gain_thresholds(targets, gamma, time_share=2):
    """Squared-gain outage thresholds for the OMA baseline.

    Each user holds the channel alone for 1/time_share of the frame, so meeting
    the target overall requires rate time_share*Rt while active:
    h^2 > epsilon_threshold(time_share*Rt)/gamma.  time_share=1 recovers the
    uncompensated single-user threshold.
    """
    if gamma <= 0.0:
        raise ValueError("transmit SNR must be positive")
    return GainThresholds(
        eta_weak=epsilon_threshold(time_share * targets.rate_weak) / gamma,
        eta_strong=epsilon_threshold(time_share * targets.rate_strong) / gamma,
    )


def oma_sum_rate(outage_probs, targets):
    """OMA sum rate: same linear form, outages taken at full power, no interference."""
    return noma_sum_rate(outage_probs, targets)


def _check_probability(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p!r}")
