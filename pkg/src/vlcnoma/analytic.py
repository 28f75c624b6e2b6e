"""Closed-form distributions and outage probabilities, evaluated by quadrature.

Everything rests on two facts.  First, inside the FOV the squared gain at
distance r factors as h^2 = g(r)^2 * cos^2(theta), so "h^2 <= x" is an
incidence-angle band and all CDFs reduce to distance integrals of

    fov_probability(r, y) = Pr(|theta| <= y | d = r)
                          = F_phi(c(r) + y) - F_phi(c(r) - y),   c(r) = pi - atan(ell/r),

with F_phi the marginal (trapezoidal) law of the vertical angle, or the
uniform law of the mean angle for mean-angle feedback.  Second, the boundary
angle where the squared gain crosses a level x at distance r is

    angle = 1/2 * arccos(2 * min(x / g(r)^2, 1) - 1)   in [0, pi/2],

clamped so levels outside the gain support never fault.

The number of users with nonzero gain is Binomial(K, p); order statistics of
the scheduled ranks mix the per-user CDF over a truncated Binomial count.
Group-based feedback conditions the same integrals on distance/angle threshold
bands; for mean-angle reports, the inner average over the mean angle is a
piecewise-linear integral of the uniform conditional CDF and is evaluated in
closed form, leaving a single adaptive quadrature over distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.stats import binom

from .channel import LedGeometry
from .link import eta_thresholds, oma_gain_thresholds
from .population import MobilityConfig, marginal_phi_cdf_scalar, mean_phi_cdf_scalar
from .quadrature import QuadratureConfig, integrate_adaptive
from .scheduling import FeedbackKind, FeedbackScheme

WEAK, STRONG = "weak", "strong"


@dataclass(frozen=True)
class AnalyticModel:
    """Geometry, mobility and (optionally) a group feedback scheme plus quadrature config."""

    geom: LedGeometry
    mobility: MobilityConfig
    scheme: Optional[FeedbackScheme] = None
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.scheme is not None and self.scheme.theta_threshold is not None:
            if self.scheme.theta_threshold > self.geom.half_fov + 1e-12:
                raise ValueError("angle threshold cannot exceed the detector half FOV")
        if self.scheme is not None and self.scheme.d_threshold is not None:
            # d_threshold = d_max degenerates the weak group away but keeps the strong one valid
            if not self.mobility.d_min < self.scheme.d_threshold <= self.mobility.d_max:
                raise ValueError("distance threshold must lie inside the distance range")


def boresight_angle(geom, r):
    """Vertical angle at which the incidence is exactly zero for distance r."""
    return math.pi - math.atan2(geom.ell, r)


def inverse_squared_gain(geom, r):
    """1/g(r)^2 = (ell^2 + r^2)^(m+2) / h_c^4; multiplied by h^2 it returns cos^2(theta)."""
    return (geom.ell**2 + r * r) ** (geom.m + 2.0) / geom.channel_constant**2


def gain_boundary_angle(geom, x, r):
    """|incidence| at which the squared gain equals x at distance r, clamped to [0, pi/2]."""
    arg = 2.0 * min(x * inverse_squared_gain(geom, r), 1.0) - 1.0
    return 0.5 * math.acos(max(arg, -1.0))


def clipped_gain_angles(geom, x, r, cap):
    """(min, max) of the gain boundary angle against a cap angle.

    The capped value is the effective integration half-angle of the unordered
    and strong-group CDFs; the floored value is the weak-group counterpart.
    The arccos argument is already clamped, so levels beyond the gain support
    degrade gracefully to 0 or pi/2.
    """
    a = gain_boundary_angle(geom, x, r)
    return min(a, cap), max(a, cap)


def gain_boundary_distance(geom, x, cos_sq_scale=1.0):
    """Distance where g(r)^2 * cos_sq_scale crosses the level x.

    Returns 0 when the level exceeds the scaled gain at r = 0 (no crossing at
    nonnegative distance) and +inf when x <= 0; callers clamp into their range.
    """
    if x <= 0.0:
        return math.inf
    t = (geom.channel_constant**2 * cos_sq_scale / x) ** (1.0 / (geom.m + 2.0)) - geom.ell**2
    if t <= 0.0:
        return 0.0
    return math.sqrt(t)


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


# ---------------------------------------------------------------------------
# Orientation-band probabilities and their distance breakpoints
# ---------------------------------------------------------------------------


def fov_probability(model, r, half_angle, use_mean=False):
    """Pr(|incidence angle| <= half_angle | d = r) for the instantaneous (or mean) angle."""
    if half_angle < 0.0:
        raise ValueError("half_angle must be nonnegative")
    c = boresight_angle(model.geom, r)
    cdf = mean_phi_cdf_scalar if use_mean else marginal_phi_cdf_scalar
    value = cdf(model.mobility, c + half_angle) - cdf(model.mobility, c - half_angle)
    return min(max(value, 0.0), 1.0)


def _phi_corners(model, use_mean):
    mob = model.mobility
    if use_mean:
        return (mob.mean_phi_min, mob.mean_phi_max)
    return (
        mob.mean_phi_min - mob.delta_phi,
        mob.mean_phi_min + mob.delta_phi,
        mob.mean_phi_max - mob.delta_phi,
        mob.mean_phi_max + mob.delta_phi,
    )


def _corner_crossings(model, offsets, lo, hi, use_mean=False):
    """Distances where c(r) + offset crosses a kink of the angle CDF."""
    ell = model.geom.ell
    out = []
    for s in offsets:
        for t in _phi_corners(model, use_mean):
            beta = math.pi + s - t  # needs atan(ell/r) = beta
            if 1e-12 < beta < math.pi / 2.0 - 1e-12:
                r = ell / math.tan(beta)
                if lo < r < hi:
                    out.append(r)
    return out


def _level_breakpoints(model, x, lo, hi, caps):
    """Distances where the boundary angle crosses 0 or one of the cap angles."""
    out = []
    for scale in [1.0] + [math.cos(c) ** 2 for c in caps]:
        r = gain_boundary_distance(model.geom, x, scale)
        if lo < r < hi:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# Nonzero-gain probability and the truncated count PMF
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _fov_normalizer(model):
    """Integral of fov_probability(r, half_fov) over the distance range, with error."""
    theta = model.geom.half_fov
    pts = _corner_crossings(model, (theta, -theta), model.mobility.d_min, model.mobility.d_max)
    return integrate_adaptive(
        lambda r: fov_probability(model, r, theta),
        model.mobility.d_min,
        model.mobility.d_max,
        model.quad,
        pts,
    )


def nonzero_gain_probability(model, with_error=False):
    """Probability that a single user's channel gain is nonzero."""
    value, err = _fov_normalizer(model)
    p = min(max(value / model.mobility.d_span, 0.0), 1.0)
    if with_error:
        return p, err / model.mobility.d_span
    return p


def nonzero_count_tail(model, k_min):
    """Pr(at least k_min users have nonzero gain)."""
    p = nonzero_gain_probability(model)
    return float(binom.sf(k_min - 1, model.mobility.num_users, p))


def nonzero_count_pmf(model, k, k_min=0):
    """PMF of the nonzero-gain user count, truncated and renormalized below k_min."""
    K = model.mobility.num_users
    if not 0 <= k <= K:
        raise ValueError(f"count must lie in [0, {K}]")
    if k < k_min:
        return 0.0
    p = nonzero_gain_probability(model)
    return float(binom.pmf(k, K, p) / binom.sf(k_min - 1, K, p))


# ---------------------------------------------------------------------------
# Individual scheduling: unordered and ordered squared-gain CDFs
# ---------------------------------------------------------------------------


def unordered_gain_cdf(model, x, with_error=False):
    """CDF of the squared gain of one user conditioned on the gain being nonzero."""
    den, den_err = _fov_normalizer(model)
    if x <= 0.0:
        return (0.0, 0.0) if with_error else 0.0
    theta = model.geom.half_fov
    lo, hi = model.mobility.d_min, model.mobility.d_max
    # beyond the level crossing g(r)^2 = x the integrand is identically zero
    hi_eff = min(hi, gain_boundary_distance(model.geom, x))
    if hi_eff <= lo:
        value = 1.0
        num_err = 0.0
    else:
        pts = _level_breakpoints(model, x, lo, hi_eff, (theta,))
        pts += _corner_crossings(model, (theta, -theta), lo, hi_eff)
        num, num_err = integrate_adaptive(
            lambda r: fov_probability(model, r, min(gain_boundary_angle(model.geom, x, r), theta)),
            lo,
            hi_eff,
            model.quad,
            pts,
        )
        value = 1.0 - num / den
    value = min(max(value, 0.0), 1.0)
    if with_error:
        return value, (num_err + value * den_err) / den if hi_eff > lo else den_err / den
    return value


def ordered_gain_cdf(model, x, rank, min_count, with_error=False):
    """CDF of the rank-th smallest nonzero squared gain, given at least min_count nonzero users.

    Mixture over the truncated Binomial count n of the probability that at
    least ``rank`` of n independent nonzero gains fall at or below x.
    """
    K = model.mobility.num_users
    if not 1 <= rank <= K:
        raise ValueError(f"rank must lie in [1, {K}]")
    if not rank <= min_count <= K:
        raise ValueError("min_count must lie in [rank, K]")
    u, u_err = unordered_gain_cdf(model, x, with_error=True)
    p = nonzero_gain_probability(model)
    n = np.arange(min_count, K + 1)
    weights = binom.pmf(n, K, p) / binom.sf(min_count - 1, K, p)
    orders = binom.sf(rank - 1, n, u)
    value = float(np.clip(np.sum(weights * orders), 0.0, 1.0))
    if with_error:
        # |d/du of the binomial tail| <= n <= K bounds the error amplification
        return value, K * u_err
    return value


# ---------------------------------------------------------------------------
# Group scheduling, instantaneous-angle reports
# ---------------------------------------------------------------------------


def _require_group_scheme(model, kinds):
    if model.scheme is None or model.scheme.kind not in kinds:
        raise ValueError(f"model.scheme must be one of {[k.value for k in kinds]}")
    return model.scheme


@lru_cache(maxsize=None)
def _weak_band_normalizer_instant(model):
    """Integral over [d_th, d_max] of Pr(theta_th < |theta| <= half_fov | r)."""
    scheme = model.scheme
    theta, th = model.geom.half_fov, scheme.theta_threshold
    pts = _corner_crossings(model, (theta, -theta, th, -th), scheme.d_threshold, model.mobility.d_max)
    return integrate_adaptive(
        lambda r: fov_probability(model, r, theta) - fov_probability(model, r, th),
        scheme.d_threshold,
        model.mobility.d_max,
        model.quad,
        pts,
    )


@lru_cache(maxsize=None)
def _weak_membership_instant(model):
    """Integral over [d_th, d_max] of Pr(|theta| > theta_th | r)."""
    scheme = model.scheme
    th = scheme.theta_threshold
    pts = _corner_crossings(model, (th, -th), scheme.d_threshold, model.mobility.d_max)
    return integrate_adaptive(
        lambda r: 1.0 - fov_probability(model, r, th),
        scheme.d_threshold,
        model.mobility.d_max,
        model.quad,
        pts,
    )


@lru_cache(maxsize=None)
def _strong_membership_instant(model):
    """Integral over [d_min, d_th] of Pr(|theta| <= theta_th | r)."""
    scheme = model.scheme
    th = scheme.theta_threshold
    pts = _corner_crossings(model, (th, -th), model.mobility.d_min, scheme.d_threshold)
    return integrate_adaptive(
        lambda r: fov_probability(model, r, th),
        model.mobility.d_min,
        scheme.d_threshold,
        model.quad,
        pts,
    )


def group_gain_cdf_instant(model, x, role, with_error=False):
    """Squared-gain CDF inside one instantaneous-report group, zero gains excluded.

    Weak role integrates the in-FOV band above the floored boundary angle from
    the crossing distance of the FOV-edge gain outward; strong role is the
    unordered form restricted to [d_min, d_th] with the angle threshold as cap.
    """
    scheme = _require_group_scheme(model, (FeedbackKind.TWO_BIT_INSTANT,))
    geom, mob = model.geom, model.mobility
    theta, th = geom.half_fov, scheme.theta_threshold
    if role == WEAK:
        den, den_err = _weak_band_normalizer_instant(model)
        if den <= 0.0:
            raise ValueError("weak group has zero probability under this configuration")
        if x <= 0.0:
            return (0.0, 0.0) if with_error else 0.0
        d_star = _clamp(gain_boundary_distance(geom, x, math.cos(theta) ** 2), scheme.d_threshold, mob.d_max)
        pts = _level_breakpoints(model, x, d_star, mob.d_max, (theta, th))
        pts += _corner_crossings(model, (theta, -theta, th, -th), d_star, mob.d_max)
        num, num_err = integrate_adaptive(
            lambda r: fov_probability(model, r, theta)
            - fov_probability(model, r, max(gain_boundary_angle(geom, x, r), th)),
            d_star,
            mob.d_max,
            model.quad,
            pts,
        )
        value = min(max(num / den, 0.0), 1.0)
    elif role == STRONG:
        den, den_err = _strong_membership_instant(model)
        if x <= 0.0:
            return (0.0, 0.0) if with_error else 0.0
        hi_eff = min(scheme.d_threshold, gain_boundary_distance(geom, x))
        if hi_eff <= mob.d_min:
            num, num_err = 0.0, 0.0
        else:
            pts = _level_breakpoints(model, x, mob.d_min, hi_eff, (th,))
            pts += _corner_crossings(model, (th, -th), mob.d_min, hi_eff)
            num, num_err = integrate_adaptive(
                lambda r: fov_probability(model, r, min(gain_boundary_angle(geom, x, r), th)),
                mob.d_min,
                hi_eff,
                model.quad,
                pts,
            )
        value = min(max(1.0 - num / den, 0.0), 1.0)
    else:
        raise ValueError(f"role must be '{WEAK}' or '{STRONG}'")
    if with_error:
        return value, (num_err + value * den_err) / den
    return value


# ---------------------------------------------------------------------------
# Group scheduling, mean-angle reports
# ---------------------------------------------------------------------------


def _intersect(lo, hi, bound_lo, bound_hi):
    a, b = max(lo, bound_lo), min(hi, bound_hi)
    return (a, b) if b > a else None


def _weak_mean_intervals(model, r, fov_capped):
    """Mean-angle intervals of weak-group membership at distance r.

    With ``fov_capped`` the mean incidence is additionally confined to the FOV
    (the conditioning of the mean-report weak CDF); otherwise the full
    |mean incidence| > theta_th tails are returned.
    """
    mob, scheme = model.mobility, model.scheme
    c = boresight_angle(model.geom, r)
    th = scheme.theta_threshold
    lo, hi = mob.mean_phi_min, mob.mean_phi_max
    if fov_capped:
        theta = model.geom.half_fov
        parts = [_intersect(c - theta, c - th, lo, hi), _intersect(c + th, c + theta, lo, hi)]
    else:
        parts = [_intersect(-math.inf, c - th, lo, hi), _intersect(c + th, math.inf, lo, hi)]
    return [p for p in parts if p is not None]


def _strong_mean_interval(model, r):
    mob, scheme = model.mobility, model.scheme
    c = boresight_angle(model.geom, r)
    th = scheme.theta_threshold
    part = _intersect(c - th, c + th, mob.mean_phi_min, mob.mean_phi_max)
    return [part] if part is not None else []


def _interval_length(parts):
    return sum(b - a for a, b in parts)


def _ramp_integral(u, v, t, half_width):
    """Exact integral over mean angles in [u, v] of the conditional CDF at level t.

    The conditional law of the instantaneous angle given a mean value m is
    U[m - half_width, m + half_width]; as a function of m its CDF at t is a
    descending ramp, so the integral is piecewise quadratic (a step indicator
    for half_width = 0).
    """
    if v <= u:
        return 0.0
    if half_width == 0.0:
        return max(0.0, min(v, t) - u)
    lo, hi = t - half_width, t + half_width
    total = max(0.0, min(v, lo) - u)
    a, b = max(u, lo), min(v, hi)
    if b > a:
        total += ((hi - a) ** 2 - (hi - b) ** 2) / (4.0 * half_width)
    return total


def _conditional_band_integral(model, parts, r, half_angle):
    """Integral over the mean-angle set of Pr(|theta| <= half_angle | r, mean)."""
    if half_angle <= 0.0:
        return 0.0
    c = boresight_angle(model.geom, r)
    dphi = model.mobility.delta_phi
    total = 0.0
    for a, b in parts:
        total += _ramp_integral(a, b, c + half_angle, dphi) - _ramp_integral(a, b, c - half_angle, dphi)
    return total


def _require_mean_span(model):
    if model.mobility.mean_phi_span == 0.0:
        raise ValueError("mean-angle group CDFs need a nondegenerate mean-angle range")


@lru_cache(maxsize=None)
def _weak_fov_normalizer_mean(model):
    """Integral over [d_th, d_max] of the FOV-capped weak membership interval length."""
    scheme = model.scheme
    th, theta = scheme.theta_threshold, model.geom.half_fov
    pts = _corner_crossings(model, (theta, -theta, th, -th), scheme.d_threshold, model.mobility.d_max, use_mean=True)
    return integrate_adaptive(
        lambda r: _interval_length(_weak_mean_intervals(model, r, fov_capped=True)),
        scheme.d_threshold,
        model.mobility.d_max,
        model.quad,
        pts,
    )


@lru_cache(maxsize=None)
def _weak_membership_mean(model):
    """Integral over [d_th, d_max] of the full weak membership interval length."""
    scheme = model.scheme
    th = scheme.theta_threshold
    pts = _corner_crossings(model, (th, -th), scheme.d_threshold, model.mobility.d_max, use_mean=True)
    return integrate_adaptive(
        lambda r: _interval_length(_weak_mean_intervals(model, r, fov_capped=False)),
        scheme.d_threshold,
        model.mobility.d_max,
        model.quad,
        pts,
    )


@lru_cache(maxsize=None)
def _strong_membership_mean(model, lo):
    """Integral over [lo, d_th] of the strong membership interval length."""
    scheme = model.scheme
    th = scheme.theta_threshold
    pts = _corner_crossings(model, (th, -th), lo, scheme.d_threshold, use_mean=True)
    return integrate_adaptive(
        lambda r: _interval_length(_strong_mean_interval(model, r)),
        lo,
        scheme.d_threshold,
        model.quad,
        pts,
    )


def group_gain_cdf_mean(model, x, role, with_error=False):
    """Squared-gain CDF inside one mean-report group, conditioned on nonzero MEAN gain.

    Groups are formed on the mean incidence angle while the gain keeps its
    instantaneous fluctuation, so the distribution carries an atom at zero
    (members whose instantaneous angle leaves the FOV).  The average over the
    mean angle is exact; only the distance integral is numeric.
    """
    scheme = _require_group_scheme(model, (FeedbackKind.TWO_BIT_MEAN,))
    _require_mean_span(model)
    geom, mob = model.geom, model.mobility
    theta = geom.half_fov
    if role == WEAK:
        den, den_err = _weak_fov_normalizer_mean(model)
        if den <= 0.0:
            raise ValueError("weak group has zero probability under this configuration")
        if x < 0.0:
            return (0.0, 0.0) if with_error else 0.0
        d_star = _clamp(gain_boundary_distance(geom, x), scheme.d_threshold, mob.d_max)
        lo = scheme.d_threshold

        def saturated(r):
            return _interval_length(_weak_mean_intervals(model, r, fov_capped=True))

        def integrand(r):
            parts = _weak_mean_intervals(model, r, fov_capped=True)
            cap = min(gain_boundary_angle(geom, x, r), theta)
            return _interval_length(parts) - _conditional_band_integral(model, parts, r, cap)

        pts_sat = _corner_crossings(model, (theta, -theta, scheme.theta_threshold, -scheme.theta_threshold),
                                    d_star, mob.d_max, use_mean=True)
        term1, err1 = integrate_adaptive(saturated, d_star, mob.d_max, model.quad, pts_sat)
        pts = _level_breakpoints(model, x, lo, d_star, (theta, scheme.theta_threshold))
        pts += _corner_crossings(model, (theta, -theta, scheme.theta_threshold, -scheme.theta_threshold),
                                 lo, d_star, use_mean=True)
        term2, err2 = integrate_adaptive(integrand, lo, d_star, model.quad, pts)
        value = min(max((term1 + term2) / den, 0.0), 1.0)
        num_err = err1 + err2
    elif role == STRONG:
        den, den_err = _strong_membership_mean(model, mob.d_min)
        if x < 0.0:
            return (0.0, 0.0) if with_error else 0.0
        d_star = _clamp(gain_boundary_distance(geom, x), mob.d_min, scheme.d_threshold)

        def integrand(r):
            parts = _strong_mean_interval(model, r)
            cap = min(gain_boundary_angle(geom, x, r), theta)
            return _interval_length(parts) - _conditional_band_integral(model, parts, r, cap)

        term1, err1 = _strong_membership_mean(model, d_star)
        pts = _level_breakpoints(model, x, mob.d_min, d_star, (theta, scheme.theta_threshold))
        pts += _corner_crossings(model, (scheme.theta_threshold, -scheme.theta_threshold),
                                 mob.d_min, d_star, use_mean=True)
        term2, err2 = integrate_adaptive(integrand, mob.d_min, d_star, model.quad, pts)
        value = min(max((term1 + term2) / den, 0.0), 1.0)
        num_err = err1 + err2
    else:
        raise ValueError(f"role must be '{WEAK}' or '{STRONG}'")
    if with_error:
        return value, (num_err + value * den_err) / den
    return value


# ---------------------------------------------------------------------------
# Group membership probabilities and success probabilities for outage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupStats:
    """Per-user membership probabilities and the both-groups-formed probability."""

    p_weak: float
    p_strong: float
    both_nonempty: float


def group_probabilities(model, variant):
    """Membership probabilities of the weak/strong groups for one report variant."""
    scheme = _require_group_scheme(model, (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN))
    use_mean = variant_uses_mean(variant)
    mob = model.mobility
    th = scheme.theta_threshold
    pts_w = _corner_crossings(model, (th, -th), scheme.d_threshold, mob.d_max, use_mean=use_mean)
    w, _ = integrate_adaptive(
        lambda r: 1.0 - fov_probability(model, r, th, use_mean=use_mean),
        scheme.d_threshold,
        mob.d_max,
        model.quad,
        pts_w,
    )
    pts_s = _corner_crossings(model, (th, -th), mob.d_min, scheme.d_threshold, use_mean=use_mean)
    s, _ = integrate_adaptive(
        lambda r: fov_probability(model, r, th, use_mean=use_mean),
        mob.d_min,
        scheme.d_threshold,
        model.quad,
        pts_s,
    )
    p_w, p_s = w / mob.d_span, s / mob.d_span
    K = mob.num_users
    both = 1.0 - (1.0 - p_w) ** K - (1.0 - p_s) ** K + max(1.0 - p_w - p_s, 0.0) ** K
    return GroupStats(p_weak=p_w, p_strong=p_s, both_nonempty=min(max(both, 0.0), 1.0))


def variant_uses_mean(variant):
    if variant in ("instant", FeedbackKind.TWO_BIT_INSTANT):
        return False
    if variant in ("mean", FeedbackKind.TWO_BIT_MEAN):
        return True
    raise ValueError(f"unknown group variant {variant!r}")


def group_success_probability(model, threshold, role, variant, with_error=False):
    """Pr(squared gain > threshold) for a uniformly picked member of one group.

    This is the quantity the scheduler realizes: membership comes from the
    (instantaneous or mean) report, the gain stays instantaneous, and zero
    gains count as failures.
    """
    scheme = _require_group_scheme(model, (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN))
    geom, mob = model.geom, model.mobility
    theta = geom.half_fov
    th = scheme.theta_threshold

    def _done(value, err):
        value = min(max(value, 0.0), 1.0)
        return (value, err) if with_error else value

    if variant_uses_mean(variant):
        _require_mean_span(model)
        if role == WEAK:
            den, den_err = _weak_membership_mean(model)
            hi_eff = min(mob.d_max, gain_boundary_distance(geom, threshold))
            lo = scheme.d_threshold
            if hi_eff <= lo:
                return _done(0.0, den_err / den)

            def integrand(r):
                parts = _weak_mean_intervals(model, r, fov_capped=False)
                cap = min(gain_boundary_angle(geom, threshold, r), theta)
                return _conditional_band_integral(model, parts, r, cap)

            pts = _level_breakpoints(model, threshold, lo, hi_eff, (theta, th))
            pts += _corner_crossings(model, (th, -th), lo, hi_eff, use_mean=True)
            num, num_err = integrate_adaptive(integrand, lo, hi_eff, model.quad, pts)
            return _done(num / den, (num_err + abs(num / den) * den_err) / den)
        if role == STRONG:
            value, err = group_gain_cdf_mean(model, threshold, STRONG, with_error=True)
            return _done(1.0 - value, err)
        raise ValueError(f"role must be '{WEAK}' or '{STRONG}'")
    if role == WEAK:
        den, den_err = _weak_membership_instant(model)
        if den <= 0.0:
            raise ValueError("weak group has zero probability under this configuration")
        hi_eff = min(mob.d_max, gain_boundary_distance(geom, threshold))
        lo = scheme.d_threshold
        if hi_eff <= lo:
            return _done(0.0, den_err / den)

        def integrand(r):
            cap = min(gain_boundary_angle(geom, threshold, r), theta)
            return max(fov_probability(model, r, cap) - fov_probability(model, r, th), 0.0)

        pts = _level_breakpoints(model, threshold, lo, hi_eff, (theta, th))
        pts += _corner_crossings(model, (theta, -theta, th, -th), lo, hi_eff)
        num, num_err = integrate_adaptive(integrand, lo, hi_eff, model.quad, pts)
        return _done(num / den, (num_err + abs(num / den) * den_err) / den)
    if role == STRONG:
        value, err = group_gain_cdf_instant(model, threshold, STRONG, with_error=True)
        return _done(1.0 - value, err)
    raise ValueError(f"role must be '{WEAK}' or '{STRONG}'")


# ---------------------------------------------------------------------------
# Outage probabilities and sum-rate sweeps
# ---------------------------------------------------------------------------


def individual_outage(model, noma, gamma, rank_weak, rank_strong):
    """Conditional outage pair for individually scheduled ranks (full-CSI ordering)."""
    thr = eta_thresholds(noma.targets, noma.alloc, gamma)
    p_weak = ordered_gain_cdf(model, thr.eta_weak, rank_weak, rank_strong)
    p_strong = ordered_gain_cdf(model, thr.eta_strong, rank_strong, rank_strong)
    return p_weak, p_strong


def individual_oma_outage(model, noma, gamma, rank_weak, rank_strong, time_share=2):
    """Outage pair of the OMA baseline on the same individually scheduled ranks."""
    thr = oma_gain_thresholds(noma.targets, gamma, time_share)
    p_weak = ordered_gain_cdf(model, thr.eta_weak, rank_weak, rank_strong)
    p_strong = ordered_gain_cdf(model, thr.eta_strong, rank_strong, rank_strong)
    return p_weak, p_strong


def group_outage(model, noma, gamma, variant):
    """Conditional outage pair for group scheduling, given both groups formed."""
    thr = eta_thresholds(noma.targets, noma.alloc, gamma)
    p_weak = 1.0 - group_success_probability(model, thr.eta_weak, WEAK, variant)
    p_strong = 1.0 - group_success_probability(model, thr.eta_strong, STRONG, variant)
    return p_weak, p_strong


def group_oma_outage(model, noma, gamma, variant, time_share=2):
    thr = oma_gain_thresholds(noma.targets, gamma, time_share)
    p_weak = 1.0 - group_success_probability(model, thr.eta_weak, WEAK, variant)
    p_strong = 1.0 - group_success_probability(model, thr.eta_strong, STRONG, variant)
    return p_weak, p_strong


def _point(gamma_db, p_weak, p_strong, err, targets, cond_rate):
    from .simulate import CurvePoint

    sum_rate = (1.0 - p_weak) * targets.rate_weak + (1.0 - p_strong) * targets.rate_strong
    return CurvePoint(
        gamma_db=float(gamma_db),
        sum_rate=float(sum_rate),
        ci_halfwidth=float(err),
        outage_weak=float(p_weak),
        outage_strong=float(p_strong),
        conditioning_rate=float(cond_rate),
    )


def sum_rate_sweep(model, noma, gamma_db_grid, strategy, rank_weak=1, rank_strong=10,
                   include_oma=True, oma_time_share=2):
    """Closed-form sum-rate curves with the same labels/conditioning as run_sweep.

    ``strategy`` is "individual" (full-CSI ranked pair), "group-instant" or
    "group-mean".  CurvePoint.ci_halfwidth carries the propagated quadrature
    error estimate, and conditioning_rate the probability of the scheduling
    precondition (enough nonzero-gain users / both groups nonempty).
    """
    targets = noma.targets
    curves = {}
    if strategy == "individual":
        cond = nonzero_count_tail(model, rank_strong)
        label = f"noma-{FeedbackKind.FULL_CSI.value}"
        noma_pts, oma_pts = [], []
        for gamma_db in gamma_db_grid:
            gamma = 10.0 ** (gamma_db / 10.0)
            thr = eta_thresholds(noma.targets, noma.alloc, gamma)
            pw, ew = ordered_gain_cdf(model, thr.eta_weak, rank_weak, rank_strong, with_error=True)
            ps, es = ordered_gain_cdf(model, thr.eta_strong, rank_strong, rank_strong, with_error=True)
            err = targets.rate_weak * ew + targets.rate_strong * es
            noma_pts.append(_point(gamma_db, pw, ps, err, targets, cond))
            if include_oma:
                othr = oma_gain_thresholds(targets, gamma, oma_time_share)
                pw, ew = ordered_gain_cdf(model, othr.eta_weak, rank_weak, rank_strong, with_error=True)
                ps, es = ordered_gain_cdf(model, othr.eta_strong, rank_strong, rank_strong, with_error=True)
                err = targets.rate_weak * ew + targets.rate_strong * es
                oma_pts.append(_point(gamma_db, pw, ps, err, targets, cond))
        curves[label] = noma_pts
        if include_oma:
            curves["oma"] = oma_pts
        return curves
    if strategy in ("group-instant", "group-mean"):
        variant = "instant" if strategy == "group-instant" else "mean"
        kind = FeedbackKind.TWO_BIT_INSTANT if variant == "instant" else FeedbackKind.TWO_BIT_MEAN
        cond = group_probabilities(model, variant).both_nonempty
        label = f"noma-{kind.value}"
        noma_pts, oma_pts = [], []
        for gamma_db in gamma_db_grid:
            gamma = 10.0 ** (gamma_db / 10.0)
            thr = eta_thresholds(noma.targets, noma.alloc, gamma)
            sw, ew = group_success_probability(model, thr.eta_weak, WEAK, variant, with_error=True)
            ss, es = group_success_probability(model, thr.eta_strong, STRONG, variant, with_error=True)
            err = targets.rate_weak * ew + targets.rate_strong * es
            noma_pts.append(_point(gamma_db, 1.0 - sw, 1.0 - ss, err, targets, cond))
            if include_oma:
                othr = oma_gain_thresholds(targets, gamma, oma_time_share)
                sw, ew = group_success_probability(model, othr.eta_weak, WEAK, variant, with_error=True)
                ss, es = group_success_probability(model, othr.eta_strong, STRONG, variant, with_error=True)
                err = targets.rate_weak * ew + targets.rate_strong * es
                oma_pts.append(_point(gamma_db, 1.0 - sw, 1.0 - ss, err, targets, cond))
        curves[label] = noma_pts
        if include_oma:
            curves["oma"] = oma_pts
        return curves
    raise ValueError(f"unknown strategy {strategy!r}")
