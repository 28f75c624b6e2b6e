"""Random user positions/orientations and the exact vertical-angle distributions.

Each user independently draws a horizontal distance d ~ U[d_min, d_max] and a
mean vertical angle pm ~ U[mean_phi_min, mean_phi_max]; the instantaneous
vertical angle then fluctuates uniformly inside [pm - delta_phi, pm + delta_phi].
The marginal of the instantaneous angle is therefore the convolution of two
uniforms (a trapezoidal law), which the analytic engine needs in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ReceiverState, channel_gain, mean_channel_gain


@dataclass(frozen=True)
class MobilityConfig:
    """Sampling ranges for user positions and orientations (radians, meters)."""

    d_min: float
    d_max: float
    mean_phi_min: float
    mean_phi_max: float
    delta_phi: float
    num_users: int

    def __post_init__(self):
        if not self.d_min < self.d_max:
            raise ValueError("need d_min < d_max")
        if self.d_min < 0.0:
            raise ValueError("distances must be nonnegative")
        if self.mean_phi_min > self.mean_phi_max:
            raise ValueError("need mean_phi_min <= mean_phi_max")
        if self.delta_phi < 0.0:
            raise ValueError("delta_phi must be nonnegative")
        if self.mean_phi_min - self.delta_phi < -1e-12 or self.mean_phi_max + self.delta_phi > math.pi + 1e-12:
            raise ValueError("instantaneous angle support must stay within [0, pi]")
        if self.num_users < 2:
            raise ValueError("need at least two users")

    @classmethod
    def from_degrees(cls, d_min, d_max, mean_phi_min_deg, mean_phi_max_deg, delta_phi_deg, num_users):
        return cls(
            d_min,
            d_max,
            math.radians(mean_phi_min_deg),
            math.radians(mean_phi_max_deg),
            math.radians(delta_phi_deg),
            num_users,
        )

    @property
    def d_span(self):
        return self.d_max - self.d_min

    @property
    def mean_phi_span(self):
        return self.mean_phi_max - self.mean_phi_min


@dataclass
class PopulationSnapshot:
    """Arrays of per-user state plus the gains implied by the channel model."""

    d: np.ndarray
    mean_phi: np.ndarray
    phi: np.ndarray
    gains: np.ndarray
    mean_gains: np.ndarray

    def __len__(self):
        return len(self.d)

    def user(self, k):
        return ReceiverState(float(self.d[k]), float(self.mean_phi[k]), float(self.phi[k]))


def sample_user_arrays(config, rng, size):
    """Draw ``size`` i.i.d. users; returns (d, mean_phi, phi) arrays.

    Draw order (d, then mean angle, then deviation) is fixed so that runs with
    equal streams stay bitwise reproducible.
    """
    d = rng.uniform(config.d_min, config.d_max, size)
    mean_phi = rng.uniform(config.mean_phi_min, config.mean_phi_max, size)
    phi = mean_phi + rng.uniform(-config.delta_phi, config.delta_phi, size)
    return d, mean_phi, phi


def sample_population(config, geom, rng):
    """One snapshot of ``config.num_users`` users with true and mean gains."""
    d, mean_phi, phi = sample_user_arrays(config, rng, config.num_users)
    return PopulationSnapshot(
        d=d,
        mean_phi=mean_phi,
        phi=phi,
        gains=channel_gain(geom, d, phi),
        mean_gains=mean_channel_gain(geom, d, mean_phi),
    )


def conditional_phi_cdf(mean_phi, delta_phi, x):
    """CDF of the instantaneous angle given its mean: U[mean - delta, mean + delta].

    delta_phi = 0 degenerates to the unit step at mean_phi.
    """
    x = np.asarray(x, float)
    if delta_phi == 0.0:
        out = (x >= mean_phi).astype(float)
    else:
        out = np.clip((x - (mean_phi - delta_phi)) / (2.0 * delta_phi), 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def _uniform_step_integral(t, half_width):
    """Antiderivative G with G'(t) = CDF of U[-half_width, half_width] at t, G(-hw) = 0."""
    t = np.asarray(t, float)
    if half_width == 0.0:
        return np.maximum(t, 0.0)
    out = np.where(
        t <= -half_width,
        0.0,
        np.where(t >= half_width, t, (t + half_width) ** 2 / (4.0 * half_width)),
    )
    return out


def marginal_phi_cdf(config, x):
    """Marginal CDF of the instantaneous vertical angle (trapezoidal closed form).

    The angle is mean + deviation with mean ~ U[mean_phi_min, mean_phi_max] and
    deviation ~ U[-delta_phi, delta_phi]; integrating the conditional CDF over
    the mean gives [G(x - lo) - G(x - hi)] / (hi - lo) with G above.  Degenerate
    layers (delta_phi = 0 and/or lo = hi) reduce to uniform / step CDFs.
    """
    x = np.asarray(x, float)
    lo, hi = config.mean_phi_min, config.mean_phi_max
    if hi == lo:
        return conditional_phi_cdf(lo, config.delta_phi, x)
    out = (_uniform_step_integral(x - lo, config.delta_phi) - _uniform_step_integral(x - hi, config.delta_phi)) / (
        hi - lo
    )
    out = np.clip(out, 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def mean_phi_cdf(config, x):
    """CDF of the mean vertical angle alone: U[mean_phi_min, mean_phi_max]."""
    x = np.asarray(x, float)
    lo, hi = config.mean_phi_min, config.mean_phi_max
    if hi == lo:
        out = (x >= lo).astype(float)
    else:
        out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def _step_integral_scalar(t, half_width):
    if half_width == 0.0:
        return t if t > 0.0 else 0.0
    if t <= -half_width:
        return 0.0
    if t >= half_width:
        return t
    return (t + half_width) ** 2 / (4.0 * half_width)


def marginal_phi_cdf_scalar(config, x):
    """Scalar fast path of marginal_phi_cdf for quadrature integrands."""
    lo, hi = config.mean_phi_min, config.mean_phi_max
    if hi == lo:
        if config.delta_phi == 0.0:
            return 1.0 if x >= lo else 0.0
        return min(max((x - lo + config.delta_phi) / (2.0 * config.delta_phi), 0.0), 1.0)
    value = (_step_integral_scalar(x - lo, config.delta_phi) - _step_integral_scalar(x - hi, config.delta_phi)) / (
        hi - lo
    )
    return min(max(value, 0.0), 1.0)


def mean_phi_cdf_scalar(config, x):
    """Scalar fast path of mean_phi_cdf for quadrature integrands."""
    lo, hi = config.mean_phi_min, config.mean_phi_max
    if hi == lo:
        return 1.0 if x >= lo else 0.0
    return min(max((x - lo) / (hi - lo), 0.0), 1.0)


def noisy_estimates(state, sigma_d, sigma_phi, rng):
    """Gaussian-perturbed copy of a receiver state, for feedback computation only.

    Distance, instantaneous angle and mean angle receive independent zero-mean
    real Gaussian errors; negative noisy distances are clamped at zero.  The
    true channel is never evaluated on the returned state.
    """
    if sigma_d < 0.0 or sigma_phi < 0.0:
        raise ValueError("noise standard deviations must be nonnegative")
    d_hat = max(0.0, state.d + sigma_d * rng.standard_normal())
    phi_hat = state.phi + sigma_phi * rng.standard_normal()
    mean_phi_hat = state.mean_phi + sigma_phi * rng.standard_normal()
    return ReceiverState(d_hat, mean_phi_hat, phi_hat)


def noisy_estimate_arrays(d, mean_phi, phi, sigma_d, sigma_phi, rng):
    """Vectorized noisy estimates (d_hat, mean_phi_hat, phi_hat) for a snapshot.

    Draw order: distance errors, instantaneous-angle errors, mean-angle errors.
    """
    d_hat = np.maximum(0.0, d + sigma_d * rng.standard_normal(len(d)))
    phi_hat = phi + sigma_phi * rng.standard_normal(len(d))
    mean_phi_hat = mean_phi + sigma_phi * rng.standard_normal(len(d))
    return d_hat, mean_phi_hat, phi_hat
