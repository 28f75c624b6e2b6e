"""Line-of-sight optical channel between a ceiling LED and tilted mobile receivers.

The LED points straight down from height ``ell`` above the user plane.  A
receiver at horizontal distance ``d`` whose detector normal makes the vertical
angle ``phi`` sees the ray under the incidence angle

    theta = pi - atan(ell / d) - phi        (signed, atan(ell/0) := pi/2)

and the DC gain is

    h = (m + 1) * A_r / (2*pi*(ell^2 + d^2)) * cos^m(phi_irr) * cos(theta)

gated to zero whenever |theta| exceeds the detector half field of view.  With
the LED facing down, the irradiance cosine is cos(phi_irr) = ell/sqrt(ell^2+d^2),
which lets the in-FOV gain factor as h = g(d) * cos(theta) with

    g(d) = h_c^2 / (ell^2 + d^2)^((m+2)/2),   h_c^2 = (m+1) * A_r * ell^m / (2*pi).

All angles are radians, distances meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def lambertian_order(hpbw):
    """Beam-shape exponent -1/log2(cos(hpbw)) for a half-power beamwidth in (0, pi/2)."""
    if not 0.0 < hpbw < math.pi / 2.0:
        raise ValueError(f"half-power beamwidth must lie in (0, pi/2), got {hpbw!r}")
    return -1.0 / math.log2(math.cos(hpbw))


def incidence_angle(d, phi, ell):
    """Signed incidence angle at the detector; arctan2 handles d = 0 as pi/2."""
    return math.pi - np.arctan2(ell, d) - phi


def irradiance_cosine(d, ell):
    """Cosine of the emission angle for a downward-facing LED: ell/sqrt(ell^2 + d^2)."""
    return ell / np.sqrt(ell * ell + d * d)


@dataclass(frozen=True)
class LedGeometry:
    """Fixed transmitter/photodetector parameters.

    ell            LED height above the user plane [m]
    hpbw           half-power beamwidth [rad]
    detector_area  photodetector area [m^2]
    half_fov       half field of view of the detector [rad]
    """

    ell: float
    hpbw: float
    detector_area: float
    half_fov: float
    m: float = field(init=False)

    def __post_init__(self):
        if self.ell <= 0.0:
            raise ValueError("LED height must be positive")
        if self.detector_area <= 0.0:
            raise ValueError("detector area must be positive")
        if not 0.0 < self.half_fov <= math.pi / 2.0:
            raise ValueError("half FOV must lie in (0, pi/2]")
        object.__setattr__(self, "m", lambertian_order(self.hpbw))

    @classmethod
    def from_degrees(cls, ell, hpbw_deg, detector_area, half_fov_deg):
        return cls(ell, math.radians(hpbw_deg), detector_area, math.radians(half_fov_deg))

    @property
    def channel_constant(self):
        """h_c^2 = (m+1) * A_r * ell^m / (2*pi), the distance-free part of g(d)."""
        return (self.m + 1.0) * self.detector_area * self.ell**self.m / TWO_PI

    @property
    def peak_gain(self):
        """Gain ceiling (m+1)*A_r/(2*pi*ell^2), attained under the LED at theta = 0."""
        return (self.m + 1.0) * self.detector_area / (TWO_PI * self.ell**2)

    def gain_factor(self, d):
        """FOV-independent factor g(d) so that h = g(d)*cos(theta) inside the FOV."""
        return self.channel_constant / (self.ell**2 + np.asarray(d, float) ** 2) ** ((self.m + 2.0) / 2.0)


@dataclass(frozen=True)
class ReceiverState:
    """One user's horizontal distance, mean vertical angle and instantaneous vertical angle.

    Sampled states keep phi inside [0, pi]; noisy estimate states may not.
    """

    d: float
    mean_phi: float
    phi: float

    def __post_init__(self):
        if self.d < 0.0:
            raise ValueError("horizontal distance must be nonnegative")


def channel_gain(geom, d, phi):
    """Instantaneous DC channel gain; exactly 0 outside the FOV.  Array friendly."""
    d = np.asarray(d, float)
    theta = incidence_angle(d, phi, geom.ell)
    inside = np.abs(theta) <= geom.half_fov
    base = (geom.m + 1.0) * geom.detector_area / (TWO_PI * (geom.ell**2 + d * d))
    h = base * irradiance_cosine(d, geom.ell) ** geom.m * np.cos(theta) * inside
    if h.ndim == 0:
        return float(h)
    return h


def mean_channel_gain(geom, d, mean_phi):
    """DC gain evaluated at the mean vertical angle, FOV-gated on the mean incidence.

    Identical to ``channel_gain`` with phi = mean_phi: the absolute value on the
    cosine is redundant once the gate restricts |theta| <= half_fov <= pi/2.
    """
    d = np.asarray(d, float)
    theta_mean = incidence_angle(d, mean_phi, geom.ell)
    inside = np.abs(theta_mean) <= geom.half_fov
    base = (geom.m + 1.0) * geom.detector_area / (TWO_PI * (geom.ell**2 + d * d))
    h = base * irradiance_cosine(d, geom.ell) ** geom.m * np.abs(np.cos(theta_mean)) * inside
    if h.ndim == 0:
        return float(h)
    return h


def state_gain(geom, state):
    """Gain of a single ReceiverState."""
    return channel_gain(geom, state.d, state.phi)
