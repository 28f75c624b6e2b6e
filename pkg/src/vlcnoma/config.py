"""Configuration parsing and the bundled experiment presets.

Configuration is plain INI-style text with sections mirroring the domain
objects; all angles are degrees, distances meters, SNR decibels.  Values merge
in precedence order: built-in defaults < preset group < config file <
``--set section.key=value`` overrides < dedicated CLI flags.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import LedGeometry
from .link import NomaConfig, PowerAllocation, TargetRates
from .population import MobilityConfig
from .quadrature import QuadratureConfig
from .scheduling import FeedbackKind, FeedbackScheme
from .simulate import ExperimentConfig, NoiseConfig


class ConfigError(ValueError):
    """A configuration value failed to parse or validate; message names the field."""


DEFAULTS = {
    "geometry.ell_m": "2.0",
    "geometry.hpbw_deg": "60.0",
    "geometry.detector_area_cm2": "1.0",
    "geometry.half_fov_deg": "50.0",
    "mobility.d_min_m": "0.0",
    "mobility.d_max_m": "10.0",
    "mobility.delta_phi_deg": "25.0",
    # mean-angle range defaults track delta_phi so the instantaneous angle spans [0, 180]
    "mobility.mean_phi_min_deg": "",
    "mobility.mean_phi_max_deg": "",
    "mobility.num_users": "20",
    "noma.power_weak": "0.984375",
    "noma.power_strong": "0.015625",
    "noma.power_interpretation": "power",
    "noma.rate_weak": "2.0",
    "noma.rate_strong": "10.0",
    "noma.oma_time_share": "2",
    "noma.include_oma": "true",
    "noma.oma_base": "",
    "schemes.list": "full-csi",
    "schemes.d_threshold_coeff": "0.1",
    "schemes.theta_threshold_coeff": "0.1",
    "strategy.rank_weak": "1",
    "strategy.rank_strong": "10",
    "sweep.gamma_db": "140:5:215",
    "sweep.trials": "100000",
    "sweep.seed": "12345",
    "sweep.workers": "1",
    "noise.sigma_d_m": "",
    "noise.sigma_phi_deg": "",
    "quadrature.abs_tol": "1e-10",
    "quadrature.rel_tol": "1e-8",
    "quadrature.max_subdivisions": "200",
}


@dataclass(frozen=True)
class RunGroup:
    """One labelled run of the sweep engine within a preset."""

    suffix: str = ""
    overrides: dict = field(default_factory=dict)


PRESETS = {
    # individual user scheduling, static vs dynamic orientation
    "fig2": [
        RunGroup("dphi=0", {"mobility.delta_phi_deg": "0", "schemes.list": "full-csi"}),
        RunGroup("dphi=25", {"mobility.delta_phi_deg": "25", "schemes.list": "full-csi,mean-angle,distance"}),
    ],
    # group-based scheduling with two-bit and one-bit reports
    "fig3": [
        RunGroup(
            "dphi=0",
            {
                "mobility.delta_phi_deg": "0",
                "schemes.list": "two-bit-instant,two-bit-mean,one-bit",
                "noma.oma_base": "two-bit-instant",
            },
        ),
        RunGroup(
            "dphi=25",
            {
                "mobility.delta_phi_deg": "25",
                "schemes.list": "two-bit-instant,two-bit-mean,one-bit",
                "noma.oma_base": "two-bit-instant",
            },
        ),
    ],
    # individual scheduling with noisy distance/angle estimates
    "fig4": [
        RunGroup("noiseless", {"mobility.delta_phi_deg": "25", "schemes.list": "full-csi,mean-angle,distance"}),
        RunGroup(
            "noisy",
            {
                "mobility.delta_phi_deg": "25",
                "schemes.list": "full-csi,mean-angle,distance",
                "noise.sigma_d_m": "0.05",
                "noise.sigma_phi_deg": "2.5",
            },
        ),
    ],
}


def read_config_file(path):
    """Flat {'section.key': raw string} map from an INI file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value
    return flat


def parse_overrides(pairs):
    """Flat map from repeated --set section.key=value arguments."""
    flat = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects section.key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"--set key must be section.key, got {key!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        flat[key] = value.strip()
    return flat


def merge(*layers):
    flat = dict(DEFAULTS)
    for layer in layers:
        for key, value in (layer or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            flat[key] = value
    return flat


def _get_float(flat, key):
    raw = flat[key]
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _get_int(flat, key):
    raw = flat[key]
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc


def _get_bool(flat, key):
    raw = flat[key].strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {flat[key]!r}")


def parse_gamma_grid(raw):
    """Either 'start:step:stop' (inclusive) or a comma-separated dB list."""
    raw = raw.strip()
    if not raw:
        raise ConfigError("sweep.gamma_db: grid must not be empty")
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError(f"sweep.gamma_db: expected start:step:stop, got {raw!r}")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"sweep.gamma_db: {raw!r} is not numeric") from exc
        if step <= 0.0 or stop < start:
            raise ConfigError("sweep.gamma_db: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    try:
        grid = tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"sweep.gamma_db: {raw!r} is not numeric") from exc
    if not grid:
        raise ConfigError("sweep.gamma_db: grid must not be empty")
    return grid


_KIND_BY_NAME = {k.value: k for k in FeedbackKind}


def _build_schemes(flat, geom, mobility):
    names = [s.strip() for s in flat["schemes.list"].split(",") if s.strip()]
    if not names:
        raise ConfigError("schemes.list: need at least one scheme")
    d_th = mobility.d_min + _get_float(flat, "schemes.d_threshold_coeff") * (mobility.d_max - mobility.d_min)
    theta_th = _get_float(flat, "schemes.theta_threshold_coeff") * geom.half_fov
    schemes = []
    for name in names:
        kind = _KIND_BY_NAME.get(name)
        if kind is None:
            raise ConfigError(f"schemes.list: unknown scheme {name!r} (choose from {sorted(_KIND_BY_NAME)})")
        if kind in (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN):
            schemes.append(FeedbackScheme(kind, d_threshold=d_th, theta_threshold=theta_th))
        elif kind is FeedbackKind.ONE_BIT_DISTANCE:
            schemes.append(FeedbackScheme(kind, d_threshold=d_th))
        else:
            schemes.append(FeedbackScheme(kind))
    return tuple(schemes)


def build_experiment(flat):
    """Materialize an ExperimentConfig (meters/degrees/dB -> SI/radians/linear)."""
    try:
        geom = LedGeometry.from_degrees(
            ell=_get_float(flat, "geometry.ell_m"),
            hpbw_deg=_get_float(flat, "geometry.hpbw_deg"),
            detector_area=_get_float(flat, "geometry.detector_area_cm2") * 1e-4,
            half_fov_deg=_get_float(flat, "geometry.half_fov_deg"),
        )
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    delta_phi = _get_float(flat, "mobility.delta_phi_deg")
    mean_lo = flat["mobility.mean_phi_min_deg"].strip()
    mean_hi = flat["mobility.mean_phi_max_deg"].strip()
    try:
        mobility = MobilityConfig.from_degrees(
            d_min=_get_float(flat, "mobility.d_min_m"),
            d_max=_get_float(flat, "mobility.d_max_m"),
            mean_phi_min_deg=float(mean_lo) if mean_lo else delta_phi,
            mean_phi_max_deg=float(mean_hi) if mean_hi else 180.0 - delta_phi,
            delta_phi_deg=delta_phi,
            num_users=_get_int(flat, "mobility.num_users"),
        )
    except ValueError as exc:
        raise ConfigError(f"mobility: {exc}") from exc
    try:
        alloc = PowerAllocation.from_config(
            _get_float(flat, "noma.power_weak"),
            _get_float(flat, "noma.power_strong"),
            flat["noma.power_interpretation"].strip(),
        )
        targets = TargetRates(_get_float(flat, "noma.rate_weak"), _get_float(flat, "noma.rate_strong"))
    except ValueError as exc:
        raise ConfigError(f"noma: {exc}") from exc
    try:
        schemes = _build_schemes(flat, geom, mobility)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    noise = None
    sigma_d, sigma_phi = flat["noise.sigma_d_m"].strip(), flat["noise.sigma_phi_deg"].strip()
    if sigma_d or sigma_phi:
        try:
            noise = NoiseConfig(
                sigma_d=float(sigma_d) if sigma_d else 0.0,
                sigma_phi=math.radians(float(sigma_phi)) if sigma_phi else 0.0,
            )
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from exc
    oma_base_raw = flat["noma.oma_base"].strip()
    oma_base = None
    if oma_base_raw:
        oma_base = _KIND_BY_NAME.get(oma_base_raw)
        if oma_base is None:
            raise ConfigError(f"noma.oma_base: unknown scheme {oma_base_raw!r}")
    try:
        return ExperimentConfig(
            geom=geom,
            mobility=mobility,
            noma=NomaConfig(alloc, targets),
            schemes=schemes,
            gamma_db_grid=parse_gamma_grid(flat["sweep.gamma_db"]),
            rank_weak=_get_int(flat, "strategy.rank_weak"),
            rank_strong=_get_int(flat, "strategy.rank_strong"),
            trials=_get_int(flat, "sweep.trials"),
            root_seed=_get_int(flat, "sweep.seed"),
            noise=noise,
            include_oma=_get_bool(flat, "noma.include_oma"),
            oma_base=oma_base,
            oma_time_share=_get_int(flat, "noma.oma_time_share"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_quadrature(flat):
    try:
        return QuadratureConfig(
            abs_tol=_get_float(flat, "quadrature.abs_tol"),
            rel_tol=_get_float(flat, "quadrature.rel_tol"),
            max_subdivisions=_get_int(flat, "quadrature.max_subdivisions"),
        )
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from exc


def resolve_groups(preset, file_flat, set_flat):
    """Final flat config per run group after all layers merge."""
    if preset is None:
        groups = [RunGroup()]
    else:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (choose from {sorted(PRESETS)})")
        groups = PRESETS[preset]
    return [(g.suffix, merge(g.overrides, file_flat, set_flat)) for g in groups]
