"""Monte Carlo experiment engine: trial sampling, scheduling, outage statistics.

Each trial owns its own random stream derived from (root_seed, trial_index),
so results are bitwise identical however trials are chunked across workers.
Within a trial the draw order is fixed: user distances, mean angles, angle
deviations, then (optionally) estimation noise, then group member picks in the
configured scheme order.

Gains do not depend on the transmit SNR, so one pass over the trials collects
the scheduled pair's squared gains per scheme and every grid point reuses
them; the conditional outage frequencies then exclude trials whose scheduling
precondition failed (too few ranked candidates, or an empty candidate group).
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import LedGeometry, channel_gain, mean_channel_gain
from .link import NomaConfig, eta_thresholds, oma_gain_thresholds
from .population import MobilityConfig, noisy_estimate_arrays, sample_user_arrays
from .scheduling import (
    FeedbackKind,
    FeedbackScheme,
    group_users,
    group_users_one_bit,
    one_bit_feedback,
    order_by_distance_array,
    order_by_gain_arrays,
    select_group_pair,
    select_individual,
    two_bit_feedback,
)

OMA_LABEL = "oma"
_CHUNK = 4096  # fixed trial chunk; parallelism must not change results


@dataclass(frozen=True)
class NoiseConfig:
    """Estimation-error model: real Gaussian std deviations for distance and angles."""

    sigma_d: float
    sigma_phi: float

    def __post_init__(self):
        if self.sigma_d < 0.0 or self.sigma_phi < 0.0:
            raise ValueError("noise standard deviations must be nonnegative")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of one Monte Carlo sweep."""

    geom: LedGeometry
    mobility: MobilityConfig
    noma: NomaConfig
    schemes: tuple
    gamma_db_grid: tuple
    rank_weak: int = 1
    rank_strong: int = 10
    trials: int = 100_000
    root_seed: int = 0
    noise: Optional[NoiseConfig] = None
    include_oma: bool = True
    oma_base: Optional[FeedbackKind] = None
    oma_time_share: int = 2

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        grid = np.asarray(self.gamma_db_grid, float)
        if grid.size == 0:
            raise ValueError("gamma grid must not be empty")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise ValueError("gamma grid must be strictly increasing")
        if not 1 <= self.rank_weak < self.rank_strong <= self.mobility.num_users:
            raise ValueError("need 1 <= rank_weak < rank_strong <= num_users")
        if not self.schemes:
            raise ValueError("need at least one feedback scheme")
        for scheme in self.schemes:
            if scheme.theta_threshold is not None and scheme.theta_threshold > self.geom.half_fov + 1e-12:
                raise ValueError("angle threshold cannot exceed the detector half FOV")
        if self.include_oma and self.oma_base is not None:
            if self.oma_base not in [s.kind for s in self.schemes]:
                raise ValueError("oma_base must reference a configured scheme")


@dataclass(frozen=True)
class CurvePoint:
    """One (transmit SNR, sum rate) sample with its uncertainty and outage detail."""

    gamma_db: float
    sum_rate: float
    ci_halfwidth: float
    outage_weak: float
    outage_strong: float
    conditioning_rate: float


def trial_rng(root_seed, trial_index):
    """Independent per-trial generator; deterministic in (root_seed, trial_index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(root_seed, trial_index)))


def run_trial(config, trial_index):
    """One snapshot-schedule-evaluate trial.

    Returns {scheme kind: (scheduled, true squared gain weak, strong)}; a slot
    that could not be filled reports scheduled = False with zero gains.
    """
    rng = trial_rng(config.root_seed, trial_index)
    mob = config.mobility
    d, mean_phi, phi = sample_user_arrays(mob, rng, mob.num_users)
    gains = channel_gain(config.geom, d, phi)
    if config.noise is not None:
        d_fb, mean_phi_fb, phi_fb = noisy_estimate_arrays(
            d, mean_phi, phi, config.noise.sigma_d, config.noise.sigma_phi, rng
        )
    else:
        d_fb, mean_phi_fb, phi_fb = d, mean_phi, phi

    record = {}
    for scheme in config.schemes:
        kind = scheme.kind
        if kind is FeedbackKind.FULL_CSI:
            reported = channel_gain(config.geom, d_fb, phi_fb) if config.noise is not None else gains
            decision = select_individual(order_by_gain_arrays(reported), config.rank_weak, config.rank_strong)
        elif kind is FeedbackKind.MEAN_ANGLE:
            reported = mean_channel_gain(config.geom, d_fb, mean_phi_fb)
            decision = select_individual(order_by_gain_arrays(reported), config.rank_weak, config.rank_strong)
        elif kind is FeedbackKind.DISTANCE_ONLY:
            decision = select_individual(order_by_distance_array(d_fb), config.rank_weak, config.rank_strong)
        elif kind in (FeedbackKind.TWO_BIT_INSTANT, FeedbackKind.TWO_BIT_MEAN):
            angles = phi_fb if kind is FeedbackKind.TWO_BIT_INSTANT else mean_phi_fb
            bit_d, bit_theta = two_bit_feedback(d_fb, angles, scheme, config.geom)
            decision = select_group_pair(group_users(bit_d, bit_theta), rng)
        elif kind is FeedbackKind.ONE_BIT_DISTANCE:
            decision = select_group_pair(group_users_one_bit(one_bit_feedback(d_fb, scheme.d_threshold)), rng)
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unhandled feedback kind {kind}")
        if decision.complete:
            record[kind] = (True, float(gains[decision.weak_index] ** 2), float(gains[decision.strong_index] ** 2))
        else:
            record[kind] = (False, 0.0, 0.0)
    return record


@dataclass
class _Records:
    scheduled: np.ndarray
    h2_weak: np.ndarray
    h2_strong: np.ndarray


def _collect_chunk(config, start, stop):
    kinds = [s.kind for s in config.schemes]
    n = stop - start
    out = {k: _Records(np.empty(n, bool), np.empty(n), np.empty(n)) for k in kinds}
    for i, t in enumerate(range(start, stop)):
        rec = run_trial(config, t)
        for k in kinds:
            ok, h2w, h2s = rec[k]
            out[k].scheduled[i] = ok
            out[k].h2_weak[i] = h2w
            out[k].h2_strong[i] = h2s
    return out


def collect_records(config, n_workers=1):
    """Scheduled-pair squared gains for every trial, per scheme kind.

    Trials are processed in fixed chunks; the worker count only changes who
    computes a chunk, never its contents, so results are bitwise stable.
    """
    spans = [(s, min(s + _CHUNK, config.trials)) for s in range(0, config.trials, _CHUNK)]
    if n_workers <= 1 or len(spans) == 1:
        chunks = [_collect_chunk(config, a, b) for a, b in spans]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(_collect_chunk, [config] * len(spans), *zip(*spans)))
    kinds = [s.kind for s in config.schemes]
    return {
        k: _Records(
            np.concatenate([c[k].scheduled for c in chunks]),
            np.concatenate([c[k].h2_weak for c in chunks]),
            np.concatenate([c[k].h2_strong for c in chunks]),
        )
        for k in kinds
    }


def _bernoulli_ci_bound(targets, n):
    # worst-case binomial variance per user, for degenerate sample sizes
    var = (targets.rate_weak**2 + targets.rate_strong**2) / 4.0
    return 1.96 * np.sqrt(var / max(n, 1))


def _curve(records, thresholds_for, targets, gamma_db_grid, trials):
    mask = records.scheduled
    n_cond = int(mask.sum())
    cond_rate = n_cond / trials
    points = []
    for gamma_db in gamma_db_grid:
        gamma = 10.0 ** (gamma_db / 10.0)
        thr = thresholds_for(gamma)
        if n_cond == 0:
            points.append(CurvePoint(gamma_db, 0.0, _bernoulli_ci_bound(targets, 0), 1.0, 1.0, 0.0))
            continue
        ok_weak = records.h2_weak[mask] > thr.eta_weak
        ok_strong = records.h2_strong[mask] > thr.eta_strong
        per_trial_rate = ok_weak * targets.rate_weak + ok_strong * targets.rate_strong
        sum_rate = float(per_trial_rate.mean())
        if n_cond >= 2:
            ci = 1.96 * float(per_trial_rate.std(ddof=1)) / np.sqrt(n_cond)
        else:
            ci = _bernoulli_ci_bound(targets, n_cond)
        points.append(
            CurvePoint(
                gamma_db=float(gamma_db),
                sum_rate=sum_rate,
                ci_halfwidth=float(ci),
                outage_weak=float(1.0 - ok_weak.mean()),
                outage_strong=float(1.0 - ok_strong.mean()),
                conditioning_rate=cond_rate,
            )
        )
    return points


def run_sweep(config, n_workers=1):
    """Monte Carlo sum-rate curves, one per configured scheme plus the OMA baseline.

    Sum rates and outage frequencies are conditional on the scheduling
    precondition of each scheme (enough ranked candidates, or both candidate
    groups nonempty); conditioning_rate reports the fraction of trials kept.
    """
    records = collect_records(config, n_workers=n_workers)
    targets, alloc = config.noma.targets, config.noma.alloc
    curves = {}
    for scheme in config.schemes:
        label = f"noma-{scheme.kind.value}"
        curves[label] = _curve(
            records[scheme.kind],
            lambda gamma: eta_thresholds(targets, alloc, gamma),
            targets,
            config.gamma_db_grid,
            config.trials,
        )
    if config.include_oma:
        base = config.oma_base or config.schemes[0].kind
        curves[OMA_LABEL] = _curve(
            records[base],
            lambda gamma: oma_gain_thresholds(targets, gamma, config.oma_time_share),
            targets,
            config.gamma_db_grid,
            config.trials,
        )
    return curves


class EmpiricalCdf:
    """Right-continuous step CDF of a sample."""

    def __init__(self, samples):
        samples = np.asarray(samples, float)
        if samples.size == 0:
            raise ValueError("need at least one sample")
        self.sorted = np.sort(samples)
        self.n = samples.size

    def __call__(self, x):
        out = np.searchsorted(self.sorted, np.asarray(x, float), side="right") / self.n
        if out.ndim == 0:
            return float(out)
        return out

    def sup_distance(self, cdf, num_points=1000):
        """Max |ECDF - cdf| over a quantile grid of evaluation points.

        Both one-sided gaps around each step are checked (the left side against
        the reference's left limit, so reference atoms are handled), making the
        measured value the Kolmogorov-Smirnov statistic up to the grid
        resolution ~1/num_points.
        """
        idx = np.unique(np.linspace(0, self.n - 1, min(num_points, self.n)).astype(int))
        xs = self.sorted[idx]
        # resolve ties to the last occurrence so the inclusive step height is right
        high = np.searchsorted(self.sorted, xs, side="right") / self.n
        low = np.searchsorted(self.sorted, xs, side="left") / self.n
        target_high = np.asarray([cdf(x) for x in xs])
        target_low = np.asarray([cdf(np.nextafter(x, -np.inf)) for x in xs])
        return float(np.max(np.maximum(np.abs(target_high - high), np.abs(target_low - low))))


def empirical_cdf(samples):
    return EmpiricalCdf(samples)
