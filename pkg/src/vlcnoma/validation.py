"""Analytic-versus-sampling cross validation.

Every closed-form quantity is checked against an independent Monte Carlo
oracle: direct channel evaluation on bulk user draws, empirical CDFs, and
conditional frequencies.  Group CDF oracles sample the distance strip of the
group directly (distance and orientation are independent, so conditioning the
distance draw is exact) to keep the member counts high enough for tight
Kolmogorov-Smirnov bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from . import analytic as an
from .channel import channel_gain, incidence_angle, mean_channel_gain
from .link import NomaConfig, PowerAllocation, TargetRates, eta_thresholds
from .population import MobilityConfig, marginal_phi_cdf, sample_user_arrays
from .scheduling import FeedbackKind, FeedbackScheme
from .simulate import empirical_cdf


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  [{self.detail}]" if self.detail else ""
        return f"{status}  {self.name}: measured {self.measured:.6g} vs bound {self.bound:.6g}{extra}"


@dataclass(frozen=True)
class ValidationSizes:
    gain_draws: int = 10_000_000
    population_draws: int = 1_000_000
    ordered_conditioned: int = 1_000_000
    group_draws: int = 1_000_000
    cdf_points: int = 400
    probe_points: int = 50

    @classmethod
    def quick(cls):
        return cls(
            gain_draws=1_000_000,
            population_draws=150_000,
            ordered_conditioned=120_000,
            group_draws=200_000,
            cdf_points=200,
            probe_points=12,
        )


def paper_geometry():
    from .channel import LedGeometry

    return LedGeometry.from_degrees(2.0, 60.0, 1e-4, 50.0)


def paper_mobility(delta_phi_deg=25.0, num_users=20):
    return MobilityConfig.from_degrees(0.0, 10.0, delta_phi_deg, 180.0 - delta_phi_deg, delta_phi_deg, num_users)


def paper_noma():
    return NomaConfig(PowerAllocation(63.0 / 64.0, 1.0 / 64.0), TargetRates(2.0, 10.0))


def paper_scheme(kind, geom):
    return FeedbackScheme(kind, d_threshold=1.0, theta_threshold=0.1 * geom.half_fov)


def _strip_users(mob, rng, n, lo, hi):
    # distance conditioned to [lo, hi]; orientation layers are independent of d
    d = rng.uniform(lo, hi, n)
    mean_phi = rng.uniform(mob.mean_phi_min, mob.mean_phi_max, n)
    phi = mean_phi + rng.uniform(-mob.delta_phi, mob.delta_phi, n)
    return d, mean_phi, phi


def check_marginal_phi_dkw(sizes, rng):
    """Closed-form vertical-angle marginal vs the empirical CDF (DKW bound)."""
    mob = paper_mobility()
    n = sizes.population_draws
    _, _, phi = sample_user_arrays(mob, rng, n)
    xs = np.quantile(phi, np.linspace(0.001, 0.999, 500))
    emp = empirical_cdf(phi)
    sup = float(np.max(np.abs(emp(xs) - marginal_phi_cdf(mob, xs))))
    bound = math.sqrt(math.log(2.0 / 1e-3) / (2.0 * n))
    return CheckResult("marginal-angle-cdf-dkw", sup <= bound, sup, bound, f"n={n}")


def check_fov_probability(sizes, rng):
    """fov_probability at a fixed distance vs conditional Monte Carlo (3 sigma)."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    n = max(sizes.group_draws, 200_000)
    r = 5.0
    _, _, phi = sample_user_arrays(mob, rng, n)
    theta = incidence_angle(np.full(n, r), phi, geom.ell)
    frac = float((np.abs(theta) <= geom.half_fov).mean())
    pred = an.fov_probability(model, r, geom.half_fov)
    sigma = math.sqrt(max(pred * (1.0 - pred), 1e-12) / n)
    dev = abs(frac - pred)
    return CheckResult("fov-probability-at-distance", dev <= 3.0 * sigma, dev, 3.0 * sigma, f"r={r}, n={n}")


def check_nonzero_probability(sizes, rng):
    """Theorem-level nonzero-gain probability vs bulk gain draws (3 sigma)."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    n = sizes.gain_draws
    d, _, phi = sample_user_arrays(mob, rng, n)
    frac = float((channel_gain(geom, d, phi) > 0.0).mean())
    pred = an.nonzero_gain_probability(model)
    sigma = math.sqrt(pred * (1.0 - pred) / n)
    return CheckResult("nonzero-gain-probability", abs(frac - pred) <= 3.0 * sigma, abs(frac - pred), 3.0 * sigma, f"n={n}")


def check_count_pmf(sizes, rng, k_min=10):
    """Truncated count PMF and its tail vs population draws (3 sigma per bin)."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    n = sizes.population_draws
    K = mob.num_users
    d, _, phi = sample_user_arrays(mob, rng, n * K)
    counts = (channel_gain(geom, d, phi).reshape(n, K) > 0.0).sum(axis=1)
    tail_frac = float((counts >= k_min).mean())
    tail_pred = an.nonzero_count_tail(model, k_min)
    sigma_tail = math.sqrt(tail_pred * (1.0 - tail_pred) / n)
    results = [
        CheckResult(
            "nonzero-count-tail",
            abs(tail_frac - tail_pred) <= 3.0 * sigma_tail,
            abs(tail_frac - tail_pred),
            3.0 * sigma_tail,
            f"k_min={k_min}, n={n}",
        )
    ]
    kept = counts[counts >= k_min]
    n_kept = kept.size
    worst_ratio, worst, worst_bound = 0.0, 0.0, 1.0
    ok = True
    for k in range(k_min, K + 1):
        q = an.nonzero_count_pmf(model, k, k_min)
        if n_kept * q < 25.0:
            continue  # normal approximation not meaningful for near-empty bins
        freq = float((kept == k).mean())
        dev, bound = abs(freq - q), 3.0 * math.sqrt(q * (1.0 - q) / n_kept)
        if dev / bound > worst_ratio:
            worst_ratio, worst, worst_bound = dev / bound, dev, bound
        ok = ok and dev <= bound
    results.append(CheckResult("nonzero-count-pmf", ok, worst, worst_bound, f"bins k>={k_min}, kept={n_kept}"))
    return results


def _conditioned_rank_gains(geom, mob, rng, wanted, rank_weak, rank_strong, pool_cap=5_000_000):
    """Squared gains at the two ranks from snapshots with enough nonzero users."""
    K = mob.num_users
    out_w, out_s, pooled = [], [], []
    got = 0
    pooled_n = 0
    batch = 400_000
    while got < wanted:
        d, _, phi = sample_user_arrays(mob, rng, batch * K)
        g2 = channel_gain(geom, d.reshape(batch, K), phi.reshape(batch, K)) ** 2
        if pooled_n < pool_cap:
            nz = g2[g2 > 0.0]
            pooled.append(nz)
            pooled_n += nz.size
        masked = np.where(g2 > 0.0, g2, np.inf)
        masked.sort(axis=1)
        keep = (g2 > 0.0).sum(axis=1) >= rank_strong
        out_w.append(masked[keep, rank_weak - 1])
        out_s.append(masked[keep, rank_strong - 1])
        got += int(keep.sum())
    w = np.concatenate(out_w)[:wanted]
    s = np.concatenate(out_s)[:wanted]
    return w, s, np.concatenate(pooled)[:pool_cap]


def check_individual_cdfs(sizes, rng, rank_weak=1, rank_strong=10):
    """Unordered and ordered squared-gain CDFs vs conditioned empirical CDFs."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    w, s, pooled = _conditioned_rank_gains(geom, mob, rng, sizes.ordered_conditioned, rank_weak, rank_strong)
    results = []
    sup = empirical_cdf(pooled).sup_distance(lambda x: an.unordered_gain_cdf(model, x), sizes.cdf_points)
    results.append(CheckResult("unordered-gain-cdf", sup <= 0.005, sup, 0.005, f"n={pooled.size}"))
    sup_w = empirical_cdf(w).sup_distance(lambda x: an.ordered_gain_cdf(model, x, rank_weak, rank_strong), sizes.cdf_points)
    results.append(CheckResult(f"ordered-gain-cdf-rank{rank_weak}", sup_w <= 0.01, sup_w, 0.01, f"n={w.size}"))
    sup_s = empirical_cdf(s).sup_distance(lambda x: an.ordered_gain_cdf(model, x, rank_strong, rank_strong), sizes.cdf_points)
    results.append(CheckResult(f"ordered-gain-cdf-rank{rank_strong}", sup_s <= 0.01, sup_s, 0.01, f"n={s.size}"))
    return results


def check_group_cdfs(sizes, rng, delta_phi_deg, tolerance=0.015):
    """Group-conditional CDFs for both report variants vs strip-sampled oracles."""
    geom = paper_geometry()
    mob = paper_mobility(delta_phi_deg)
    scheme_i = paper_scheme(FeedbackKind.TWO_BIT_INSTANT, geom)
    scheme_m = paper_scheme(FeedbackKind.TWO_BIT_MEAN, geom)
    mi = an.AnalyticModel(geom=geom, mobility=mob, scheme=scheme_i)
    mm = an.AnalyticModel(geom=geom, mobility=mob, scheme=scheme_m)
    th, fov = scheme_i.theta_threshold, geom.half_fov
    d_th = scheme_i.d_threshold
    n = sizes.group_draws
    results = []

    d, mean_phi, phi = _strip_users(mob, rng, n, d_th, mob.d_max)
    g2 = channel_gain(geom, d, phi) ** 2
    theta = incidence_angle(d, phi, geom.ell)
    theta_bar = incidence_angle(d, mean_phi, geom.ell)
    weak_i = (np.abs(theta) > th) & (g2 > 0.0)
    sup = empirical_cdf(g2[weak_i]).sup_distance(lambda x: an.group_gain_cdf_instant(mi, x, an.WEAK), sizes.cdf_points)
    results.append(CheckResult(f"group-cdf-instant-weak-dphi{delta_phi_deg:g}", sup <= tolerance, sup, tolerance, f"n={int(weak_i.sum())}"))
    weak_m = (np.abs(theta_bar) > th) & (np.abs(theta_bar) <= fov)
    sup = empirical_cdf(g2[weak_m]).sup_distance(lambda x: an.group_gain_cdf_mean(mm, x, an.WEAK), sizes.cdf_points)
    results.append(CheckResult(f"group-cdf-mean-weak-dphi{delta_phi_deg:g}", sup <= tolerance, sup, tolerance, f"n={int(weak_m.sum())}"))

    d, mean_phi, phi = _strip_users(mob, rng, n, mob.d_min, d_th)
    g2 = channel_gain(geom, d, phi) ** 2
    theta = incidence_angle(d, phi, geom.ell)
    theta_bar = incidence_angle(d, mean_phi, geom.ell)
    strong_i = np.abs(theta) <= th
    sup = empirical_cdf(g2[strong_i]).sup_distance(lambda x: an.group_gain_cdf_instant(mi, x, an.STRONG), sizes.cdf_points)
    results.append(CheckResult(f"group-cdf-instant-strong-dphi{delta_phi_deg:g}", sup <= tolerance, sup, tolerance, f"n={int(strong_i.sum())}"))
    strong_m = np.abs(theta_bar) <= th
    sup = empirical_cdf(g2[strong_m]).sup_distance(lambda x: an.group_gain_cdf_mean(mm, x, an.STRONG), sizes.cdf_points)
    results.append(CheckResult(f"group-cdf-mean-strong-dphi{delta_phi_deg:g}", sup <= tolerance, sup, tolerance, f"n={int(strong_m.sum())}"))
    return results


def check_theorem_coincidence(sizes):
    """Mean-report CDFs collapse onto instantaneous-report CDFs when deviations vanish."""
    geom = paper_geometry()
    mob = paper_mobility(0.0)
    mi = an.AnalyticModel(geom=geom, mobility=mob, scheme=paper_scheme(FeedbackKind.TWO_BIT_INSTANT, geom))
    mm = an.AnalyticModel(geom=geom, mobility=mob, scheme=paper_scheme(FeedbackKind.TWO_BIT_MEAN, geom))
    xs = np.geomspace(1e-17, 1e-10, 80)
    worst = 0.0
    for x in xs:
        for role in (an.WEAK, an.STRONG):
            worst = max(worst, abs(an.group_gain_cdf_mean(mm, x, role) - an.group_gain_cdf_instant(mi, x, role)))
    return CheckResult("theorem-coincidence-zero-deviation", worst <= 1e-6, worst, 1e-6, f"{xs.size} levels x 2 roles")


def check_group_conditioning(sizes, rng, delta_phi_deg=25.0):
    """Both-groups-nonempty probability vs population draws (3 sigma)."""
    geom = paper_geometry()
    mob = paper_mobility(delta_phi_deg)
    scheme = paper_scheme(FeedbackKind.TWO_BIT_INSTANT, geom)
    model = an.AnalyticModel(geom=geom, mobility=mob, scheme=scheme)
    n = sizes.population_draws
    K = mob.num_users
    d, _, phi = sample_user_arrays(mob, rng, n * K)
    d = d.reshape(n, K)
    theta = incidence_angle(d, phi.reshape(n, K), geom.ell)
    weak = (d > scheme.d_threshold) & (np.abs(theta) > scheme.theta_threshold)
    strong = (d <= scheme.d_threshold) & (np.abs(theta) <= scheme.theta_threshold)
    frac = float((weak.any(axis=1) & strong.any(axis=1)).mean())
    pred = an.group_probabilities(model, "instant").both_nonempty
    sigma = math.sqrt(pred * (1.0 - pred) / n)
    return CheckResult("group-conditioning-rate", abs(frac - pred) <= 3.0 * sigma, abs(frac - pred), 3.0 * sigma, f"n={n}")


def check_outage_individual(sizes, rng, gamma_db=(160.0, 185.0)):
    """Conditional outage pair vs conditioned Monte Carlo at mid-sweep SNRs."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    noma = paper_noma()
    w, s, _ = _conditioned_rank_gains(geom, mob, rng, max(sizes.ordered_conditioned // 2, 50_000), 1, 10)
    results = []
    for gdb in gamma_db:
        gamma = 10.0 ** (gdb / 10.0)
        thr = eta_thresholds(noma.targets, noma.alloc, gamma)
        pw, ps = an.individual_outage(model, noma, gamma, 1, 10)
        for name, frac, pred in (
            (f"outage-individual-weak-{gdb:g}dB", float((w <= thr.eta_weak).mean()), pw),
            (f"outage-individual-strong-{gdb:g}dB", float((s <= thr.eta_strong).mean()), ps),
        ):
            sigma = math.sqrt(max(pred * (1.0 - pred), 1e-12) / w.size)
            tol = max(3.0 * sigma, 1e-4)
            results.append(CheckResult(name, abs(frac - pred) <= tol, abs(frac - pred), tol, f"n={w.size}"))
    return results


def check_outage_group(sizes, rng, variant, gamma_db=(165.0, 185.5), delta_phi_deg=25.0):
    # 185.5 dB sits inside the strong group's outage transition (gain span
    # g(d_th)^2 cos^2(theta_th) ... g(0)^2), so neither probability is trivial
    """Group-conditional outage vs a member-sampling oracle at mid-sweep SNRs."""
    geom = paper_geometry()
    mob = paper_mobility(delta_phi_deg)
    kind = FeedbackKind.TWO_BIT_INSTANT if variant == "instant" else FeedbackKind.TWO_BIT_MEAN
    scheme = paper_scheme(kind, geom)
    model = an.AnalyticModel(geom=geom, mobility=mob, scheme=scheme)
    noma = paper_noma()
    n = sizes.group_draws
    th = scheme.theta_threshold

    d, mean_phi, phi = _strip_users(mob, rng, n, scheme.d_threshold, mob.d_max)
    ref = incidence_angle(d, phi if variant == "instant" else mean_phi, geom.ell)
    weak_gains = (channel_gain(geom, d, phi) ** 2)[np.abs(ref) > th]
    d, mean_phi, phi = _strip_users(mob, rng, n, mob.d_min, scheme.d_threshold)
    ref = incidence_angle(d, phi if variant == "instant" else mean_phi, geom.ell)
    strong_gains = (channel_gain(geom, d, phi) ** 2)[np.abs(ref) <= th]

    results = []
    for gdb in gamma_db:
        gamma = 10.0 ** (gdb / 10.0)
        thr = eta_thresholds(noma.targets, noma.alloc, gamma)
        pw, ps = an.group_outage(model, noma, gamma, variant)
        for name, sample, threshold, pred in (
            (f"outage-group-{variant}-weak-{gdb:g}dB", weak_gains, thr.eta_weak, pw),
            (f"outage-group-{variant}-strong-{gdb:g}dB", strong_gains, thr.eta_strong, ps),
        ):
            frac = float((sample <= threshold).mean())
            sigma = math.sqrt(max(pred * (1.0 - pred), 1e-12) / sample.size)
            tol = max(3.0 * sigma, 2e-4)
            results.append(CheckResult(name, abs(frac - pred) <= tol, abs(frac - pred), tol, f"n={sample.size}"))
    return results


def check_strong_group_degeneracy():
    """theta_th = FOV and d_th = d_max reduce the strong-group CDF to the unordered CDF."""
    geom = paper_geometry()
    mob = paper_mobility()
    scheme = FeedbackScheme(FeedbackKind.TWO_BIT_INSTANT, d_threshold=mob.d_max, theta_threshold=geom.half_fov)
    mi = an.AnalyticModel(geom=geom, mobility=mob, scheme=scheme)
    base = an.AnalyticModel(geom=geom, mobility=mob)
    xs = np.geomspace(1e-16, 1e-10, 60)
    worst = max(abs(an.group_gain_cdf_instant(mi, x, an.STRONG) - an.unordered_gain_cdf(base, x)) for x in xs)
    return CheckResult("strong-group-degeneracy", worst <= 1e-9, worst, 1e-9, f"{xs.size} levels")


def check_quadrature_stability(sizes, rng):
    """Halving quadrature tolerances moves results by less than the reported error."""
    geom, mob = paper_geometry(), paper_mobility()
    model = an.AnalyticModel(geom=geom, mobility=mob)
    half = an.AnalyticModel(geom=geom, mobility=mob, quad=model.quad.halved())
    xs = 10.0 ** rng.uniform(-16.0, -10.5, sizes.probe_points)
    worst_ratio = 0.0
    ok = True
    for x in xs:
        v1, e1 = an.unordered_gain_cdf(model, float(x), with_error=True)
        v2, _ = an.unordered_gain_cdf(half, float(x), with_error=True)
        err = max(e1, 1e-14)
        worst_ratio = max(worst_ratio, abs(v2 - v1) / err)
        ok = ok and abs(v2 - v1) <= err
    p1, pe1 = an.nonzero_gain_probability(model, with_error=True)
    p2, _ = an.nonzero_gain_probability(half, with_error=True)
    ok = ok and abs(p2 - p1) <= max(pe1, 1e-14)
    return CheckResult("quadrature-halving-stability", ok, worst_ratio, 1.0, f"{sizes.probe_points} probes + p")


def run_validation(quick=False, seed=20240):
    """Every analytic-vs-empirical contract, as a list of CheckResult."""
    sizes = ValidationSizes.quick() if quick else ValidationSizes()
    group_tol = 0.025 if quick else 0.015  # quick mode has ~10x fewer group members
    rng = np.random.default_rng(seed)
    results = []
    results.append(check_marginal_phi_dkw(sizes, rng))
    results.append(check_fov_probability(sizes, rng))
    results.append(check_nonzero_probability(sizes, rng))
    results.extend(check_count_pmf(sizes, rng))
    results.extend(check_individual_cdfs(sizes, rng))
    for dphi in (0.0, 25.0):
        results.extend(check_group_cdfs(sizes, rng, dphi, tolerance=group_tol))
    results.append(check_theorem_coincidence(sizes))
    results.append(check_group_conditioning(sizes, rng))
    results.extend(check_outage_individual(sizes, rng))
    for variant in ("instant", "mean"):
        results.extend(check_outage_group(sizes, rng, variant))
    results.append(check_strong_group_degeneracy())
    results.append(check_quadrature_stability(sizes, rng))
    return results
