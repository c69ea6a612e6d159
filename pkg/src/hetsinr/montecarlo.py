"""Poisson point process simulation oracle.

Deploys every tier as an independent PPP on a disc centered on the
typical user, associates the user by biased received power, draws
Rayleigh (unit-mean exponential) channel powers, and accumulates
empirical SINR, association, serving-distance, and cell-load
statistics.  This path shares no numerics with the analytic module and
is the independent cross-check for all of it.

Reproducibility: every replication draws from counter-based Philox
streams keyed by (master seed, replication index, stream id), so the
sample set is bit-identical for a given seed regardless of execution
order or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    EmptyDeploymentError,
    EmptySampleSetError,
    NonPositiveParameterError,
)
from .model import NetworkConfig, validate

__all__ = [
    "SimSettings",
    "Association",
    "EmpiricalSinr",
    "CampaignResult",
    "default_window_radius",
    "check_window_radius",
    "sample_deployment",
    "associate",
    "draw_sinr",
    "run_campaign",
    "empirical_cdf",
    "empirical_rate",
]

_MASK64 = (1 << 64) - 1
_STREAM_DEPLOY = 0
_STREAM_USERS = 1 << 32  # fading draws occupy stream ids 1..fading_draws

# fraction of the window radius treated as boundary for load statistics
_EDGE_MARGIN = 0.1

# window sufficiency rule: at least this many points expected in the
# sparsest tier, and mean interference from beyond the window below
# this fraction of the in-window mean
_MIN_EXPECTED_POINTS = 500.0
_TAIL_FRACTION = 1e-4


def _tail_interference_ratio(config: NetworkConfig, radius: float) -> float:
    """Ratio of mean interference from beyond the window to the
    in-window mean, both from the unconditioned power-law integral with
    the inner edge at the reference distance."""
    r0 = config.ref_distance
    outside = inside = 0.0
    for t in config.tiers:
        scale = t.density * t.power / (t.pathloss_exp - 2.0)
        outside += scale * radius ** (2.0 - t.pathloss_exp)
        inside += scale * (r0 ** (2.0 - t.pathloss_exp)
                           - radius ** (2.0 - t.pathloss_exp))
    return outside / inside


def default_window_radius(config: NetworkConfig) -> float:
    """Smallest power-of-two multiple of the point-count radius that
    also satisfies the interference tail rule."""
    validate(config)
    lam_min = min(t.density for t in config.tiers)
    radius = max(math.sqrt(_MIN_EXPECTED_POINTS / (math.pi * lam_min)),
                 10.0 * config.ref_distance)
    for _ in range(64):
        if _tail_interference_ratio(config, radius) <= _TAIL_FRACTION:
            return radius
        radius *= 2.0
    raise NonPositiveParameterError(
        "cannot satisfy the window tail rule; exponents too close to 2")


def check_window_radius(config: NetworkConfig, radius: float) -> None:
    """Enforce both window sufficiency rules for an explicit radius."""
    if not radius > 0.0:
        raise NonPositiveParameterError("window_radius must be > 0")
    lam_min = min(t.density for t in config.tiers)
    expected = lam_min * math.pi * radius * radius
    if expected < _MIN_EXPECTED_POINTS:
        raise NonPositiveParameterError(
            f"window too small: sparsest tier expects {expected:.1f} points, "
            f"need >= {_MIN_EXPECTED_POINTS:.0f}")
    ratio = _tail_interference_ratio(config, radius)
    if ratio > _TAIL_FRACTION:
        raise NonPositiveParameterError(
            f"window too small: out-of-window interference fraction "
            f"{ratio:.3g} exceeds {_TAIL_FRACTION:g}")


@dataclass(frozen=True)
class SimSettings:
    """Campaign controls.

    ``window_radius`` of None resolves to the automatic rule.  One SINR
    sample is produced per (replication, fading draw) pair; the user
    point process for load measurement runs only when ``measure_load``
    is set and the configured user density is positive.
    """

    config: NetworkConfig
    window_radius: float | None = None
    replications: int = 10_000
    fading_draws: int = 1
    master_seed: int = 0
    measure_load: bool = True

    def __post_init__(self):
        validate(self.config)
        if self.replications < 1:
            raise NonPositiveParameterError("replications must be >= 1")
        if self.fading_draws < 1:
            raise NonPositiveParameterError("fading_draws must be >= 1")
        if self.window_radius is not None:
            check_window_radius(self.config, self.window_radius)

    def resolved_window_radius(self) -> float:
        if self.window_radius is not None:
            return self.window_radius
        return default_window_radius(self.config)


def _stream(master_seed: int, replication: int, stream_id: int) -> np.random.Generator:
    """Philox generator for one (seed, replication, stream) triple."""
    key = np.array([master_seed & _MASK64, replication & _MASK64],
                   dtype=np.uint64)
    counter = np.array([0, 0, 0, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_deployment(settings: SimSettings, replication: int) -> list[np.ndarray]:
    """Draw one spatial realization: per tier, a Poisson number of BSs
    uniform on the window disc.  Deterministic in (settings, replication).

    Returns one (n_j, 2) position array per tier, in meters.
    """
    radius = settings.resolved_window_radius()
    rng = _stream(settings.master_seed, replication, _STREAM_DEPLOY)
    area = math.pi * radius * radius
    out = []
    for t in settings.config.tiers:
        n = int(rng.poisson(t.density * area))
        u = rng.random((n, 2))
        r = radius * np.sqrt(u[:, 0])
        theta = 2.0 * math.pi * u[:, 1]
        out.append(np.column_stack((r * np.cos(theta), r * np.sin(theta))))
    return out


@dataclass(frozen=True)
class Association:
    """Serving BS of the typical user: 1-based tier, index within the
    tier's position array, and distance in meters."""

    tier: int
    index: int
    distance: float


def _biased_power(t, config: NetworkConfig, distance: float) -> float:
    return (t.power * config.ref_pathloss * t.bias
            * (distance / config.ref_distance) ** (-t.pathloss_exp))


def associate(deployment: list[np.ndarray], config: NetworkConfig) -> Association:
    """Serving BS by maximum biased received power at the origin.

    Ties go to the lower tier index (strict comparison while scanning
    tiers in order), then to the smaller distance within a tier (the
    per-tier candidate is its nearest BS).
    """
    best = None
    with np.errstate(divide="ignore"):
        for j, (pts, t) in enumerate(zip(deployment, config.tiers), start=1):
            if len(pts) == 0:
                continue
            d = np.hypot(pts[:, 0], pts[:, 1])
            i = int(np.argmin(d))
            brp = _biased_power(t, config, float(d[i]))
            if best is None or brp > best[0]:
                best = (brp, j, i, float(d[i]))
    if best is None:
        raise EmptyDeploymentError("no base station inside the window")
    return Association(tier=best[1], index=best[2], distance=best[3])


def draw_sinr(deployment: list[np.ndarray], association: Association,
              config: NetworkConfig, rng: np.random.Generator) -> float:
    """One SINR draw: unit-mean exponential fading on the serving link
    and on every interferer (all non-serving BSs of every tier)."""
    r0 = config.ref_distance
    k = association.tier
    tier_k = config.tiers[k - 1]
    signal_gain = tier_k.power * (association.distance / r0) ** (-tier_k.pathloss_exp)
    g = rng.exponential()
    interference = 0.0
    with np.errstate(divide="ignore"):
        for j, (pts, t) in enumerate(zip(deployment, config.tiers), start=1):
            if len(pts) == 0:
                continue
            d = np.hypot(pts[:, 0], pts[:, 1])
            w = t.power * (d / r0) ** (-t.pathloss_exp)
            if j == k:
                w = np.delete(w, association.index)
            if len(w):
                h = rng.exponential(size=len(w))
                interference += float(h @ w)
    noise = config.noise_power / config.ref_pathloss
    return g * signal_gain / (interference + noise)


def _run_block(settings: SimSettings, start: int, stop: int) -> dict:
    """Simulate replications [start, stop); returns raw sample arrays
    and accumulated association/load counts."""
    config = settings.config
    radius = settings.resolved_window_radius()
    area = math.pi * radius * radius
    r0 = config.ref_distance
    tiers = config.tiers
    K = len(tiers)
    noise = config.noise_power / config.ref_pathloss
    do_load = settings.measure_load and config.user_density > 0.0
    interior_radius = (1.0 - _EDGE_MARGIN) * radius

    n_samples = (stop - start) * settings.fading_draws
    out_tier = np.empty(n_samples, dtype=np.int64)
    out_sinr = np.empty(n_samples)
    out_dist = np.empty(n_samples)
    assoc_counts = np.zeros(K, dtype=np.int64)
    load_users = np.zeros(K, dtype=np.int64)
    load_bs = np.zeros(K, dtype=np.int64)
    pos = 0

    for rep in range(start, stop):
        rng = _stream(settings.master_seed, rep, _STREAM_DEPLOY)
        dists = []
        weights = []  # P_j * (d/r0)^(-alpha_j) per BS
        xy = []
        with np.errstate(divide="ignore"):
            for t in tiers:
                n = int(rng.poisson(t.density * area))
                u = rng.random((n, 2))
                r = radius * np.sqrt(u[:, 0])
                dists.append(r)
                weights.append(t.power * (r / r0) ** (-t.pathloss_exp))
                if do_load:
                    theta = 2.0 * math.pi * u[:, 1]
                    xy.append(np.column_stack((r * np.cos(theta),
                                               r * np.sin(theta))))

        # biased association of the typical user at the origin
        best_brp = -1.0
        k = -1
        for j in range(K):
            if len(dists[j]) == 0:
                continue
            i = int(np.argmin(dists[j]))
            brp = weights[j][i] * config.ref_pathloss * tiers[j].bias
            if brp > best_brp:
                best_brp = brp
                k = j
                serve_idx, serve_dist = i, float(dists[j][i])
        if k < 0:
            raise EmptyDeploymentError(
                f"replication {rep}: no base station inside the window")
        assoc_counts[k] += 1

        # exclusion-disc consistency: given service by tier k at
        # distance x, tier j keeps out of (PhatBhat)^(1/alpha_j) x^(alpha_k/alpha_j)
        tk = tiers[k]
        xn = serve_dist / r0
        for j in range(K):
            if len(dists[j]) == 0:
                continue
            tj = tiers[j]
            z_j = r0 * ((tj.power * tj.bias / (tk.power * tk.bias))
                        ** (1.0 / tj.pathloss_exp)
                        * xn ** (tk.pathloss_exp / tj.pathloss_exp))
            if dists[j].min() < z_j * (1.0 - 1e-12):
                raise AssertionError(
                    f"replication {rep}: tier {j + 1} BS inside the "
                    f"exclusion disc ({dists[j].min():.6g} < {z_j:.6g} m)")

        w_all = np.concatenate(weights)
        serve_flat = sum(len(dists[j]) for j in range(k)) + serve_idx
        w_int = np.delete(w_all, serve_flat)
        signal_gain = w_all[serve_flat]

        for d in range(settings.fading_draws):
            rng_d = _stream(settings.master_seed, rep, 1 + d)
            g = rng_d.exponential()
            interference = float(rng_d.exponential(size=len(w_int)) @ w_int) \
                if len(w_int) else 0.0
            out_tier[pos] = k + 1
            out_sinr[pos] = g * signal_gain / (interference + noise)
            out_dist[pos] = serve_dist
            pos += 1

        if do_load:
            rng_u = _stream(settings.master_seed, rep, _STREAM_USERS)
            n_users = int(rng_u.poisson(config.user_density * area))
            if n_users:
                uu = rng_u.random((n_users, 2))
                ur = radius * np.sqrt(uu[:, 0])
                utheta = 2.0 * math.pi * uu[:, 1]
                upos = np.column_stack((ur * np.cos(utheta),
                                        ur * np.sin(utheta)))
                # per tier: nearest BS to each user, then BRP argmax
                brp = np.full((K, n_users), -np.inf)
                near_idx = np.zeros((K, n_users), dtype=np.int64)
                with np.errstate(divide="ignore"):
                    for j in range(K):
                        if len(xy[j]) == 0:
                            continue
                        dmin, idx = cKDTree(xy[j]).query(upos)
                        near_idx[j] = idx
                        tj = tiers[j]
                        brp[j] = (tj.power * tj.bias
                                  * (dmin / r0) ** (-tj.pathloss_exp))
                serving_tier = np.argmax(brp, axis=0)
                for j in range(K):
                    if len(xy[j]) == 0:
                        continue
                    interior = np.hypot(xy[j][:, 0], xy[j][:, 1]) <= interior_radius
                    load_bs[j] += int(interior.sum())
                    mask = serving_tier == j
                    if mask.any():
                        counts = np.bincount(near_idx[j][mask],
                                             minlength=len(xy[j]))
                        load_users[j] += int(counts[interior].sum())
            else:
                for j in range(K):
                    interior = np.hypot(xy[j][:, 0], xy[j][:, 1]) <= interior_radius
                    load_bs[j] += int(interior.sum())

    return {
        "tier": out_tier,
        "sinr": out_sinr,
        "dist": out_dist,
        "assoc": assoc_counts,
        "load_users": load_users,
        "load_bs": load_bs,
    }


def _run_block_star(args):
    return _run_block(*args)


@dataclass
class EmpiricalSinr:
    """Columnar SINR sample set with replication metadata."""

    tier: np.ndarray
    sinr: np.ndarray
    distance: np.ndarray
    rate: np.ndarray
    master_seed: int
    replications: int
    fading_draws: int

    def __len__(self) -> int:
        return len(self.sinr)

    def write_csv(self, fh) -> None:
        """Columnar CSV (tier, sinr, distance, rate), 9 significant
        digits, LF line endings."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tier", "sinr", "distance_m", "rate_nats"])
        for t, s, d, r in zip(self.tier, self.sinr, self.distance, self.rate):
            writer.writerow([int(t), f"{s:.9g}", f"{d:.9g}", f"{r:.9g}"])


@dataclass
class CampaignResult:
    """Samples plus the empirical association and load summaries."""

    samples: EmpiricalSinr
    association_counts: np.ndarray
    load_users: np.ndarray
    load_bs_counts: np.ndarray
    window_radius: float

    @property
    def association_fractions(self) -> np.ndarray:
        return self.association_counts / self.association_counts.sum()

    @property
    def mean_load(self) -> np.ndarray:
        """Users per interior BS, per tier (NaN where no BS was seen)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.load_bs_counts > 0,
                            self.load_users / self.load_bs_counts, np.nan)


def run_campaign(settings: SimSettings, workers: int = 1) -> CampaignResult:
    """Run the full campaign.

    Replications are independent; with ``workers`` > 1 they are split
    into contiguous blocks across processes and merged back in
    replication order, so the result is identical for any worker count.
    """
    radius = settings.resolved_window_radius()
    check_window_radius(settings.config, radius)
    reps = settings.replications
    if workers <= 1 or reps < 2 * workers:
        blocks = [_run_block(settings, 0, reps)]
    else:
        bounds = np.linspace(0, reps, workers + 1, dtype=int)
        jobs = [(settings, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block_star, jobs))

    tier = np.concatenate([b["tier"] for b in blocks])
    sinr = np.concatenate([b["sinr"] for b in blocks])
    dist = np.concatenate([b["dist"] for b in blocks])
    samples = EmpiricalSinr(
        tier=tier, sinr=sinr, distance=dist, rate=np.log1p(sinr),
        master_seed=settings.master_seed, replications=reps,
        fading_draws=settings.fading_draws)
    return CampaignResult(
        samples=samples,
        association_counts=np.sum([b["assoc"] for b in blocks], axis=0),
        load_users=np.sum([b["load_users"] for b in blocks], axis=0),
        load_bs_counts=np.sum([b["load_bs"] for b in blocks], axis=0),
        window_radius=radius,
    )


def _select(samples: EmpiricalSinr, tier: int | None) -> np.ndarray:
    if tier is None:
        vals = samples.sinr
    else:
        vals = samples.sinr[samples.tier == tier]
    if len(vals) == 0:
        raise EmptySampleSetError(
            "no samples" if tier is None else f"no samples in tier {tier}")
    return vals


def empirical_cdf(samples: EmpiricalSinr, tau_grid,
                  tier: int | None = None):
    """Empirical outage (fraction of SINR samples <= tau) on a grid,
    with binomial standard errors.  ``tier`` of None uses all samples;
    otherwise conditions on the serving tier."""
    vals = np.sort(_select(samples, tier))
    taus = np.asarray(tau_grid, dtype=float)
    n = len(vals)
    p = np.searchsorted(vals, taus, side="right") / n
    stderr = np.sqrt(p * (1.0 - p) / n)
    return p, stderr


def empirical_rate(samples: EmpiricalSinr, tier: int | None = None):
    """Sample mean of ln(1 + SINR) with its standard error."""
    vals = np.log1p(_select(samples, tier))
    n = len(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
