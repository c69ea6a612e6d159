"""Analytic downlink metrics for multi-tier networks.

Implements the per-tier association probability, mean cell load, serving
distance law, outage probability (the SINR CDF), average ergodic rate,
per-user throughput, and the minimum average user throughput, all under
biased maximum-received-power association over Poisson-deployed tiers
with Rayleigh fading.

Every metric has a general quadrature path valid for arbitrary per-tier
path loss exponents and noise power.  Closed forms exist in special
regimes (zero noise, equal exponents, and optionally unit bias ratios
or exponent 4); they are dispatched only when their preconditions hold
exactly, so that closed-form/quadrature agreement stays a meaningful
cross-check.

Distances inside the integrals are measured in units of the reference
distance r0 and densities are rescaled by r0^2, which keeps every
formula valid for a non-default r0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import (
    NonPositiveParameterError,
    NotApplicableError,
    ZeroUserDensityError,
)
from .model import NetworkConfig, check_tier_index, validate
from .specfun import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    integrate_semi_infinite,
    z_kernel,
    z_kernel_alpha4,
)

__all__ = [
    "PerTierMetric",
    "ClosedFormOutage",
    "ThroughputSummary",
    "association_probability",
    "association_probabilities",
    "cell_load",
    "cell_loads",
    "serving_distance_pdf",
    "serving_distance_cdf",
    "outage_tier",
    "outage_network",
    "outage_metrics",
    "outage_closed_form",
    "ergodic_rate_tier",
    "ergodic_rate_network",
    "ergodic_rate_closed_form",
    "avg_user_throughput",
    "min_avg_user_throughput",
]

# overflow guard for exp(t); the integrands here are dead far earlier
_T_MAX = 700.0


@dataclass(frozen=True)
class PerTierMetric:
    """One value per tier plus, where meaningful, the association-weighted
    network aggregate."""

    per_tier: tuple[float, ...]
    network: float | None = None


@dataclass(frozen=True)
class ClosedFormOutage:
    """Result of the closed-form outage dispatch.

    ``form`` names the regime that was applied: ``alpha4-unbiased``,
    ``alpha4-biased``, ``equal-alpha-unbiased``, or ``equal-alpha-biased``.
    """

    per_tier: tuple[float, ...]
    network: float
    form: str


@dataclass(frozen=True)
class ThroughputSummary:
    """Minimum per-user throughput across tiers, with the 1-based argmin
    tier (lowest index on ties) and every tied tier."""

    value: float
    tier: int
    tied: tuple[int, ...]


def _norm_densities(config: NetworkConfig) -> list[float]:
    """Tier densities rescaled to the r0-normalized distance unit."""
    r0sq = config.ref_distance * config.ref_distance
    return [t.density * r0sq for t in config.tiers]


def _assoc_terms(config: NetworkConfig, k: int):
    """Coefficients c_j and exponents e_j of the serving-tier exponent
    sum(j) c_j * x**e_j appearing in all area integrals, for serving
    tier k (1-based).  e_j = 2 * alpha_k / alpha_j."""
    ref = config.tiers[k - 1]
    dens = _norm_densities(config)
    coeffs, expos = [], []
    for lam, t in zip(dens, config.tiers):
        p_hat = t.power / ref.power
        b_hat = t.bias / ref.bias
        coeffs.append(lam * (p_hat * b_hat) ** (2.0 / t.pathloss_exp))
        expos.append(2.0 * ref.pathloss_exp / t.pathloss_exp)
    return coeffs, expos


def _area_integral(coeffs, expos, settings: QuadratureSettings,
                   noise_coef: float = 0.0, noise_exp: float = 2.0) -> float:
    """int_0^inf x * exp(-noise_coef*x**noise_exp - pi*sum c_j x**e_j) dx."""
    pi = math.pi

    def f(x: float) -> float:
        s = noise_coef * x ** noise_exp if noise_coef > 0.0 else 0.0
        for c, e in zip(coeffs, expos):
            s += pi * c * x ** e
        return x * math.exp(-s) if s < _T_MAX else 0.0

    return integrate_semi_infinite(f, settings)


def _closed_assoc_weights(config: NetworkConfig) -> list[float]:
    """Equal-exponent association weights lambda_j (P_j B_j)^(2/alpha)."""
    alpha = config.tiers[0].pathloss_exp
    dens = _norm_densities(config)
    return [lam * (t.power * t.bias) ** (2.0 / alpha)
            for lam, t in zip(dens, config.tiers)]


def association_probability(config: NetworkConfig, k: int,
                            settings: QuadratureSettings | None = None,
                            *, force_quadrature: bool = False) -> float:
    """Probability that the typical user is served by tier k.

    Uses the exact closed form when all path loss exponents are equal;
    otherwise integrates the general expression.  ``force_quadrature``
    selects the integral path unconditionally (used by consistency
    tests).
    """
    validate(config)
    check_tier_index(config, k)
    settings = settings or DEFAULT_SETTINGS
    if model.equal_pathloss_exponent(config) and not force_quadrature:
        w = _closed_assoc_weights(config)
        return w[k - 1] / sum(w)
    coeffs, expos = _assoc_terms(config, k)
    lam_k = _norm_densities(config)[k - 1]
    return 2.0 * math.pi * lam_k * _area_integral(coeffs, expos, settings)


def association_probabilities(config: NetworkConfig,
                              settings: QuadratureSettings | None = None,
                              ) -> PerTierMetric:
    """Association probabilities for every tier (they sum to one)."""
    vals = tuple(association_probability(config, k, settings)
                 for k in range(1, config.num_tiers + 1))
    return PerTierMetric(per_tier=vals)


def cell_load(config: NetworkConfig, k: int,
              settings: QuadratureSettings | None = None) -> float:
    """Mean number of users per base station in tier k:
    association probability times user density over BS density."""
    a_k = association_probability(config, k, settings)
    return a_k * config.user_density / config.tiers[k - 1].density


def cell_loads(config: NetworkConfig,
               settings: QuadratureSettings | None = None) -> PerTierMetric:
    vals = tuple(cell_load(config, k, settings)
                 for k in range(1, config.num_tiers + 1))
    return PerTierMetric(per_tier=vals)


def serving_distance_pdf(config: NetworkConfig, k: int, x,
                         settings: QuadratureSettings | None = None):
    """PDF (per meter) of the distance between the typical user and its
    serving tier-k base station, evaluated at x (scalar or array)."""
    validate(config)
    check_tier_index(config, k)
    settings = settings or DEFAULT_SETTINGS
    a_k = association_probability(config, k, settings)
    coeffs, expos = _assoc_terms(config, k)
    lam_k = _norm_densities(config)[k - 1]
    r0 = config.ref_distance

    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xn = np.atleast_1d(xs) / r0
    if np.any(xn < 0.0):
        raise NonPositiveParameterError("distance must be >= 0")
    expo = np.zeros_like(xn)
    for c, e in zip(coeffs, expos):
        expo += math.pi * c * xn ** e
    out = (2.0 * math.pi * lam_k / a_k) * xn * np.exp(-expo) / r0
    return float(out[0]) if scalar else out


# Gauss-Legendre rule used for the cumulative distance CDF
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def serving_distance_cdf(config: NetworkConfig, k: int, x,
                         settings: QuadratureSettings | None = None):
    """CDF of the tier-k serving distance at x (scalar or array).

    Computed by cumulative Gauss-Legendre panels between the sorted
    evaluation points, so large arrays (e.g. goodness-of-fit sample
    grids) cost one vectorized pass.
    """
    validate(config)
    check_tier_index(config, k)
    settings = settings or DEFAULT_SETTINGS
    a_k = association_probability(config, k, settings)
    coeffs, expos = _assoc_terms(config, k)
    lam_k = _norm_densities(config)[k - 1]
    r0 = config.ref_distance

    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xn = np.atleast_1d(xs).astype(float) / r0
    if np.any(xn < 0.0):
        raise NonPositiveParameterError("distance must be >= 0")

    order = np.argsort(xn)
    edges = np.concatenate(([0.0], xn[order]))
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    # nodes: (n_intervals, n_gl)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    expo = np.zeros_like(nodes)
    for c, e in zip(coeffs, expos):
        expo += math.pi * c * nodes ** e
    vals = nodes * np.exp(-expo)
    panel = half * (vals @ _GL_WEIGHTS)
    cdf_sorted = (2.0 * math.pi * lam_k / a_k) * np.cumsum(panel)
    out = np.empty_like(xn)
    out[order] = np.clip(cdf_sorted, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _interference_coeffs(config: NetworkConfig, k: int, tau: float,
                         settings: QuadratureSettings):
    """Coefficients C_j(tau) of the outage/rate exponent together with
    the shared exponents e_j."""
    ref = config.tiers[k - 1]
    dens = _norm_densities(config)
    coeffs, expos = [], []
    for lam, t in zip(dens, config.tiers):
        p_hat = t.power / ref.power
        b_hat = t.bias / ref.bias
        two_over_a = 2.0 / t.pathloss_exp
        z = z_kernel(tau, t.pathloss_exp, b_hat, settings)
        coeffs.append(lam * p_hat ** two_over_a *
                      (b_hat ** two_over_a + z))
        expos.append(2.0 * ref.pathloss_exp / t.pathloss_exp)
    return coeffs, expos


def _noise_coef(config: NetworkConfig, k: int) -> float:
    """Multiplier of tau * x**alpha_k in the outage exponent: W/(P_k L0),
    with x in r0 units."""
    ref = config.tiers[k - 1]
    return config.noise_power / (ref.power * config.ref_pathloss)


def outage_tier(config: NetworkConfig, k: int, tau: float,
                settings: QuadratureSettings | None = None) -> float:
    """Outage probability P[SINR <= tau] for a user served by tier k.

    General quadrature path, valid for any noise power and mixed
    exponents; this is also the SINR CDF of tier k at threshold tau.
    """
    validate(config)
    check_tier_index(config, k)
    if tau < 0.0:
        raise NonPositiveParameterError(f"threshold must be >= 0, got {tau}")
    settings = settings or DEFAULT_SETTINGS
    a_k = association_probability(config, k, settings)
    lam_k = _norm_densities(config)[k - 1]
    coeffs, expos = _interference_coeffs(config, k, tau, settings)
    integral = _area_integral(coeffs, expos, settings,
                              noise_coef=tau * _noise_coef(config, k),
                              noise_exp=config.tiers[k - 1].pathloss_exp)
    return 1.0 - (2.0 * math.pi * lam_k / a_k) * integral


def outage_network(config: NetworkConfig, tau: float,
                   settings: QuadratureSettings | None = None) -> float:
    """Outage probability of a randomly chosen user: the association-
    probability-weighted sum of the per-tier outages."""
    settings = settings or DEFAULT_SETTINGS
    total = 0.0
    for k in range(1, config.num_tiers + 1):
        a_k = association_probability(config, k, settings)
        total += a_k * outage_tier(config, k, tau, settings)
    return total


def _outage_network_direct(config: NetworkConfig, tau: float,
                           settings: QuadratureSettings | None = None) -> float:
    """Network outage by the combined integral (1 minus the sum of the
    per-tier coverage integrals), bypassing the per-tier normalization."""
    validate(config)
    if tau < 0.0:
        raise NonPositiveParameterError(f"threshold must be >= 0, got {tau}")
    settings = settings or DEFAULT_SETTINGS
    dens = _norm_densities(config)
    total = 0.0
    for k in range(1, config.num_tiers + 1):
        coeffs, expos = _interference_coeffs(config, k, tau, settings)
        integral = _area_integral(coeffs, expos, settings,
                                  noise_coef=tau * _noise_coef(config, k),
                                  noise_exp=config.tiers[k - 1].pathloss_exp)
        total += 2.0 * math.pi * dens[k - 1] * integral
    return 1.0 - total


def outage_metrics(config: NetworkConfig, tau: float,
                   settings: QuadratureSettings | None = None) -> PerTierMetric:
    """Per-tier and network outage at one threshold."""
    settings = settings or DEFAULT_SETTINGS
    per_tier, net = [], 0.0
    for k in range(1, config.num_tiers + 1):
        a_k = association_probability(config, k, settings)
        o_k = outage_tier(config, k, tau, settings)
        per_tier.append(o_k)
        net += a_k * o_k
    return PerTierMetric(per_tier=tuple(per_tier), network=net)


def outage_closed_form(config: NetworkConfig, tau: float,
                       settings: QuadratureSettings | None = None,
                       ) -> ClosedFormOutage:
    """Closed-form outage for the zero-noise, equal-exponent regime.

    Dispatches the most specific applicable form (arctangent kernels at
    exponent 4; unit bias ratios collapse everything to one expression
    that is identical across tiers).  Raises NotApplicableError when
    noise is nonzero or exponents differ; callers then fall back to
    outage_tier / outage_network.
    """
    validate(config)
    if tau < 0.0:
        raise NonPositiveParameterError(f"threshold must be >= 0, got {tau}")
    settings = settings or DEFAULT_SETTINGS
    if config.noise_power != 0.0:
        raise NotApplicableError("closed forms require zero noise power")
    if not model.equal_pathloss_exponent(config):
        raise NotApplicableError("closed forms require equal exponents")
    alpha = config.tiers[0].pathloss_exp
    is_alpha4 = alpha == 4.0
    unbiased = model.equal_bias(config)

    def kern(b_hat: float) -> float:
        if is_alpha4:
            return z_kernel_alpha4(tau, b_hat)
        return z_kernel(tau, alpha, b_hat, settings)

    if unbiased:
        o = 1.0 - 1.0 / (1.0 + kern(1.0))
        form = "alpha4-unbiased" if is_alpha4 else "equal-alpha-unbiased"
        return ClosedFormOutage(per_tier=(o,) * config.num_tiers,
                                network=o, form=form)

    dens = _norm_densities(config)
    assoc = _closed_assoc_weights(config)
    assoc_total = sum(assoc)
    per_tier, network = [], 0.0
    for k in range(1, config.num_tiers + 1):
        ref = config.tiers[k - 1]
        num = den = 0.0
        for lam, t in zip(dens, config.tiers):
            p_hat = t.power / ref.power
            b_hat = t.bias / ref.bias
            num += lam * (p_hat * b_hat) ** (2.0 / alpha)
            den += lam * p_hat ** (2.0 / alpha) * (
                b_hat ** (2.0 / alpha) + kern(b_hat))
        o_k = 1.0 - num / den
        per_tier.append(o_k)
        network += (assoc[k - 1] / assoc_total) * o_k
    form = "alpha4-biased" if is_alpha4 else "equal-alpha-biased"
    return ClosedFormOutage(per_tier=tuple(per_tier), network=network,
                            form=form)


def ergodic_rate_tier(config: NetworkConfig, k: int,
                      settings: QuadratureSettings | None = None,
                      *, force_nested: bool = False) -> float:
    """Average ergodic rate E[ln(1 + SINR)] of a tier-k user, nats/s/Hz.

    Evaluated as an outer integral over the rate variable of inner
    distance integrals.  With zero noise and equal exponents the inner
    integral is Gaussian-type and collapses analytically, leaving a
    single outer quadrature; otherwise the inner integral runs at ten
    times tighter tolerance inside the outer one.  ``force_nested``
    keeps the full nested path even when the collapse applies (used by
    consistency tests).
    """
    validate(config)
    check_tier_index(config, k)
    settings = settings or DEFAULT_SETTINGS
    a_k = association_probability(config, k, settings)
    lam_k = _norm_densities(config)[k - 1]
    noise = _noise_coef(config, k)
    alpha_k = config.tiers[k - 1].pathloss_exp
    collapses = (config.noise_power == 0.0
                 and model.equal_pathloss_exponent(config)
                 and not force_nested)

    if collapses:
        def outer(t: float) -> float:
            if t > _T_MAX:
                return 0.0
            coeffs, _ = _interference_coeffs(config, k, math.expm1(t),
                                             settings)
            return lam_k / (a_k * sum(coeffs))

        return integrate_semi_infinite(outer, settings)

    inner_settings = settings.tighter(10.0)

    def outer(t: float) -> float:
        if t > _T_MAX:
            return 0.0
        tau_t = math.expm1(t)
        coeffs, expos = _interference_coeffs(config, k, tau_t, settings)
        return _area_integral(coeffs, expos, inner_settings,
                              noise_coef=tau_t * noise, noise_exp=alpha_k)

    return (2.0 * math.pi * lam_k / a_k) * integrate_semi_infinite(outer,
                                                                   settings)


def ergodic_rate_network(config: NetworkConfig,
                         settings: QuadratureSettings | None = None) -> float:
    """Association-weighted network average ergodic rate, nats/s/Hz."""
    settings = settings or DEFAULT_SETTINGS
    total = 0.0
    for k in range(1, config.num_tiers + 1):
        a_k = association_probability(config, k, settings)
        total += a_k * ergodic_rate_tier(config, k, settings)
    return total


def ergodic_rate_closed_form(config: NetworkConfig,
                             settings: QuadratureSettings | None = None,
                             ) -> float:
    """Single-integral ergodic rate for the zero-noise, equal-exponent,
    unbiased regime, where the rate is identical across tiers and
    independent of powers and densities.  Raises NotApplicableError
    outside that regime."""
    validate(config)
    settings = settings or DEFAULT_SETTINGS
    if config.noise_power != 0.0:
        raise NotApplicableError("closed form requires zero noise power")
    if not model.equal_pathloss_exponent(config):
        raise NotApplicableError("closed form requires equal exponents")
    if not model.equal_bias(config):
        raise NotApplicableError("closed form requires unbiased association")
    alpha = config.tiers[0].pathloss_exp
    is_alpha4 = alpha == 4.0

    def f(t: float) -> float:
        if t > _T_MAX:
            return 0.0
        tau_t = math.expm1(t)
        z = (z_kernel_alpha4(tau_t, 1.0) if is_alpha4
             else z_kernel(tau_t, alpha, 1.0, settings))
        return 1.0 / (1.0 + z)

    return integrate_semi_infinite(f, settings)


def avg_user_throughput(config: NetworkConfig, k: int,
                        settings: QuadratureSettings | None = None) -> float:
    """Per-user throughput of a tier-k cell under round-robin sharing:
    tier rate divided by mean users per BS."""
    validate(config)
    if config.user_density <= 0.0:
        raise ZeroUserDensityError(
            "per-user throughput requires user_density > 0")
    return (ergodic_rate_tier(config, k, settings)
            / cell_load(config, k, settings))


def min_avg_user_throughput(config: NetworkConfig,
                            settings: QuadratureSettings | None = None,
                            ) -> ThroughputSummary:
    """Smallest per-user throughput across tiers.

    Ties (within 1e-12 relative) report every tied tier; the returned
    tier is the lowest tied index.
    """
    vals = [avg_user_throughput(config, k, settings)
            for k in range(1, config.num_tiers + 1)]
    q = min(vals)
    tol = 1e-12 * max(1.0, abs(q))
    tied = tuple(k for k, v in enumerate(vals, start=1) if v - q <= tol)
    return ThroughputSummary(value=q, tier=tied[0], tied=tied)
