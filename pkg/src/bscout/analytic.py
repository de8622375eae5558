"""Closed-form outage probabilities for the backscatter links and the legacy link.

Conventions used throughout:

* A device is "active" when the power it must absorb to run its circuitry
  leaves the adaptive reflection coefficient strictly below 1, i.e. when the
  feeding channel clears energy_threshold. Inactive devices neither deliver
  data nor interfere.
* Conditioned on activity, both the backscatter signal and its interference
  into the legacy receiver are scaled products of two independent exponential
  channel powers; dist_cdf/dist_pdf give that product law.
* All functions return raw floats. Anything leaving [0, 1] by more than 1e-9
  is a bug upstream, and as_probability turns it into a loud error instead of
  a quietly clamped lie.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .scenario import DerivedConstants, Scenario, derive_constants
from .specfun import (
    EULER,
    adaptive_integrate,
    bessel_k0,
    bessel_k1,
    chebyshev_nodes,
    expint_e1_scaled,
)

PROB_SLACK = 1e-9


def as_probability(x: float, label: str = "probability") -> float:
    """Snap x into [0, 1], rejecting anything further than PROB_SLACK outside."""
    if not math.isfinite(x) or x < -PROB_SLACK or x > 1.0 + PROB_SLACK:
        raise ArithmeticError(
            f"{label} = {x!r} is outside [0, 1] beyond numerical slack; "
            f"the expression or its inputs are inconsistent"
        )
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class OutageReport:
    """A labeled outage value as produced by one of the closed forms."""

    label: str
    value: float

    @property
    def probability(self) -> float:
        return as_probability(self.value, self.label)


def dist_cdf(x: float, mu: float) -> float:
    """CDF of a product of two independent exponentials with mean product mu."""
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValueError(f"dist_cdf requires mu > 0, got {mu!r}")
    if x <= 0.0:
        return 0.0
    z = 2.0 * math.sqrt(x / mu)
    return 1.0 - z * bessel_k1(z)


def dist_pdf(x: float, mu: float) -> float:
    """Density of the exponential-product law; diverges logarithmically at 0+."""
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValueError(f"dist_pdf requires mu > 0, got {mu!r}")
    if x < 0.0:
        return 0.0
    if x == 0.0:
        return math.inf
    return (2.0 / mu) * bessel_k0(2.0 * math.sqrt(x / mu))


@dataclass(frozen=True)
class ProductChannelDist:
    """Distribution of scale * X * Y with X, Y independent exponentials.

    mu is the mean of the product, i.e. scale times both exponential means.
    """

    mu: float

    def cdf(self, x: float) -> float:
        return dist_cdf(x, self.mu)

    def pdf(self, x: float) -> float:
        return dist_pdf(x, self.mu)


def theta_k(w: float) -> float:
    """w * e^w * E1(w) for w >= 0: the interference-limited outage kernel.

    Continuous extension theta_k(0) = 0; increases to 1 as w -> inf. Evaluated
    through the scaled E1 so large w neither overflows nor cancels.
    """
    if not (w >= 0.0):
        raise ValueError(f"theta_k requires w >= 0, got {w!r}")
    if w == 0.0:
        return 0.0
    if math.isinf(w):
        return 1.0
    return w * expint_e1_scaled(w)


def _inner_success(
    dc: DerivedConstants, noise_power: float, j_value: float
) -> float:
    # shared tail of the exact/quadrature/asymptotic backscatter expressions
    up = dc.gamma_th_b * noise_power
    theta = theta_k(dc.int_to_sig_br * dc.gamma_th_b)
    if noise_power == 0.0:
        return 1.0 - theta
    a_int = dc.br_interference_scale
    return (1.0 - dist_cdf(up, dc.mu_sig)
            - math.exp(noise_power / a_int) * (theta - j_value))


def backscatter_outage_exact(scn: Scenario, k: int, *, tol: float = 1e-10) -> float:
    """Outage of backscatter link k under the adaptive reflection coefficient.

    The one-dimensional noise integral is evaluated adaptively to absolute
    tolerance tol; everything else is closed form.
    """
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    noise = scn.system.noise_power
    up = dc.gamma_th_b * noise
    if up > 0.0:
        inv_decay = 1.0 / (dc.gamma_th_b * dc.br_interference_scale)
        mu = dc.mu_sig

        def integrand(x: float) -> float:
            return math.exp(-x * inv_decay) * dist_pdf(x, mu)

        j_value = adaptive_integrate(integrand, 0.0, up, tol)
    else:
        j_value = 0.0
    return 1.0 - dc.p_active * _inner_success(dc, noise, j_value)


def backscatter_outage_gc(scn: Scenario, k: int, *, order: int | None = None) -> float:
    """Same as backscatter_outage_exact with the integral replaced by a
    Gauss-Chebyshev sum of the given order (scenario default when None)."""
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    noise = scn.system.noise_power
    up = dc.gamma_th_b * noise
    m = scn.system.gc_order if order is None else order
    rule = chebyshev_nodes(m)
    if up > 0.0:
        inv_decay = 1.0 / (dc.gamma_th_b * dc.br_interference_scale)
        mu = dc.mu_sig
        acc = 0.0
        for v in rule.nodes:
            x = 0.5 * up * (v + 1.0)
            acc += math.sqrt(1.0 - v * v) * math.exp(-x * inv_decay) * dist_pdf(x, mu)
        j_value = math.pi * up / (2.0 * rule.order) * acc
    else:
        j_value = 0.0
    return 1.0 - dc.p_active * _inner_success(dc, noise, j_value)


def backscatter_outage_highsnr(scn: Scenario, k: int) -> float:
    """Large-transmit-power expansion of the backscatter outage.

    Replaces the noise integral with its leading small-noise behaviour; tight
    once the noise term is small against the interference floor.
    """
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    noise = scn.system.noise_power
    gb = dc.gamma_th_b
    theta = theta_k(dc.int_to_sig_br * gb)
    if noise == 0.0:
        return 1.0 - dc.p_active * (1.0 - theta)
    mu = dc.mu_sig
    a_int = dc.br_interference_scale
    up = gb * noise
    log_ratio = 0.5 * math.log(up / mu)  # ln(sqrt(gamma_b) * sigma / sqrt(mu))
    inner = (theta
             - (1.0 / mu) * ((gb * noise * noise / a_int) * (log_ratio - 0.25)
                             - 2.0 * gb * noise * (log_ratio - 0.5))
             + 2.0 * gb * dc.int_to_sig_br * EULER * (1.0 - math.exp(-noise / a_int)))
    success = (1.0 - dist_cdf(up, mu) - math.exp(noise / a_int) * inner)
    return 1.0 - dc.p_active * success


def backscatter_outage_floor(scn: Scenario, k: int) -> float:
    """Transmit-power-independent outage floor of backscatter link k."""
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    return theta_k(dc.int_to_sig_br * dc.gamma_th_b)


_BSC_METHODS = {
    "exact": backscatter_outage_exact,
    "gc": backscatter_outage_gc,
    "highsnr": backscatter_outage_highsnr,
    "floor": backscatter_outage_floor,
}


def _per_link_outages(scn: Scenario, method: str, **kwargs) -> list[float]:
    try:
        fn = _BSC_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown backscatter method {method!r}; "
                         f"expected one of {sorted(_BSC_METHODS)}") from None
    return [fn(scn, k, **kwargs) for k in range(len(scn.links))]


def backscatter_best(scn: Scenario, *, method: str = "exact", **kwargs) -> float:
    """Outage when the receiver decodes the strongest backscatter device.

    Channels are independent across devices, so selection fails only when
    every device fails: the product of the per-link outages.
    """
    return math.prod(_per_link_outages(scn, method, **kwargs))


def backscatter_worst(scn: Scenario, *, method: str = "exact", **kwargs) -> float:
    """Outage when the receiver is stuck with the weakest backscatter device."""
    return 1.0 - math.prod(1.0 - p for p in _per_link_outages(scn, method, **kwargs))


def _legacy_mean_rx(scn: Scenario) -> float:
    # mean received legacy signal power Pt * K * lambda, the exponential scale
    dc = derive_constants(scn.system, scn.legacy, scn.links[0])
    return scn.system.transmit_power * dc.pg_lt_lr * scn.legacy.fading_mean


def legacy_no_backscatter(scn: Scenario) -> float:
    """Legacy outage with every backscatter device silent (noise only)."""
    dc = derive_constants(scn.system, scn.legacy, scn.links[0])
    if dc.gamma_th == 0.0:
        return 0.0
    return 1.0 - math.exp(-dc.gamma_th * scn.system.noise_power / _legacy_mean_rx(scn))


def prob_all_active(scn: Scenario) -> float:
    """Probability that every backscatter device harvests enough to run."""
    return math.prod(
        derive_constants(scn.system, scn.legacy, link).p_active for link in scn.links
    )


def legacy_outage(scn: Scenario, k: int) -> float:
    """Legacy outage with device k the only (potential) interferer."""
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    if dc.gamma_th == 0.0:
        return 0.0
    no_sl = legacy_no_backscatter(scn)
    quiet = no_sl * (1.0 - dc.p_active)
    loud = dc.p_active * (1.0 - (1.0 - no_sl) * theta_k(dc.sig_to_int_lr))
    return quiet + loud


def legacy_outage_floor(scn: Scenario, k: int) -> float:
    """Transmit-power-independent floor of the single-interferer legacy outage."""
    dc = derive_constants(scn.system, scn.legacy, scn.links[k])
    if dc.gamma_th == 0.0:
        return 0.0
    return 1.0 - theta_k(dc.sig_to_int_lr)


def cdf_gmin(scn: Scenario, x: float) -> float:
    """CDF of the smallest backscatter interference power, all devices active."""
    if x <= 0.0:
        return 0.0
    prod = 1.0
    for link in scn.links:
        dc = derive_constants(scn.system, scn.legacy, link)
        z = 2.0 * math.sqrt(x / dc.mu_int)
        prod *= z * bessel_k1(z)
    return 1.0 - prod


def cdf_gmax_hat(scn: Scenario, x: float) -> float:
    """CDF of the largest backscatter interference power, inactivity included.

    Each device contributes an atom at zero (its inactivity probability), so
    the CDF starts at prod(1 - p_active) rather than 0.
    """
    if x < 0.0:
        return 0.0
    prod = 1.0
    for link in scn.links:
        dc = derive_constants(scn.system, scn.legacy, link)
        if x == 0.0:
            tail = 1.0
        else:
            z = 2.0 * math.sqrt(x / dc.mu_int)
            tail = z * bessel_k1(z)
        prod *= (1.0 - tail) * dc.p_active + 1.0 - dc.p_active
    return prod


def _laplace_over_cdf(cdf, mean_rx_over_gamma: float, *, method: str,
                      order: int, tol: float) -> float:
    # E[exp(-gamma G / mean_rx)] = integral_0^1 F_G(-(mean_rx/gamma) ln u) du
    if method == "gc":
        rule = chebyshev_nodes(order)
        acc = 0.0
        for v in rule.nodes:
            u = 0.5 * v + 0.5
            acc += math.sqrt(1.0 - v * v) * cdf(-mean_rx_over_gamma * math.log(u))
        return math.pi / (2.0 * rule.order) * acc
    if method == "exact":
        return adaptive_integrate(
            lambda u: cdf(-mean_rx_over_gamma * math.log(u)), 0.0, 1.0, tol
        )
    raise ValueError(f"unknown method {method!r}; expected 'gc' or 'exact'")


def legacy_best(scn: Scenario, *, method: str = "gc", order: int | None = None,
                tol: float = 1e-10) -> float:
    """Legacy outage when the schedule activates the least harmful device.

    If any device is energy-starved it is the obvious pick and the legacy
    link sees no interference at all; otherwise the minimum interference
    power applies. method 'gc' uses the scenario's Gauss-Chebyshev order (or
    the override), 'exact' integrates the Laplace transform adaptively.
    """
    dc0 = derive_constants(scn.system, scn.legacy, scn.links[0])
    if dc0.gamma_th == 0.0:
        return 0.0
    m = scn.system.gc_order if order is None else order
    mean_rx = _legacy_mean_rx(scn)
    p_all = prob_all_active(scn)
    no_sl = legacy_no_backscatter(scn)
    laplace = _laplace_over_cdf(lambda x: cdf_gmin(scn, x), mean_rx / dc0.gamma_th,
                                method=method, order=m, tol=tol)
    p_min = 1.0 - math.exp(-dc0.gamma_th * scn.system.noise_power / mean_rx) * laplace
    return no_sl * (1.0 - p_all) + p_min * p_all


def legacy_worst(scn: Scenario, *, method: str = "gc", order: int | None = None,
                 tol: float = 1e-10) -> float:
    """Legacy outage when the schedule activates the most harmful device."""
    dc0 = derive_constants(scn.system, scn.legacy, scn.links[0])
    if dc0.gamma_th == 0.0:
        return 0.0
    m = scn.system.gc_order if order is None else order
    mean_rx = _legacy_mean_rx(scn)
    laplace = _laplace_over_cdf(lambda x: cdf_gmax_hat(scn, x), mean_rx / dc0.gamma_th,
                                method=method, order=m, tol=tol)
    return 1.0 - math.exp(-dc0.gamma_th * scn.system.noise_power / mean_rx) * laplace


def _floor_cdf_gmin(scn: Scenario, neg_log_u: float) -> float:
    # cdf_gmin evaluated at the transmit-power-free argument neg_log_u * Xi_k * mu_int
    prod = 1.0
    for link in scn.links:
        dc = derive_constants(scn.system, scn.legacy, link)
        z = 2.0 * math.sqrt(neg_log_u * dc.sig_to_int_lr)
        prod *= z * bessel_k1(z) if z > 0.0 else 1.0
    return 1.0 - prod


def _floor_cdf_gmax(scn: Scenario, neg_log_u: float) -> float:
    prod = 1.0
    for link in scn.links:
        dc = derive_constants(scn.system, scn.legacy, link)
        z = 2.0 * math.sqrt(neg_log_u * dc.sig_to_int_lr)
        tail = z * bessel_k1(z) if z > 0.0 else 1.0
        prod *= 1.0 - tail
    return prod


def _floor_laplace(scn: Scenario, floor_cdf, *, method: str, order: int,
                   tol: float) -> float:
    if method == "gc":
        rule = chebyshev_nodes(order)
        acc = 0.0
        for v in rule.nodes:
            u = 0.5 * v + 0.5
            acc += math.sqrt(1.0 - v * v) * floor_cdf(scn, -math.log(u))
        return math.pi / (2.0 * rule.order) * acc
    if method == "exact":
        return adaptive_integrate(lambda u: floor_cdf(scn, -math.log(u)), 0.0, 1.0, tol)
    raise ValueError(f"unknown method {method!r}; expected 'gc' or 'exact'")


def legacy_best_floor(scn: Scenario, *, method: str = "gc", order: int | None = None,
                      tol: float = 1e-10) -> float:
    """Large-transmit-power floor of legacy_best (all devices surely active)."""
    dc0 = derive_constants(scn.system, scn.legacy, scn.links[0])
    if dc0.gamma_th == 0.0:
        return 0.0
    m = scn.system.gc_order if order is None else order
    return 1.0 - _floor_laplace(scn, _floor_cdf_gmin, method=method, order=m, tol=tol)


def legacy_worst_floor(scn: Scenario, *, method: str = "gc", order: int | None = None,
                       tol: float = 1e-10) -> float:
    """Large-transmit-power floor of legacy_worst."""
    dc0 = derive_constants(scn.system, scn.legacy, scn.links[0])
    if dc0.gamma_th == 0.0:
        return 0.0
    m = scn.system.gc_order if order is None else order
    return 1.0 - _floor_laplace(scn, _floor_cdf_gmax, method=method, order=m, tol=tol)


def outage_capacity(rate: float, outage: float) -> float:
    """Effective throughput in bit/s at a target rate under a given outage."""
    if not (rate >= 0.0 and math.isfinite(rate)):
        raise ValueError(f"outage_capacity requires rate >= 0, got {rate!r}")
    return rate * (1.0 - as_probability(outage, "outage"))
