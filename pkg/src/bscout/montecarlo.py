"""Monte Carlo estimators the closed forms are validated against.

The estimators simulate the physical story directly: draw channel powers,
run the harvester, apply the reflection coefficient, compare SINRs against
thresholds. No expression from analytic.py appears here, so agreement
between the two is evidence rather than tautology.

Reproducibility: trials are processed in fixed-size chunks; chunk i uses the
Philox stream jumped(i) from the scenario seed, and every estimator draws the
same channel tensor in the same order. Estimates are therefore bit-identical
for a given (seed, trials) regardless of which estimators run, and different
estimators see common random numbers, which makes paired comparisons (say,
RC schemes on fig3 grids) much sharper than independent sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .harvester import harvested_power
from .scenario import Scenario, derive_constants

_CHUNK = 1 << 18

# The adaptive scheme routes exactly the circuit draw into the harvester, so
# unclamped draws sit on the comparison boundary; a one-sided relative slack
# keeps ulp noise from flipping the energy indicator (bias O(1e-9)).
_ENERGY_SLACK = 1.0 - 1e-9


@dataclass(frozen=True)
class RcScheme:
    """Reflection-coefficient policy: 'adaptive', 'fixed' (constant beta) or
    'random' (uniform on [0, 1), independent of the channels)."""

    kind: str
    beta: float = math.nan

    def __post_init__(self) -> None:
        if self.kind not in ("adaptive", "fixed", "random"):
            raise ValueError(f"RcScheme kind must be adaptive/fixed/random, got {self.kind!r}")
        if self.kind == "fixed" and not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"fixed RcScheme requires beta in [0, 1], got {self.beta!r}")
        if self.kind != "fixed" and not math.isnan(self.beta):
            raise ValueError("beta is only meaningful for the fixed scheme")

    @classmethod
    def adaptive(cls) -> "RcScheme":
        return cls(kind="adaptive")

    @classmethod
    def fixed(cls, beta: float) -> "RcScheme":
        return cls(kind="fixed", beta=beta)

    @classmethod
    def random_uniform(cls) -> "RcScheme":
        return cls(kind="random")


@dataclass(frozen=True)
class ChannelDraw:
    """One batch of squared channel magnitudes, devices indexed along axis 0."""

    hp_sq: np.ndarray       # (n,)   legacy direct link
    h1_sq: np.ndarray       # (K, n) transmitter -> device
    h2_sq: np.ndarray       # (K, n) device -> backscatter receiver
    gp_sq: np.ndarray       # (K, n) transmitter -> backscatter receiver
    gs_sq: np.ndarray       # (K, n) device -> legacy receiver
    rc_uniform: np.ndarray  # (K, n) uniforms backing the random RC scheme


@dataclass(frozen=True)
class McEstimate:
    probability: float
    trials: int
    stderr: float


def draw_channels(rng: np.random.Generator, scn: Scenario, n: int) -> ChannelDraw:
    """Draw n independent slots of every channel power in a fixed order.

    The order (hp, h1, h2, gp, gs, uniforms) is part of the reproducibility
    contract; unit-mean exponentials are drawn first and scaled afterwards so
    the stream does not depend on the fading means.
    """
    if n < 1:
        raise ValueError(f"draw_channels requires n >= 1, got {n!r}")
    k = len(scn.links)
    m1 = np.array([link.fading_lt_bd for link in scn.links])[:, None]
    m2 = np.array([link.fading_bd_br for link in scn.links])[:, None]
    mp = np.array([link.fading_lt_br for link in scn.links])[:, None]
    ms = np.array([link.fading_bd_lr for link in scn.links])[:, None]
    hp = scn.legacy.fading_mean * rng.exponential(1.0, n)
    h1 = m1 * rng.exponential(1.0, (k, n))
    h2 = m2 * rng.exponential(1.0, (k, n))
    gp = mp * rng.exponential(1.0, (k, n))
    gs = ms * rng.exponential(1.0, (k, n))
    ru = rng.random((k, n))
    return ChannelDraw(hp_sq=hp, h1_sq=h1, h2_sq=h2, gp_sq=gp, gs_sq=gs, rc_uniform=ru)


def _resolve(scn: Scenario, trials: int | None, seed: int | None) -> tuple[int, int]:
    t = scn.system.trials if trials is None else trials
    s = scn.system.seed if seed is None else seed
    if t < 1:
        raise ValueError(f"trials must be >= 1, got {t!r}")
    if s < 0:
        raise ValueError(f"seed must be >= 0, got {s!r}")
    return t, s


def _estimate(scn: Scenario, flag_fn, trials: int, seed: int) -> McEstimate:
    count = 0
    done = 0
    chunk_index = 0
    while done < trials:
        size = min(_CHUNK, trials - done)
        rng = np.random.Generator(np.random.Philox(key=seed).jumped(chunk_index))
        draw = draw_channels(rng, scn, size)
        count += int(np.count_nonzero(flag_fn(draw)))
        done += size
        chunk_index += 1
    p = count / trials
    return McEstimate(probability=p, trials=trials,
                      stderr=math.sqrt(p * (1.0 - p) / trials))


def _beta_for(scheme: RcScheme, dc, received: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    if scheme.kind == "adaptive":
        with np.errstate(divide="ignore"):
            return np.minimum(dc.phi / received, 1.0)
    if scheme.kind == "fixed":
        return np.full_like(received, scheme.beta)
    return uniforms


def _bsc_state(scn: Scenario, k: int, scheme: RcScheme, draw: ChannelDraw):
    # returns (active, sinr) for backscatter link k under the given RC scheme
    sys_ = scn.system
    link = scn.links[k]
    dc = derive_constants(sys_, scn.legacy, link)
    received = sys_.transmit_power * dc.pg_lt_bd * draw.h1_sq[k]
    beta = _beta_for(scheme, dc, received, draw.rc_uniform[k])
    active = harvested_power(beta * received, link.eh) >= link.circuit_power * _ENERGY_SLACK
    signal = link.efficiency * (1.0 - beta) * received * dc.pg_bd_br * draw.h2_sq[k]
    interference = sys_.transmit_power * dc.pg_lt_br * draw.gp_sq[k]
    sinr = signal / (interference + sys_.noise_power)
    return active, sinr, dc


def estimate_backscatter_outage(scn: Scenario, k: int, scheme: RcScheme | None = None,
                                *, trials: int | None = None,
                                seed: int | None = None) -> McEstimate:
    """Empirical outage of backscatter link k (adaptive RC unless overridden)."""
    scheme = RcScheme.adaptive() if scheme is None else scheme
    trials, seed = _resolve(scn, trials, seed)

    def failed(draw: ChannelDraw) -> np.ndarray:
        active, sinr, dc = _bsc_state(scn, k, scheme, draw)
        return (~active) | (sinr < dc.gamma_th_b)

    return _estimate(scn, failed, trials, seed)


def estimate_backscatter_selection(scn: Scenario, mode: str, *,
                                   trials: int | None = None,
                                   seed: int | None = None) -> McEstimate:
    """Outage of the best or worst backscatter device under adaptive RC.

    Inactive devices count as zero SINR: the best-device receiver skips them,
    the worst-device one is stuck in outage.
    """
    if mode not in ("best", "worst"):
        raise ValueError(f"mode must be 'best' or 'worst', got {mode!r}")
    trials, seed = _resolve(scn, trials, seed)
    scheme = RcScheme.adaptive()

    def failed(draw: ChannelDraw) -> np.ndarray:
        rows = []
        gamma_b = None
        for k in range(len(scn.links)):
            active, sinr, dc = _bsc_state(scn, k, scheme, draw)
            rows.append(np.where(active, sinr, 0.0))
            gamma_b = dc.gamma_th_b
        stack = np.stack(rows)
        pick = stack.max(axis=0) if mode == "best" else stack.min(axis=0)
        return pick < gamma_b

    return _estimate(scn, failed, trials, seed)


def _interference_rows(scn: Scenario, draw: ChannelDraw):
    # adaptive-RC backscatter interference into the legacy receiver, 0 if inactive
    rows = []
    actives = []
    for k in range(len(scn.links)):
        sys_ = scn.system
        link = scn.links[k]
        dc = derive_constants(sys_, scn.legacy, link)
        received = sys_.transmit_power * dc.pg_lt_bd * draw.h1_sq[k]
        beta = _beta_for(RcScheme.adaptive(), dc, received, draw.rc_uniform[k])
        active = harvested_power(beta * received, link.eh) >= link.circuit_power * _ENERGY_SLACK
        g = link.efficiency * (1.0 - beta) * received * dc.pg_bd_lr * draw.gs_sq[k]
        rows.append(np.where(active, g, 0.0))
        actives.append(active)
    return np.stack(rows), np.stack(actives)


def estimate_legacy_outage(scn: Scenario, selection: int | str = "none", *,
                           trials: int | None = None,
                           seed: int | None = None) -> McEstimate:
    """Empirical legacy outage under a device schedule.

    selection 'none' silences all devices, an integer k activates device k
    alone, 'best' activates the least harmful device of each slot (an
    energy-starved one when available, else minimum interference) and 'worst'
    the most harmful one. Devices follow the adaptive RC scheme.
    """
    if not (selection in ("none", "best", "worst")
            or (isinstance(selection, int) and 0 <= selection < len(scn.links))):
        raise ValueError(f"selection must be 'none', 'best', 'worst' or a link index, "
                         f"got {selection!r}")
    trials, seed = _resolve(scn, trials, seed)
    dc0 = derive_constants(scn.system, scn.legacy, scn.links[0])
    gamma = dc0.gamma_th
    noise = scn.system.noise_power

    def failed(draw: ChannelDraw) -> np.ndarray:
        signal = scn.system.transmit_power * dc0.pg_lt_lr * draw.hp_sq
        if selection == "none":
            interference = 0.0
        else:
            rows, actives = _interference_rows(scn, draw)
            if selection == "best":
                some_idle = ~actives.all(axis=0)
                gmin = np.where(actives, rows, np.inf).min(axis=0)
                interference = np.where(some_idle, 0.0, gmin)
            elif selection == "worst":
                interference = rows.max(axis=0)
            else:
                interference = rows[selection]
        return signal / (interference + noise) < gamma

    return _estimate(scn, failed, trials, seed)


def estimate_outage_capacity(scn: Scenario, k: int, scheme: RcScheme | None = None,
                             *, trials: int | None = None,
                             seed: int | None = None) -> float:
    """Empirical effective throughput of backscatter link k in bit/s."""
    est = estimate_backscatter_outage(scn, k, scheme, trials=trials, seed=seed)
    return scn.system.backscatter_rate * (1.0 - est.probability)
