"""Scenario description: system parameters, link geometry, derived constants.

A scenario bundles one legacy transmitter-receiver pair with K backscatter
devices that parasitize its carrier. Everything downstream (closed forms and
the Monte Carlo estimators) consumes the same DerivedConstants record, so the
two can only disagree through math, never through bookkeeping.

Configs are TOML. Quantities that engineers quote in log units may be given
as strings with an explicit unit ("20 dBm", "6 dBi", "-1.1 dB",
"-120 dBm/Hz"); bare numbers are always linear SI (watts, W/Hz, ratios).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

try:
    import tomllib
except ModuleNotFoundError:  # py3.10
    import tomli as tomllib

from .harvester import EhParams, min_input_power

SPEED_OF_LIGHT = 299792458.0


class ConfigError(ValueError):
    """A scenario config failed validation; the message names the offender."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ValueError(f"watts_to_dbm requires watts > 0, got {watts!r}")
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


_QTY_RE = re.compile(r"^\s*([-+]?[0-9.][0-9.eE+-]*)\s*(dBm/Hz|dBm|dBi|dB)\s*$")

# unit tag -> (expected suffix, converter to linear)
_UNIT_CONVERTERS = {
    "power": ("dBm", dbm_to_watts),
    "psd": ("dBm/Hz", lambda v: dbm_to_watts(v)),
    "gain": ("dBi", db_to_linear),
    "ratio": ("dB", db_to_linear),
}


def _parse_quantity(value, kind: str, where: str) -> float:
    suffix, conv = _UNIT_CONVERTERS[kind]
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or '{suffix}' string, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _QTY_RE.match(value)
        if not m or m.group(2) != suffix:
            raise ConfigError(
                f"{where}: cannot parse {value!r}; expected e.g. '3.0 {suffix}' "
                f"or a bare linear number"
            )
        try:
            return conv(float(m.group(1)))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a number or '{suffix}' string, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Shared radio parameters.

    Powers in watts, frequencies in Hz, rates in bit/s, gains linear.
    gc_order, trials and seed ride along so a scenario file pins down the
    whole experiment, not just the physics.
    """

    transmit_power: float = dbm_to_watts(20.0)
    noise_power: float = dbm_to_watts(-120.0) * 1e6
    bandwidth: float = 1e6
    slot_duration: float = 1.0
    path_loss_exponent: float = 2.7
    carrier_frequency: float = 915e6
    gain_lt: float = db_to_linear(6.0)
    gain_bd: float = db_to_linear(1.8)
    gain_br: float = db_to_linear(6.0)
    gain_lr: float = db_to_linear(6.0)
    legacy_rate: float = 10e6
    backscatter_rate: float = 1e3
    gc_order: int = 10
    trials: int = 1_000_000
    seed: int = 20260819

    def __post_init__(self) -> None:
        for name in ("transmit_power", "bandwidth", "slot_duration", "carrier_frequency",
                     "gain_lt", "gain_bd", "gain_br", "gain_lr"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not (self.noise_power >= 0.0 and math.isfinite(self.noise_power)):
            raise ValueError(f"noise_power must be >= 0, got {self.noise_power!r}")
        if not (self.path_loss_exponent > 0.0):
            raise ValueError(f"path_loss_exponent must be > 0, got {self.path_loss_exponent!r}")
        for name in ("legacy_rate", "backscatter_rate"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be >= 0, got {v!r}")
        if not (isinstance(self.gc_order, int) and self.gc_order >= 1):
            raise ValueError(f"gc_order must be a positive integer, got {self.gc_order!r}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


@dataclass(frozen=True)
class LegacyLink:
    """Direct transmitter-to-receiver link the backscatter devices ride on."""

    distance: float = 10.0
    fading_mean: float = 1.0

    def __post_init__(self) -> None:
        if not (self.distance > 0.0 and math.isfinite(self.distance)):
            raise ValueError(f"legacy distance must be > 0, got {self.distance!r}")
        if not (self.fading_mean > 0.0 and math.isfinite(self.fading_mean)):
            raise ValueError(f"legacy fading_mean must be > 0, got {self.fading_mean!r}")


@dataclass(frozen=True)
class BackscatterLink:
    """One backscatter device and its four propagation paths.

    Distances in meters: lt_bd feeds the device, bd_br carries its data,
    lt_br is the direct-link interference into the backscatter receiver and
    bd_lr the backscatter interference into the legacy receiver. fading_*
    are the matching exponential channel-power means; efficiency is the
    backscatter (tag reflection) efficiency, linear.
    """

    d_lt_bd: float
    d_bd_br: float
    d_lt_br: float
    d_bd_lr: float
    fading_lt_bd: float = 1.0
    fading_bd_br: float = 1.0
    fading_lt_br: float = 1.0
    fading_bd_lr: float = 1.0
    efficiency: float = db_to_linear(-1.1)
    circuit_power: float = 8.9e-6
    eh: EhParams = field(default_factory=EhParams)

    def __post_init__(self) -> None:
        for name in ("d_lt_bd", "d_bd_br", "d_lt_br", "d_bd_lr",
                     "fading_lt_bd", "fading_bd_br", "fading_lt_br", "fading_bd_lr",
                     "circuit_power"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency!r}")


class Scenario(NamedTuple):
    system: SystemParams
    legacy: LegacyLink
    links: tuple[BackscatterLink, ...]


@dataclass(frozen=True)
class DerivedConstants:
    """Everything the outage formulas need for one backscatter link.

    pg_* are Friis path gains for the five paths in play. sig_scale and
    sig_offset enter the conditional backscatter signal power
    sig_scale*h1^2*h2^2 - sig_offset*h2^2 (the offset is the harvest tax);
    int_scale/int_offset are the same toward the legacy receiver. mu_sig and
    mu_int are the means of the corresponding shifted exponential products.
    int_to_sig_br and sig_to_int_lr are the transmit-power-free ratios that
    set the interference floors at the backscatter and legacy receivers.
    """

    pg_lt_bd: float
    pg_bd_br: float
    pg_lt_br: float
    pg_bd_lr: float
    pg_lt_lr: float
    gamma_th: float
    gamma_th_b: float
    phi: float
    energy_threshold: float
    p_active: float
    sig_scale: float
    sig_offset: float
    int_scale: float
    int_offset: float
    mu_sig: float
    mu_int: float
    br_interference_scale: float
    int_to_sig_br: float
    sig_to_int_lr: float


def friis_constant(gain_tx: float, gain_rx: float, distance: float,
                   frequency: float, path_loss_exponent: float) -> float:
    """Distance-dependent path gain: Gt*Gr*(c/(4 pi f))^2 * d^-alpha (1 m reference)."""
    for name, v in (("gain_tx", gain_tx), ("gain_rx", gain_rx), ("distance", distance),
                    ("frequency", frequency), ("path_loss_exponent", path_loss_exponent)):
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ValueError(f"friis_constant: {name} must be positive and finite, got {v!r}")
    wavelength_term = SPEED_OF_LIGHT / (4.0 * math.pi * frequency)
    return gain_tx * gain_rx * wavelength_term * wavelength_term * distance ** (-path_loss_exponent)


def threshold_from_rate(rate: float, bandwidth: float) -> float:
    """SINR threshold for outage at a target rate over a given bandwidth."""
    if not (rate >= 0.0 and math.isfinite(rate)):
        raise ValueError(f"threshold_from_rate: rate must be >= 0, got {rate!r}")
    if not (bandwidth > 0.0 and math.isfinite(bandwidth)):
        raise ValueError(f"threshold_from_rate: bandwidth must be > 0, got {bandwidth!r}")
    return 2.0 ** (rate / bandwidth) - 1.0


def derive_constants(system: SystemParams, legacy: LegacyLink,
                     link: BackscatterLink) -> DerivedConstants:
    """Collapse a scenario into the constants the closed forms are written in."""
    alpha = system.path_loss_exponent
    f = system.carrier_frequency
    pg_lt_bd = friis_constant(system.gain_lt, system.gain_bd, link.d_lt_bd, f, alpha)
    pg_bd_br = friis_constant(system.gain_bd, system.gain_br, link.d_bd_br, f, alpha)
    pg_lt_br = friis_constant(system.gain_lt, system.gain_br, link.d_lt_br, f, alpha)
    pg_bd_lr = friis_constant(system.gain_bd, system.gain_lr, link.d_bd_lr, f, alpha)
    pg_lt_lr = friis_constant(system.gain_lt, system.gain_lr, legacy.distance, f, alpha)

    gamma_th = threshold_from_rate(system.legacy_rate, system.bandwidth)
    gamma_th_b = threshold_from_rate(system.backscatter_rate, system.bandwidth)

    phi = min_input_power(link.circuit_power, link.eh)
    pt = system.transmit_power
    energy_threshold = phi / (pt * pg_lt_bd)
    p_active = math.exp(-energy_threshold / link.fading_lt_bd)

    eta = link.efficiency
    sig_scale = eta * pt * pg_lt_bd * pg_bd_br
    sig_offset = eta * pg_bd_br * phi
    int_scale = eta * pt * pg_lt_bd * pg_bd_lr
    int_offset = eta * pg_bd_lr * phi
    mu_sig = link.fading_lt_bd * link.fading_bd_br * sig_scale
    mu_int = link.fading_lt_bd * link.fading_bd_lr * int_scale
    br_interference_scale = pt * pg_lt_br * link.fading_lt_br

    int_to_sig_br = br_interference_scale / mu_sig
    sig_to_int_lr = math.inf if gamma_th == 0.0 else (
        pt * pg_lt_lr * legacy.fading_mean / (gamma_th * mu_int)
    )

    return DerivedConstants(
        pg_lt_bd=pg_lt_bd, pg_bd_br=pg_bd_br, pg_lt_br=pg_lt_br,
        pg_bd_lr=pg_bd_lr, pg_lt_lr=pg_lt_lr,
        gamma_th=gamma_th, gamma_th_b=gamma_th_b,
        phi=phi, energy_threshold=energy_threshold, p_active=p_active,
        sig_scale=sig_scale, sig_offset=sig_offset,
        int_scale=int_scale, int_offset=int_offset,
        mu_sig=mu_sig, mu_int=mu_int,
        br_interference_scale=br_interference_scale,
        int_to_sig_br=int_to_sig_br, sig_to_int_lr=sig_to_int_lr,
    )


class CirclePlacement(NamedTuple):
    d_lt_bd: float
    d_bd_br: float
    d_lt_br: float
    d_bd_lr: float


def circle_geometry(theta: float, radius: float, br_offset: float = 4.0,
                    lr_distance: float = 10.0) -> CirclePlacement:
    """Distances when the device sits at angle theta on a circle around the transmitter.

    Layout: legacy transmitter at the origin, legacy receiver on the positive
    x axis at lr_distance, backscatter receiver straight down at br_offset.
    theta = 0 points at the legacy receiver and grows counterclockwise.
    Degenerate placements (device on top of a receiver) are rejected.
    """
    if not (math.isfinite(theta)):
        raise ValueError(f"circle_geometry: theta must be finite, got {theta!r}")
    for name, v in (("radius", radius), ("br_offset", br_offset), ("lr_distance", lr_distance)):
        if not (v > 0.0 and math.isfinite(v)):
            raise ValueError(f"circle_geometry: {name} must be > 0, got {v!r}")
    x = radius * math.cos(theta)
    y = radius * math.sin(theta)
    d_bd_br = math.hypot(x, y + br_offset)
    d_bd_lr = math.hypot(x - lr_distance, y)
    if d_bd_br <= 0.0 or d_bd_lr <= 0.0:
        raise ValueError(
            f"circle_geometry: device placement theta={theta}, radius={radius} "
            f"coincides with a receiver"
        )
    return CirclePlacement(d_lt_bd=radius, d_bd_br=d_bd_br,
                           d_lt_br=br_offset, d_bd_lr=d_bd_lr)


_SYSTEM_KEYS = {
    "transmit_power": ("power",), "noise_psd": ("psd",), "noise_power": ("power",),
    "bandwidth": None, "slot_duration": None, "path_loss_exponent": None,
    "carrier_frequency": None, "gain_lt": ("gain",), "gain_bd": ("gain",),
    "gain_br": ("gain",), "gain_lr": ("gain",), "legacy_rate": None,
    "backscatter_rate": None, "gc_order": None, "trials": None, "seed": None,
}
_LEGACY_KEYS = {"distance": None, "fading_mean": None}
_EH_KEYS = {"e_max": ("power",), "s0": None, "s1": None, "s2": None,
            "mode": None, "linear_efficiency": None}
_LINK_KEYS = {
    "d_lt_bd": None, "d_bd_br": None, "d_lt_br": None, "d_bd_lr": None,
    "fading_lt_bd": None, "fading_bd_br": None, "fading_lt_br": None,
    "fading_bd_lr": None, "efficiency": ("ratio",), "circuit_power": ("power",),
}


def _check_keys(table: dict, allowed: dict, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _coerce(table: dict, key: str, units, where: str):
    v = table[key]
    if units is not None:
        return _parse_quantity(v, units[0], f"{where}.{key}")
    return v


def default_config_path() -> Path:
    """Path of the bundled default scenario (three devices, nonlinear harvester)."""
    return Path(resources.files("bscout").joinpath("data/default.cfg"))


def load_config(path: str | Path | None = None) -> Scenario:
    """Load a TOML scenario config; None loads the bundled default.

    Missing tables and keys fall back to the defaults baked into the dataclasses
    (which match the bundled config's system block). At least one [[link]] table
    is required. Raises ConfigError with the offending key path on any problem.
    """
    cfg_path = Path(path) if path is not None else default_config_path()
    try:
        text = cfg_path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{cfg_path}: TOML parse error: {exc}") from exc

    _check_keys(data, {"system": None, "legacy": None, "eh": None, "link": None}, str(cfg_path))

    sys_tbl = data.get("system", {})
    if not isinstance(sys_tbl, dict):
        raise ConfigError("system: expected a table")
    _check_keys(sys_tbl, _SYSTEM_KEYS, "system")
    if "noise_psd" in sys_tbl and "noise_power" in sys_tbl:
        raise ConfigError("system: give noise_psd or noise_power, not both")
    sys_kwargs = {}
    for key, units in _SYSTEM_KEYS.items():
        if key in sys_tbl and key not in ("noise_psd",):
            sys_kwargs[key] = _coerce(sys_tbl, key, units, "system")
    bandwidth = sys_kwargs.get("bandwidth", SystemParams.bandwidth)
    if "noise_psd" in sys_tbl:
        psd = _parse_quantity(sys_tbl["noise_psd"], "psd", "system.noise_psd")
        sys_kwargs["noise_power"] = psd * bandwidth
    try:
        system = SystemParams(**sys_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from exc

    leg_tbl = data.get("legacy", {})
    if not isinstance(leg_tbl, dict):
        raise ConfigError("legacy: expected a table")
    _check_keys(leg_tbl, _LEGACY_KEYS, "legacy")
    try:
        legacy = LegacyLink(**leg_tbl)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"legacy: {exc}") from exc

    eh_tbl = data.get("eh", {})
    if not isinstance(eh_tbl, dict):
        raise ConfigError("eh: expected a table")
    _check_keys(eh_tbl, _EH_KEYS, "eh")
    eh_kwargs = {k: _coerce(eh_tbl, k, _EH_KEYS[k], "eh") for k in eh_tbl}
    try:
        eh = EhParams(**eh_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"eh: {exc}") from exc

    link_tbls = data.get("link", [])
    if not isinstance(link_tbls, list) or not all(isinstance(t, dict) for t in link_tbls):
        raise ConfigError("link: expected an array of tables ([[link]])")
    if len(link_tbls) == 0:
        raise ConfigError("link: at least one backscatter link is required")
    links = []
    for i, tbl in enumerate(link_tbls):
        where = f"link[{i}]"
        _check_keys(tbl, _LINK_KEYS, where)
        for req in ("d_lt_bd", "d_bd_br", "d_lt_br", "d_bd_lr"):
            if req not in tbl:
                raise ConfigError(f"{where}: missing required key {req}")
        kwargs = {k: _coerce(tbl, k, _LINK_KEYS[k], where) for k in tbl}
        try:
            link = BackscatterLink(eh=eh, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if eh.mode == "nonlinear" and link.circuit_power >= eh.e_max:
            raise ConfigError(
                f"{where}: circuit_power {link.circuit_power:.3e} W is at or above "
                f"the harvester saturation e_max {eh.e_max:.3e} W"
            )
        links.append(link)

    return Scenario(system=system, legacy=legacy, links=tuple(links))
