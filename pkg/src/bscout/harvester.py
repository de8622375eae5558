"""Energy-harvesting model of the backscatter device.

The harvester maps RF input power to usable DC power through a saturating
logistic curve (or an idealized linear one for comparison). The quantity the
outage analysis actually needs is the inverse: the minimum RF input that keeps
the device's circuitry alive, which in turn fixes the reflection coefficient
the device must hold back from modulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InfeasibleError(ValueError):
    """The harvester cannot meet the circuit power draw at any input power."""


@dataclass(frozen=True)
class EhParams:
    """Harvester transfer-curve parameters.

    e_max is the saturation DC output in watts; s1 controls the slope, s0 the
    turn-on offset and s2 the logistic midpoint (both in watts). mode selects
    the saturating curve ("nonlinear") or a fixed-efficiency idealization
    ("linear") with conversion efficiency linear_efficiency.
    """

    e_max: float = 240e-6
    s0: float = 0.0
    s1: float = 5000.0
    s2: float = 2e-4
    mode: str = "nonlinear"
    linear_efficiency: float = 0.8

    def __post_init__(self) -> None:
        if self.mode not in ("nonlinear", "linear"):
            raise ValueError(f"eh mode must be 'nonlinear' or 'linear', got {self.mode!r}")
        if not (self.e_max > 0.0 and math.isfinite(self.e_max)):
            raise ValueError(f"e_max must be positive and finite, got {self.e_max!r}")
        if not (self.s1 > 0.0 and math.isfinite(self.s1)):
            raise ValueError(f"s1 must be positive and finite, got {self.s1!r}")
        if not (0.0 < self.linear_efficiency <= 1.0):
            raise ValueError(
                f"linear_efficiency must lie in (0, 1], got {self.linear_efficiency!r}"
            )


def harvested_power(p_in, eh: EhParams):
    """DC power harvested from RF input p_in (watts). Accepts scalars or arrays."""
    arr = np.asarray(p_in, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("harvested_power requires finite p_in >= 0")
    if eh.mode == "linear":
        out = eh.linear_efficiency * arr
    else:
        u = -eh.s1 * arr
        out = eh.e_max * (1.0 - np.exp(u + eh.s1 * eh.s0)) / (1.0 + np.exp(u + eh.s1 * eh.s2))
    if np.isscalar(p_in) or arr.ndim == 0:
        return float(out)
    return out


def min_input_power(p_circuit: float, eh: EhParams) -> float:
    """Smallest RF input power whose harvest covers p_circuit (exact inverse).

    Raises InfeasibleError when the demand is at or above the saturation
    output, where no finite input suffices.
    """
    if not (p_circuit > 0.0 and math.isfinite(p_circuit)):
        raise ValueError(f"min_input_power requires p_circuit > 0, got {p_circuit!r}")
    if eh.mode == "linear":
        return p_circuit / eh.linear_efficiency
    if p_circuit >= eh.e_max:
        raise InfeasibleError(
            f"circuit power {p_circuit:.3e} W is not reachable: harvester saturates "
            f"at {eh.e_max:.3e} W"
        )
    num = eh.e_max * math.exp(eh.s1 * eh.s0) + p_circuit * math.exp(eh.s1 * eh.s2)
    return math.log(num / (eh.e_max - p_circuit)) / eh.s1


def optimal_rc(p_received: float, p_circuit: float, eh: EhParams):
    """Power-splitting reflection coefficient that just sustains the circuit.

    Routes the minimum viable fraction of the received RF power into the
    harvester and leaves the rest for backscatter modulation; saturates at 1
    when even full absorption cannot meet the demand. Accepts scalar or array
    p_received.
    """
    phi = min_input_power(p_circuit, eh)
    arr = np.asarray(p_received, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("optimal_rc requires finite p_received >= 0")
    with np.errstate(divide="ignore"):
        beta = np.minimum(phi / arr, 1.0)
    if np.isscalar(p_received) or arr.ndim == 0:
        return float(beta)
    return beta
