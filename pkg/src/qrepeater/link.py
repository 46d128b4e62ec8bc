"""Per-hop physical link parameters and signal latency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import BellState, make_dephased, make_werner
from .errors import ConfigError, DomainError

SPEED_OF_LIGHT_KM_S = 299792.458
DEFAULT_LOSS_DB_PER_KM = 0.17
DEFAULT_SPEED_FRACTION = 0.7

# hop length (km) -> (success probability per attempt, base-pair fidelity)
_LINK_TABLE = {
    10.0: (0.40, 0.77),
    20.0: (0.38, 0.638),
}

STATE_MODELS = {"dephased": make_dephased, "werner": make_werner}
OVERRIDE_KEYS = frozenset({"p_success", "base_fidelity", "state_model"})


def default_link_table() -> dict[float, tuple[float, float]]:
    return dict(_LINK_TABLE)


def _interpolate(length_km: float) -> tuple[float, float]:
    lengths = sorted(_LINK_TABLE)
    if not lengths[0] <= length_km <= lengths[-1]:
        raise ConfigError(
            f"no link data for {length_km} km (table covers {lengths[0]}-{lengths[-1]} km); "
            "set both p_success and base_fidelity in link_overrides"
        )
    ps = [_LINK_TABLE[x][0] for x in lengths]
    fs = [_LINK_TABLE[x][1] for x in lengths]
    return float(np.interp(length_km, lengths, ps)), float(np.interp(length_km, lengths, fs))


@dataclass(frozen=True)
class LinkParams:
    length_km: float
    loss_db_per_km: float
    speed_fraction: float
    p_success: float
    base_state: BellState

    def __post_init__(self):
        if self.length_km <= 0:
            raise ConfigError(f"link length must be positive, got {self.length_km}")
        if not 0 < self.speed_fraction <= 1:
            raise ConfigError(f"speed_fraction must lie in (0, 1], got {self.speed_fraction}")
        if not 0 <= self.p_success <= 1:
            raise ConfigError(f"p_success must lie in [0, 1], got {self.p_success}")
        if self.base_state.a <= 0.5:
            raise ConfigError(
                f"base fidelity {self.base_state.a} does not exceed 0.5; link carries no usable entanglement"
            )

    @property
    def base_fidelity(self) -> float:
        return self.base_state.a

    @property
    def one_way_latency(self) -> float:
        return one_way_latency(self.length_km, self.speed_fraction)


def link_params(
    length_km: float,
    overrides: dict | None = None,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    speed_fraction: float = DEFAULT_SPEED_FRACTION,
) -> LinkParams:
    """Resolve the link model for one hop.

    Without overrides only lengths inside the table range are accepted and
    points between the tabulated lengths are linearly interpolated.  Giving
    both ``p_success`` and ``base_fidelity`` lifts the length restriction.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - OVERRIDE_KEYS
    if unknown:
        raise ConfigError(f"unknown link override(s): {sorted(unknown)}")
    model = overrides.get("state_model", "dephased")
    if model not in STATE_MODELS:
        raise ConfigError(f"state_model must be one of {sorted(STATE_MODELS)}, got {model!r}")

    length_km = float(length_km)
    if "p_success" in overrides and "base_fidelity" in overrides:
        p, f = float(overrides["p_success"]), float(overrides["base_fidelity"])
    else:
        p, f = _interpolate(length_km)
        p = float(overrides.get("p_success", p))
        f = float(overrides.get("base_fidelity", f))
    try:
        state = STATE_MODELS[model](f)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return LinkParams(length_km, float(loss_db_per_km), float(speed_fraction), p, state)


def one_way_latency(length_km: float, speed_fraction: float) -> float:
    """Fibre propagation delay in seconds."""
    if length_km <= 0 or speed_fraction <= 0:
        raise DomainError("length and speed fraction must be positive")
    return length_km / (speed_fraction * SPEED_OF_LIGHT_KM_S)
