"""Simulation configuration and its TOML representation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, ParseError
from .link import DEFAULT_LOSS_DB_PER_KM, DEFAULT_SPEED_FRACTION, OVERRIDE_KEYS
from .scheduling import BANDED, SYMMETRIC, BandConfig, SchedulerKind, is_power_of_two

REQUIRED = ("hops", "qubits_per_station", "scheduler")


@dataclass(frozen=True)
class SimConfig:
    hops: int
    qubits_per_station: int
    scheduler: SchedulerKind
    link_length_km: float = 20.0
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM
    speed_fraction: float = DEFAULT_SPEED_FRACTION
    thresholds: tuple[float, ...] | None = None
    target_fidelity: float = 0.98
    target_pairs: int = 200
    gate_error: float = 0.0
    seed: int = 0
    max_sim_time: float = 60.0
    link_overrides: dict = field(default_factory=dict)
    stall_slots: int | None = None

    def __post_init__(self):
        if self.thresholds is None:
            levels = self.hops.bit_length() if is_power_of_two(self.hops) else 1
            object.__setattr__(self, "thresholds", (self.target_fidelity,) * levels)
        else:
            object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "link_overrides", dict(self.link_overrides or {}))

    @property
    def num_levels(self) -> int:
        return self.hops.bit_length()

    @property
    def qubits_per_half(self) -> int:
        return self.qubits_per_station if self.hops == 1 else self.qubits_per_station // 2

    def replace(self, **changes) -> "SimConfig":
        if "hops" in changes and "thresholds" not in changes:
            # keep a uniform schedule uniform when the line length changes
            levels = changes["hops"].bit_length()
            if len(set(self.thresholds)) == 1:
                changes["thresholds"] = (self.thresholds[0],) * levels
        if "target_fidelity" in changes and "thresholds" not in changes:
            t = changes["target_fidelity"]
            changes["thresholds"] = tuple(self.thresholds[:-1]) + (t,)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["scheduler"] = self.scheduler.to_dict()
        d["thresholds"] = list(self.thresholds)
        d["link_overrides"] = dict(self.link_overrides)
        if d["stall_slots"] is None:
            del d["stall_slots"]
        return d


_INT_FIELDS = {"hops", "qubits_per_station", "target_pairs", "seed", "stall_slots"}
_FLOAT_FIELDS = {
    "link_length_km",
    "loss_db_per_km",
    "speed_fraction",
    "target_fidelity",
    "gate_error",
    "max_sim_time",
}
_KNOWN = {f.name for f in dataclasses.fields(SimConfig)}


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(key, f"expected an integer, got {type(v).__name__} {v!r}")
    return v


def _as_float(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(key, f"expected a number, got {type(v).__name__} {v!r}")
    return float(v)


def _float_list(key, v):
    if not isinstance(v, (list, tuple)):
        raise ParseError(key, f"expected a list of numbers, got {type(v).__name__}")
    return tuple(_as_float(f"{key}[{i}]", x) for i, x in enumerate(v))


def parse_scheduler(value, key="scheduler") -> SchedulerKind:
    if isinstance(value, str):
        table = {"kind": value}
    elif isinstance(value, dict):
        table = dict(value)
    else:
        raise ParseError(key, f"expected a scheduler name or table, got {type(value).__name__}")
    unknown = set(table) - {"kind", "boundaries", "tolerance"}
    if unknown:
        raise ParseError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    if "kind" not in table:
        raise ParseError(f"{key}.kind", "missing required field")
    kind = table["kind"]
    if not isinstance(kind, str):
        raise ParseError(f"{key}.kind", "expected a string")
    try:
        if kind == BANDED:
            bounds = _float_list(f"{key}.boundaries", table.get("boundaries", []))
            return SchedulerKind(BANDED, bands=BandConfig(bounds))
        if "boundaries" in table:
            raise ParseError(f"{key}.boundaries", f"only valid for the banded scheduler, not {kind!r}")
        if kind == SYMMETRIC and "tolerance" in table:
            return SchedulerKind(SYMMETRIC, tolerance=_as_float(f"{key}.tolerance", table["tolerance"]))
        if "tolerance" in table:
            raise ParseError(f"{key}.tolerance", f"only valid for the symmetric scheduler, not {kind!r}")
        return SchedulerKind(kind)
    except ParseError:
        raise
    except ConfigError as exc:
        raise ParseError(key, str(exc)) from None


def config_from_dict(doc: dict[str, Any], prefix: str = "") -> SimConfig:
    """Build a SimConfig from a parsed document, applying defaults."""
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        raise ParseError(prefix + unknown[0], "unknown key")
    for key in REQUIRED:
        if key not in doc:
            raise ParseError(prefix + key, "missing required field")
    kwargs: dict[str, Any] = {}
    for key, value in doc.items():
        path = prefix + key
        if key in _INT_FIELDS:
            kwargs[key] = _as_int(path, value)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = _as_float(path, value)
        elif key == "thresholds":
            kwargs[key] = _float_list(path, value)
        elif key == "scheduler":
            kwargs[key] = parse_scheduler(value, path)
        elif key == "link_overrides":
            if not isinstance(value, dict):
                raise ParseError(path, "expected a table")
            bad = sorted(set(value) - OVERRIDE_KEYS)
            if bad:
                raise ParseError(f"{path}.{bad[0]}", "unknown key")
            ov = {}
            for k, v in value.items():
                if k == "state_model":
                    if not isinstance(v, str):
                        raise ParseError(f"{path}.{k}", "expected a string")
                    ov[k] = v
                else:
                    ov[k] = _as_float(f"{path}.{k}", v)
            kwargs[key] = ov
    if kwargs.get("seed", 0) < 0:
        raise ParseError(prefix + "seed", "must be non-negative")
    return SimConfig(**kwargs)


def parse_config(text: str) -> SimConfig:
    """Parse a TOML configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError("", f"malformed document: {exc}") from None
    return config_from_dict(doc)


def load_config(path) -> SimConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode()
    return parse_config(text)
