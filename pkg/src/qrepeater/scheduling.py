"""Purification pair-selection policies and configuration checks."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import ConfigError

GREEDY_TOP_DOWN = "greedy_top_down"
GREEDY_BOTTOM_UP = "greedy_bottom_up"
PUMPING = "pumping"
SYMMETRIC = "symmetric"
BANDED = "banded"
SCHEDULER_KINDS = (GREEDY_TOP_DOWN, GREEDY_BOTTOM_UP, PUMPING, SYMMETRIC, BANDED)

DEFAULT_SYMMETRIC_TOLERANCE = 1e-6


@dataclass(frozen=True)
class BandConfig:
    """Band boundaries; ``n`` boundaries make ``n + 1`` bands over (0.5, 1]."""

    boundaries: tuple[float, ...] = ()

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        for x in b:
            if not 0.5 < x < 1.0:
                raise ConfigError(f"band boundary {x} outside (0.5, 1.0)")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ConfigError(f"band boundaries must be strictly ascending, got {list(b)}")

    @property
    def num_bands(self) -> int:
        return len(self.boundaries) + 1

    def band_of(self, fidelity: float) -> int:
        # A fidelity equal to a boundary belongs to the band above it.
        return bisect.bisect_right(self.boundaries, fidelity)


@dataclass(frozen=True)
class SchedulerKind:
    kind: str
    bands: BandConfig | None = None
    tolerance: float = DEFAULT_SYMMETRIC_TOLERANCE

    def __post_init__(self):
        if self.kind not in SCHEDULER_KINDS:
            raise ConfigError(f"unknown scheduler {self.kind!r}; expected one of {list(SCHEDULER_KINDS)}")
        if self.kind == BANDED and self.bands is None:
            raise ConfigError("banded scheduler requires a band configuration")
        if self.kind == SYMMETRIC and not self.tolerance >= 0:
            raise ConfigError("symmetric scheduler requires a non-negative match tolerance")

    @classmethod
    def banded(cls, boundaries: Sequence[float]) -> "SchedulerKind":
        return cls(BANDED, bands=BandConfig(tuple(boundaries)))

    @property
    def num_bands(self) -> int:
        return self.bands.num_bands if self.kind == BANDED else 1

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == BANDED:
            d["boundaries"] = list(self.bands.boundaries)
        if self.kind == SYMMETRIC:
            d["tolerance"] = self.tolerance
        return d


def _adjacent(ordered):
    return [(ordered[i][0], ordered[i + 1][0]) for i in range(0, len(ordered) - 1, 2)]


def select_pairs(candidates, kind: SchedulerKind) -> list[tuple[int, int]]:
    """Choose disjoint pairs of pair ids to purify together.

    ``candidates`` is a sequence of ``(pair_id, fidelity)``.  Ties in
    fidelity are broken by pair id, so the result does not depend on the
    order of the input.
    """
    if len(candidates) < 2:
        return []
    k = kind.kind
    if k == GREEDY_BOTTOM_UP:
        return _adjacent(sorted(candidates, key=_ascending))
    if k == GREEDY_TOP_DOWN:
        return _adjacent(sorted(candidates, key=_descending))
    if k == BANDED:
        bands: dict[int, list] = {}
        for c in candidates:
            bands.setdefault(kind.bands.band_of(c[1]), []).append(c)
        out = []
        for band in sorted(bands):
            out.extend(_adjacent(sorted(bands[band], key=_ascending)))
        return out
    if k == PUMPING:
        ordered = sorted(candidates, key=_ascending)
        return [(ordered[-1][0], ordered[0][0])]
    if k == SYMMETRIC:
        ordered = sorted(candidates, key=_ascending)
        out = []
        i = 0
        while i < len(ordered) - 1:
            if ordered[i + 1][1] - ordered[i][1] <= kind.tolerance:
                out.append((ordered[i][0], ordered[i + 1][0]))
                i += 2
            else:
                i += 1
        return out
    raise ConfigError(f"unknown scheduler {k!r}")


def _ascending(c):
    return (c[1], c[0])


def _descending(c):
    return (-c[1], c[0])


def min_qubits_required(num_bands: int, num_levels: int) -> int:
    """Smallest half-station register that cannot deadlock.

    Every distance scale can strand one unpaired pair per band; one more
    qubit keeps physical entanglement going.
    """
    if num_bands < 1 or num_levels < 1:
        raise ValueError("num_bands and num_levels must be positive")
    return num_bands * num_levels + 1


def max_feasible_bands(qubits_per_half: int, num_levels: int) -> int:
    return max(0, (qubits_per_half - 1) // num_levels)


class Violation(NamedTuple):
    code: str
    message: str
    fatal: bool = True

    def __str__(self):
        return f"{'error' if self.fatal else 'warning'}[{self.code}]: {self.message}"


def is_power_of_two(n: int) -> bool:
    return isinstance(n, int) and n > 0 and n & (n - 1) == 0


def validate_config(config) -> list[Violation]:
    """Collect every problem with ``config``; never raises.

    Non-fatal entries are warnings (e.g. a band boundary above the delivery
    target, which merely makes the top band unreachable).
    """
    out: list[Violation] = []
    hops = getattr(config, "hops", None)
    if not is_power_of_two(hops):
        out.append(Violation("hops", f"hop count {hops} is not a power of two"))
        levels = None
    else:
        levels = hops.bit_length()  # log2(hops) + 1 distance scales

    q = getattr(config, "qubits_per_station", 0)
    if not isinstance(q, int) or q < 2 or q % 2:
        out.append(Violation("qubits", f"qubits_per_station must be a positive even integer, got {q}"))
        q = None
    half = None if q is None else (q if hops == 1 else q // 2)

    sched = config.scheduler
    if levels is not None and half is not None:
        need = min_qubits_required(sched.num_bands, levels)
        if half < need:
            out.append(
                Violation(
                    "deadlock",
                    f"{half} qubits per half-station < {need} required for "
                    f"{sched.num_bands} band(s) x {levels} level(s) + 1",
                )
            )

    target = config.target_fidelity
    if not 0.5 < target <= 1.0:
        out.append(Violation("target", f"target fidelity {target} outside (0.5, 1]"))
    thresholds = config.thresholds
    if levels is not None:
        if len(thresholds) != levels:
            out.append(
                Violation("thresholds", f"{len(thresholds)} thresholds given, {levels} levels needed")
            )
        elif thresholds[-1] != target:
            out.append(
                Violation("thresholds", f"top-level threshold {thresholds[-1]} differs from target {target}")
            )
    for i, t in enumerate(thresholds):
        if not 0.5 < t <= 1.0:
            out.append(Violation("thresholds", f"threshold for level {i} is {t}, outside (0.5, 1]"))

    if sched.kind == BANDED:
        for b in sched.bands.boundaries:
            if b > target:
                out.append(
                    Violation("bands", f"band boundary {b} lies above the delivery target {target}", fatal=False)
                )

    if config.target_pairs < 1:
        out.append(Violation("target_pairs", "target_pairs must be at least 1"))
    if not 0.0 <= config.gate_error <= 1.0:
        out.append(Violation("gate_error", f"gate_error {config.gate_error} outside [0, 1]"))
    if config.max_sim_time <= 0:
        out.append(Violation("max_sim_time", "max_sim_time must be positive"))

    from .link import link_params

    try:
        link = link_params(
            config.link_length_km, config.link_overrides, config.loss_db_per_km, config.speed_fraction
        )
    except (ConfigError, ValueError) as exc:
        out.append(Violation("link", str(exc)))
    else:
        if sched.kind == BANDED and sched.bands.boundaries and sched.bands.boundaries[-1] < link.base_fidelity:
            out.append(
                Violation(
                    "bands",
                    f"all band boundaries lie below the base fidelity {link.base_fidelity}",
                    fatal=False,
                )
            )
    return out


def fatal(violations) -> list[Violation]:
    return [v for v in violations if v.fatal]
