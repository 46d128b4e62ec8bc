"""Arrival logging, throughput regression and run summaries."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import InsufficientDataError


class Arrival(NamedTuple):
    time: float  # seconds
    fidelity: float


class ArrivalLog:
    """End-to-end deliveries in time order.

    Several pairs may complete in the same slot, so times are non-decreasing
    rather than strictly increasing.
    """

    def __init__(self, target_fidelity: float = 0.0):
        self.target_fidelity = target_fidelity
        self.entries: list[Arrival] = []

    def append(self, time: float, fidelity: float) -> None:
        if self.entries and time < self.entries[-1].time:
            raise ValueError(f"arrival at {time} precedes previous arrival {self.entries[-1].time}")
        if fidelity < self.target_fidelity:
            raise ValueError(f"fidelity {fidelity} below delivery target {self.target_fidelity}")
        self.entries.append(Arrival(float(time), float(fidelity)))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.entries], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "time_s", "fidelity"])
        for i, e in enumerate(self.entries, start=1):
            w.writerow([i, repr(e.time), repr(e.fidelity)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ArrivalLog":
        log = cls()
        for row in csv.DictReader(io.StringIO(text)):
            log.append(float(row["time_s"]), float(row["fidelity"]))
        return log


@dataclass(frozen=True)
class ThroughputFit:
    slope: float  # pairs per second
    slope_stderr: float
    r_squared: float
    startup_latency: float  # seconds until the first arrival
    intercept: float = 0.0
    n: int = 0


def fit_throughput(log) -> ThroughputFit:
    """Least-squares line of cumulative delivered count against arrival time."""
    times = log.times if isinstance(log, ArrivalLog) else np.asarray(log, dtype=float)
    n = times.size
    if n < 3:
        raise InsufficientDataError(f"need at least 3 arrivals to fit throughput, got {n}")
    if np.ptp(times) == 0.0:
        raise InsufficientDataError("all arrivals share one timestamp; slope is undefined")
    counts = np.arange(1, n + 1, dtype=float)
    res = stats.linregress(times, counts)
    return ThroughputFit(
        slope=float(res.slope),
        slope_stderr=float(res.stderr),
        r_squared=float(min(1.0, res.rvalue**2)),
        startup_latency=float(times[0]),
        intercept=float(res.intercept),
        n=int(n),
    )


@dataclass
class Accounting:
    created: int = 0
    sacrificed: int = 0
    purify_failed: int = 0
    swap_consumed: int = 0  # input pairs destroyed by swapping (two per swap)
    swap_produced: int = 0
    delivered: int = 0
    live: int = 0

    def balanced(self) -> bool:
        return self.created == (
            self.sacrificed
            + self.purify_failed
            + self.swap_consumed
            - self.swap_produced
            + self.delivered
            + self.live
        )


@dataclass
class SummaryReport:
    config: dict
    seed: int
    status: str
    delivered: int
    throughput: float
    fit: ThroughputFit | None
    total_sim_time: float
    slot_seconds: float
    purifications_per_level: list[dict]
    swaps_per_level: list[int]
    accounting: Accounting
    validation: list[str] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = None if self.fit is None else asdict(self.fit)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def throughput_of(log: ArrivalLog, total_sim_time: float) -> tuple[float, ThroughputFit | None]:
    """Regression slope when it is defined, else the plain delivery rate."""
    try:
        fit = fit_throughput(log)
    except InsufficientDataError:
        rate = len(log) / total_sim_time if total_sim_time > 0 else 0.0
        return rate, None
    return fit.slope, fit
