"""Single-run orchestration and parameter sweeps."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import SimConfig, config_from_dict
from .engine import Engine, RngStreams, RunStatus
from .errors import ConfigError, EmptySweepError
from .link import link_params
from .metrics import ArrivalLog, SummaryReport, throughput_of
from .scheduling import SchedulerKind, fatal, min_qubits_required, validate_config
from .stack import RepeaterLine

COMPLETED = "completed"
TERMINATED_EARLY = "terminated early"
DEADLOCK = "deadlock"
STALLED = "stalled"


@dataclass
class RunResult:
    summary: SummaryReport
    log: ArrivalLog
    trace: list | None = None

    @property
    def throughput(self) -> float:
        return self.summary.throughput


def build_line(config: SimConfig, trace: list | None = None, **line_kwargs) -> RepeaterLine:
    link = link_params(config.link_length_km, config.link_overrides, config.loss_db_per_km, config.speed_fraction)
    line = RepeaterLine(
        Engine(),
        RngStreams(config.seed),
        hops=config.hops,
        qubits_per_station=config.qubits_per_station,
        link=link,
        scheduler=config.scheduler,
        thresholds=config.thresholds,
        target_fidelity=config.target_fidelity,
        gate_error=config.gate_error,
        trace=trace,
        **line_kwargs,
    )
    line.stall_slots = config.stall_slots
    return line


def run(config: SimConfig, trace: bool = False, check_invariants: bool = False, **line_kwargs) -> RunResult:
    """Simulate until ``target_pairs`` end-to-end pairs arrive or time runs out."""
    violations = validate_config(config)
    errors = fatal(violations)
    if errors:
        raise ConfigError("; ".join(str(v) for v in errors), errors)

    records = [] if trace else None
    line = build_line(config, records, **line_kwargs)
    engine = line.engine
    if check_invariants:
        from .engine import EventKind

        slot_handler = engine._handlers[EventKind.SLOT_BOUNDARY]

        def checked(event):
            line.check_invariants()
            slot_handler(event)
            line.check_invariants()

        engine.on(EventKind.SLOT_BOUNDARY, checked)

    horizon = math.floor(config.max_sim_time / line.slot_seconds)
    log = line.log
    target = config.target_pairs
    line.start()
    outcome = engine.run_until(lambda: len(log) >= target or line.halted, until=horizon)

    if len(log) >= target:
        status = COMPLETED
    elif line.deadlocked:
        status = DEADLOCK
    elif line.halted:
        status = STALLED
    else:
        status = TERMINATED_EARLY
    end_tick = outcome.final_time if outcome.status != RunStatus.TIME_LIMIT else horizon
    total = end_tick * line.slot_seconds
    throughput, fit = throughput_of(log, total)

    acct = line.accounting
    acct.delivered = len(log)
    acct.live = line.live_pairs()
    summary = SummaryReport(
        config=config.to_dict(),
        seed=config.seed,
        status=status,
        delivered=len(log),
        throughput=throughput,
        fit=fit,
        total_sim_time=total,
        slot_seconds=line.slot_seconds,
        purifications_per_level=[
            {"level": i, "attempts": a, "successes": s}
            for i, (a, s) in enumerate(zip(line.purify_attempts, line.purify_successes))
        ],
        swaps_per_level=list(line.swaps),
        accounting=acct,
        validation=[str(v) for v in violations],
    )
    return RunResult(summary, log, records)


def summarize(result: RunResult) -> SummaryReport:
    return result.summary


def write_outputs(result: RunResult, out_dir) -> dict[str, str]:
    """Write ``arrivals.csv``, ``summary.json`` and optionally ``trace.ndjson``."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"arrivals": out / "arrivals.csv", "summary": out / "summary.json"}
    paths["arrivals"].write_text(result.log.to_csv())
    paths["summary"].write_text(result.summary.to_json() + "\n")
    if result.trace is not None:
        paths["trace"] = out / "trace.ndjson"
        with open(paths["trace"], "w") as fh:
            for rec in result.trace:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return {k: str(v) for k, v in paths.items()}


# --------------------------------------------------------------------- sweeps


@dataclass
class SweepSpec:
    base: SimConfig
    band_count: int
    boundary_grid: tuple[float, float, float]
    threshold_candidates: list[tuple[float, ...]] = field(default_factory=list)
    replicate_seeds: list[int] = field(default_factory=list)
    reduced_target_pairs: int = 50
    rerun_best: bool = True
    workers: int = 1

    def __post_init__(self):
        lo, hi, step = self.boundary_grid
        if step <= 0:
            raise ConfigError(f"boundary grid step must be positive, got {step}")
        if self.band_count < 1:
            raise ConfigError("band_count must be at least 1")


@dataclass(frozen=True)
class SweepRow:
    boundaries: tuple[float, ...]
    thresholds: tuple[float, ...]
    seed: int
    slope: float
    slope_stderr: float | None
    r_squared: float | None
    startup_latency: float | None
    delivered: int
    status: str
    config: dict


@dataclass
class SweepCell:
    boundaries: tuple[float, ...]
    thresholds: tuple[float, ...]
    rows: list[SweepRow]

    @property
    def median_slope(self) -> float:
        return statistics.median(r.slope for r in self.rows)


@dataclass
class SweepResult:
    cells: list[SweepCell]  # ranked, best first
    best: SweepCell
    best_rerun: list[RunResult] = field(default_factory=list)

    @property
    def rows(self) -> list[SweepRow]:
        return [r for c in self.cells for r in c.rows]

    def cell(self, boundaries) -> SweepCell | None:
        boundaries = tuple(boundaries)
        for c in self.cells:
            if c.boundaries == boundaries:
                return c
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            [
                "rank",
                "boundaries",
                "thresholds",
                "seed",
                "slope",
                "slope_stderr",
                "r_squared",
                "startup_latency",
                "delivered",
                "status",
                "median_slope",
                "config",
            ]
        )
        for rank, c in enumerate(self.cells, start=1):
            med = c.median_slope
            for r in c.rows:
                w.writerow(
                    [
                        rank,
                        " ".join(f"{b:g}" for b in r.boundaries),
                        " ".join(f"{t:g}" for t in r.thresholds),
                        r.seed,
                        repr(r.slope),
                        "" if r.slope_stderr is None else repr(r.slope_stderr),
                        "" if r.r_squared is None else repr(r.r_squared),
                        "" if r.startup_latency is None else repr(r.startup_latency),
                        r.delivered,
                        r.status,
                        repr(med),
                        json.dumps(r.config, sort_keys=True),
                    ]
                )
        return buf.getvalue()


def grid_points(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or hi < lo:
        return []
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def boundary_tuples(spec: SweepSpec) -> list[tuple[float, ...]]:
    points = [p for p in grid_points(*spec.boundary_grid) if 0.5 < p < 1.0]
    if spec.band_count == 1:
        return [()]
    return list(itertools.combinations(points, spec.band_count - 1))


def _run_row(job) -> SweepRow:
    boundaries, thresholds, seed, cfg_dict = job
    config = config_from_dict(cfg_dict)
    result = run(config)
    s = result.summary
    fit = s.fit
    return SweepRow(
        boundaries,
        thresholds,
        seed,
        s.throughput,
        None if fit is None else fit.slope_stderr,
        None if fit is None else fit.r_squared,
        None if fit is None else fit.startup_latency,
        s.delivered,
        s.status,
        cfg_dict,
    )


def sweep(spec: SweepSpec) -> SweepResult:
    """Grid search over band boundaries and threshold schedules.

    Each cell runs once per replicate seed at the reduced pair target; cells
    are ranked by median throughput and the winner is re-run at the base
    configuration's full pair target.
    """
    base = spec.base
    tuples = boundary_tuples(spec)
    need = min_qubits_required(spec.band_count, base.num_levels)
    if base.qubits_per_half < need:
        tuples = []
    if not tuples:
        raise EmptySweepError(
            f"no boundary tuples for {spec.band_count} band(s) on grid {spec.boundary_grid} "
            f"with {base.qubits_per_half} qubits per half (need {need})"
        )
    thresholds = [tuple(t) for t in spec.threshold_candidates] or [base.thresholds]
    seeds = list(spec.replicate_seeds) or [base.seed]

    jobs = []
    for b, th in itertools.product(tuples, thresholds):
        for seed in seeds:
            cfg = base.replace(
                scheduler=SchedulerKind.banded(b),
                thresholds=th,
                seed=seed,
                target_pairs=spec.reduced_target_pairs,
            )
            jobs.append((b, th, seed, cfg.to_dict()))

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_row, jobs))
    else:
        rows = [_run_row(j) for j in jobs]

    cells: dict = {}
    for r in rows:
        cells.setdefault((r.boundaries, r.thresholds), []).append(r)
    ranked = [SweepCell(b, th, sorted(rs, key=lambda r: r.seed)) for (b, th), rs in cells.items()]
    ranked.sort(key=lambda c: (-c.median_slope, c.thresholds, c.boundaries))
    best = ranked[0]

    rerun = []
    if spec.rerun_best:
        for seed in seeds:
            cfg = base.replace(scheduler=SchedulerKind.banded(best.boundaries), thresholds=best.thresholds, seed=seed)
            rerun.append(run(cfg))
    return SweepResult(ranked, best, rerun)


_SWEEP_KEYS = {
    "band_count",
    "boundary_grid",
    "threshold_candidates",
    "replicate_seeds",
    "reduced_target_pairs",
    "rerun_best",
    "workers",
}


def parse_sweep(text: str) -> SweepSpec:
    """A run configuration plus a ``[sweep]`` table describing the grid."""
    from .config import tomllib
    from .errors import ParseError

    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError("", f"malformed document: {exc}") from None
    table = doc.pop("sweep", None)
    if not isinstance(table, dict):
        raise ParseError("sweep", "missing required [sweep] table")
    unknown = sorted(set(table) - _SWEEP_KEYS)
    if unknown:
        raise ParseError(f"sweep.{unknown[0]}", "unknown key")
    for key in ("band_count", "boundary_grid"):
        if key not in table:
            raise ParseError(f"sweep.{key}", "missing required field")
    base = config_from_dict(doc)

    def ints(key, default):
        v = table.get(key, default)
        items = v if isinstance(v, list) else [v]
        if any(isinstance(x, bool) or not isinstance(x, int) for x in items):
            raise ParseError(f"sweep.{key}", "expected integer(s)")
        return v

    grid = table["boundary_grid"]
    if not (isinstance(grid, list) and len(grid) == 3 and all(isinstance(x, (int, float)) for x in grid)):
        raise ParseError("sweep.boundary_grid", "expected [lo, hi, step]")
    cands = table.get("threshold_candidates", [])
    if not isinstance(cands, list) or any(
        not isinstance(c, list) or not all(isinstance(x, (int, float)) for x in c) for c in cands
    ):
        raise ParseError("sweep.threshold_candidates", "expected a list of threshold lists")
    try:
        return SweepSpec(
            base=base,
            band_count=ints("band_count", 1),
            boundary_grid=tuple(float(x) for x in grid),
            threshold_candidates=[tuple(float(x) for x in c) for c in cands],
            replicate_seeds=list(ints("replicate_seeds", [])),
            reduced_target_pairs=ints("reduced_target_pairs", 50),
            rerun_best=bool(table.get("rerun_best", True)),
            workers=ints("workers", 1),
        )
    except ParseError:
        raise
    except ConfigError as exc:
        raise ParseError("sweep", str(exc)) from None


def load_sweep(path) -> SweepSpec:
    with open(path, "rb") as fh:
        return parse_sweep(fh.read().decode())
