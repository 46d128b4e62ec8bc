"""Four-layer repeater protocol over a line of ``2**n`` hops.

Physical entanglement (PE) attempts run on every hop each slot.  The
receiver measures the pulses one slot later and returns keep flags (EC) to
the sender, which learns the outcome two slots after the attempt.
Purification control (PC) and entanglement swapping control (ESC) then act
only on pairs whose state both endpoints already know, mirroring stations
that run identical deterministic algorithms and merely exchange outcomes.

All times inside this module are integer slot ticks.  A classical message
between stations ``j`` and ``k`` takes ``|j - k|`` ticks.

Register layout: station ``s`` holds a receive half facing hop ``s - 1`` and
a send half facing hop ``s``.  The left end of every pair sits in a send
half and the right end in a receive half, at every level.  End stations own
a single half with the whole register.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from . import bell
from .bell import BellState
from .engine import Engine, EventKind, RngStreams
from .errors import ConfigError, ProtocolFault, UndefinedOutputError
from .link import LinkParams
from .metrics import Accounting, ArrivalLog
from .scheduling import SchedulerKind, is_power_of_two, select_pairs

RECEIVE = "receive"
SEND = "send"

PENDING = "pending"
LIVE = "live"
LOCKED = "locked"
CONSUMED = "consumed"

EC_KEEP_FLAGS = "EC_keep_flags"
PC_OUTCOME = "PC_outcome"
ESC_NOTIFY_LEFT = "ESC_notify_left"
ESC_NOTIFY_RIGHT = "ESC_notify_right"


class QubitAddr(NamedTuple):
    station: int
    half: str
    slot: int


@dataclass(slots=True, eq=False)
class PairRecord:
    id: int
    level: int
    left: QubitAddr
    right: QubitAddr
    state: BellState
    created_at: int
    known_left_at: int | None = None
    known_right_at: int | None = None
    status: str = PENDING
    # outcome messages still in flight for the current PC/ESC step
    awaiting: int = 0

    @property
    def fidelity(self) -> float:
        return self.state.a

    @property
    def usable_at(self) -> int | None:
        if self.known_left_at is None or self.known_right_at is None:
            return None
        return max(self.known_left_at, self.known_right_at)


class ClassicalMessage(NamedTuple):
    kind: str
    src: int
    dst: int
    payload: tuple
    sent_at: int
    deliver_at: int
    msg_id: int


class ConnectionView:
    """Pairs between two stations at one distance scale."""

    __slots__ = ("level", "left_station", "right_station", "pairs")

    def __init__(self, level: int, left_station: int, right_station: int):
        self.level = level
        self.left_station = left_station
        self.right_station = right_station
        # insertion order == creation order because pair ids are monotone
        self.pairs: dict[int, PairRecord] = {}

    def common_pairs(self, now: int) -> set[int]:
        return {
            p.id
            for p in self.pairs.values()
            if p.status == LIVE and p.usable_at is not None and p.usable_at <= now
        }

    def __repr__(self):
        return f"ConnectionView(level={self.level}, {self.left_station}<->{self.right_station}, {len(self.pairs)} pairs)"


class _Half:
    __slots__ = ("station", "name", "capacity", "free", "attempt_locked")

    def __init__(self, station, name, capacity):
        self.station = station
        self.name = name
        self.capacity = capacity
        # pop() hands out the lowest free slot first
        self.free = list(range(capacity - 1, -1, -1))
        self.attempt_locked = 0


class RepeaterLine:
    """Protocol state for every station of one simulation instance."""

    def __init__(
        self,
        engine: Engine,
        rng: RngStreams,
        *,
        hops: int,
        qubits_per_station: int,
        link: LinkParams,
        scheduler: SchedulerKind,
        thresholds,
        target_fidelity: float,
        gate_error: float = 0.0,
        log: ArrivalLog | None = None,
        trace: list | None = None,
        force_purify_success: bool = False,
    ):
        if not is_power_of_two(hops):
            raise ConfigError(f"hop count {hops} is not a power of two")
        self.engine = engine
        self.rng = rng
        self.hops = hops
        self.top = hops.bit_length() - 1
        self.link = link
        self.slot_seconds = link.one_way_latency
        self.scheduler = scheduler
        self.thresholds = tuple(float(t) for t in thresholds)
        if len(self.thresholds) != self.top + 1:
            raise ConfigError(f"need {self.top + 1} thresholds (one per level), got {len(self.thresholds)}")
        self.target = float(target_fidelity)
        self.gate_error = float(gate_error)
        self.force_purify_success = force_purify_success
        self.log = log if log is not None else ArrivalLog(self.target)
        self.trace = trace

        half_cap = qubits_per_station if hops == 1 else qubits_per_station // 2
        end_cap = qubits_per_station
        self.send: list[_Half | None] = []
        self.recv: list[_Half | None] = []
        for s in range(hops + 1):
            self.recv.append(None if s == 0 else _Half(s, RECEIVE, end_cap if s == hops else half_cap))
            self.send.append(None if s == hops else _Half(s, SEND, end_cap if s == 0 else half_cap))

        self.connections: dict[tuple[int, int], ConnectionView] = {}
        for level in range(self.top + 1):
            span = 1 << level
            for k in range(hops >> level):
                self.connections[(level, k)] = ConnectionView(level, k * span, (k + 1) * span)

        self.pairs: dict[int, PairRecord] = {}
        self._pair_ids = itertools.count(1)
        self._msg_ids = itertools.count(1)
        self._outstanding: set[int] = set()
        self._dirty_pc: set[tuple[int, int]] = set()
        self._dirty_esc: set[tuple[int, int]] = set()
        self._pe_streams = [rng.stream(h, "pe") for h in range(hops)]

        self.accounting = Accounting()
        self.purify_attempts = [0] * (self.top + 1)
        self.purify_successes = [0] * (self.top + 1)
        self.swaps = [0] * self.top
        self.deadlocked = False
        self.halted = False
        self.last_progress = 0
        self.stall_slots: int | None = None

        engine.on(EventKind.SLOT_BOUNDARY, self._on_slot)
        engine.on(EventKind.PULSE_ARRIVAL, self._on_pulses)
        engine.on(EventKind.MESSAGE_DELIVERY, self._on_message)

    def start(self, tick: int = 0) -> None:
        self.engine.schedule(tick, EventKind.SLOT_BOUNDARY)

    # ------------------------------------------------------------------ helpers

    def _conn_key(self, pair: PairRecord) -> tuple[int, int]:
        return (pair.level, pair.left.station >> pair.level)

    def _esc_site(self, level: int, k: int) -> tuple[int, int]:
        middle = (k + 1) << level if k % 2 == 0 else k << level
        return (level, middle)

    def _free(self, addr: QubitAddr) -> None:
        half = self.send[addr.station] if addr.half == SEND else self.recv[addr.station]
        half.free.append(addr.slot)

    def _release(self, pair: PairRecord) -> None:
        pair.status = CONSUMED
        self._free(pair.left)
        self._free(pair.right)
        del self.connections[self._conn_key(pair)].pairs[pair.id]
        del self.pairs[pair.id]

    def _gate(self, state: BellState) -> BellState:
        if self.gate_error:
            return bell.apply_depolarizing(state, self.gate_error)
        return state

    def _send(self, kind, src, dst, payload, now) -> ClassicalMessage:
        msg = ClassicalMessage(kind, src, dst, payload, now, now + abs(dst - src), next(self._msg_ids))
        self._outstanding.add(msg.msg_id)
        self.engine.schedule(msg.deliver_at, EventKind.MESSAGE_DELIVERY, msg)
        return msg

    def _emit(self, kind, now, **fields) -> None:
        if self.trace is not None:
            rec = {"tick": now, "time_s": now * self.slot_seconds, "kind": kind}
            rec.update(fields)
            self.trace.append(rec)

    def _activate(self, pair: PairRecord, now: int) -> None:
        """Pair state is now common knowledge at both ends."""
        pair.status = LIVE
        key = self._conn_key(pair)
        self._dirty_pc.add(key)
        if pair.level < self.top and pair.state.a >= self.thresholds[pair.level]:
            self._dirty_esc.add(self._esc_site(*key))

    # --------------------------------------------------------------- event flow

    def _on_slot(self, event) -> None:
        now = event.time
        if self._dirty_esc:
            sites = sorted(self._dirty_esc)
            self._dirty_esc.clear()
            for level, middle in sites:
                self.esc_round(middle, level, now)
        if self._dirty_pc:
            keys = sorted(self._dirty_pc)
            self._dirty_pc.clear()
            for key in keys:
                if self.pc_round(self.connections[key], now):
                    # the policy may have more to do once these pairs are busy
                    self._dirty_pc.add(key)
        for h in range(self.hops):
            self.pe_attempt_round(h, now)

        if self.engine.pending() == 0 and not self._dirty_pc and not self._dirty_esc:
            self.deadlocked = True
            self.halted = True
            return
        if self.stall_slots is not None and now - self.last_progress > self.stall_slots:
            self.halted = True
            return
        self.engine.schedule(now + 1, EventKind.SLOT_BOUNDARY)

    def _on_pulses(self, event) -> None:
        now = event.time
        hop, flags, failed_receive_slots = event.payload
        right = self.recv[hop + 1]
        right.free.extend(failed_receive_slots)
        right.attempt_locked -= len(failed_receive_slots)
        for _, pid in flags:
            if pid is not None:
                self.pairs[pid].known_right_at = now
        self._send(EC_KEEP_FLAGS, hop + 1, hop, flags, now)

    def _on_message(self, event) -> None:
        msg: ClassicalMessage = event.payload
        if msg.msg_id not in self._outstanding:
            raise ProtocolFault(f"message {msg.msg_id} ({msg.kind}) delivered twice")
        self._outstanding.discard(msg.msg_id)
        if msg.kind == EC_KEEP_FLAGS:
            self.ec_process_keep_flags(msg)
        elif msg.kind == PC_OUTCOME:
            self._pc_outcome(msg)
        else:
            self._esc_notify(msg)

    # ----------------------------------------------------------------- PE / EC

    def pe_attempt_round(self, hop: int, now: int) -> list[PairRecord]:
        """Fire one entanglement attempt per usable qubit pair on ``hop``."""
        left = self.send[hop]
        right = self.recv[hop + 1]
        n = min(len(left.free), len(right.free))
        if n == 0:
            return []
        outcomes = self._pe_streams[hop].bernoulli_many(n, self.link.p_success)
        base = self.link.base_state
        conn = self.connections[(0, hop)]
        flags = []
        failed_receive = []
        created = []
        for ok in outcomes:
            ls = left.free.pop()
            rs = right.free.pop()
            if ok:
                pid = next(self._pair_ids)
                pair = PairRecord(
                    pid, 0, QubitAddr(hop, SEND, ls), QubitAddr(hop + 1, RECEIVE, rs), base, now
                )
                self.pairs[pid] = pair
                conn.pairs[pid] = pair
                created.append(pair)
                flags.append((ls, pid))
            else:
                flags.append((ls, None))
                failed_receive.append(rs)
        failed = len(failed_receive)
        left.attempt_locked += failed
        right.attempt_locked += failed
        self.accounting.created += len(created)
        self.engine.schedule(now + 1, EventKind.PULSE_ARRIVAL, (hop, tuple(flags), failed_receive))
        self._emit(
            "PE",
            now,
            stations=[hop, hop + 1],
            attempts=n,
            pairs=[p.id for p in created],
            fidelities=[base.a] * len(created),
        )
        return created

    def ec_process_keep_flags(self, msg: ClassicalMessage) -> None:
        now = self.engine.now
        left = self.send[msg.dst]
        live = []
        for slot, pid in msg.payload:
            if pid is None:
                left.free.append(slot)
                left.attempt_locked -= 1
                continue
            pair = self.pairs.get(pid)
            if pair is None or pair.status != PENDING or pair.level != 0:
                raise ProtocolFault(f"keep flag for unknown or already-resolved pair {pid}")
            pair.known_left_at = now
            self._activate(pair, now)
            live.append(pid)
        self._emit("EC", now, stations=[msg.src, msg.dst], pairs=live, failed=len(msg.payload) - len(live))

    # ---------------------------------------------------------------------- PC

    def pc_round(self, conn: ConnectionView, now: int) -> list[tuple[int, int]]:
        """Deliver finished top-level pairs, then purify what the policy picks."""
        level = conn.level
        if level == self.top:
            for pair in [p for p in conn.pairs.values() if p.status == LIVE and p.state.a >= self.target]:
                self.deliver_end_to_end(pair, now)
        threshold = self.thresholds[level]
        candidates = [
            (p.id, p.state.a) for p in conn.pairs.values() if p.status == LIVE and p.state.a < threshold
        ]
        if len(candidates) < 2:
            return []
        pairings = select_pairs(candidates, self.scheduler)
        seen: set[int] = set()
        allowed = {c[0] for c in candidates}
        for x, y in pairings:
            if x == y or x in seen or y in seen or x not in allowed or y not in allowed:
                raise ProtocolFault(f"scheduler returned overlapping or foreign pairing ({x}, {y})")
            seen.add(x)
            seen.add(y)
        if not pairings:
            return []

        stream = self.rng.stream(conn.left_station, "pc")
        outcomes = []
        for x, y in pairings:
            px, py = self.pairs[x], self.pairs[y]
            if (px.state.a, -px.id) >= (py.state.a, -py.id):
                kept, sacrificed = px, py
            else:
                kept, sacrificed = py, px
            s1, s2 = self._gate(kept.state), self._gate(sacrificed.state)
            try:
                p, out = bell._purify(*s1, *s2)
            except UndefinedOutputError:
                p, out = 0.0, None
            # the sacrificed pair is measured locally at both ends right now
            self._release(sacrificed)
            self.accounting.sacrificed += 1
            self.purify_attempts[level] += 1
            kept.status = LOCKED
            kept.awaiting = 2
            ok = True if self.force_purify_success else stream.bernoulli(p)
            outcomes.append((kept.id, ok, out if ok else None))
            self._emit(
                "PC",
                now,
                stations=[conn.left_station, conn.right_station],
                level=level,
                pairs=[kept.id, sacrificed.id],
                fidelities=[kept.state.a, sacrificed.state.a],
                p_success=p,
            )
        payload = tuple(outcomes)
        self._send(PC_OUTCOME, conn.left_station, conn.right_station, payload, now)
        self._send(PC_OUTCOME, conn.right_station, conn.left_station, payload, now)
        return pairings

    def _pc_outcome(self, msg: ClassicalMessage) -> None:
        now = self.engine.now
        for pid, ok, out in msg.payload:
            pair = self.pairs.get(pid)
            if pair is None or pair.status != LOCKED:
                raise ProtocolFault(f"purification outcome for pair {pid} which is not in flight")
            if msg.dst == pair.left.station:
                pair.known_left_at = now
            else:
                pair.known_right_at = now
            pair.awaiting -= 1
            if pair.awaiting:
                continue
            level = pair.level
            if ok:
                pair.state = out
                self.purify_successes[level] += 1
                self._activate(pair, now)
            else:
                self._release(pair)
                self.accounting.purify_failed += 1
            self._emit(
                "PC_RESULT",
                now,
                stations=[pair.left.station, pair.right.station],
                level=level,
                pairs=[pid],
                success=ok,
                fidelities=[out.a] if ok else [],
            )

    # --------------------------------------------------------------------- ESC

    def esc_round(self, middle: int, level: int, now: int) -> list[PairRecord]:
        """Splice level-``level`` pairs meeting at station ``middle``, oldest first."""
        if level >= len(self.thresholds):
            raise ConfigError(f"no swapping threshold for level {level}")
        span = 1 << level
        if middle % span or (middle >> level) % 2 == 0:
            raise ProtocolFault(f"station {middle} is not a swap point at level {level}")
        threshold = self.thresholds[level]
        k = middle >> level
        left_pairs = [
            p for p in self.connections[(level, k - 1)].pairs.values() if p.status == LIVE and p.state.a >= threshold
        ]
        if not left_pairs:
            return []
        right_pairs = [
            p for p in self.connections[(level, k)].pairs.values() if p.status == LIVE and p.state.a >= threshold
        ]
        produced = []
        up = self.connections[(level + 1, (middle - span) >> (level + 1))]
        for lp, rp in zip(left_pairs, right_pairs):
            state = bell._swap(*self._gate(lp.state), *self._gate(rp.state))
            # both middle qubits are measured and go straight back to PE
            for p in (lp, rp):
                p.status = CONSUMED
                del self.connections[(level, p.left.station >> level)].pairs[p.id]
                del self.pairs[p.id]
            self._free(lp.right)
            self._free(rp.left)
            pid = next(self._pair_ids)
            pair = PairRecord(pid, level + 1, lp.left, rp.right, state, now, awaiting=2)
            self.pairs[pid] = pair
            up.pairs[pid] = pair
            produced.append(pair)
            self._emit(
                "ESC",
                now,
                stations=[middle - span, middle, middle + span],
                level=level,
                pairs=[lp.id, rp.id, pid],
                fidelities=[lp.state.a, rp.state.a, state.a],
            )
        if produced:
            ids = tuple(p.id for p in produced)
            self._send(ESC_NOTIFY_LEFT, middle, middle - span, ids, now)
            self._send(ESC_NOTIFY_RIGHT, middle, middle + span, ids, now)
            self.swaps[level] += len(produced)
            self.accounting.swap_consumed += 2 * len(produced)
            self.accounting.swap_produced += len(produced)
        return produced

    def _esc_notify(self, msg: ClassicalMessage) -> None:
        now = self.engine.now
        for pid in msg.payload:
            pair = self.pairs.get(pid)
            if pair is None or pair.status != PENDING:
                raise ProtocolFault(f"swap notification for pair {pid} which is not pending")
            if msg.kind == ESC_NOTIFY_LEFT:
                pair.known_left_at = now
            else:
                pair.known_right_at = now
            pair.awaiting -= 1
            if not pair.awaiting:
                self._activate(pair, now)

    # ---------------------------------------------------------------- delivery

    def deliver_end_to_end(self, pair: PairRecord, now: int) -> None:
        if pair.level != self.top or pair.state.a < self.target:
            raise ProtocolFault(f"pair {pair.id} is not a finished end-to-end pair")
        if pair.usable_at is None or pair.usable_at > now:
            raise ProtocolFault(f"pair {pair.id} delivered before both ends know it")
        self._release(pair)
        self.accounting.delivered += 1
        self.log.append(now * self.slot_seconds, pair.state.a)
        self.last_progress = now
        self._emit("DELIVER", now, stations=[0, self.hops], pairs=[pair.id], fidelities=[pair.state.a])

    # -------------------------------------------------------------- inspection

    def live_pairs(self) -> int:
        return len(self.pairs)

    def check_invariants(self) -> None:
        """Raise ProtocolFault if qubit bookkeeping or pair geometry is off."""
        held: dict[tuple[int, str], list[int]] = {}
        for p in self.pairs.values():
            if p.status == CONSUMED:
                raise ProtocolFault(f"consumed pair {p.id} still registered")
            if p.right.station - p.left.station != 1 << p.level:
                raise ProtocolFault(f"pair {p.id} spans {p.left.station}-{p.right.station} at level {p.level}")
            if p.left.half != SEND or p.right.half != RECEIVE:
                raise ProtocolFault(f"pair {p.id} ends sit in the wrong register halves")
            held.setdefault((p.left.station, SEND), []).append(p.left.slot)
            held.setdefault((p.right.station, RECEIVE), []).append(p.right.slot)
            if p.status in (LIVE, LOCKED) and p.usable_at is None:
                raise ProtocolFault(f"pair {p.id} is {p.status} but not known at both ends")
        for halves in (self.send, self.recv):
            for half in halves:
                if half is None:
                    continue
                mine = held.get((half.station, half.name), [])
                slots = mine + half.free
                if len(set(slots)) != len(slots):
                    raise ProtocolFault(f"slot double-booked at station {half.station} {half.name}")
                if len(mine) + len(half.free) + half.attempt_locked != half.capacity:
                    raise ProtocolFault(
                        f"station {half.station} {half.name}: {len(half.free)} free + "
                        f"{half.attempt_locked} attempting + {len(mine)} held != {half.capacity}"
                    )
                if any(not 0 <= s < half.capacity for s in slots):
                    raise ProtocolFault(f"slot out of range at station {half.station} {half.name}")
