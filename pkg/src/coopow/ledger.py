"""Per-peer quiet detection and ledger commits.

Time is measured in integer ticks. A trace is quiet for level ``n`` at tick
``t`` when no block of level ``n`` or higher arrived in ``(t - delta, t]``.
The quiet floor ``Q(t)`` is the lowest such level, and a commit at ``t``
appends every not-yet-committed entry contained in pending blocks of level
``>= Q(t)`` that arrived before ``t``, sorted by entry id.
"""
from __future__ import annotations

import heapq
from bisect import bisect_right
from dataclasses import dataclass, field

from coopow.blocks import Block, extract_entries


@dataclass(frozen=True)
class QuietParams:
    delta: int

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1 tick, got {self.delta}")


def _delta(q) -> int:
    return q.delta if isinstance(q, QuietParams) else QuietParams(q).delta


class ArrivalTrace:
    """Arrival record of one peer.

    ``times``/``levels``/``hashes`` hold first arrivals in time order.
    ``last_at_or_above[n]`` is the latest arrival tick of any block with
    level >= n. ``pending`` maps characteristic hash to ``(tick, block)`` for
    blocks whose entries may still reach the ledger; with ``discard=False``
    consumed blocks are kept there too.
    """

    def __init__(self, discard: bool = True):
        self.discard = discard
        self.times: list[int] = []
        self.levels: list[int] = []
        self.hashes: list[bytes] = []
        self.last_at_or_above: list[int] = []
        self.pending: dict[bytes, tuple[int, Block]] = {}
        self.seen: set[bytes] = set()
        self.duplicates = 0

    def __len__(self):
        return len(self.times)

    @property
    def events(self) -> list[tuple[int, int, bytes]]:
        return list(zip(self.times, self.levels, self.hashes))

    def record(self, t: int, b: Block) -> bool:
        """Append a first arrival; returns False for a duplicate."""
        if t <= 0:
            raise ValueError(f"arrivals must be at t > 0, got {t}")
        if self.times and t < self.times[-1]:
            raise ValueError(f"out-of-order arrival at {t} after {self.times[-1]}")
        if b.ch in self.seen:
            self.duplicates += 1
            return False
        self.seen.add(b.ch)
        self.times.append(t)
        self.levels.append(b.level)
        self.hashes.append(b.ch)
        for n in range(b.level + 1):
            if n < len(self.last_at_or_above):
                self.last_at_or_above[n] = t
            else:
                self.last_at_or_above.append(t)
        self.pending[b.ch] = (t, b)
        return True

    def window_levels(self, t: int, delta: int) -> list[int]:
        lo = bisect_right(self.times, t - delta)
        hi = bisect_right(self.times, t)
        return self.levels[lo:hi]


@dataclass(frozen=True)
class Batch:
    commit_time: int
    level: int
    entries: tuple


@dataclass
class LedgerState:
    batches: list = field(default_factory=list)
    committed_ids: set = field(default_factory=set)

    def entry_ids(self) -> list[bytes]:
        return [e.entry_id for b in self.batches for e in b.entries]


def record_arrival(trace: ArrivalTrace, t: int, b: Block, q) -> int | None:
    """Record ``b`` at ``t``; returns the tick its quiet window can first close,
    or None when the block was already seen."""
    if not trace.record(t, b):
        return None
    return t + _delta(q)


def is_quiet(trace: ArrivalTrace, level: int, t: int, q) -> bool:
    delta = _delta(q)
    if not trace.times:
        return True
    if t >= trace.times[-1]:
        if level >= len(trace.last_at_or_above):
            return True
        return trace.last_at_or_above[level] <= t - delta
    return all(lv < level for lv in trace.window_levels(t, delta))


def quiet_floor(trace: ArrivalTrace, t: int, q) -> int:
    delta = _delta(q)
    if trace.times and t >= trace.times[-1]:
        for n, last in enumerate(trace.last_at_or_above):
            if last <= t - delta:
                return n
        return len(trace.last_at_or_above)
    levels = trace.window_levels(t, delta)
    return max(levels) + 1 if levels else 0


def commit_at(trace: ArrivalTrace, ledger: LedgerState, t: int, q) -> Batch | None:
    """Commit newly eligible entries at ``t``; returns the new batch, if any."""
    floor = quiet_floor(trace, t, q)
    eligible = [ch for ch, (ta, b) in trace.pending.items() if b.level >= floor and ta < t]
    fresh = {}
    for ch in eligible:
        for e in extract_entries(trace.pending[ch][1]):
            if e.entry_id not in ledger.committed_ids:
                fresh.setdefault(e.entry_id, e)
    if trace.discard:
        for ch in eligible:
            del trace.pending[ch]
    if not fresh:
        return None
    batch = Batch(t, floor, tuple(fresh[i] for i in sorted(fresh)))
    ledger.batches.append(batch)
    ledger.committed_ids.update(fresh)
    return batch


def replay(events, q) -> LedgerState:
    """Reference ledger computed directly from the definition.

    ``events`` is a time-ordered iterable of ``(tick, block)``. Each candidate
    tick (every arrival tick and every arrival tick + delta) is evaluated
    against the full history, with no pending-set bookkeeping.
    """
    delta = _delta(q)
    arrivals = []
    seen = set()
    for t, b in events:
        if t <= 0:
            raise ValueError(f"arrivals must be at t > 0, got {t}")
        if b.ch not in seen:
            seen.add(b.ch)
            arrivals.append((t, b))
    candidates = sorted({t for t, _ in arrivals} | {t + delta for t, _ in arrivals})
    ledger = LedgerState()
    for c in candidates:
        in_window = [b.level for t, b in arrivals if c - delta < t <= c]
        floor = max(in_window) + 1 if in_window else 0
        fresh = {}
        for t, b in arrivals:
            if t < c and b.level >= floor:
                for e in extract_entries(b):
                    if e.entry_id not in ledger.committed_ids:
                        fresh.setdefault(e.entry_id, e)
        if fresh:
            ledger.batches.append(Batch(c, floor, tuple(fresh[i] for i in sorted(fresh))))
            ledger.committed_ids.update(fresh)
    return ledger


class LedgerEngine:
    """Incremental ledger for one peer: arrivals schedule their own quiet checks.

    A check scheduled for tick ``t`` runs only once every arrival at ``t``
    has been recorded, matching the closed right end of the quiet window.
    """

    def __init__(self, q, discard: bool = True):
        self.q = q if isinstance(q, QuietParams) else QuietParams(q)
        self.trace = ArrivalTrace(discard=discard)
        self.ledger = LedgerState()
        self._checks: list[int] = []

    def receive(self, t: int, b: Block) -> bool:
        self.advance_to(t - 1)
        due = record_arrival(self.trace, t, b, self.q)
        if due is None:
            return False
        heapq.heappush(self._checks, due)
        return True

    def commit(self, t: int) -> Batch | None:
        return commit_at(self.trace, self.ledger, t, self.q)

    def advance_to(self, t: int) -> None:
        """Run every scheduled check at ticks <= t."""
        while self._checks and self._checks[0] <= t:
            due = heapq.heappop(self._checks)
            while self._checks and self._checks[0] == due:
                heapq.heappop(self._checks)
            self.commit(due)

    def flush(self) -> LedgerState:
        while self._checks:
            self.advance_to(self._checks[0])
        return self.ledger

    @property
    def next_check(self) -> int | None:
        return self._checks[0] if self._checks else None


def export_ledger(ledger: LedgerState, ticks: bool = True) -> str:
    """One line per batch: ``commit_tick,level,entry_id_hex,...``.

    With ``ticks=False`` the commit tick (a peer-local observation time) is
    replaced by the batch index, giving the form compared across peers.
    """
    lines = []
    for i, b in enumerate(ledger.batches):
        head = b.commit_time if ticks else i
        lines.append(",".join([str(head), str(b.level), *(e.entry_id.hex() for e in b.entries)]))
    return "".join(line + "\n" for line in lines)
