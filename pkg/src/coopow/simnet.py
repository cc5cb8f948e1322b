"""Deterministic discrete-event simulation of cooperating peers.

Peers create entries, mine basic blocks for them, mine compound blocks from
pools of pending blocks, relay every new block to their neighbours once, and
run their own quiet-detection ledger. Everything random is drawn from one
seeded generator, and simultaneous events are ordered by
``(tick, phase, sequence number)`` where quiet checks run after every
arrival of the same tick.

In ``modeled`` mining mode the attempt counts are sampled from the geometric
distribution instead of hashing, so the resulting blocks are structurally
valid and signed but not actually proved; peers then validate them with the
proof check disabled.
"""
from __future__ import annotations

import csv
import heapq
import io
import json
import math
import random
from collections import Counter, defaultdict, deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

from coopow.blocks import (
    Entry,
    ProofParams,
    make_basic,
    make_compound,
    required_zero_bits,
    validate,
)
from coopow.crypto import KeyPair
from coopow.ledger import LedgerState, QuietParams, commit_at, export_ledger, record_arrival
from coopow.ledger import ArrivalTrace
from coopow.miner import (
    RANDOM,
    MiningExhausted,
    SequenceSearchPlan,
    mine_basic,
    mine_compound,
    search_space_size,
)

TOPOLOGIES = ("complete", "ring", "random")
MINING_MODES = ("modeled", "real")

# event phases: everything that delivers a block precedes quiet checks at the same tick
_ARRIVE, _CHECK = 0, 1


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    num_peers: int = 3
    topology: str = "complete"
    p_edge: float = 0.5
    delay_ticks: tuple = (1, 50)
    delta_ticks: int = 200
    z: int = 8
    d: int = 2
    entry_rate: float = 1000.0
    mining_mode: str = "modeled"
    hash_rate: float = 1.0
    compound_policy: int = 1
    duration_ticks: int = 100_000
    seed: int = 0
    # entries are only created at ticks <= entry_window (None: whole run)
    entry_window: int | None = None
    max_entries: int | None = None
    # peer index -> signer peers whose blocks it accepts into compound pools
    restricted_pools: dict = field(default_factory=dict)
    check_signatures: bool = True

    def __post_init__(self):
        self.delay_ticks = tuple(self.delay_ticks)
        self.restricted_pools = {int(k): sorted(int(x) for x in v) for k, v in self.restricted_pools.items()}
        topo = self.topology
        if topo.startswith("random(") and topo.endswith(")"):
            self.topology, self.p_edge = "random", float(topo[7:-1])
        self.check()

    @property
    def proof(self) -> ProofParams:
        return ProofParams(self.z, self.d)

    @property
    def max_delay(self) -> int:
        return self.delay_ticks[1]

    def check(self):
        if self.num_peers < 1:
            raise ConfigError("num_peers must be >= 1")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}")
        if not 0.0 <= self.p_edge <= 1.0:
            raise ConfigError("p_edge must lie in [0, 1]")
        if len(self.delay_ticks) != 2 or not 0 <= self.delay_ticks[0] <= self.delay_ticks[1]:
            raise ConfigError("delay_ticks must be (min, max) with 0 <= min <= max")
        if self.delta_ticks < 1:
            raise ConfigError("delta_ticks must be >= 1")
        if self.duration_ticks <= 0:
            raise ConfigError("duration_ticks must be > 0")
        if self.entry_rate <= 0 or self.hash_rate <= 0:
            raise ConfigError("entry_rate and hash_rate must be > 0")
        if self.mining_mode not in MINING_MODES:
            raise ConfigError(f"mining_mode must be one of {MINING_MODES}")
        if self.compound_policy < 0:
            raise ConfigError("compound_policy must be >= 0")
        try:
            self.proof
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for peer, allowed in self.restricted_pools.items():
            if not 0 <= peer < self.num_peers or any(not 0 <= a < self.num_peers for a in allowed):
                raise ConfigError(f"restricted_pools refers to unknown peers: {peer}: {allowed}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["delay_ticks"] = list(self.delay_ticks)
        out["restricted_pools"] = {str(k): v for k, v in self.restricted_pools.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        proof = data.pop("proof", None)
        if proof is not None:
            data.setdefault("z", proof["z"])
            data.setdefault("d", proof["d"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return SimConfig.from_dict(data)


def build_topology(n: int, kind: str, p_edge: float, rng: random.Random) -> list[list[int]]:
    """Adjacency lists; random graphs get extra edges until connected."""
    edges = set()
    if kind == "complete":
        edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    elif kind == "ring":
        edges = {tuple(sorted((i, (i + 1) % n))) for i in range(n) if n > 1}
    else:
        edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p_edge}
        parent = list(range(n))

        def root(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j in edges:
            parent[root(i)] = root(j)
        roots = sorted({root(i) for i in range(n)})
        for a, b in zip(roots, roots[1:]):
            edges.add((a, b))
    adj = [[] for _ in range(n)]
    for i, j in sorted(edges):
        if i != j:
            adj[i].append(j)
            adj[j].append(i)
    return [sorted(set(a)) for a in adj]


def sample_attempts(level: int, params: ProofParams, rng: random.Random) -> int:
    """Geometric number of hash evaluations until one meets the level's threshold."""
    bits = required_zero_bits(level, params)
    if bits == 0:
        return 1
    u = rng.random()
    return math.floor(math.log1p(-u) / math.log1p(-(2.0 ** -bits))) + 1


def modeled_mining_duration(level: int, params: ProofParams, hash_rate: float, rng: random.Random) -> int:
    if hash_rate <= 0:
        raise ValueError("hash_rate must be > 0")
    return math.ceil(sample_attempts(level, params, rng) / hash_rate)


@dataclass
class PeerStats:
    entries_created: int = 0
    basic_mined: int = 0
    basic_attempts: int = 0
    compound_jobs: int = 0
    compound_exhausted: int = 0
    compound_attempts: int = 0
    compounds_mined: int = 0
    rejected: int = 0

    @property
    def exhaustion_rate(self) -> float:
        return self.compound_exhausted / self.compound_jobs if self.compound_jobs else 0.0

    @property
    def attempts_per_compound(self) -> float | None:
        return self.compound_attempts / self.compounds_mined if self.compounds_mined else None


class _Peer:
    def __init__(self, index: int, kp: KeyPair, neighbors: list[int]):
        self.index = index
        self.kp = kp
        self.neighbors = neighbors
        self.trace = ArrivalTrace()
        self.ledger = LedgerState()
        self.arrivals: list = []
        self.queue: deque = deque()
        self.busy = False
        self.pools: dict[int, dict] = defaultdict(dict)
        self.covered: set = set()
        self.exhausted: dict[int, frozenset] = {}
        self.allowed_signers: set | None = None
        self.stats = PeerStats()


@dataclass
class SimReport:
    config: dict
    ledgers: list
    canonical_ledgers: list
    convergence: bool
    divergence: str | None
    blocks_mined: dict
    total_evaluations: int
    arrival_counts: dict
    peer_stats: list
    entries_created: int
    final_tick: int
    last_mining_tick: int
    quiescent: bool
    # in-memory only: per-peer (tick, block) arrival logs
    arrival_logs: list = field(default_factory=list, repr=False, compare=False)

    def summary(self) -> dict:
        return {
            "config": self.config,
            "convergence": self.convergence,
            "divergence": self.divergence,
            "blocks_mined": {str(k): v for k, v in sorted(self.blocks_mined.items())},
            "total_evaluations": self.total_evaluations,
            "entries_created": self.entries_created,
            "final_tick": self.final_tick,
            "last_mining_tick": self.last_mining_tick,
            "quiescent": self.quiescent,
            "peers": [
                {**asdict(s), "exhaustion_rate": s.exhaustion_rate,
                 "attempts_per_compound": s.attempts_per_compound,
                 "batches": len(led.splitlines()),
                 "committed_entries": sum(len(line.split(",")) - 2 for line in led.splitlines())}
                for s, led in zip(self.peer_stats, self.ledgers)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def arrivals_csv(self) -> str:
        levels = sorted({lv for counts in self.arrival_counts.values() for lv in counts})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", *(f"level_{lv}" for lv in levels)])
        for tick in sorted(self.arrival_counts):
            w.writerow([tick, *(self.arrival_counts[tick].get(lv, 0) for lv in levels)])
        return buf.getvalue()

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json", out / "arrivals.csv"]
        written[0].write_text(self.to_json())
        written[1].write_text(self.arrivals_csv())
        for i, led in enumerate(self.ledgers):
            p = out / f"peer-{i}.ledger"
            p.write_text(led)
            written.append(p)
        return written


class Simulation:
    def __init__(self, config: SimConfig):
        config.check()
        self.config = config
        self.params = config.proof
        self.q = QuietParams(config.delta_ticks)
        self.rng = random.Random(config.seed)
        adj = build_topology(config.num_peers, config.topology, config.p_edge, self.rng)
        self.peers = [
            _Peer(i, KeyPair.from_seed(f"sim-{config.seed}-peer-{i}"), adj[i])
            for i in range(config.num_peers)
        ]
        for i, allowed in config.restricted_pools.items():
            self.peers[i].allowed_signers = {self.peers[a].kp.public for a in allowed}
        self._queue: list = []
        self._seq = 0
        self._validity: dict[bytes, bool] = {}
        self.now = 0
        self.entries_created = 0
        self.blocks_mined: Counter = Counter()
        self.total_evaluations = 0
        self.arrival_counts: dict[int, Counter] = defaultdict(Counter)
        self.last_mining_tick = 0
        self.entry_window = config.entry_window if config.entry_window is not None else config.duration_ticks

    def schedule(self, t: int, phase: int, kind: str, *payload):
        heapq.heappush(self._queue, (t, phase, self._seq, kind, payload))
        self._seq += 1

    def run(self) -> SimReport:
        for p in self.peers:
            self._schedule_entry(p, 0)
        while self._queue and self._queue[0][0] <= self.config.duration_ticks:
            t, _, _, kind, payload = heapq.heappop(self._queue)
            self.now = t
            getattr(self, f"_on_{kind}")(t, *payload)
        return self._report()

    # -- entries and mining ---------------------------------------------------

    def _schedule_entry(self, peer: _Peer, t: int):
        gap = max(1, math.ceil(self.rng.expovariate(1.0 / self.config.entry_rate)))
        if t + gap <= self.entry_window:
            self.schedule(t + gap, _ARRIVE, "entry", peer.index)

    def _on_entry(self, t: int, i: int):
        cap = self.config.max_entries
        if cap is not None and self.entries_created >= cap:
            return
        peer = self.peers[i]
        self.entries_created += 1
        peer.stats.entries_created += 1
        payload = f"seed={self.config.seed};peer={i};entry={peer.stats.entries_created}".encode()
        peer.queue.append(Entry(payload))
        self._schedule_entry(peer, t)
        self._start_mining(peer, t)

    def _start_mining(self, peer: _Peer, t: int):
        if peer.busy:
            return
        if peer.queue:
            self._mine_basic(peer, t, peer.queue.popleft())
            return
        for level in range(self.config.compound_policy, 0, -1):
            if self._mine_compound(peer, t, level):
                return

    def _finish_in(self, attempts: int) -> int:
        return max(1, math.ceil(attempts / self.config.hash_rate))

    def _mine_basic(self, peer: _Peer, t: int, entry: Entry):
        if self.config.mining_mode == "real":
            outcome = mine_basic(entry, peer.kp, self.params, start_nonce=self.rng.getrandbits(63))
            block, attempts = outcome.block, outcome.attempts
        else:
            attempts = sample_attempts(0, self.params, self.rng)
            block = make_basic(self.rng.getrandbits(64), entry, peer.kp)
        peer.busy = True
        peer.stats.basic_attempts += attempts
        self.total_evaluations += attempts
        self.schedule(t + self._finish_in(attempts), _ARRIVE, "mined", peer.index, block)

    def _compound_pool(self, peer: _Peer, level: int) -> list:
        pool = [b for ch, b in peer.pools[level - 1].items()
                if ch in peer.trace.pending and ch not in peer.covered]
        if peer.allowed_signers is not None:
            pool = [b for b in pool if b.signer in peer.allowed_signers]
        return sorted(pool, key=lambda b: b.ch)

    def _mine_compound(self, peer: _Peer, t: int, level: int) -> bool:
        d = self.params.d
        pool = self._compound_pool(peer, level)
        if len(pool) < d:
            return False
        chs = frozenset(b.ch for b in pool)
        tried = peer.exhausted.get(level, frozenset()) & chs
        fresh = search_space_size(len(pool), d) - search_space_size(len(tried), d)
        if fresh <= 0:
            return False
        peer.busy = True
        peer.stats.compound_jobs += 1
        if self.config.mining_mode == "real":
            plan = SequenceSearchPlan(pool, RANDOM, self.rng.getrandbits(64))
            try:
                outcome = mine_compound(plan, peer.kp, self.params)
                block, attempts = outcome.block, outcome.attempts
            except MiningExhausted as exc:
                block, attempts = None, exc.attempts
        else:
            attempts = sample_attempts(level, self.params, self.rng)
            if attempts <= fresh:
                block = make_compound(self._pick_ordering(pool, tried), peer.kp)
            else:
                block, attempts = None, fresh
        peer.stats.compound_attempts += attempts
        self.total_evaluations += attempts
        done = t + self._finish_in(attempts)
        if block is None:
            self.schedule(done, _ARRIVE, "exhausted", peer.index, level, chs)
        else:
            self.schedule(done, _ARRIVE, "mined", peer.index, block)
        return True

    def _pick_ordering(self, pool: list, tried: frozenset) -> list:
        d = self.params.d
        untried = [b for b in pool if b.ch not in tried]
        if len(pool) - len(untried) >= d:
            # at least one sub-block must be new, or the ordering was already searched
            first = self.rng.choice(untried)
            rest = self.rng.sample([b for b in pool if b is not first], d - 1)
            picked = [first, *rest]
            self.rng.shuffle(picked)
            return picked
        return self.rng.sample(pool, d)

    def _on_mined(self, t: int, i: int, block):
        peer = self.peers[i]
        peer.busy = False
        self.last_mining_tick = t
        self.blocks_mined[block.level] += 1
        if block.level == 0:
            peer.stats.basic_mined += 1
        else:
            peer.stats.compounds_mined += 1
        self._arrive(peer, t, block, sender=None)
        self._start_mining(peer, t)

    def _on_exhausted(self, t: int, i: int, level: int, chs: frozenset):
        peer = self.peers[i]
        peer.busy = False
        self.last_mining_tick = t
        peer.stats.compound_exhausted += 1
        peer.exhausted[level] = chs | (peer.exhausted.get(level, frozenset()) & self._pool_hashes(peer, level))
        self._start_mining(peer, t)

    def _pool_hashes(self, peer: _Peer, level: int) -> frozenset:
        return frozenset(b.ch for b in self._compound_pool(peer, level))

    # -- gossip and ledgers -----------------------------------------------------

    def _valid(self, block) -> bool:
        # validation is a pure function of the block, so one verdict serves every peer
        ok = self._validity.get(block.ch)
        if ok is None:
            ok = validate(block, self.params,
                          check_signatures=self.config.check_signatures,
                          check_proofs=self.config.mining_mode == "real").ok
            self._validity[block.ch] = ok
        return ok

    def _on_deliver(self, t: int, i: int, block, sender: int):
        self._arrive(self.peers[i], t, block, sender)

    def _arrive(self, peer: _Peer, t: int, block, sender):
        if block.ch in peer.trace.seen:
            return
        if not self._valid(block):
            peer.stats.rejected += 1
            return
        due = record_arrival(peer.trace, t, block, self.q)
        peer.arrivals.append((t, block))
        self.arrival_counts[t][block.level] += 1
        self.schedule(due, _CHECK, "check", peer.index)
        if block.level < self.config.compound_policy:
            peer.pools[block.level][block.ch] = block
        if block.level > 0:
            for s in block.sub_blocks:
                peer.covered.add(s.ch)
                peer.pools[s.level].pop(s.ch, None)
        lo, hi = self.config.delay_ticks
        for nb in peer.neighbors:
            if nb != sender:
                self.schedule(t + self.rng.randint(lo, hi), _ARRIVE, "deliver", nb, block, peer.index)
        self._start_mining(peer, t)

    def _on_check(self, t: int, i: int):
        peer = self.peers[i]
        commit_at(peer.trace, peer.ledger, t, self.q)
        for pool in peer.pools.values():
            for ch in [ch for ch in pool if ch not in peer.trace.pending]:
                del pool[ch]
        self._start_mining(peer, t)

    def _report(self) -> SimReport:
        ledgers = [export_ledger(p.ledger) for p in self.peers]
        canonical = [export_ledger(p.ledger, ticks=False) for p in self.peers]
        divergence = None
        for i, c in enumerate(canonical[1:], start=1):
            if c != canonical[0]:
                divergence = _describe_divergence(canonical[0], c, i)
                break
        return SimReport(
            config=self.config.to_dict(),
            ledgers=ledgers,
            canonical_ledgers=canonical,
            convergence=divergence is None,
            divergence=divergence,
            blocks_mined=dict(self.blocks_mined),
            total_evaluations=self.total_evaluations,
            arrival_counts={t: dict(c) for t, c in self.arrival_counts.items()},
            peer_stats=[p.stats for p in self.peers],
            entries_created=self.entries_created,
            final_tick=self.now,
            last_mining_tick=self.last_mining_tick,
            quiescent=not self._queue,
            arrival_logs=[p.arrivals for p in self.peers],
        )


def _brief(line: str) -> str:
    fields = line.split(",")
    return f"level {fields[1]}, {len(fields) - 2} entries, first {fields[2][:12] if len(fields) > 2 else '-'}"


def _describe_divergence(ref: str, other: str, peer: int) -> str:
    a, b = ref.splitlines(), other.splitlines()
    for n, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return (f"peer {peer} differs from peer 0 at batch {n}: "
                    f"{_brief(y)} vs {_brief(x)}")
    return f"peer {peer} has {len(b)} batches, peer 0 has {len(a)}"


def run(config: SimConfig) -> SimReport:
    return Simulation(config).run()


def scenario_library() -> dict[str, SimConfig]:
    return {
        "converge-basic": SimConfig(
            num_peers=4, topology="complete", delay_ticks=(1, 50), delta_ticks=200,
            z=8, d=2, entry_rate=4_000_000, mining_mode="modeled", hash_rate=1.0,
            compound_policy=1, entry_window=60_000_000, max_entries=24,
            duration_ticks=61_000_000, seed=1,
        ),
        "too-fast": SimConfig(
            num_peers=4, topology="complete", delay_ticks=(1, 50), delta_ticks=200,
            z=2, d=2, entry_rate=40, mining_mode="modeled", hash_rate=1.0,
            compound_policy=6, entry_window=4_000, duration_ticks=40_000, seed=1,
        ),
        "discriminator": SimConfig(
            num_peers=4, topology="complete", delay_ticks=(1, 50), delta_ticks=200,
            z=2, d=2, entry_rate=40, mining_mode="modeled", hash_rate=1.0,
            compound_policy=1, entry_window=10_000, duration_ticks=60_000, seed=1,
            restricted_pools={0: [0]},
        ),
    }
