"""Brute-force search for proved blocks.

Basic blocks are mined by sequential nonce search. Compound blocks carry no
nonce, so they are mined by searching ordered selections of ``d`` distinct
sub-blocks from a pool; a finite pool can be exhausted without success.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import random
import time
from dataclasses import dataclass

from coopow.blocks import (
    BasicBlock,
    Block,
    CompoundBlock,
    Entry,
    ProofParams,
    compound_hash,
    required_zero_bits,
    signing_message,
)
from coopow.crypto import KeyPair, hash_pair, sign

EXHAUSTIVE = "exhaustive"
RANDOM = "random"
STRATEGIES = (EXHAUSTIVE, RANDOM)

# Above this many orderings, random search samples tuples lazily instead of
# shuffling the materialized search space.
_MATERIALIZE_LIMIT = 200_000


class MiningExhausted(Exception):
    """Search stopped without finding a proved block.

    ``next_nonce`` lets a capped basic search resume where it stopped;
    ``space_exhausted`` is set when a compound search ran out of orderings.
    """

    def __init__(self, attempts: int, next_nonce: int | None = None, space_exhausted: bool = False):
        self.attempts = attempts
        self.next_nonce = next_nonce
        self.space_exhausted = space_exhausted
        reason = "search space exhausted" if space_exhausted else "attempt cap reached"
        super().__init__(f"{reason} after {attempts} attempts")


@dataclass(frozen=True)
class MiningOutcome:
    block: Block
    attempts: int
    elapsed: float


@dataclass(frozen=True)
class SequenceSearchPlan:
    pool: tuple
    strategy: str = EXHAUSTIVE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pool", tuple(self.pool))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not self.pool:
            raise ValueError("empty pool")
        if len({b.ch for b in self.pool}) != len(self.pool):
            raise ValueError("pool blocks must be distinct by characteristic hash")
        if len({b.level for b in self.pool}) != 1:
            raise ValueError("pool blocks must share one level")

    @property
    def level(self) -> int:
        return self.pool[0].level + 1


def _target(bits: int) -> int:
    # A digest, read as a big-endian integer, has >= bits leading zeros iff it is below this.
    return 1 << (256 - bits)


def mine_basic(
    entry: Entry,
    kp: KeyPair,
    params: ProofParams,
    start_nonce: int = 0,
    max_attempts: int | None = None,
) -> MiningOutcome:
    started = time.perf_counter()
    target = _target(required_zero_bits(0, params))
    inner = hash_pair(entry.payload, kp.public)
    # canonical_encode([nonce, inner]) with the nonce bytes spliced in per attempt
    prefix = (8).to_bytes(8, "big")
    suffix = (32).to_bytes(8, "big") + inner
    sha256 = hashlib.sha256
    nonce = start_nonce
    attempts = 0
    while max_attempts is None or attempts < max_attempts:
        if nonce >= 1 << 64:
            raise MiningExhausted(attempts, next_nonce=None, space_exhausted=True)
        attempts += 1
        digest = sha256(prefix + nonce.to_bytes(8, "big") + suffix).digest()
        if int.from_bytes(digest, "big") < target:
            unsigned = BasicBlock(nonce, entry, kp.public)
            block = BasicBlock(nonce, entry, kp.public, sign(kp, signing_message(unsigned)))
            return MiningOutcome(block, attempts, time.perf_counter() - started)
        nonce += 1
    raise MiningExhausted(attempts, next_nonce=nonce)


def search_space_size(pool_size: int, d: int) -> int:
    """Number of ordered ``d``-selections without repetition: k!/(k-d)!."""
    return math.perm(pool_size, d) if pool_size >= d else 0


def _random_orderings(k: int, d: int, rng: random.Random):
    total = search_space_size(k, d)
    if total <= _MATERIALIZE_LIMIT:
        tuples = list(itertools.permutations(range(k), d))
        rng.shuffle(tuples)
        yield from tuples
        return
    visited = set()
    while len(visited) < total:
        t = tuple(rng.sample(range(k), d))
        if t not in visited:
            visited.add(t)
            yield t


def candidate_orderings(plan: SequenceSearchPlan, d: int):
    """Index tuples in the order the plan's strategy visits them."""
    k = len(plan.pool)
    if plan.strategy == EXHAUSTIVE:
        return itertools.permutations(range(k), d)
    return _random_orderings(k, d, random.Random(plan.seed))


def mine_compound(
    plan: SequenceSearchPlan,
    kp: KeyPair,
    params: ProofParams,
    max_attempts: int | None = None,
) -> MiningOutcome:
    if len(plan.pool) < params.d:
        raise ValueError(f"pool of {len(plan.pool)} blocks is smaller than d={params.d}")
    started = time.perf_counter()
    level = plan.level
    target = _target(required_zero_bits(level, params))
    hashes = [b.ch for b in plan.pool]
    attempts = 0
    for idx in candidate_orderings(plan, params.d):
        if max_attempts is not None and attempts >= max_attempts:
            raise MiningExhausted(attempts)
        attempts += 1
        ch = compound_hash([hashes[i] for i in idx], kp.public)
        if int.from_bytes(ch, "big") < target:
            subs = tuple(plan.pool[i] for i in idx)
            unsigned = CompoundBlock(level, subs, kp.public)
            block = CompoundBlock(level, subs, kp.public, sign(kp, signing_message(unsigned)))
            return MiningOutcome(block, attempts, time.perf_counter() - started)
    raise MiningExhausted(attempts, space_exhausted=True)


def expected_attempts(level: int, params: ProofParams) -> float:
    """Mean of the geometric attempt count at a level: 2**required_zero_bits."""
    return 2.0 ** required_zero_bits(level, params)
