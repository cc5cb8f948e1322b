"""Cooperative proof-of-work: hierarchically proved blocks, quiet-period
ledgers and a deterministic gossip simulator."""

from coopow.blocks import (
    BasicBlock,
    CompoundBlock,
    Entry,
    ProofParams,
    ValidationReport,
    Violation,
    characteristic_hash,
    decode_block,
    encode_block,
    extract_entries,
    is_proved,
    required_zero_bits,
    validate,
)
from coopow.crypto import (
    DecodeError,
    KeyPair,
    canonical_encode,
    hash_bytes,
    hash_pair,
    leading_zero_bits,
    sign,
    verify,
)
from coopow.ledger import (
    ArrivalTrace,
    LedgerEngine,
    LedgerState,
    commit_at,
    is_quiet,
    quiet_floor,
    record_arrival,
    replay,
)
from coopow.miner import (
    MiningExhausted,
    MiningOutcome,
    SequenceSearchPlan,
    expected_attempts,
    mine_basic,
    mine_compound,
)
from coopow.simnet import SimConfig, SimReport, run, scenario_library

__version__ = "0.1.0"
