"""Block types, characteristic hashes, proof predicates and validation.

A basic block is a signed ``(nonce, entry)`` pair; a compound block of
level ``n`` is a signed ordered sequence of exactly ``d`` proved blocks of
level ``n - 1``. A block of level ``n`` is proved when its characteristic
hash starts with ``min(z + n, 256)`` zero bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Union

from coopow.crypto import (
    HASH_LEN_BITS,
    PUBLIC_KEY_SIZE,
    SIGNATURE_SIZE,
    DecodeError,
    KeyPair,
    canonical_decode,
    canonical_encode,
    encode_uint,
    hash_bytes,
    hash_pair,
    leading_zero_bits,
    sign,
    verify,
)

TAG_BASIC = b"\x00"
TAG_COMPOUND = b"\x01"
MAX_DECODE_DEPTH = 64


@dataclass(frozen=True)
class ProofParams:
    z: int
    d: int
    hash_len_bits: int = HASH_LEN_BITS

    def __post_init__(self):
        if self.hash_len_bits != HASH_LEN_BITS:
            raise ValueError(f"hash length is fixed at {HASH_LEN_BITS} bits")
        if not 0 <= self.z < self.hash_len_bits:
            raise ValueError(f"z must satisfy 0 <= z < {self.hash_len_bits}, got {self.z}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")


@dataclass(frozen=True)
class Entry:
    payload: bytes

    @cached_property
    def entry_id(self) -> bytes:
        return hash_bytes(self.payload)


@dataclass(frozen=True)
class BasicBlock:
    nonce: int
    entry: Entry
    signer: bytes
    signature: bytes = bytes(SIGNATURE_SIZE)

    level = 0

    @cached_property
    def ch(self) -> bytes:
        return hash_pair(encode_uint(self.nonce), hash_pair(self.entry.payload, self.signer))


@dataclass(frozen=True)
class CompoundBlock:
    level: int
    sub_blocks: tuple
    signer: bytes
    signature: bytes = bytes(SIGNATURE_SIZE)

    def __post_init__(self):
        object.__setattr__(self, "sub_blocks", tuple(self.sub_blocks))

    @cached_property
    def ch(self) -> bytes:
        return compound_hash([s.ch for s in self.sub_blocks], self.signer)


Block = Union[BasicBlock, CompoundBlock]


def compound_hash(sub_hashes, signer: bytes) -> bytes:
    """Nested hash ``h(c1, h(c2, ... h(cd, signer)))`` over sub-block hashes."""
    acc = signer
    for c in reversed(sub_hashes):
        acc = hash_pair(c, acc)
    return acc


def characteristic_hash(b: Block) -> bytes:
    return b.ch


def required_zero_bits(level: int, params: ProofParams) -> int:
    return min(params.z + level, params.hash_len_bits)


def is_proved(b: Block, params: ProofParams) -> bool:
    """Shallow proof check; sub-blocks are not inspected."""
    return leading_zero_bits(b.ch) >= required_zero_bits(b.level, params)


def signing_message(b: Block) -> bytes:
    """Bytes covered by a block's signature: tag, level and characteristic hash."""
    tag = TAG_BASIC if isinstance(b, BasicBlock) else TAG_COMPOUND
    return canonical_encode((tag, encode_uint(b.level), b.ch))


def make_basic(nonce: int, entry: Entry, kp: KeyPair) -> BasicBlock:
    unsigned = BasicBlock(nonce, entry, kp.public)
    return BasicBlock(nonce, entry, kp.public, sign(kp, signing_message(unsigned)))


def make_compound(sub_blocks, kp: KeyPair) -> CompoundBlock:
    sub_blocks = tuple(sub_blocks)
    if not sub_blocks:
        raise ValueError("compound block needs sub-blocks")
    level = sub_blocks[0].level + 1
    unsigned = CompoundBlock(level, sub_blocks, kp.public)
    return CompoundBlock(level, sub_blocks, kp.public, sign(kp, signing_message(unsigned)))


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    path: str
    kind: str
    detail: str = ""

    def __str__(self):
        text = f"{self.kind} at path {self.path}"
        return f"{text}: {self.detail}" if self.detail else text


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _child_path(path: str, i: int) -> str:
    return f"{path}{i}" if path == "/" else f"{path}/{i}"


def _structural_problems(b) -> list[str]:
    problems = []
    if isinstance(b, BasicBlock):
        if not isinstance(b.nonce, int) or not 0 <= b.nonce < 1 << 64:
            problems.append("nonce out of u64 range")
        if not isinstance(b.entry, Entry) or not isinstance(b.entry.payload, bytes):
            problems.append("entry is not an Entry")
    elif isinstance(b, CompoundBlock):
        if not isinstance(b.level, int) or not 1 <= b.level < 1 << 64:
            problems.append(f"compound level must be >= 1, got {b.level!r}")
        bad = [i for i, s in enumerate(b.sub_blocks) if not isinstance(s, (BasicBlock, CompoundBlock))]
        if bad:
            problems.append(f"sub-blocks {bad} are not blocks")
    else:
        return [f"not a block: {type(b).__name__}"]
    if not isinstance(b.signer, bytes) or len(b.signer) != PUBLIC_KEY_SIZE:
        problems.append(f"signer must be {PUBLIC_KEY_SIZE} bytes")
    if not isinstance(b.signature, bytes) or len(b.signature) != SIGNATURE_SIZE:
        problems.append(f"signature must be {SIGNATURE_SIZE} bytes")
    return problems


def validate(
    b: Block,
    params: ProofParams,
    check_signatures: bool = False,
    check_proofs: bool = True,
) -> ValidationReport:
    """Recursively validate ``b`` and collect every violation found.

    Checks per nested block: structural well-formedness, arity ``d``,
    uniform sub-levels at ``level - 1``, no duplicate sub-block hashes,
    the proof threshold (unless ``check_proofs`` is off, as for blocks from
    a modeled-mining simulation) and optionally the signature. Paths are
    ``/`` for the root and ``/i/j`` for nested sub-blocks.
    """
    report = ValidationReport()
    stack = [("/", b)]
    while stack:
        path, node = stack.pop()
        problems = _structural_problems(node)
        if problems:
            report.violations.append(Violation(path, "malformed", "; ".join(problems)))
            continue
        if isinstance(node, CompoundBlock):
            subs = node.sub_blocks
            if len(subs) != params.d:
                report.violations.append(
                    Violation(path, "wrong arity", f"expected {params.d} sub-blocks, got {len(subs)}"))
            wrong = [i for i, s in enumerate(subs) if s.level != node.level - 1]
            if wrong:
                report.violations.append(
                    Violation(path, "level mismatch", f"sub-blocks {wrong} not at level {node.level - 1}"))
            seen = {}
            for i, s in enumerate(subs):
                if s.ch in seen:
                    report.violations.append(
                        Violation(path, "duplicate sub-block", f"sub-block {i} repeats {seen[s.ch]}"))
                else:
                    seen[s.ch] = i
            stack.extend((_child_path(path, i), s) for i, s in reversed(list(enumerate(subs))))
        if check_proofs and not is_proved(node, params):
            report.violations.append(Violation(
                path, "unproved block",
                f"{leading_zero_bits(node.ch)} leading zero bits < {required_zero_bits(node.level, params)}"))
        if check_signatures and not verify(node.signer, signing_message(node), node.signature):
            report.violations.append(Violation(path, "bad signature"))
    report.violations.sort(key=lambda v: v.path)
    return report


def iter_blocks(b: Block) -> Iterator[tuple[str, Block]]:
    """Depth-first, left-to-right walk yielding ``(path, block)`` pairs."""
    stack = [("/", b)]
    while stack:
        path, node = stack.pop()
        yield path, node
        if isinstance(node, CompoundBlock):
            stack.extend((_child_path(path, i), s) for i, s in reversed(list(enumerate(node.sub_blocks))))


def extract_entries(b: Block) -> list[Entry]:
    return [node.entry for _, node in iter_blocks(b) if isinstance(node, BasicBlock)]


# -- wire format --------------------------------------------------------------

def encode_block(b: Block) -> bytes:
    if isinstance(b, BasicBlock):
        return canonical_encode((TAG_BASIC, encode_uint(b.nonce), b.entry.payload, b.signer, b.signature))
    return canonical_encode(
        (TAG_COMPOUND, encode_uint(b.level), b.signer, b.signature, *(encode_block(s) for s in b.sub_blocks)))


def decode_block(data: bytes, _depth: int = 0) -> Block:
    if _depth > MAX_DECODE_DEPTH:
        raise DecodeError("nesting too deep")
    if not data:
        raise DecodeError("truncated")
    fields = canonical_decode(data)
    tag = fields[0]
    if tag == TAG_BASIC:
        if len(fields) != 5:
            raise DecodeError(f"basic block needs 5 fields, got {len(fields)}")
        nonce, payload, signer, signature = fields[1:]
        if len(nonce) != 8 or len(signer) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
            raise DecodeError("bad lengths")
        return BasicBlock(int.from_bytes(nonce, "big"), Entry(payload), signer, signature)
    if tag == TAG_COMPOUND:
        if len(fields) < 4:
            raise DecodeError(f"compound block needs at least 4 fields, got {len(fields)}")
        level, signer, signature = fields[1:4]
        if len(level) != 8 or len(signer) != PUBLIC_KEY_SIZE or len(signature) != SIGNATURE_SIZE:
            raise DecodeError("bad lengths")
        level = int.from_bytes(level, "big")
        if level < 1:
            raise DecodeError("bad level: compound block level must be >= 1")
        subs = tuple(decode_block(f, _depth + 1) for f in fields[4:])
        return CompoundBlock(level, subs, signer, signature)
    raise DecodeError(f"bad tag: {tag.hex() or '<empty>'}")


def render_block(b: Block) -> str:
    """Indented debug rendering with hex digests and the entry tree."""
    lines = []
    for path, node in iter_blocks(b):
        indent = "  " * (0 if path == "/" else path.count("/"))
        if isinstance(node, BasicBlock):
            lines.append(f"{indent}{path} basic ch={node.ch.hex()} nonce={node.nonce} "
                         f"entry={node.entry.entry_id.hex()} signer={node.signer.hex()[:16]}")
        else:
            lines.append(f"{indent}{path} L{node.level} ch={node.ch.hex()} "
                         f"subs={len(node.sub_blocks)} signer={node.signer.hex()[:16]}")
    return "\n".join(lines)

