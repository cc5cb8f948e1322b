"""Golden test vectors pinning the byte-level contract.

All vectors are built from fixed inputs and deterministic Ed25519 keys, so
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

from coopow.blocks import (
    BasicBlock,
    CompoundBlock,
    Entry,
    ProofParams,
    encode_block,
    extract_entries,
    make_basic,
    make_compound,
    required_zero_bits,
)
from coopow.crypto import KeyPair, canonical_encode, hash_bytes, hash_pair, leading_zero_bits
from coopow.miner import expected_attempts


def encoding_vectors() -> list[dict]:
    cases = [[], [b"A"], [b"AB", b""], [b"A", b"B"], [b""], [b"\x00" * 3, b"xyz", b""]]
    return [{"fields_hex": [f.hex() for f in c], "encoding_hex": canonical_encode(c).hex()} for c in cases]


def hash_vectors() -> dict:
    inputs = [b"", b"abc", b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"]
    pairs = [(b"x", b"y"), (b"y", b"x"), (b"A", b""), (b"", b"A"), (b"", b"")]
    return {
        "sha256": [{"input_hex": i.hex(), "digest_hex": hash_bytes(i).hex()} for i in inputs],
        "hash_pair": [{"left_hex": a.hex(), "right_hex": b.hex(), "digest_hex": hash_pair(a, b).hex()}
                      for a, b in pairs],
    }


def leading_zero_vectors() -> list[dict]:
    digests = [bytes(32), b"\x80" + bytes(31), b"\x00\xff" + bytes(30), b"\x00\x01" + bytes(30),
               b"\x0f" + b"\xff" * 31, bytes(31) + b"\x01"]
    return [{"digest_hex": d.hex(), "leading_zero_bits": leading_zero_bits(d)} for d in digests]


def threshold_vectors() -> list[dict]:
    cases = [(0, 0), (8, 0), (8, 1), (8, 3), (255, 0), (255, 1), (8, 248), (8, 249), (8, 300)]
    out = []
    for z, level in cases:
        params = ProofParams(z, 2)
        out.append({"z": z, "level": level,
                    "required_zero_bits": required_zero_bits(level, params),
                    "expected_attempts_log2": required_zero_bits(level, params),
                    "expected_attempts": expected_attempts(level, params)})
    return out


def _block_vector(name: str, b) -> dict:
    return {
        "name": name,
        "level": b.level,
        "ch_hex": b.ch.hex(),
        "block_hex": encode_block(b).hex(),
        "entry_ids_hex": [e.entry_id.hex() for e in extract_entries(b)],
    }


def block_vectors() -> list[dict]:
    zero = bytes(32)
    leaves = [BasicBlock(i, Entry(b"e%d" % i), zero) for i in range(4)]
    signer1, signer2 = bytes([1]) * 32, bytes([2]) * 32
    c01 = CompoundBlock(1, leaves[:2], signer1)
    c10 = CompoundBlock(1, leaves[1::-1], signer1)
    c23 = CompoundBlock(1, leaves[2:], signer1)
    tree = CompoundBlock(2, (c01, c23), signer2)
    kp = KeyPair.from_seed("vectors")
    signed_leaves = [make_basic(i, Entry(b"signed-%d" % i), kp) for i in range(3)]
    signed = make_compound(signed_leaves, kp)
    return [
        _block_vector("basic nonce=0 payload='' signer=zeros", BasicBlock(0, Entry(b""), zero)),
        *(_block_vector(f"basic leaf {i}", b) for i, b in enumerate(leaves)),
        _block_vector("compound d=2 (leaf0, leaf1)", c01),
        _block_vector("compound d=2 (leaf1, leaf0)", c10),
        _block_vector("compound d=2 level 2 tree", tree),
        _block_vector("signed compound d=3", signed),
    ]


def all_vectors() -> dict[str, object]:
    return {
        "encoding.json": encoding_vectors(),
        "hashes.json": hash_vectors(),
        "leading_zeros.json": leading_zero_vectors(),
        "thresholds.json": threshold_vectors(),
        "blocks.json": block_vectors(),
    }


def write_vectors(out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in all_vectors().items():
        p = out / name
        p.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written
