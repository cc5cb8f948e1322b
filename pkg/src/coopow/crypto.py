"""Byte-level primitives: canonical encoding, SHA-256 hashing, Ed25519 signing.

Every other module depends on the exact byte layout produced here:

* ``canonical_encode`` prefixes each field with its length as an 8-byte
  big-endian unsigned integer, so field lists encode injectively.
* ``hash_pair(x, y)`` is ``sha256(canonical_encode([x, y]))``.
* Bit 0 of a digest is the most significant bit of byte 0.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from typing import Iterable, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed25519

HASH_LEN_BITS = 256
DIGEST_SIZE = 32
PUBLIC_KEY_SIZE = 32
SECRET_KEY_SIZE = 32
SIGNATURE_SIZE = 64
LENGTH_PREFIX_SIZE = 8

Digest = bytes
BytesLike = Union[bytes, bytearray, memoryview]


class DecodeError(ValueError):
    """Raised when bytes do not decode to a well-formed protocol object."""


def encode_uint(value: int) -> bytes:
    """8-byte big-endian encoding used for nonces, levels and lengths."""
    if not 0 <= value < 1 << 64:
        raise ValueError(f"integer out of u64 range: {value}")
    return value.to_bytes(8, "big")


def canonical_encode(fields: Iterable[BytesLike]) -> bytes:
    out = bytearray()
    for f in fields:
        f = bytes(f)
        out += len(f).to_bytes(LENGTH_PREFIX_SIZE, "big")
        out += f
    return bytes(out)


def canonical_decode(data: BytesLike) -> list[bytes]:
    """Inverse of :func:`canonical_encode`.

    Raises DecodeError("truncated") if a length prefix or field body runs
    past the end of ``data``.
    """
    data = bytes(data)
    fields = []
    pos = 0
    while pos < len(data):
        if pos + LENGTH_PREFIX_SIZE > len(data):
            raise DecodeError("truncated")
        n = int.from_bytes(data[pos:pos + LENGTH_PREFIX_SIZE], "big")
        pos += LENGTH_PREFIX_SIZE
        if pos + n > len(data):
            raise DecodeError("truncated")
        fields.append(data[pos:pos + n])
        pos += n
    return fields


def hash_bytes(data: BytesLike) -> Digest:
    return hashlib.sha256(data).digest()


def hash_pair(left: BytesLike, right: BytesLike) -> Digest:
    """Two-argument hash ``h(left, right)`` over the canonical encoding."""
    return hash_bytes(canonical_encode((left, right)))


def leading_zero_bits(d: BytesLike) -> int:
    d = bytes(d)
    if len(d) != DIGEST_SIZE:
        raise DecodeError(f"digest must be {DIGEST_SIZE} bytes, got {len(d)}")
    return HASH_LEN_BITS - int.from_bytes(d, "big").bit_length()


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 key pair; ``secret`` is the 32-byte seed."""

    secret: bytes = field(repr=False)
    public: bytes

    @classmethod
    def from_secret(cls, secret: bytes) -> "KeyPair":
        if len(secret) != SECRET_KEY_SIZE:
            raise DecodeError(f"secret key must be {SECRET_KEY_SIZE} bytes, got {len(secret)}")
        sk = ed25519.Ed25519PrivateKey.from_private_bytes(secret)
        public = sk.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return cls(secret=bytes(secret), public=public)

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls.from_secret(os.urandom(SECRET_KEY_SIZE))

    @classmethod
    def from_seed(cls, seed: int | bytes | str) -> "KeyPair":
        """Deterministic key pair for tests and simulations."""
        if isinstance(seed, int):
            seed = encode_uint(seed)
        elif isinstance(seed, str):
            seed = seed.encode()
        return cls.from_secret(hash_bytes(b"coopow-key" + seed))


def sign(kp: KeyPair, msg: BytesLike) -> bytes:
    sk = ed25519.Ed25519PrivateKey.from_private_bytes(kp.secret)
    return sk.sign(bytes(msg))


def verify(public: BytesLike, msg: BytesLike, signature: BytesLike) -> bool:
    """True iff ``signature`` was produced over ``msg`` by the owner of ``public``.

    Malformed key or signature lengths raise DecodeError rather than
    returning False.
    """
    public, signature = bytes(public), bytes(signature)
    if len(public) != PUBLIC_KEY_SIZE:
        raise DecodeError(f"public key must be {PUBLIC_KEY_SIZE} bytes, got {len(public)}")
    if len(signature) != SIGNATURE_SIZE:
        raise DecodeError(f"signature must be {SIGNATURE_SIZE} bytes, got {len(signature)}")
    try:
        pk = ed25519.Ed25519PublicKey.from_public_bytes(public)
        pk.verify(signature, bytes(msg))
    except (InvalidSignature, ValueError):
        return False
    return True
