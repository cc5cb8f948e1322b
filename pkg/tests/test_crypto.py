import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coopow.crypto import (
    DecodeError,
    KeyPair,
    canonical_decode,
    canonical_encode,
    hash_bytes,
    hash_pair,
    leading_zero_bits,
    sign,
    verify,
)
from oracles import h


def test_canonical_encode_examples():
    assert canonical_encode([]) == b""
    assert canonical_encode([b"A"]) == bytes.fromhex("000000000000000141")
    assert canonical_encode([b"AB", b""]) != canonical_encode([b"A", b"B"])


def test_canonical_encode_injective_random_pairs():
    rng = random.Random(7)
    alphabet = b"AB\x00"

    def fields():
        return [bytes(rng.choice(alphabet) for _ in range(rng.randrange(4))) for _ in range(rng.randrange(4))]

    seen = {}
    for _ in range(10_000):
        a, b = fields(), fields()
        if a != b:
            assert canonical_encode(a) != canonical_encode(b)
        seen.setdefault(canonical_encode(a), a)
        assert seen[canonical_encode(a)] == a


@given(st.lists(st.binary(max_size=40), max_size=6))
def test_canonical_decode_inverts_encode(fields):
    assert canonical_decode(canonical_encode(fields)) == fields


def test_canonical_decode_truncated():
    with pytest.raises(DecodeError, match="truncated"):
        canonical_decode(bytes.fromhex("0000000000000002" "41"))
    with pytest.raises(DecodeError, match="truncated"):
        canonical_decode(b"\x00\x00")


def test_sha256_published_vectors():
    # digests confirmed with coreutils sha256sum
    assert hash_bytes(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert hash_bytes(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert hash_bytes(b"abc") == hash_bytes(b"abc")


def test_hash_pair_frozen_vectors():
    assert hash_pair(b"x", b"y").hex() == "231ff9ae421066bd352810e4e3042f3475d6a5c5bb87539070a6afbd9232f785"
    assert hash_pair(b"y", b"x").hex() == "8fd3ae65de0625cfd6e4b4de4b96c8bf3ec03c65c8e19acf0ff6915160ffa787"
    assert hash_pair(b"A", b"").hex() == "4f885288986f6fb70f69e69279ce92dcbd1aa76ee745e4efedfe1e7a96a9b76d"
    assert hash_pair(b"", b"A").hex() == "f6cfcf60b1ddc295471643462cd7766aaedca75f3e884f39e780451c5173714a"
    assert hash_pair(b"", b"") == hash_bytes(bytes(16))


@given(st.binary(max_size=64), st.binary(max_size=64))
def test_hash_pair_matches_oracle(a, b):
    assert hash_pair(a, b) == h(a, b)


@pytest.mark.parametrize("digest, expected", [
    (bytes(32), 256),
    (b"\x80" + bytes(31), 0),
    (b"\x00\xff" + bytes(30), 8),
    (b"\x00\x01" + bytes(30), 15),
    (bytes(31) + b"\x01", 255),
])
def test_leading_zero_bits_examples(digest, expected):
    assert leading_zero_bits(digest) == expected


@given(st.binary(min_size=32, max_size=32))
def test_leading_zero_bits_definition(d):
    k = leading_zero_bits(d)
    bits = "".join(f"{x:08b}" for x in d)
    assert bits[:k] == "0" * k
    assert k == 256 or bits[k] == "1"


def test_leading_zero_bits_rejects_wrong_length():
    with pytest.raises(DecodeError):
        leading_zero_bits(b"\x00" * 31)


def test_sign_verify(kp, other_kp):
    msg = b"message"
    s = sign(kp, msg)
    assert len(s) == 64
    assert verify(kp.public, msg, s)
    assert not verify(kp.public, msg + b"x", s)
    assert not verify(other_kp.public, msg, s)


def test_verify_rejects_malformed_lengths(kp):
    s = sign(kp, b"m")
    with pytest.raises(DecodeError):
        verify(kp.public[:31], b"m", s)
    with pytest.raises(DecodeError):
        verify(kp.public, b"m", s[:63])
    with pytest.raises(DecodeError):
        KeyPair.from_secret(b"short")


def test_key_derivation_is_deterministic():
    assert KeyPair.from_seed(5) == KeyPair.from_seed(5)
    assert KeyPair.from_seed(5).public != KeyPair.from_seed(6).public
