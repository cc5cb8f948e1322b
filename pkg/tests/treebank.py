"""Builders for random valid block trees and invalid mutations of them."""
import random

from coopow import Entry, KeyPair, MiningExhausted, ProofParams, SequenceSearchPlan, mine_basic, mine_compound
from coopow.blocks import BasicBlock, CompoundBlock, make_basic, signing_message
from coopow.crypto import sign

KEYS = [KeyPair.from_seed(f"bank-{i}") for i in range(4)]
KEY_BY_PUBLIC = {kp.public: kp for kp in KEYS}


def build_bank(z, d, per_level=6, max_level=3, seed=0):
    """Proved blocks per level, mined for real at threshold z.

    An exhausted compound search grows the level below by one block and
    retries, so small pools cannot stall the build.
    """
    rng = random.Random(seed)
    params = ProofParams(z, d)
    bank = {level: [] for level in range(max_level + 1)}

    def grow(level):
        kp = rng.choice(KEYS)
        if level == 0:
            entry = Entry(b"bank-%d-%d-%d" % (d, seed, len(bank[0])))
            bank[0].append(mine_basic(entry, kp, params, start_nonce=rng.getrandbits(32)).block)
            return
        while len(bank[level - 1]) < d:
            grow(level - 1)
        while True:
            pool = rng.sample(bank[level - 1], min(len(bank[level - 1]), d + 2))
            try:
                b = mine_compound(SequenceSearchPlan(pool, "random", rng.getrandbits(32)), kp, params).block
            except MiningExhausted:
                grow(level - 1)
                continue
            if b.ch not in {x.ch for x in bank[level]}:
                bank[level].append(b)
                return
            grow(level - 1)

    for _ in range(per_level * 2 + d):
        grow(0)
    for level in range(1, max_level + 1):
        while len(bank[level]) < per_level:
            grow(level)
    return bank


def resign(b):
    kp = KEY_BY_PUBLIC[b.signer]
    if isinstance(b, BasicBlock):
        return make_basic(b.nonce, b.entry, kp)
    unsigned = CompoundBlock(b.level, b.sub_blocks, b.signer)
    return CompoundBlock(b.level, b.sub_blocks, b.signer, sign(kp, signing_message(unsigned)))


def replace_at(b, path, fn):
    """Rebuild b with fn applied at path (list of indices), re-signing ancestors."""
    if not path:
        return fn(b)
    i, rest = path[0], path[1:]
    subs = list(b.sub_blocks)
    subs[i] = replace_at(subs[i], rest, fn)
    return resign(CompoundBlock(b.level, subs, b.signer))


def random_path(b, rng, want_compound=False):
    path = []
    node = b
    while isinstance(node, CompoundBlock):
        if want_compound and (rng.random() < 0.4 or node.level == 1):
            return path
        i = rng.randrange(len(node.sub_blocks))
        path.append(i)
        node = node.sub_blocks[i]
    return None if want_compound else path


MUTATIONS = ("nonce", "drop", "duplicate", "wrong_level", "signature", "swap", "extra")


def mutate(b, bank, rng, kind):
    if kind == "nonce" or not isinstance(b, CompoundBlock):
        if kind == "signature":
            return BasicBlock(b.nonce, b.entry, b.signer, bytes([b.signature[0] ^ 1]) + b.signature[1:]) \
                if isinstance(b, BasicBlock) else b
        path = random_path(b, rng)
        return replace_at(b, path, lambda leaf: resign(
            BasicBlock((leaf.nonce + rng.randrange(1, 1000)) % (1 << 64), leaf.entry, leaf.signer)))
    path = random_path(b, rng, want_compound=True)

    def at(node):
        subs = list(node.sub_blocks)
        if kind == "drop":
            subs.pop(rng.randrange(len(subs)))
        elif kind == "duplicate":
            i, j = rng.sample(range(len(subs)), 2)
            subs[j] = subs[i]
        elif kind == "wrong_level":
            other = [lv for lv in bank if lv != node.level - 1]
            subs[rng.randrange(len(subs))] = rng.choice(bank[rng.choice(other)])
        elif kind == "swap":
            subs.reverse()
        elif kind == "extra":
            subs.append(rng.choice([s for s in bank[node.level - 1] if s not in subs]))
        elif kind == "signature":
            return CompoundBlock(node.level, node.sub_blocks, node.signer,
                                 bytes([node.signature[0] ^ 1]) + node.signature[1:])
        return resign(CompoundBlock(node.level, subs, node.signer))

    return replace_at(b, path, at)
