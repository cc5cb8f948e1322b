"""
Building and checking compound blocks
=====================================

Basic blocks carry entries. A compound block of level n points at d blocks of
level n - 1 and needs z + n leading zero bits. Here we mine a small tree and
then break it in a few ways to see what the validator reports.
"""

from coopow import Entry, KeyPair, ProofParams, mine_basic, mine_compound, validate
from coopow.blocks import encode_block, decode_block, extract_entries, render_block
from coopow.miner import MiningExhausted, SequenceSearchPlan

params = ProofParams(z=3, d=2)
kp = KeyPair.from_seed("demo")

leaves = [mine_basic(Entry(b"entry %d" % i), kp, params).block for i in range(6)]
extra = 0


def fresh(level):
    global extra
    extra += 1
    if level == 0:
        return mine_basic(Entry(b"extra %d" % extra), kp, params).block
    return compound_from([fresh(level - 1) for _ in range(params.d)])


def compound_from(pool):
    # a small pool may run out of orderings; grow it with one more block and retry
    while True:
        try:
            return mine_compound(SequenceSearchPlan(pool), kp, params).block
        except MiningExhausted:
            pool = pool + [fresh(pool[0].level)]


left = compound_from(leaves[:3])
right = compound_from(leaves[3:])
root = compound_from([left, right])

print(render_block(root))
print("\nvalidation:", validate(root, params, check_signatures=True))
print("entries:", [e.payload for e in extract_entries(root)])

wire = encode_block(root)
print(f"\nwire size {len(wire)} bytes, round trip equal: {decode_block(wire) == root}")

# tamper with a leaf: the leaf loses its proof and its parent's hash changes
leaf = left.sub_blocks[0]
bad_leaf = type(leaf)(leaf.nonce + 1, leaf.entry, leaf.signer, leaf.signature)
bad_left = type(left)(left.level, (bad_leaf,) + left.sub_blocks[1:], left.signer, left.signature)
bad_root = type(root)(root.level, (bad_left, right), root.signer, root.signature)
print("\nafter changing one nonce:")
print(validate(bad_root, params, check_signatures=True))
