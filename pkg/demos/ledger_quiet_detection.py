"""
Quiet detection and ledger commits
==================================

A peer commits a batch at level n once no block of level n or higher has
arrived for delta ticks. We feed one arrival trace into the incremental
engine, compare with the literal replay, and plot the quiet floor over time.
"""

import numpy as np

from coopow import Entry, KeyPair, ProofParams, mine_basic, mine_compound
from coopow.ledger import ArrivalTrace, LedgerEngine, export_ledger, quiet_floor, record_arrival, replay
from coopow.miner import MiningExhausted, SequenceSearchPlan

params = ProofParams(z=2, d=2)
kp = KeyPair.from_seed(7)
delta = 40

basics = [mine_basic(Entry(b"tx-%02d" % i), kp, params).block for i in range(8)]
compounds = []
for i in range(0, 8, 4):
    try:
        compounds.append(mine_compound(SequenceSearchPlan(basics[i:i + 4]), kp, params).block)
    except MiningExhausted:
        pass

# bursts of basic blocks, each followed by a compound over some of them
times = [5, 9, 14, 20, 120, 126, 131, 140]
events = list(zip(times, basics))
for c, t in zip(compounds, (60, 200)):
    events.append((t, c))
events.sort(key=lambda e: e[0])

engine = LedgerEngine(delta)
for t, b in events:
    engine.receive(t, b)
ledger = engine.flush()
print(export_ledger(ledger))
print("matches replay:", export_ledger(ledger) == export_ledger(replay(events, delta)))

trace = ArrivalTrace()
for t, b in events:
    record_arrival(trace, t, b, delta)
ticks = np.arange(0, 320, 10)
floor = np.array([quiet_floor(trace, int(t), delta) for t in ticks])
print("\n tick  lowest quiet level")
for t, q in zip(ticks, floor):
    print(f"{t:5d}  {q:2d} " + "#" * int(q))
