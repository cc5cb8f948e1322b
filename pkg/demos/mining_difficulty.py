"""
Mining effort and difficulty
============================

Each extra required zero bit halves the chance that a nonce works, so the
mean number of attempts should double with every step of z.
"""

import numpy as np

from coopow import Entry, KeyPair, ProofParams, mine_basic
from coopow.miner import expected_attempts

kp = KeyPair.from_seed(1)
rng = np.random.default_rng(0)

# mine a few hundred blocks at each difficulty, each from a random start nonce
trials = 300
print(" z   mean attempts   expected   ratio to previous")
previous = None
for z in range(4, 11):
    params = ProofParams(z, 2)
    starts = rng.integers(0, 2**62, size=trials)
    attempts = np.array([mine_basic(Entry(b"demo"), kp, params, int(s)).attempts for s in starts])
    mean = attempts.mean()
    ratio = "" if previous is None else f"{mean / previous:.2f}"
    print(f"{z:2d}   {mean:13.1f}   {expected_attempts(0, params):8.0f}   {ratio}")
    previous = mean

# the geometric model also predicts the spread: std close to the mean
params = ProofParams(8, 2)
attempts = np.array([mine_basic(Entry(b"spread"), kp, params, int(s)).attempts
                     for s in rng.integers(0, 2**62, size=1000)])
print(f"\nz=8: mean {attempts.mean():.1f}, std {attempts.std():.1f}, median {np.median(attempts):.0f}")
print("a geometric law has median about 0.69 * mean:", round(0.69 * attempts.mean()))
