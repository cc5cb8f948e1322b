"""
Network simulation
==================

Runs the shipped scenarios, then sweeps the entry rate to show how often
peers disagree when arrivals sit close to the quiet window.
"""

import dataclasses

import numpy as np

from coopow.simnet import run, scenario_library

for name, cfg in scenario_library().items():
    report = run(cfg)
    s = report.summary()
    print(f"{name:14s} converged={report.convergence!s:5s} entries={report.entries_created:4d} "
          f"blocks={s['blocks_mined']} exhaustion={[round(p['exhaustion_rate'], 2) for p in s['peers']]}")
    if report.divergence:
        print("   ", report.divergence)

# longer gaps between entries make the ledgers agree more often
base = scenario_library()["converge-basic"]
seeds = 40
print("\nentry rate per peer   diverged runs")
for rate in (40_000, 200_000, 1_000_000, 4_000_000):
    diverged = np.array([not run(dataclasses.replace(base, entry_rate=rate, seed=s)).convergence
                         for s in range(seeds)])
    print(f"{rate:19,d}   {diverged.sum():3d} / {seeds}")
