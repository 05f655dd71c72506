"""Per-channel load fairness of CCAA vs the common-control-channel baseline on tiered topologies."""

import argparse

import numpy as np

from tscmac.experiments import fairness_pair

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=10)
ap.add_argument("--channels", type=int, default=3)
args = ap.parse_args()

rows = [fairness_pair(s, args.channels) for s in range(args.seeds)]
print("seed ccaa rama")
for s, (a, b) in enumerate(rows):
    print(f"{s} {a:.3f} {b:.3f}")
m = np.mean(rows, axis=0)
print(f"mean {m[0]:.3f} {m[1]:.3f}")
