"""Energy with and without the power-saving mode on saturated traffic."""

import argparse

import numpy as np

from tscmac.experiments import psm_trial

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=30)
args = ap.parse_args()

trials = [psm_trial(s) for s in range(args.seeds)]
for s, (r, same) in enumerate(trials):
    print(f"seed {s} ratio {r:.3f} identical_deliveries {same}")
print(f"mean ratio {np.mean([r for r, _ in trials]):.3f}")
