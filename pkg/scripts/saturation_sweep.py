"""Loss rate vs offered load (fraction of one channel's capacity) with 210-byte packets."""

import argparse

import numpy as np

from tscmac.experiments import saturation_sweep

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=3)
ap.add_argument("--fractions", default="0.1,0.25,0.5,0.75,1,1.5,2,3,4,5")
args = ap.parse_args()

fr = [float(x) for x in args.fractions.split(",")]
labels = ("tsc4", "tsc2", "csma")
loss = saturation_sweep(fr, range(args.seeds), labels)
print("fraction " + " ".join(labels))
for f in fr:
    print(f"{f} " + " ".join(f"{np.mean(loss[(l, f)]):.3f}" for l in labels))
