"""Throughput and delay vs packet size for the four protocol setups on the scaled mesh scenario."""

import argparse

import numpy as np

from tscmac.experiments import PROTOCOLS, SIZES, knee, ordering_batch, ordering_violations, throughput_curve

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=5)
args = ap.parse_args()

res = ordering_batch(range(args.seeds), SIZES, tuple(PROTOCOLS))
print("label size throughput_kbps delay_ms")
for lab in PROTOCOLS:
    for z in SIZES:
        recs = [res[(lab, s, z)] for s in range(args.seeds)]
        thr = np.mean([r.aggregated_throughput for r in recs]) / 1e3
        d = [r.mean_end_to_end_delay for r in recs if r.mean_end_to_end_delay is not None]
        print(f"{lab} {z} {thr:.1f} {np.mean(d) * 1e3 if d else float('nan'):.1f}")
sizes, thr = throughput_curve(res, "tsc4")
print("tsc4 knee (nondecreasing, end/start slope):", knee(sizes, thr))
bad = ordering_violations(res)
print(f"{len(bad)} ordering violations")
for b in bad:
    print("  " + b)
