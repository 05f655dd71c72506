"""Throughput with the adaptive negotiation window vs a fixed 20 ms window, per number of flows."""

import argparse

from tscmac.experiments import NCTFS, aaa_vs_fixed

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=3)
ap.add_argument("--duration", type=float, default=10.0)
ap.add_argument("--guard", choices=("literal", "amended"), default="literal")
args = ap.parse_args()

ad, fx = aaa_vs_fixed(NCTFS, range(args.seeds), args.duration, args.guard)
print("nctf adaptive_kbps fixed_kbps")
for n, a, f in zip(NCTFS, ad, fx):
    print(f"{n} {a / 1e3:.1f} {f / 1e3:.1f}")
