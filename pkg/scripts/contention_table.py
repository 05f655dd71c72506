"""Mean negotiation completion time vs number of concurrent flows."""

import argparse

from tscmac.experiments import NCTFS, contention_curve

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=20)
ap.add_argument("--channels", type=int, default=4)
args = ap.parse_args()

y = contention_curve(NCTFS, range(args.seeds), args.channels)
print("nctf contention_ms")
for n, v in zip(NCTFS, y):
    print(f"{n} {v * 1e3:.2f}")
