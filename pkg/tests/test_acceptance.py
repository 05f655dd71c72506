"""End-to-end acceptance criteria 1-8, each reporting one PASS/FAIL line."""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from tscmac.experiments import (
    NCTFS,
    PROTOCOLS,
    SIZES,
    aaa_vs_fixed,
    contention_curve,
    convex_with_tolerance,
    fairness_pair,
    knee,
    ordering_batch,
    ordering_violations,
    psm_trial,
    saturation_sweep,
    throughput_curve,
)

pytestmark = pytest.mark.acceptance


def report(n, ok, detail, elapsed):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def ordering():
    t = time.time()
    res = ordering_batch(range(5), SIZES, tuple(PROTOCOLS))
    return res, time.time() - t


def test_1_fairness_direction():
    t = time.time()
    pairs = [fairness_pair(s) for s in range(10)]
    ccaa, rama = np.array(pairs).T
    losing = [s for s, (a, b) in enumerate(pairs) if not a > b]
    ok = not losing and 0.60 <= ccaa.mean() <= 0.95 and 0.35 <= rama.mean() <= 0.70
    el = time.time() - t
    report(1, ok and el < 10, f"ccaa_mean={ccaa.mean():.3f} rama_mean={rama.mean():.3f} seeds_not_better={losing}", el)


def test_2_throughput_delay_ordering(ordering):
    res, el = ordering
    bad = ordering_violations(res)
    thr_bad = [b for b in bad if "throughput" in b]
    report(2, not bad and el < 120, f"{len(bad)} violations ({len(thr_bad)} throughput); first: {bad[:3]}", el)


def test_3_throughput_knee(ordering):
    res, _ = ordering
    t = time.time()
    sizes, thr = throughput_curve(res, "tsc4")
    nondec, ratio = knee(sizes, thr)
    report(3, nondec and ratio < 0.25, f"tsc4 mean curve={[round(x) for x in thr]} nondecreasing={nondec} end/start slope={ratio:.3f}", time.time() - t)


FRACTIONS = (0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0)


def test_4_saturation_stability():
    t = time.time()
    labels = ("tsc4", "tsc2", "csma")
    loss = saturation_sweep(FRACTIONS, range(3), labels)
    mean = {k: float(np.mean(v)) for k, v in loss.items()}
    sd = {k: float(np.std(v, ddof=1)) for k, v in loss.items()}
    lo_cut = FRACTIONS[0] + 0.1 * (FRACTIONS[-1] - FRACTIONS[0])
    low = [f for f in FRACTIONS if f <= lo_cut]
    low_ok = all(mean[(l, f)] < 0.10 for l in labels for f in low)
    top_ok = all(mean[(l, FRACTIONS[-1])] > 0.90 for l in labels)
    order_bad = []
    for f in FRACTIONS:
        for a, b in (("tsc4", "tsc2"), ("tsc2", "csma")):
            tol = max(sd[(a, f)], sd[(b, f)])
            if mean[(a, f)] > mean[(b, f)] + tol:
                order_bad.append(f"{a}>{b}@{f}")
    curves = {l: [round(mean[(l, f)], 3) for f in FRACTIONS] for l in labels}
    report(4, low_ok and top_ok and not order_bad,
           f"low_decile_ok={low_ok} top_ok={top_ok} order_violations={order_bad} curves={curves}", time.time() - t)


def test_5_contention_growth():
    t = time.time()
    y = contention_curve(NCTFS, range(20), 4)
    inc = all(b > a for a, b in zip(y, y[1:]))
    convex = convex_with_tolerance(y, 0.10)
    d2 = [y[i - 1] - 2 * y[i] + y[i + 1] for i in range(1, len(y) - 1)]
    report(5, inc and convex, f"ms={[round(v * 1e3, 2) for v in y]} increasing={inc} convex={convex} d2_ms={[round(v * 1e3, 2) for v in d2]}", time.time() - t)


def test_6_aaa_vs_fixed():
    t = time.time()
    ad, fx = aaa_vs_fixed(NCTFS, range(3), 10.0)
    ge = all(a >= f for a, f in zip(ad, fx))
    gain = ad[-1] / fx[-1] - 1 if fx[-1] > 0 else float("inf")
    peak_f = int(np.argmax(fx))
    interior = 0 < peak_f < len(fx) - 1
    peak_a = int(np.argmax(ad))
    aaa_mono = all(b <= a for a, b in zip(ad[peak_a:], ad[peak_a + 1:]))
    ok = ge and gain >= 0.15 and interior and aaa_mono
    report(6, ok, f"adaptive_kbps={[round(a / 1e3) for a in ad]} fixed_kbps={[round(f / 1e3) for f in fx]} "
           f"adaptive>=fixed={ge} gain@100={gain:.3f} fixed_peak_interior={interior} aaa_monotone_after_peak={aaa_mono}",
           time.time() - t)


def test_7_psm_saving():
    t = time.time()
    trials = [psm_trial(s) for s in range(30)]
    ratios = np.array([r for r, _ in trials])
    same = all(s for _, s in trials)
    ok = 0.55 <= ratios.mean() <= 0.85 and same
    report(7, ok, f"mean_ratio={ratios.mean():.3f} min={ratios.min():.3f} max={ratios.max():.3f} delivered_sets_identical={same}", time.time() - t)


def test_8_invariant_suites():
    t = time.time()
    here = Path(__file__).parent
    env = dict(os.environ, PYTHONHASHSEED="0")
    r = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "prop", "-p", "no:cacheprovider", str(here),
         "--ignore", str(here / "test_acceptance.py")],
        capture_output=True, text=True, env=env, cwd=here.parent,
    )
    el = time.time() - t
    tail = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    report(8, r.returncode == 0 and el < 60, f"property suite: {tail}", el)
