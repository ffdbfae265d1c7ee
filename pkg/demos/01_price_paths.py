"""Price paths: seeded GBM ensembles and deterministic stress shapes.

Run:  python demos/01_price_paths.py
"""

import math
import statistics
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from satsrail.market import GbmParams, StressShape, gen_gbm_path, gen_stress_path
from satsrail.rng import child_seed

START = 11_030_000  # $110,300/BTC in cents


def dollars(cents: int) -> str:
    return f"${cents / 100:,.2f}"


print("=== Deterministic stress shapes ===")
for kind in ("linear", "exponential"):
    shape = StressShape(kind=kind, total_drawdown=0.70, horizon_months=24)
    path = gen_stress_path(shape, START)
    marks = ", ".join(dollars(path.prices[t]) for t in (0, 6, 12, 18, 24))
    print(f"{kind:>12}: {marks}")

print()
print("=== GBM ensemble (mu=0, sigma=0.6, 12 months) ===")
params = GbmParams(mu=0.0, sigma=0.6, horizon_months=12)
totals = []
for i in range(5_000):
    path = gen_gbm_path(params, START, child_seed(2024, i))
    totals.append(math.log(path.prices[-1] / path.prices[0]))
mean = statistics.fmean(totals)
print(f"paths: {len(totals)}")
print(f"mean total log-return: {mean:+.4f}  (theory: {-0.6**2 / 2:+.4f})")
print(f"worst path ends at {dollars(round(START * math.exp(min(totals))))}")
print(f"best path ends at  {dollars(round(START * math.exp(max(totals))))}")

replay = gen_gbm_path(params, START, child_seed(2024, 0))
original = gen_gbm_path(params, START, child_seed(2024, 0))
print(f"replay with the same seed is identical: {replay == original}")
