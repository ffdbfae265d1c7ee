"""Full Monte Carlo scenario: stochastic prices, routing, churn, survival.

Run:  python demos/06_monte_carlo_scenario.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from satsrail.engine import config_from_dict, mean_finite_coverage, run_scenario


def chan(cid, a, b, cap, bal_a):
    return {"id": cid, "a": a, "b": b, "capacity_msat": cap, "balance_a_msat": bal_a,
            "policy_ab": {"base_msat": 1000, "ppm": 100},
            "policy_ba": {"base_msat": 1000, "ppm": 100}}


raw = {
    "treasury": {
        "btc_core_sats": 1_000_000_000,   # 10 BTC book, scaled down
        "cash0_cents": 40_000,
        "opex_monthly_cents": 15_000,
        "horizon_months": 12,
        "sleeve_fraction": 0.0,
        "var_cap_fraction": 0.20,
        "var_confidence": 0.99,
    },
    "market": {"model": "gbm", "mu": 0.0, "sigma": 0.6},
    "start_price_cents": 10_000_000,
    "graph": {
        "nodes": ["hub", "pay1", "pay2", "shopA", "shopB"],
        "hub": "hub",
        "channels": [
            chan("p1h", "pay1", "hub", 80_000_000_000, 80_000_000_000),
            chan("p2h", "pay2", "hub", 80_000_000_000, 80_000_000_000),
            chan("hsA", "hub", "shopA", 40_000_000_000, 40_000_000_000),
            chan("hsB", "hub", "shopB", 40_000_000_000, 40_000_000_000),
            chan("p1A", "pay1", "shopA", 40_000_000_000, 20_000_000_000),
            chan("p2B", "pay2", "shopB", 40_000_000_000, 20_000_000_000),
        ],
    },
    "merchants": [
        {"id": "shopA", "monthly_gmv_cents": 2_000_000, "take_rate_bps": 30,
         "settle_mode": "fiat"},
        {"id": "shopB", "monthly_gmv_cents": 2_000_000, "take_rate_bps": 30,
         "settle_mode": "fiat"},
    ],
    "rail": {"median_ticket_cents": 5_000, "ticket_sigma": 0.8, "spread_bps": 5,
             "variable_cost_bps": 2, "base_churn": 0.01, "churn_sensitivity": 0.3,
             "max_route_retries": 2},
    "monte_carlo": {"num_paths": 32, "master_seed": 7},
    "payment_cap_per_month": 40,
    "stress_trigger": {"drawdown_threshold": 0.5, "shrink_target": 0.5},
    "rebalance": {"low_watermark": 0.2, "max_fee_bps": 100},
}

report = run_scenario(config_from_dict(raw))
print(f"paths: {report.num_paths}, master seed: {report.master_seed}")
print(f"survival probability: {report.survival_probability:.3f}")
print(f"mean opex coverage:   {mean_finite_coverage(report):.3f}")
print()
print(f"{'path':>4}{'verdict':>10}{'breach':>8}{'success':>9}{'gmv $':>12}{'shrinks':>9}")
for p in report.paths[:10]:
    agg = p.kpi_aggregate
    shrinks = sum(1 for m in p.months if m.shrink_fired)
    print(
        f"{p.path_index:>4}"
        f"{'ok' if p.survives else 'BREACH':>10}"
        f"{str(p.breach_month or '-'):>8}"
        f"{agg['payment_success_rate']:>9.3f}"
        f"{agg['gmv_cents'] / 100:>12,.0f}"
        f"{shrinks:>9}"
    )
print("...")
print(f"report hash: {report.reconciliation_hash[:32]}")
