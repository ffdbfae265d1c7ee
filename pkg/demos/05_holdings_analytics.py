"""Holdings analytics: NAV multiples and BTC per share for public holders.

The bundled snapshot is internally consistent with one implied BTC price;
applying that price reproduces every published multiple within 1%.

Run:  python demos/05_holdings_analytics.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from satsrail.treasury import btc_per_share, load_holdings_csv, mnav

HOLDINGS = Path(__file__).parents[1] / "data" / "btc_holdings_top10.csv"
IMPLIED_PRICE_CENTS = 11_030_000  # $110,300, derived from the largest row

rows = load_holdings_csv(HOLDINGS)
largest = rows[0]
implied = largest.mkt_cap_cents / (largest.btc_held * 1.095)
print(f"implied BTC price from the {largest.ticker} row: ${implied / 100:,.0f}")
print()
print(f"{'TICKER':<8}{'BTC HELD':>12}{'MNAV':>10}{'BTC/SHARE':>14}{'PREMIUM?':>10}")
for row in sorted(rows, key=lambda r: -r.btc_held):
    ratio = mnav(row.mkt_cap_cents, row.btc_held, IMPLIED_PRICE_CENTS)
    per_share = (
        f"{btc_per_share(row.btc_held, row.shares_outstanding):.8f}"
        if row.shares_outstanding
        else "-"
    )
    flag = "premium" if ratio > 1 else "discount"
    print(f"{row.ticker:<8}{row.btc_held:>12,.0f}{ratio:>10.3f}{per_share:>14}{flag:>10}")

print()
print("same table via the CLI:")
print(f"  satsrail mnav --holdings {HOLDINGS.relative_to(Path.cwd()) if HOLDINGS.is_relative_to(Path.cwd()) else HOLDINGS} --price 110300")
