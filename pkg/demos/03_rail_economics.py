"""Rail economics: one merchant month, fee stack and net cash inflow.

Run:  python demos/03_rail_economics.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from satsrail.money import msat_to_cents
from satsrail.rail import (
    CARD_COST_BPS_RANGE,
    Merchant,
    TicketParams,
    acquiring_fee,
    gen_monthly_payments,
    hedge_settlement,
    month_rail_cashflow,
    sats_back_outlay,
)

PRICE = 11_030_000  # cents per BTC

merchant = Merchant(
    id="webshop",
    monthly_gmv_cents=5_000_000,  # $50k of monthly checkout volume
    take_rate_bps=30,
    settle_mode="fiat",
    sats_back_bps=10,
)
tickets = TicketParams(median_ticket_cents=4_500, ticket_sigma=0.8)

plan = gen_monthly_payments(
    [merchant], month=1, price_cents_per_btc=PRICE, seed=7,
    params=tickets, payer_nodes=["customer-gw"],
)
settled_msat = sum(r.amount_msat for r in plan.requests)
gross = msat_to_cents(settled_msat, PRICE)

merchant_fiat, spread = hedge_settlement(settled_msat, PRICE, spread_bps=5)
acquiring = acquiring_fee(gross, merchant.take_rate_bps)
sats_back = sats_back_outlay(gross, merchant.sats_back_bps)

record = month_rail_cashflow(
    month=1,
    gmv_cents=gross,
    tx_count=len(plan.requests),
    tx_settled=len(plan.requests),
    acquiring_fee_cents=acquiring,
    hedge_spread_cents=spread,
    routing_fee_cents=0,
    rebalancing_cost_cents=0,
    sats_back_cents=sats_back,
    variable_cost_cents=gross * 2 // 10_000,
)

print(f"merchant: {merchant.id}, GMV target ${merchant.monthly_gmv_cents / 100:,.0f}")
print(f"payments generated: {record.tx_count:,} (median ticket $45, lognormal)")
print(f"settled volume:     ${record.gmv_cents / 100:,.2f}")
print()
print("fee stack (all integer cents):")
print(f"  acquiring @ {merchant.take_rate_bps} bps:   +${record.acquiring_fee_cents / 100:>10,.2f}")
print(f"  hedge spread @ 5 bps:  +${record.hedge_spread_cents / 100:>10,.2f}")
print(f"  sats-back @ {merchant.sats_back_bps} bps:     -${record.sats_back_cents / 100:>10,.2f}")
print(f"  variable @ 2 bps:      -${record.variable_cost_cents / 100:>10,.2f}")
print(f"  net monthly inflow:     ${record.net_inflow_cents / 100:>10,.2f}")
print()
print(f"merchant receives ${merchant_fiat / 100:,.2f} fiat, fully hedged same month")
lo, hi = CARD_COST_BPS_RANGE
print(f"reference: card acceptance typically costs merchants {lo}-{hi} bps")
