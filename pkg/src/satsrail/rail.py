"""Payments-rail economics: merchants, monthly payment batches, fee stack.

The rail acquires merchant checkout volume, settles it in BTC or in fiat
under a same-month hedge, and books a monthly net cash inflow that is
independent of mark-to-market moves on the treasury. All quantities are
integers (cents or msat). For reference, card acceptance typically costs
merchants 200-300 bps; the rail's take rate sits well below that.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .money import cents_to_msat, floor_bps, MSAT_PER_BTC
from .rng import child_seed, stream
from .util import apportion_largest_remainder

CARD_COST_BPS_RANGE = (200, 300)

SETTLE_MODES = ("btc", "fiat")


@dataclass(frozen=True)
class Merchant:
    """A merchant on the rail; ``id`` doubles as its graph node id."""

    id: str
    monthly_gmv_cents: int
    take_rate_bps: int
    settle_mode: str = "fiat"
    sats_back_bps: int = 0
    active: bool = True

    def __post_init__(self):
        if self.settle_mode not in SETTLE_MODES:
            raise ValueError(f"settle_mode must be one of {SETTLE_MODES}")
        if self.take_rate_bps < 0 or self.sats_back_bps < 0:
            raise ValueError("bps fields must be non-negative")
        if self.active and self.monthly_gmv_cents <= 0:
            raise ValueError("active merchants need positive GMV")


def load_merchants(raw: Sequence[dict]) -> list[Merchant]:
    return [
        Merchant(
            id=str(m["id"]),
            monthly_gmv_cents=int(m["monthly_gmv_cents"]),
            take_rate_bps=int(m["take_rate_bps"]),
            settle_mode=str(m.get("settle_mode", "fiat")),
            sats_back_bps=int(m.get("sats_back_bps", 0)),
            active=bool(m.get("active", True)),
        )
        for m in raw
    ]


def load_merchants_file(path) -> list[Merchant]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_merchants(json.load(fh))


@dataclass(frozen=True)
class TicketParams:
    """Lognormal ticket-size model.

    Amounts are drawn lognormal with the given median and shape, clipped to
    [min, max] cents. The implied mean ticket (median * exp(sigma^2/2))
    drives the per-merchant transaction count.
    """

    median_ticket_cents: int = 5_000
    ticket_sigma: float = 0.8
    min_ticket_cents: int = 1
    max_ticket_cents: int = 10_000_000

    def __post_init__(self):
        if self.median_ticket_cents <= 0:
            raise ValueError("median ticket must be positive")
        if self.ticket_sigma < 0:
            raise ValueError("ticket sigma must be non-negative")
        if not 0 < self.min_ticket_cents <= self.max_ticket_cents:
            raise ValueError("ticket bounds must satisfy 0 < min <= max")

    @property
    def mean_ticket_cents(self) -> float:
        return self.median_ticket_cents * math.exp(self.ticket_sigma**2 / 2.0)


@dataclass(frozen=True)
class PaymentRequest:
    payer: str
    merchant: str
    amount_msat: int


@dataclass(frozen=True)
class PaymentPlan:
    """Sampled payment batch plus the per-merchant counts behind it.

    ``intended`` is the full business transaction count per merchant;
    ``sampled`` is how many were actually drawn (capped micro-simulation).
    Results measured on the sample scale back up by intended/sampled.
    """

    requests: tuple[PaymentRequest, ...]
    intended: dict[str, int]
    sampled: dict[str, int]


def gen_monthly_payments(
    merchants: Sequence[Merchant],
    month: int,
    price_cents_per_btc: int,
    seed: int,
    params: TicketParams,
    payer_nodes: Sequence[str],
    max_payments: int | None = None,
) -> PaymentPlan:
    """Deterministic monthly payment batch.

    Per active merchant, the intended count is ``round(gmv / mean_ticket)``
    (half-up). When the total exceeds ``max_payments`` the counts are
    apportioned down (largest remainder, floor of one per merchant with any
    intended volume, so the cap is soft). Amounts and payers come from a
    stream keyed on (seed, month, merchant id) only, so one merchant's
    payments do not depend on the rest of the roster.
    """
    if price_cents_per_btc <= 0:
        raise ValueError("price must be positive")
    active = [m for m in merchants if m.active]
    if not active:
        return PaymentPlan(requests=(), intended={}, sampled={})
    if not payer_nodes:
        raise ValueError("payer_nodes must be non-empty when merchants are active")
    mean_ticket = params.mean_ticket_cents
    intended = {
        m.id: int(math.floor(m.monthly_gmv_cents / mean_ticket + 0.5)) for m in active
    }
    total = sum(intended.values())
    if max_payments is not None and total > max_payments:
        weighted = [(mid, n) for mid, n in sorted(intended.items()) if n > 0]
        sampled = apportion_largest_remainder(max_payments, weighted)
        for mid, n in weighted:
            if sampled[mid] == 0:
                sampled[mid] = 1
        for m in active:
            sampled.setdefault(m.id, 0)
    else:
        sampled = dict(intended)
    requests: list[PaymentRequest] = []
    for m in sorted(active, key=lambda m: m.id):
        count = min(sampled[m.id], intended[m.id])
        sampled[m.id] = count
        if count == 0:
            continue
        rng = stream(child_seed(seed, month, m.id))
        draws = rng.lognormal(
            mean=math.log(params.median_ticket_cents), sigma=params.ticket_sigma, size=count
        )
        payer_idx = rng.integers(0, len(payer_nodes), size=count)
        for k in range(count):
            cents = int(
                min(
                    params.max_ticket_cents,
                    max(params.min_ticket_cents, math.floor(draws[k] + 0.5)),
                )
            )
            requests.append(
                PaymentRequest(
                    payer=payer_nodes[int(payer_idx[k])],
                    merchant=m.id,
                    amount_msat=cents_to_msat(cents, price_cents_per_btc),
                )
            )
    return PaymentPlan(requests=tuple(requests), intended=intended, sampled=sampled)


def acquiring_fee(gmv_settled_cents: int, take_rate_bps: int) -> int:
    """Acquiring revenue on processed volume: floor(gmv * bps / 10_000)."""
    return floor_bps(gmv_settled_cents, take_rate_bps)


def hedge_settlement(
    amount_msat: int, price_cents_per_btc: int, spread_bps: int
) -> tuple[int, int]:
    """Settle a BTC amount to fiat under a back-to-back hedge.

    Returns (merchant_fiat_cents, spread_revenue_cents). The gross fiat
    value floors msat * price / msat-per-BTC; the spread is retained out of
    gross and the merchant receives the rest, so the two always sum to
    gross and no price exposure remains.
    """
    if price_cents_per_btc <= 0:
        raise ValueError("price must be positive")
    if amount_msat < 0 or spread_bps < 0:
        raise ValueError("amount and spread must be non-negative")
    gross = amount_msat * price_cents_per_btc // MSAT_PER_BTC
    spread_revenue = floor_bps(gross, spread_bps)
    return gross - spread_revenue, spread_revenue


def sats_back_outlay(gmv_settled_cents: int, sats_back_bps: int) -> int:
    """Checkout reward funding passed through the rail, booked as a cost."""
    return floor_bps(gmv_settled_cents, sats_back_bps)


def apply_churn(
    merchants: Sequence[Merchant],
    month_success_rate: float,
    seed: int,
    month: int,
    base_churn: float = 0.0,
    sensitivity: float = 0.0,
) -> tuple[list[Merchant], float]:
    """Deactivate merchants at p = base + sensitivity * (1 - success).

    Deterministic per (seed, month, merchant id); never reactivates anyone.
    Returns the updated roster and the realized churn rate among merchants
    active going in (0.0 when none were).
    """
    if not 0.0 <= month_success_rate <= 1.0:
        raise ValueError("success rate must be in [0, 1]")
    p = min(1.0, max(0.0, base_churn + sensitivity * (1.0 - month_success_rate)))
    updated: list[Merchant] = []
    active_before = 0
    churned = 0
    for m in merchants:
        if not m.active:
            updated.append(m)
            continue
        active_before += 1
        u = stream(child_seed(seed, month, m.id, "churn")).random()
        if u < p:
            churned += 1
            updated.append(replace(m, active=False))
        else:
            updated.append(m)
    rate = churned / active_before if active_before else 0.0
    return updated, rate


@dataclass(frozen=True)
class RailMonthRecord:
    """One month of non-mark-to-market rail cash flows and their net."""

    month: int
    gmv_cents: int
    tx_count: int
    tx_settled: int
    acquiring_fee_cents: int
    hedge_spread_cents: int
    routing_fee_cents: int
    rebalancing_cost_cents: int
    sats_back_cents: int
    variable_cost_cents: int
    net_inflow_cents: int

    def __post_init__(self):
        components = (
            self.gmv_cents,
            self.tx_count,
            self.tx_settled,
            self.acquiring_fee_cents,
            self.hedge_spread_cents,
            self.routing_fee_cents,
            self.rebalancing_cost_cents,
            self.sats_back_cents,
            self.variable_cost_cents,
        )
        if any(c < 0 for c in components):
            raise ValueError("rail record components must be non-negative")
        if self.tx_settled > self.tx_count:
            raise ValueError("settled transactions cannot exceed attempted")
        expected = (
            self.acquiring_fee_cents
            + self.hedge_spread_cents
            + self.routing_fee_cents
            - self.rebalancing_cost_cents
            - self.sats_back_cents
            - self.variable_cost_cents
        )
        if self.net_inflow_cents != expected:
            raise ValueError("net inflow does not match its components")


def month_rail_cashflow(
    month: int,
    gmv_cents: int,
    tx_count: int,
    tx_settled: int,
    acquiring_fee_cents: int,
    hedge_spread_cents: int,
    routing_fee_cents: int,
    rebalancing_cost_cents: int,
    sats_back_cents: int,
    variable_cost_cents: int,
) -> RailMonthRecord:
    """Assemble the month record; the net is revenue minus rail costs."""
    net = (
        acquiring_fee_cents
        + hedge_spread_cents
        + routing_fee_cents
        - rebalancing_cost_cents
        - sats_back_cents
        - variable_cost_cents
    )
    return RailMonthRecord(
        month=month,
        gmv_cents=gmv_cents,
        tx_count=tx_count,
        tx_settled=tx_settled,
        acquiring_fee_cents=acquiring_fee_cents,
        hedge_spread_cents=hedge_spread_cents,
        routing_fee_cents=routing_fee_cents,
        rebalancing_cost_cents=rebalancing_cost_cents,
        sats_back_cents=sats_back_cents,
        variable_cost_cents=variable_cost_cents,
        net_inflow_cents=net,
    )
