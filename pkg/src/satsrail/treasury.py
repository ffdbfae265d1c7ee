"""Treasury balance sheet: core BTC, liquidity sleeve, cash ledger.

The central question this module answers: does initial cash plus the rail's
monthly net inflows cover monthly operating outflows over the horizon
without selling core BTC? Two survival modes are supported. ``terminal``
compares the sums at the horizon only, permitting interim negative cash;
``pathwise`` (the default) requires the running cash balance to stay
non-negative every month and reports the first breach.

Forced sales are recorded, never executed: when cash would go negative the
state captures the breach month and the BTC sale that would have been
required, then floors cash at zero so the simulation can finish.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from scipy.stats import norm

from .money import SATS_PER_BTC
from .util import decimal_fraction

SURVIVAL_MODES = ("terminal", "pathwise")


class HoldingsCsvError(ValueError):
    """Malformed holdings CSV; message names the offending row."""


@dataclass(frozen=True)
class TreasuryConfig:
    """Static treasury policy for a scenario.

    ``btc_core_sats`` is the firm's total BTC position; the liquidity
    sleeve (``sleeve_fraction`` of it, typically 2-5%) is carved out at
    scenario setup and the remainder is the untouchable core.
    """

    btc_core_sats: int
    cash0_cents: int
    opex_monthly_cents: int
    horizon_months: int = 24
    interest_monthly_cents: int = 0
    capex_monthly_cents: int = 0
    sleeve_fraction: float = 0.03
    var_cap_fraction: float = 0.20
    var_confidence: float = 0.99
    cash_yield_apy: float = 0.0
    survival_mode: str = "pathwise"

    def __post_init__(self):
        if self.btc_core_sats < 0:
            raise ValueError("btc_core_sats must be non-negative")
        if self.cash0_cents < 0:
            raise ValueError("cash0_cents must be non-negative")
        if min(self.opex_monthly_cents, self.interest_monthly_cents,
               self.capex_monthly_cents) < 0:
            raise ValueError("monthly outflow components must be non-negative")
        if self.horizon_months < 1:
            raise ValueError("horizon must be at least one month")
        if not 0.0 <= self.sleeve_fraction <= 1.0:
            raise ValueError("sleeve_fraction must be in [0, 1]")
        if not 0.0 <= self.var_cap_fraction <= 1.0:
            raise ValueError("var_cap_fraction must be in [0, 1]")
        if not 0.5 < self.var_confidence < 1.0:
            raise ValueError("var_confidence must be in (0.5, 1)")
        if self.cash_yield_apy < 0.0:
            raise ValueError("cash_yield_apy must be non-negative")
        if self.survival_mode not in SURVIVAL_MODES:
            raise ValueError(f"survival_mode must be one of {SURVIVAL_MODES}")

    @property
    def out_monthly_cents(self) -> int:
        return (
            self.opex_monthly_cents
            + self.interest_monthly_cents
            + self.capex_monthly_cents
        )

    @property
    def sleeve_sats(self) -> int:
        frac = decimal_fraction(self.sleeve_fraction)
        return int(self.btc_core_sats * frac.numerator // frac.denominator)


@dataclass(frozen=True)
class TreasuryState:
    """Balance-sheet snapshot after ``month`` monthly steps."""

    month: int
    btc_core_sats: int
    sleeve_deployed_msat: int
    cash_cents: int
    cumulative_inflows_cents: int = 0
    cumulative_outflows_cents: int = 0
    forced_sale: bool = False
    breach_month: int | None = None
    required_sale_sats: int | None = None

    def __post_init__(self):
        if self.forced_sale != (self.breach_month is not None):
            raise ValueError("forced_sale must accompany a breach month")


def initial_state(config: TreasuryConfig, sleeve_deployed_msat: int = 0) -> TreasuryState:
    """Month-0 state: sleeve carved out of the total position, core fixed."""
    return TreasuryState(
        month=0,
        btc_core_sats=config.btc_core_sats - config.sleeve_sats,
        sleeve_deployed_msat=sleeve_deployed_msat,
        cash_cents=config.cash0_cents,
    )


def mnav(mkt_cap_cents: int, btc_held: float, price_cents_per_btc: int) -> float:
    """Market cap over the market value of BTC held (other assets ignored)."""
    if btc_held <= 0:
        raise ValueError("btc_held must be positive")
    if price_cents_per_btc <= 0:
        raise ValueError("price must be positive")
    if mkt_cap_cents < 0:
        raise ValueError("market cap must be non-negative")
    return mkt_cap_cents / (btc_held * price_cents_per_btc)


def btc_per_share(btc_held: float, shares_outstanding: int) -> float:
    if shares_outstanding <= 0:
        raise ValueError("shares_outstanding must be positive")
    return btc_held / shares_outstanding


@dataclass(frozen=True)
class SurvivalVerdict:
    survives: bool
    breach_month: int | None
    min_cash_cents: int
    terminal_cash_cents: int


def no_forced_sale(
    cash0_cents: int,
    inflows_cents: list[int] | tuple[int, ...],
    outflows_cents: list[int] | tuple[int, ...],
    mode: str = "pathwise",
) -> SurvivalVerdict:
    """Evaluate the no-forced-sale condition over the horizon.

    ``terminal``: survives iff cash0 plus total inflows covers total
    outflows (non-strict, so equality passes); a failure reports the
    horizon as the breach month. ``pathwise``: the running balance
    ``cash0 + sum(in[1..k]) - sum(out[1..k])`` must be non-negative for
    every prefix k; the first violating month is the breach. ``min_cash``
    is the minimum running balance including month 0.
    """
    if mode not in SURVIVAL_MODES:
        raise ValueError(f"mode must be one of {SURVIVAL_MODES}")
    if len(inflows_cents) != len(outflows_cents):
        raise ValueError("inflows and outflows must have the same length")
    if not inflows_cents:
        raise ValueError("need at least one month")
    running = cash0_cents
    min_cash = running
    breach = None
    for k, (inflow, outflow) in enumerate(zip(inflows_cents, outflows_cents), start=1):
        running += inflow - outflow
        min_cash = min(min_cash, running)
        if running < 0 and breach is None:
            breach = k
    terminal = running
    if mode == "terminal":
        survives = terminal >= 0
        return SurvivalVerdict(
            survives=survives,
            breach_month=None if survives else len(inflows_cents),
            min_cash_cents=min_cash,
            terminal_cash_cents=terminal,
        )
    return SurvivalVerdict(
        survives=breach is None,
        breach_month=breach,
        min_cash_cents=min_cash,
        terminal_cash_cents=terminal,
    )


def sleeve_var(sleeve_value_cents: int, sigma_monthly: float, alpha: float) -> int:
    """One-month lognormal value-at-risk of the deployed sleeve, in cents.

    ``var = value * (1 - exp(-z_alpha * sigma))`` with z the standard
    normal quantile at ``alpha``.
    """
    if sleeve_value_cents < 0:
        raise ValueError("sleeve value must be non-negative")
    if sigma_monthly < 0:
        raise ValueError("sigma must be non-negative")
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must be in (0.5, 1)")
    if sigma_monthly == 0.0 or sleeve_value_cents == 0:
        return 0
    z = float(norm.ppf(alpha))
    return int(math.floor(sleeve_value_cents * (1.0 - math.exp(-z * sigma_monthly)) + 0.5))


@dataclass(frozen=True)
class VarCheck:
    var_cents: int
    cap_cents: int
    passed: bool
    headroom_cents: int


def var_cap_check(var_cents: int, cash_cents: int, cap_fraction: float) -> VarCheck:
    """Compare sleeve VaR against the cap (a fraction of cash reserves)."""
    if not 0.0 <= cap_fraction <= 1.0:
        raise ValueError("cap_fraction must be in [0, 1]")
    frac = decimal_fraction(cap_fraction)
    cap = int(max(0, cash_cents) * frac.numerator // frac.denominator)
    return VarCheck(
        var_cents=var_cents,
        cap_cents=cap,
        passed=var_cents <= cap,
        headroom_cents=cap - var_cents,
    )


def monthly_yield_cents(cash_cents: int, apy: float) -> int:
    """Cash yield for one month at the given APY, floored to cents."""
    if apy == 0.0 or cash_cents <= 0:
        return 0
    rate = (1.0 + apy) ** (1.0 / 12.0) - 1.0
    return int(math.floor(cash_cents * rate))


def step_treasury(
    state: TreasuryState,
    config: TreasuryConfig,
    price_cents_per_btc: int,
    rail_inflow_cents: int,
    extra_out_cents: int = 0,
) -> TreasuryState:
    """Advance one month: book inflows, outflows and cash yield.

    Outflows are opex + interest + capex + ``extra_out_cents``. Yield
    accrues on the opening cash balance. If cash would go negative in
    pathwise mode, the first such month is recorded as a breach together
    with the BTC sale that would have been required (rounded up to whole
    sats); cash is floored at zero afterward so the path can complete.
    Core BTC is never touched.
    """
    if state.month >= config.horizon_months:
        raise ValueError("cannot step past the configured horizon")
    if price_cents_per_btc <= 0:
        raise ValueError("price must be positive")
    if extra_out_cents < 0:
        raise ValueError("extra outflows must be non-negative")
    out = config.out_monthly_cents + extra_out_cents
    earned = monthly_yield_cents(state.cash_cents, config.cash_yield_apy)
    raw_cash = state.cash_cents + rail_inflow_cents + earned - out
    month = state.month + 1
    forced_sale = state.forced_sale
    breach_month = state.breach_month
    required_sale = state.required_sale_sats
    cash = raw_cash
    if raw_cash < 0:
        if config.survival_mode == "pathwise" and not forced_sale:
            forced_sale = True
            breach_month = month
            shortfall = -raw_cash
            required_sale = (
                shortfall * SATS_PER_BTC + price_cents_per_btc - 1
            ) // price_cents_per_btc
        cash = 0
    return replace(
        state,
        month=month,
        cash_cents=cash,
        cumulative_inflows_cents=state.cumulative_inflows_cents
        + rail_inflow_cents
        + earned,
        cumulative_outflows_cents=state.cumulative_outflows_cents + out,
        forced_sale=forced_sale,
        breach_month=breach_month,
        required_sale_sats=required_sale,
    )


@dataclass(frozen=True)
class HoldingsRow:
    """One public BTC holder: position, market cap, optional share count."""

    ticker: str
    btc_held: float
    mkt_cap_cents: int
    shares_outstanding: int | None = None

    def __post_init__(self):
        if self.btc_held <= 0:
            raise ValueError("btc_held must be positive")
        if self.mkt_cap_cents < 0:
            raise ValueError("market cap must be non-negative")
        if self.shares_outstanding is not None and self.shares_outstanding <= 0:
            raise ValueError("shares_outstanding must be positive when given")


def load_holdings_csv(path) -> list[HoldingsRow]:
    """Load ``ticker,btc_held,mkt_cap_usd,shares_outstanding`` rows.

    Market caps are whole USD in the file and stored as cents. The shares
    column may be empty. Errors name the 1-based data row.
    """
    rows: list[HoldingsRow] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HoldingsCsvError(f"{path}: empty file") from None
        expected = ["ticker", "btc_held", "mkt_cap_usd", "shares_outstanding"]
        if [c.strip() for c in header] != expected:
            raise HoldingsCsvError(f"{path}: header must be {','.join(expected)}")
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise HoldingsCsvError(f"{path}: row {row_no}: expected 4 fields")
            ticker = row[0].strip()
            try:
                btc = float(row[1])
                cap_usd = float(row[2])
                shares = int(row[3]) if row[3].strip() else None
                rows.append(
                    HoldingsRow(
                        ticker=ticker,
                        btc_held=btc,
                        mkt_cap_cents=int(round(cap_usd * 100)),
                        shares_outstanding=shares,
                    )
                )
            except ValueError as exc:
                raise HoldingsCsvError(f"{path}: row {row_no} ({ticker}): {exc}") from None
    return rows
