"""satsrail: deterministic simulator for a BTC treasury running a satoshi
payments rail on a payment-channel network.

The package answers one question under configurable market scenarios: do
initial cash reserves plus the rail's price-agnostic fee revenue carry the
firm through a multi-month bear market without selling core BTC?
"""

from .engine import (
    MonteCarloConfig,
    RailEconomicsConfig,
    RebalancePolicyConfig,
    ScenarioConfig,
    ScenarioReport,
    StressTriggerConfig,
    config_from_dict,
    kpi_month,
    load_config_file,
    run_path,
    run_scenario,
)
from .lightning import (
    Channel,
    ChannelGraph,
    FeePolicy,
    PaymentResult,
    PaymentStatus,
    Route,
    build_graph,
    deploy_sleeve,
    execute_payment,
    find_route,
    hop_fee,
    rebalance,
    send_payment,
    shrink_sleeve,
)
from .market import (
    GbmParams,
    PricePath,
    StressShape,
    gen_gbm_path,
    gen_stress_path,
    load_price_csv,
    pearson_corr,
    to_returns,
)
from .rail import (
    Merchant,
    RailMonthRecord,
    TicketParams,
    acquiring_fee,
    apply_churn,
    gen_monthly_payments,
    hedge_settlement,
    month_rail_cashflow,
    sats_back_outlay,
)
from .treasury import (
    HoldingsRow,
    SurvivalVerdict,
    TreasuryConfig,
    TreasuryState,
    btc_per_share,
    load_holdings_csv,
    mnav,
    no_forced_sale,
    sleeve_var,
    step_treasury,
)

__version__ = "0.1.0"
