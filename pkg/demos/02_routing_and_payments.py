"""Channel-network mechanics: routing, fees, atomic payments, rebalancing.

Run:  python demos/02_routing_and_payments.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parents[1] / "src"))

from satsrail.lightning import (
    build_graph,
    deploy_sleeve,
    execute_payment,
    find_route,
    rebalance,
    shrink_sleeve,
)

policy = {"base_msat": 1_000, "ppm": 100}
graph = build_graph(
    {
        "nodes": ["hub", "alice", "bob", "carol"],
        "hub": "hub",
        "channels": [
            {"id": "hub-alice", "a": "hub", "b": "alice",
             "capacity_msat": 5_000_000_000, "balance_a_msat": 5_000_000_000,
             "policy_ab": policy, "policy_ba": policy},
            {"id": "alice-bob", "a": "alice", "b": "bob",
             "capacity_msat": 5_000_000_000, "balance_a_msat": 5_000_000_000,
             "policy_ab": policy, "policy_ba": policy},
            {"id": "bob-hub", "a": "bob", "b": "hub",
             "capacity_msat": 5_000_000_000, "balance_a_msat": 2_500_000_000,
             "policy_ab": policy, "policy_ba": policy},
            {"id": "carol-hub", "a": "carol", "b": "hub",
             "capacity_msat": 5_000_000_000, "balance_a_msat": 5_000_000_000,
             "policy_ab": policy, "policy_ba": policy},
        ],
    }
)

print("=== Routing: fees accumulate receiver-to-sender ===")
amount = 1_000_000_000  # 1M sats
route = find_route(graph, "carol", "bob", amount)
for i, hop in enumerate(route.hops):
    print(
        f"hop {i + 1}: {hop.from_node:>5} -> {hop.to_node:<5} via {hop.channel_id:<10}"
        f" forwards {route.amounts_msat[i]:>13,} msat (fee {route.fees_msat[i]:,})"
    )
print(f"total fee: {route.total_fee_msat:,} msat on a {amount:,} msat payment")

print()
print("=== Settlement is atomic and enriches intermediaries exactly ===")
hub_before = graph.node_balance_msat("hub")
result = execute_payment(graph, route, amount)
print(f"status: {result.status.value}")
print(f"hub earned {graph.node_balance_msat('hub') - hub_before:,} msat forwarding")

print()
print("=== Circular rebalancing moves hub liquidity at a fee cost ===")
res = rebalance(graph, "hub-alice", "bob-hub", 500_000_000)
print(f"moved 500,000,000 msat, cost {res.cost_msat:,} msat ({res.cost_bps:.2f} bps)")

print()
print("=== Sleeve deployment and stress shrink ===")
bare = build_graph({"nodes": ["hub"], "hub": "hub", "channels": []})
opened = deploy_sleeve(bare, 30_000_000_000, [("lsp-a", 2.0), ("lsp-b", 1.0), ("lsp-c", 1.0)])
for cid in opened:
    print(f"opened {cid}: capacity {bare.channels[cid].capacity_msat:,} msat")
freed = shrink_sleeve(bare, 0.5)
open_now = [c.id for c in bare.hub_channels()]
print(f"shrink to 50% freed {freed:,} msat; still open: {open_now}")
