"""Shared fixtures: tiny graphs, random graph specs, independent oracles."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from satsrail.lightning import ChannelGraph, build_graph, hop_fee

DATA_DIR = Path(__file__).parents[1] / "data"
HOLDINGS_FIXTURE = DATA_DIR / "btc_holdings_top10.csv"


def graph_state(graph: ChannelGraph) -> tuple:
    """Full structural snapshot, for bit-identity assertions."""
    return tuple(
        sorted(
            (
                ch.id,
                ch.node_a,
                ch.node_b,
                ch.capacity_msat,
                ch.balance_a_msat,
                ch.policy_ab,
                ch.policy_ba,
                ch.open,
            )
            for ch in graph.channels.values()
        )
    )


def chain_spec(policies=(1000, 100)) -> dict:
    """A -> B -> C chain, both channels fully funded on the a side."""
    base, ppm = policies
    policy = {"base_msat": base, "ppm": ppm}
    return {
        "nodes": ["A", "B", "C"],
        "hub": "A",
        "channels": [
            {
                "id": "ab",
                "a": "A",
                "b": "B",
                "capacity_msat": 2_000_000_000,
                "balance_a_msat": 2_000_000_000,
                "policy_ab": dict(policy),
                "policy_ba": dict(policy),
            },
            {
                "id": "bc",
                "a": "B",
                "b": "C",
                "capacity_msat": 2_000_000_000,
                "balance_a_msat": 2_000_000_000,
                "policy_ab": dict(policy),
                "policy_ba": dict(policy),
            },
        ],
    }


def triangle_spec(policies=(1000, 100)) -> dict:
    """hub, X, Y fully connected; all channels funded on the a side."""
    base, ppm = policies
    policy = {"base_msat": base, "ppm": ppm}

    def chan(cid, a, b):
        return {
            "id": cid,
            "a": a,
            "b": b,
            "capacity_msat": 3_000_000_000,
            "balance_a_msat": 3_000_000_000,
            "policy_ab": dict(policy),
            "policy_ba": dict(policy),
        }

    return {
        "nodes": ["hub", "X", "Y"],
        "hub": "hub",
        "channels": [chan("hx", "hub", "X"), chan("xy", "X", "Y"), chan("yh", "Y", "hub")],
    }


@pytest.fixture
def chain_graph() -> ChannelGraph:
    return build_graph(chain_spec())


@pytest.fixture
def triangle_graph() -> ChannelGraph:
    return build_graph(triangle_spec())


def random_graph_spec(rng: random.Random, max_nodes: int = 8) -> dict:
    """Random multigraph spec for oracle comparisons."""
    n = rng.randint(2, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    channels = []
    cid = 0
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= 0.55:
                continue
            copies = 2 if rng.random() < 0.12 else 1
            for _ in range(copies):
                capacity = rng.randrange(1_000, 2_000_000)
                channels.append(
                    {
                        "id": f"c{cid}",
                        "a": nodes[i],
                        "b": nodes[j],
                        "capacity_msat": capacity,
                        "balance_a_msat": rng.randrange(0, capacity + 1),
                        "policy_ab": {
                            "base_msat": rng.randrange(0, 2_000),
                            "ppm": rng.randrange(0, 5_000),
                        },
                        "policy_ba": {
                            "base_msat": rng.randrange(0, 2_000),
                            "ppm": rng.randrange(0, 5_000),
                        },
                    }
                )
                cid += 1
    return {"nodes": nodes, "hub": nodes[0], "channels": channels}


def brute_force_route(graph: ChannelGraph, src: str, dst: str, amount_msat: int):
    """Exhaustive simple-path enumeration oracle.

    Returns (total_fee, node_path, channel_ids) for the cheapest feasible
    route under the same tie-break (fee, then node path, then channel ids),
    or None when nothing is feasible. Kept deliberately independent of the
    router: forward DFS over channels, then per-path backward fee math.
    """
    best = None

    def evaluate(hops):
        nonlocal best
        required = amount_msat
        amounts = [0] * len(hops)
        for i in range(len(hops) - 1, -1, -1):
            ch, frm, _to = hops[i]
            amounts[i] = required
            if ch.capacity_msat < required:
                return
            if i > 0:
                required += hop_fee(ch.policy_from(frm), required)
        total_fee = amounts[0] - amount_msat
        node_path = (src,) + tuple(h[2] for h in hops)
        channel_ids = tuple(h[0].id for h in hops)
        key = (total_fee, node_path, channel_ids)
        if best is None or key < best:
            best = key

    def dfs(node, visited, hops):
        if node == dst:
            evaluate(hops)
            return
        for ch in graph.adjacent(node):
            nxt = ch.other(node)
            if nxt in visited:
                continue
            dfs(nxt, visited | {nxt}, hops + [(ch, node, nxt)])

    dfs(src, {src}, [])
    return best
