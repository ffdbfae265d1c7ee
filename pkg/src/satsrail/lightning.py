"""Payment-channel network micro-simulator.

Economic model only: channels are capacity splits with per-direction fee
policies, payments are single-path and atomic, and the router prices a route
from receiver to sender so every hop's entering amount equals the delivered
amount plus all downstream fees. There is no HTLC/onion/gossip machinery.

Fee semantics (single source of truth for all fee math): forwarding through
a channel direction costs ``base_fee_msat + floor(forward_amount *
proportional_millionths / 1_000_000)``, charged by the node that forwards
into that direction. The sender's own first hop is free. The router sees
channel capacities, never private balances, so a found route can still fail
on execution; callers may retry with the failed direction excluded.
"""

from __future__ import annotations

import copy
import heapq
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .util import apportion_largest_remainder, canonical_json, decimal_fraction


class RoutingError(Exception):
    """Base class for route-search failures."""


class NoRouteError(RoutingError):
    """No feasible path exists."""


class FeeCapExceededError(RoutingError):
    """A path exists but every one costs more than the fee cap."""


class StaleRouteError(RoutingError):
    """A route references a closed or missing channel."""


class PaymentStatus(str, Enum):
    SETTLED = "settled"
    NO_ROUTE = "no_route"
    INSUFFICIENT_BALANCE = "insufficient_balance"
    FEE_CAP_EXCEEDED = "fee_cap_exceeded"


@dataclass(frozen=True)
class FeePolicy:
    """Forwarding fee for one channel direction."""

    base_fee_msat: int = 0
    proportional_millionths: int = 0

    def __post_init__(self):
        if self.base_fee_msat < 0 or self.proportional_millionths < 0:
            raise ValueError("fee policy fields must be non-negative")


def hop_fee(policy: FeePolicy, forward_amount_msat: int) -> int:
    """Fee for forwarding ``forward_amount_msat`` under ``policy``."""
    if forward_amount_msat < 0:
        raise ValueError("forward amount must be non-negative")
    return (
        policy.base_fee_msat
        + forward_amount_msat * policy.proportional_millionths // 1_000_000
    )


@dataclass
class Channel:
    """Two-party channel; ``balance_b`` is derived from capacity."""

    id: str
    node_a: str
    node_b: str
    capacity_msat: int
    balance_a_msat: int
    policy_ab: FeePolicy
    policy_ba: FeePolicy
    open: bool = True

    def __post_init__(self):
        if self.node_a == self.node_b:
            raise ValueError(f"channel {self.id}: endpoints must differ")
        if self.capacity_msat <= 0:
            raise ValueError(f"channel {self.id}: capacity must be positive")
        if not 0 <= self.balance_a_msat <= self.capacity_msat:
            raise ValueError(f"channel {self.id}: balance exceeds capacity")

    @property
    def balance_b_msat(self) -> int:
        return self.capacity_msat - self.balance_a_msat

    def other(self, node: str) -> str:
        if node == self.node_a:
            return self.node_b
        if node == self.node_b:
            return self.node_a
        raise ValueError(f"{node} is not an endpoint of channel {self.id}")

    def balance_from(self, node: str) -> int:
        """Spendable balance when ``node`` sends through this channel."""
        return self.balance_a_msat if node == self.node_a else self.balance_b_msat

    def policy_from(self, node: str) -> FeePolicy:
        """Fee policy charged when ``node`` forwards into this channel."""
        return self.policy_ab if node == self.node_a else self.policy_ba

    def shift(self, from_node: str, amount_msat: int) -> None:
        """Move ``amount_msat`` from ``from_node``'s side to the other side."""
        if from_node == self.node_a:
            self.balance_a_msat -= amount_msat
        else:
            self.balance_a_msat += amount_msat
        if not 0 <= self.balance_a_msat <= self.capacity_msat:
            raise AssertionError(f"channel {self.id}: balance out of range")


@dataclass
class ChannelGraph:
    """Nodes plus channels, with one designated hub (the treasury's node)."""

    nodes: set[str]
    hub: str
    channels: dict[str, Channel] = field(default_factory=dict)
    _adjacency: dict[str, list[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.hub not in self.nodes:
            raise ValueError(f"hub {self.hub!r} must exist in nodes")
        if not self._adjacency:
            self._adjacency = {n: [] for n in sorted(self.nodes)}
            for ch in self.channels.values():
                self._register(ch)

    def _register(self, ch: Channel) -> None:
        for node in (ch.node_a, ch.node_b):
            if node not in self.nodes:
                raise ValueError(f"channel {ch.id}: unknown endpoint {node!r}")
            self._adjacency.setdefault(node, []).append(ch.id)

    def add_node(self, node: str) -> None:
        if node not in self.nodes:
            self.nodes.add(node)
            self._adjacency[node] = []

    def add_channel(self, ch: Channel) -> None:
        if ch.id in self.channels:
            raise ValueError(f"duplicate channel id {ch.id!r}")
        self.channels[ch.id] = ch
        self._register(ch)

    def close_channel(self, channel_id: str) -> Channel:
        ch = self.channels[channel_id]
        ch.open = False
        return ch

    def adjacent(self, node: str) -> Iterator[Channel]:
        """Open channels with ``node`` as an endpoint, insertion order."""
        for cid in self._adjacency.get(node, ()):
            ch = self.channels[cid]
            if ch.open:
                yield ch

    def hub_channels(self) -> list[Channel]:
        return list(self.adjacent(self.hub))

    def total_capacity_msat(self) -> int:
        return sum(ch.capacity_msat for ch in self.channels.values() if ch.open)

    def total_balance_msat(self) -> int:
        return sum(
            ch.balance_a_msat + ch.balance_b_msat
            for ch in self.channels.values()
            if ch.open
        )

    def node_balance_msat(self, node: str) -> int:
        """Total local balance ``node`` holds across its open channels."""
        return sum(ch.balance_from(node) for ch in self.adjacent(node))

    def clone(self) -> "ChannelGraph":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class Hop:
    channel_id: str
    from_node: str
    to_node: str


@dataclass(frozen=True)
class Route:
    """Ordered hops with per-hop entering amounts and fees.

    ``amounts_msat[i]`` is the amount pushed into hop i's channel (and
    received by ``hops[i].to_node``). ``fees_msat[i]`` is the fee charged by
    the node forwarding into hop i; it is zero for the first hop (the
    sender) and ``amounts_msat[i-1] - amounts_msat[i]`` otherwise.
    """

    hops: tuple[Hop, ...]
    amounts_msat: tuple[int, ...]
    fees_msat: tuple[int, ...]
    total_fee_msat: int

    def __post_init__(self):
        if len(self.hops) != len(self.amounts_msat) or len(self.hops) != len(
            self.fees_msat
        ):
            raise ValueError("hops, amounts and fees must align")
        if self.fees_msat and self.fees_msat[0] != 0:
            raise ValueError("the sender's hop carries no fee")
        for i in range(1, len(self.hops)):
            if self.amounts_msat[i - 1] - self.amounts_msat[i] != self.fees_msat[i]:
                raise ValueError("amounts must decrease hop-to-hop by the fee")
        if self.total_fee_msat != sum(self.fees_msat):
            raise ValueError("total fee must equal the sum of hop fees")


@dataclass(frozen=True)
class PaymentResult:
    status: PaymentStatus
    route: Route | None = None
    failed_hop: int | None = None

    def __post_init__(self):
        if self.status is PaymentStatus.SETTLED:
            if self.route is None or self.failed_hop is not None:
                raise ValueError("settled implies a route and no failed hop")


# --------------------------------------------------------------------------
# Graph construction and canonical serialization
# --------------------------------------------------------------------------


def _policy_from_spec(raw: Mapping, channel_id: str, side: str) -> FeePolicy:
    try:
        return FeePolicy(int(raw["base_msat"]), int(raw["ppm"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"channel {channel_id}: bad {side} policy: {exc}") from None


def build_graph(spec: Mapping) -> ChannelGraph:
    """Build and validate a graph from its JSON-shaped description."""
    nodes = list(spec.get("nodes", []))
    if len(set(nodes)) != len(nodes):
        raise ValueError("duplicate node ids in graph spec")
    hub = spec.get("hub")
    if hub is None:
        raise ValueError("graph spec must declare a hub")
    graph = ChannelGraph(nodes=set(nodes), hub=hub)
    for raw in spec.get("channels", []):
        ch = Channel(
            id=str(raw["id"]),
            node_a=str(raw["a"]),
            node_b=str(raw["b"]),
            capacity_msat=int(raw["capacity_msat"]),
            balance_a_msat=int(raw["balance_a_msat"]),
            policy_ab=_policy_from_spec(raw["policy_ab"], str(raw["id"]), "a->b"),
            policy_ba=_policy_from_spec(raw["policy_ba"], str(raw["id"]), "b->a"),
            open=bool(raw.get("open", True)),
        )
        graph.add_channel(ch)
    return graph


def graph_to_spec(graph: ChannelGraph) -> dict:
    """Canonical JSON-shaped description (sorted nodes and channel ids)."""
    return {
        "nodes": sorted(graph.nodes),
        "hub": graph.hub,
        "channels": [
            {
                "id": ch.id,
                "a": ch.node_a,
                "b": ch.node_b,
                "capacity_msat": ch.capacity_msat,
                "balance_a_msat": ch.balance_a_msat,
                "policy_ab": {
                    "base_msat": ch.policy_ab.base_fee_msat,
                    "ppm": ch.policy_ab.proportional_millionths,
                },
                "policy_ba": {
                    "base_msat": ch.policy_ba.base_fee_msat,
                    "ppm": ch.policy_ba.proportional_millionths,
                },
                "open": ch.open,
            }
            for ch in sorted(graph.channels.values(), key=lambda c: c.id)
        ],
    }


def dump_graph(graph: ChannelGraph) -> str:
    return canonical_json(graph_to_spec(graph))


def load_graph_file(path) -> ChannelGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return build_graph(json.load(fh))


# --------------------------------------------------------------------------
# Routing
# --------------------------------------------------------------------------


def _settle_continuations(
    graph: ChannelGraph,
    seeds: list[tuple],
    sender: str,
    excluded_dirs: frozenset[tuple[str, str]],
    excluded_channels: frozenset[str],
    banned: frozenset[str],
) -> dict[str, tuple]:
    """Backward Dijkstra from the receiver.

    Settles, for every reachable node v (except the sender and banned
    nodes), the minimal amount R(v) that must enter v for the receiver to
    get the target amount, v's own forwarding fee included. Ties on R break
    lexicographically on the forward continuation (node path, then channel
    ids), which makes the final route the lexicographically smallest among
    minimum-fee routes.

    Heap entries: (R, cont_nodes, cont_hops, cont_amounts) where cont_* are
    the forward continuation from the entry's node to the receiver.
    """
    settled: dict[str, tuple] = {}
    heap = list(seeds)
    heapq.heapify(heap)
    while heap:
        required, cont_nodes, cont_hops, cont_amounts = heapq.heappop(heap)
        node = cont_nodes[0]
        if node in settled:
            continue
        settled[node] = (required, cont_nodes, cont_hops, cont_amounts)
        for ch in graph.adjacent(node):
            prev = ch.other(node)
            if prev == sender or prev in banned or prev in settled:
                continue
            if ch.id in excluded_channels or (ch.id, prev) in excluded_dirs:
                continue
            if ch.capacity_msat < required:
                continue
            fee = hop_fee(ch.policy_from(prev), required)
            heapq.heappush(
                heap,
                (
                    required + fee,
                    (prev,) + cont_nodes,
                    ((ch.id, prev, node),) + cont_hops,
                    (required,) + cont_amounts,
                ),
            )
    return settled


def _assemble_route(hops_raw: tuple, amounts: tuple[int, ...]) -> Route:
    hops = tuple(Hop(cid, frm, to) for cid, frm, to in hops_raw)
    fees = [0] + [amounts[i - 1] - amounts[i] for i in range(1, len(amounts))]
    return Route(
        hops=hops,
        amounts_msat=tuple(amounts),
        fees_msat=tuple(fees),
        total_fee_msat=amounts[0] - amounts[-1],
    )


def find_route(
    graph: ChannelGraph,
    src: str,
    dst: str,
    amount_msat: int,
    max_fee_msat: int | None = None,
    excluded: Iterable[tuple[str, str]] = (),
) -> Route:
    """Cheapest-fee route delivering ``amount_msat`` from src to dst.

    Considers only channel directions whose capacity covers the required
    forward amount (balances are private). Raises :class:`NoRouteError`
    when nothing is feasible and :class:`FeeCapExceededError` when every
    feasible route costs more than ``max_fee_msat``. ``excluded`` holds
    (channel_id, sending_node) directions to skip, for retry loops.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    if src not in graph.nodes or dst not in graph.nodes:
        raise ValueError("src and dst must be graph nodes")
    if amount_msat <= 0:
        raise ValueError("amount must be positive")
    excluded_dirs = frozenset(excluded)
    settled = _settle_continuations(
        graph,
        seeds=[(amount_msat, (dst,), (), ())],
        sender=src,
        excluded_dirs=excluded_dirs,
        excluded_channels=frozenset(),
        banned=frozenset(),
    )
    best_key = None
    best = None
    for ch in graph.adjacent(src):
        nxt = ch.other(src)
        if (ch.id, src) in excluded_dirs:
            continue
        entry = settled.get(nxt)
        if entry is None:
            continue
        required, cont_nodes, cont_hops, cont_amounts = entry
        if ch.capacity_msat < required:
            continue
        key = (
            required,
            (src,) + cont_nodes,
            ((ch.id, src, nxt),) + cont_hops,
        )
        if best_key is None or key < best_key:
            best_key = key
            best = (required, cont_hops, cont_amounts, ch, nxt)
    if best is None:
        raise NoRouteError(f"no feasible route {src} -> {dst} for {amount_msat} msat")
    required, cont_hops, cont_amounts, first_ch, first_next = best
    total_fee = required - amount_msat
    if max_fee_msat is not None and total_fee > max_fee_msat:
        raise FeeCapExceededError(
            f"cheapest route costs {total_fee} msat, cap is {max_fee_msat}"
        )
    hops = ((first_ch.id, src, first_next),) + cont_hops
    amounts = (required,) + cont_amounts
    return _assemble_route(hops, amounts)


def execute_payment(
    graph: ChannelGraph, route: Route, amount_msat: int
) -> PaymentResult:
    """Apply a route to the graph, atomically.

    Checks the actual directional balance at each hop in order; on the first
    shortfall returns ``insufficient_balance`` with that hop index and the
    graph untouched. On success every hop shifts by its entering amount, so
    each intermediary nets exactly its fee.
    """
    if not route.hops:
        raise ValueError("empty route")
    if route.amounts_msat[-1] != amount_msat:
        raise ValueError("route does not deliver the requested amount")
    channels = []
    for hop in route.hops:
        ch = graph.channels.get(hop.channel_id)
        if ch is None or not ch.open:
            raise StaleRouteError(f"channel {hop.channel_id} is closed or missing")
        if {hop.from_node, hop.to_node} != {ch.node_a, ch.node_b}:
            raise StaleRouteError(f"channel {hop.channel_id} endpoints changed")
        channels.append(ch)
    for i, (hop, ch) in enumerate(zip(route.hops, channels)):
        if ch.balance_from(hop.from_node) < route.amounts_msat[i]:
            return PaymentResult(
                PaymentStatus.INSUFFICIENT_BALANCE, route=route, failed_hop=i
            )
    for i, (hop, ch) in enumerate(zip(route.hops, channels)):
        ch.shift(hop.from_node, route.amounts_msat[i])
    return PaymentResult(PaymentStatus.SETTLED, route=route)


def send_payment(
    graph: ChannelGraph,
    src: str,
    dst: str,
    amount_msat: int,
    max_fee_msat: int | None = None,
    max_retries: int = 0,
) -> PaymentResult:
    """Find-and-execute with up to ``max_retries`` re-routes.

    After an execution failure the failed channel direction is excluded and
    the search re-runs, mimicking multi-attempt behavior against private
    balances.
    """
    excluded: set[tuple[str, str]] = set()
    result = None
    for _ in range(max_retries + 1):
        try:
            route = find_route(graph, src, dst, amount_msat, max_fee_msat, excluded)
        except NoRouteError:
            return PaymentResult(PaymentStatus.NO_ROUTE)
        except FeeCapExceededError:
            return PaymentResult(PaymentStatus.FEE_CAP_EXCEEDED)
        result = execute_payment(graph, route, amount_msat)
        if result.status is not PaymentStatus.INSUFFICIENT_BALANCE:
            return result
        failed = route.hops[result.failed_hop]
        excluded.add((failed.channel_id, failed.from_node))
    return result


# --------------------------------------------------------------------------
# Sleeve management
# --------------------------------------------------------------------------


def deploy_sleeve(
    graph: ChannelGraph,
    sleeve_msat: int,
    peers: Sequence[tuple[str, float]],
    hub_policy: FeePolicy = FeePolicy(),
    peer_policy: FeePolicy = FeePolicy(),
    min_channel_msat: int = 1_000,
    id_prefix: str = "sleeve",
) -> list[str]:
    """Open hub channels apportioning ``sleeve_msat`` across ``peers``.

    Capacities follow largest-remainder apportionment of the peer weights
    (ties by peer id); the hub funds each channel in full. Unknown peers
    are added to the node set. Returns the new channel ids.
    """
    if sleeve_msat <= 0:
        raise ValueError("sleeve must be positive")
    if not peers:
        raise ValueError("peers must be non-empty")
    parts = apportion_largest_remainder(sleeve_msat, list(peers))
    small = [p for p, alloc in parts.items() if alloc < min_channel_msat]
    if small:
        raise ValueError(
            f"sleeve too small: peers {sorted(small)} would get less than "
            f"{min_channel_msat} msat"
        )
    opened = []
    for peer, _ in peers:
        graph.add_node(peer)
        cid = f"{id_prefix}-{peer}"
        ch = Channel(
            id=cid,
            node_a=graph.hub,
            node_b=peer,
            capacity_msat=parts[peer],
            balance_a_msat=parts[peer],
            policy_ab=hub_policy,
            policy_ba=peer_policy,
        )
        graph.add_channel(ch)
        opened.append(cid)
    return opened


def shrink_sleeve(graph: ChannelGraph, target_fraction: float) -> int:
    """Close hub channels, smallest hub-side balance first, until the
    remaining deployed capacity is at most ``target_fraction`` of the
    current deployment. Returns the freed hub-side msat (counterparty
    balances return to counterparties, not to the treasury).
    """
    if not 0 <= target_fraction <= 1:
        raise ValueError("target_fraction must be in [0, 1]")
    hub = graph.hub
    channels = sorted(
        graph.hub_channels(), key=lambda ch: (ch.balance_from(hub), ch.id)
    )
    total = sum(ch.capacity_msat for ch in channels)
    frac = decimal_fraction(target_fraction)
    remaining = total
    freed = 0
    for ch in channels:
        if remaining * frac.denominator <= frac.numerator * total:
            break
        freed += ch.balance_from(hub)
        remaining -= ch.capacity_msat
        graph.close_channel(ch.id)
    return freed


@dataclass(frozen=True)
class RebalanceResult:
    """Outcome of a circular rebalance attempt."""

    cost_msat: int
    cost_bps: float
    route: Route
    payment: PaymentResult

    @property
    def settled(self) -> bool:
        return self.payment.status is PaymentStatus.SETTLED


def rebalance(
    graph: ChannelGraph,
    from_channel: str,
    to_channel: str,
    amount_msat: int,
    max_fee_msat: int | None = None,
) -> RebalanceResult:
    """Circular self-payment moving hub liquidity between two hub channels.

    The hub pushes out through ``from_channel`` and receives ``amount_msat``
    back through ``to_channel``; the hub's total balance drops by exactly
    the routing fees paid to intermediaries. Raises :class:`NoRouteError`
    when no circular route exists (graph unchanged).
    """
    hub = graph.hub
    src_ch = graph.channels.get(from_channel)
    dst_ch = graph.channels.get(to_channel)
    if src_ch is None or dst_ch is None:
        raise ValueError("unknown channel id")
    if not (src_ch.open and dst_ch.open):
        raise StaleRouteError("rebalance channels must be open")
    if from_channel == to_channel:
        raise ValueError("rebalance channels must differ")
    for ch in (src_ch, dst_ch):
        if hub not in (ch.node_a, ch.node_b):
            raise ValueError(f"channel {ch.id} is not adjacent to the hub")
    if amount_msat <= 0:
        raise ValueError("amount must be positive")
    if src_ch.balance_from(hub) < amount_msat:
        raise ValueError("amount exceeds hub balance on the source channel")
    peer_out = src_ch.other(hub)
    peer_in = dst_ch.other(hub)
    if dst_ch.capacity_msat < amount_msat:
        raise NoRouteError("receiving channel capacity below amount")
    fee_last = hop_fee(dst_ch.policy_from(peer_in), amount_msat)
    seed = (
        amount_msat + fee_last,
        (peer_in, hub),
        ((dst_ch.id, peer_in, hub),),
        (amount_msat,),
    )
    settled = _settle_continuations(
        graph,
        seeds=[seed],
        sender=hub,
        excluded_dirs=frozenset(),
        excluded_channels=frozenset({from_channel, to_channel}),
        banned=frozenset({hub}),
    )
    entry = settled.get(peer_out)
    if entry is None:
        raise NoRouteError(f"no circular route {from_channel} -> {to_channel}")
    required, cont_nodes, cont_hops, cont_amounts = entry
    if src_ch.capacity_msat < required:
        raise NoRouteError("source channel capacity below required amount")
    total_fee = required - amount_msat
    if max_fee_msat is not None and total_fee > max_fee_msat:
        raise FeeCapExceededError(
            f"rebalance costs {total_fee} msat, cap is {max_fee_msat}"
        )
    hops = ((src_ch.id, hub, peer_out),) + cont_hops
    amounts = (required,) + cont_amounts
    route = _assemble_route(hops, amounts)
    payment = execute_payment(graph, route, amount_msat)
    return RebalanceResult(
        cost_msat=total_fee,
        cost_bps=total_fee * 10_000 / amount_msat,
        route=route,
        payment=payment,
    )
