"""Shortest-distance, shortest-time and least-cost routing.

Least-cost search evaluates each segment from the energy left in the label
being expanded. Ordering labels by cost alone is exact here: before the
battery is depleted, cost and remaining energy are tied by
``cost = p_ele * (e_ini - energy)``, and any label that has burned gasoline
costs at least ``p_ele * e_ini``. A cheaper label therefore never holds less
energy, and extra energy never raises the cost of what follows as long as
electricity is the cheaper way to cover a mile (true for every built-in
vehicle at the default prices).

Ties on weight go to the smaller predecessor id, then the smaller node id.
Equivalently, among optimal paths the one whose node sequence read from the
destination backwards is lexicographically smallest wins;
:func:`brute_force_route` uses that same rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from heapq import heappop, heappush

from .network import Network, TrafficClass, TRAFFIC_CLASSES
from .powertrain import (
    CostModel,
    CycleSpeeds,
    EnergyPrices,
    RangeExhausted,
    VehicleSpec,
    initial_energy,
    segment_time,
)

BRUTE_FORCE_MAX_NODES = 12


class Strategy(Enum):
    DISTANCE = "distance"
    TIME = "time"
    COST = "cost"

    @property
    def label(self) -> str:
        return _STRATEGY_LABELS[self]


_STRATEGY_LABELS = {
    Strategy.DISTANCE: "ShortestDistance",
    Strategy.TIME: "ShortestTime",
    Strategy.COST: "LeastCost",
}


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class CostLabel:
    node: int
    weight: float
    energy: float
    predecessor: int | None


@dataclass(frozen=True)
class Leg:
    source: int
    target: int
    traffic: TrafficClass
    length: float
    time: float
    cost: float
    energy_after: float
    electric_miles: float
    gas_miles: float


@dataclass(frozen=True)
class Route:
    strategy: Strategy
    vehicle: str
    nodes: tuple[int, ...]
    legs: tuple[Leg, ...]
    distance: float
    time: float
    cost: float
    final_energy: float

    @property
    def objective(self) -> float:
        if self.strategy is Strategy.DISTANCE:
            return self.distance
        if self.strategy is Strategy.TIME:
            return self.time
        return self.cost

    def miles_by_class(self) -> dict[TrafficClass, float]:
        out = dict.fromkeys(TRAFFIC_CLASSES, 0.0)
        for leg in self.legs:
            out[leg.traffic] += leg.length
        return out

    def hours_by_class(self) -> dict[TrafficClass, float]:
        out = dict.fromkeys(TRAFFIC_CLASSES, 0.0)
        for leg in self.legs:
            out[leg.traffic] += leg.time
        return out


class SearchTree:
    """Settled labels of one single-source search, stored column-wise.

    ``weight[j]`` is ``inf`` and ``pred[j]`` is ``-1`` for nodes the search
    never reached. ``via[j]`` is the index of the segment ``pred[j] -> j``.
    ``order`` lists nodes in the order they were settled.
    """

    __slots__ = ("net", "strategy", "source", "weight", "energy", "pred", "via", "order")

    def __init__(self, net, strategy, source, weight, energy, pred, via, order):
        self.net = net
        self.strategy = strategy
        self.source = source
        self.weight = weight
        self.energy = energy
        self.pred = pred
        self.via = via
        self.order = order

    def reachable(self, node: int) -> bool:
        return self.weight[node] != math.inf

    def label(self, node: int) -> CostLabel | None:
        if not self.reachable(node):
            return None
        pred = self.pred[node]
        return CostLabel(node, self.weight[node], self.energy[node], None if pred < 0 else pred)

    def labels(self) -> dict[int, CostLabel]:
        return {j: self.label(j) for j in self.order}

    def path(self, node: int) -> list[int] | None:
        if not self.reachable(node):
            return None
        out = [node]
        while node != self.source:
            node = self.pred[node]
            out.append(node)
        out.reverse()
        return out


def _check_node(net: Network, node: int, what: str) -> None:
    if not (isinstance(node, int) and 0 <= node < len(net.nodes)):
        raise RoutingError(f"{what} {node!r} is not a node of the network")


def search(
    net: Network,
    strategy: Strategy,
    vehicle: VehicleSpec | None,
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    source: int = 0,
) -> SearchTree:
    """Single-source label-setting search.

    ``vehicle`` may be ``None`` for the distance and time strategies, in which
    case no energy is tracked. Battery-electric labels that cannot cover a
    segment leave it unrelaxed, so nodes beyond range stay unreachable.
    """
    _check_node(net, source, "source")
    strategy = Strategy(strategy)
    if strategy is Strategy.COST and vehicle is None:
        raise RoutingError("least-cost search needs a vehicle")

    segments = net.segments
    adjacency = net.adjacency
    n = len(net.nodes)
    model = CostModel(vehicle, prices) if vehicle is not None else None
    lengths = net.lengths
    classes = net.classes
    targets = net.targets
    if strategy is Strategy.DISTANCE:
        static = lengths
    elif strategy is Strategy.TIME:
        static = [segment_time(s.length, s.traffic, speeds) for s in segments]
    else:
        static = None

    inf = math.inf
    weight = [inf] * n
    energy = [0.0] * n
    pred = [-1] * n
    via = [-1] * n
    settled = [False] * n
    order = []

    weight[source] = 0.0
    energy[source] = model.e_ini if model is not None else 0.0
    heap = [(0.0, -1, source)]
    step = model.step if model is not None else None
    while heap:
        w, p, u = heappop(heap)
        if settled[u] or w != weight[u] or p != pred[u]:
            continue
        settled[u] = True
        order.append(u)
        e = energy[u]
        for k in adjacency[u]:
            v = targets[k]
            if settled[v]:
                continue
            if static is None:
                try:
                    c, e2, _ = step(lengths[k], classes[k], e)
                except RangeExhausted:
                    continue
                nw = w + c
            else:
                nw = w + static[k]
                if step is None:
                    e2 = 0.0
                else:
                    try:
                        e2 = step(lengths[k], classes[k], e)[1]
                    except RangeExhausted:
                        e2 = 0.0
            if nw < weight[v] or (nw == weight[v] and u < pred[v]):
                weight[v] = nw
                pred[v] = u
                energy[v] = e2
                via[v] = k
                heappush(heap, (nw, u, v))
    return SearchTree(net, strategy, source, weight, energy, pred, via, order)


def replay(
    net: Network,
    strategy: Strategy,
    vehicle: VehicleSpec,
    prices: EnergyPrices,
    speeds: CycleSpeeds,
    nodes: list[int] | tuple[int, ...],
) -> Route:
    """Evaluate a node sequence leg by leg.

    Raises :class:`RangeExhausted` if a battery-electric vehicle cannot drive it.
    """
    model = CostModel(vehicle, prices)
    energy = model.e_ini
    distance = time = cost = 0.0
    legs = []
    for a, b in zip(nodes, nodes[1:]):
        seg = net.find_segment(a, b)
        if seg is None:
            raise RoutingError(f"no segment {a}->{b}")
        t = segment_time(seg.length, seg.traffic, speeds)
        c, after, electric = model.step(seg.length, seg.traffic.index, energy)
        legs.append(Leg(a, b, seg.traffic, seg.length, t, c, after, electric, seg.length - electric))
        distance += seg.length
        time += t
        cost += c
        energy = after
    return Route(Strategy(strategy), vehicle.name, tuple(nodes), tuple(legs), distance, time, cost, energy)


def route(
    net: Network,
    strategy: Strategy,
    vehicle: VehicleSpec,
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    origin: int = 0,
    dest: int = 1,
    tree: SearchTree | None = None,
) -> Route | None:
    """Optimal route from ``origin`` to ``dest``, or ``None`` if there is none."""
    _check_node(net, origin, "origin")
    _check_node(net, dest, "destination")
    if origin == dest:
        raise RoutingError("origin and destination must differ")
    if tree is None:
        tree = search(net, strategy, vehicle, prices, speeds, origin)
    path = tree.path(dest)
    if path is None:
        return None
    return replay(net, strategy, vehicle, prices, speeds, path)


class Router:
    """Routes for one vehicle on one network, reusing per-source search trees."""

    def __init__(
        self,
        net: Network,
        vehicle: VehicleSpec,
        prices: EnergyPrices = EnergyPrices(),
        speeds: CycleSpeeds = CycleSpeeds(),
    ):
        self.net = net
        self.vehicle = vehicle
        self.prices = prices
        self.speeds = speeds
        self._trees: dict[tuple[Strategy, int], SearchTree] = {}

    def tree(self, strategy: Strategy, source: int) -> SearchTree:
        key = (Strategy(strategy), source)
        if key not in self._trees:
            self._trees[key] = search(self.net, key[0], self.vehicle, self.prices, self.speeds, source)
        return self._trees[key]

    def route(self, strategy: Strategy, origin: int, dest: int) -> Route | None:
        return route(
            self.net, strategy, self.vehicle, self.prices, self.speeds, origin, dest,
            tree=self.tree(strategy, origin),
        )


def brute_force_route(
    net: Network,
    strategy: Strategy,
    vehicle: VehicleSpec,
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    origin: int = 0,
    dest: int = 1,
) -> Route | None:
    """Exhaustive search over simple paths; an oracle for :func:`route`."""
    if len(net.nodes) > BRUTE_FORCE_MAX_NODES:
        raise RoutingError(
            f"brute force refuses networks over {BRUTE_FORCE_MAX_NODES} nodes ({len(net.nodes)} given)"
        )
    _check_node(net, origin, "origin")
    _check_node(net, dest, "destination")
    if origin == dest:
        raise RoutingError("origin and destination must differ")
    strategy = Strategy(strategy)
    model = CostModel(vehicle, prices)
    best: list = [None]

    def weight_of(seg, energy):
        c, after, _ = model.step(seg.length, seg.traffic.index, energy)
        if strategy is Strategy.DISTANCE:
            return seg.length, after
        if strategy is Strategy.TIME:
            return segment_time(seg.length, seg.traffic, speeds), after
        return c, after

    def visit(path, on_path, w, energy):
        u = path[-1]
        if u == dest:
            key = (w, path[::-1])
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        for seg in net.out_segments(u):
            v = seg.target
            if v in on_path:
                continue
            try:
                dw, after = weight_of(seg, energy)
            except RangeExhausted:
                if strategy is Strategy.COST:
                    continue
                dw, after = (seg.length if strategy is Strategy.DISTANCE
                             else segment_time(seg.length, seg.traffic, speeds)), 0.0
            path.append(v)
            on_path.add(v)
            visit(path, on_path, w + dw, after)
            on_path.discard(v)
            path.pop()

    visit([origin], {origin}, 0.0, initial_energy(vehicle))
    if best[0] is None:
        return None
    return replay(net, strategy, vehicle, prices, speeds, best[0][1][::-1])


def energy_from_cost(label: CostLabel, vehicle: VehicleSpec, prices: EnergyPrices = EnergyPrices()) -> float:
    """Remaining energy recovered from accumulated cost alone.

    Equals ``label.energy`` while only electricity has been used; once any
    gasoline has been bought it goes non-positive (possibly negative).
    """
    return initial_energy(vehicle) - label.weight / prices.p_ele


# Name used by the published interface.
eq15_energy = energy_from_cost
