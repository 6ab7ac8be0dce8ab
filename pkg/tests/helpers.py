"""Small graph builders and independent oracles shared by the test modules."""

import math
import random

from powerroute.network import TRAFFIC_CLASSES, Network, Node, Segment, TrafficClass
from powerroute.powertrain import CostModel, RangeExhausted, segment_time
from powerroute.routing import Strategy

LOW, AVG, HEAVY = TrafficClass.LOW, TrafficClass.AVERAGE, TrafficClass.HEAVY


def two_way(edges, n=None):
    """Network from undirected ``(a, b, traffic, length)`` edges."""
    if n is None:
        n = 1 + max(max(a, b) for a, b, _, _ in edges)
    nodes = tuple(Node(i, float(i), 0.0) for i in range(n))
    segs = []
    for a, b, traffic, length in edges:
        segs += [Segment(a, b, traffic, float(length)), Segment(b, a, traffic, float(length))]
    return Network(nodes, tuple(segs), 1.0)


def diamond(detour_leg=10.0, direct=10.0):
    """0 -> 2 directly on a heavy road, or 0 -> 1 -> 2 on two low-traffic legs."""
    return two_way([(0, 2, HEAVY, direct), (0, 1, LOW, detour_leg), (1, 2, LOW, detour_leg)])


def random_network(rng: random.Random, max_nodes=9, max_edges=20, length_range=(0.5, 20.0)):
    n = rng.randint(2, max_nodes)
    nodes = tuple(Node(i, rng.uniform(0, 10), rng.uniform(0, 10)) for i in range(n))
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    m = rng.randint(1, min(max_edges, len(pairs)))
    chosen = rng.sample(pairs, m)
    segs = tuple(
        Segment(a, b, rng.choice(TRAFFIC_CLASSES), rng.uniform(*length_range)) for a, b in chosen
    )
    return Network(nodes, segs, 1.0)


def fixed_point_weights(net, strategy, vehicle, prices, speeds, source):
    """Repeat the all-segment relaxation until no potential changes.

    Each node keeps the best (weight, energy) pair seen so far; the energy
    travels with the weight it was produced with.
    """
    model = CostModel(vehicle, prices)
    n = len(net.nodes)
    weight = [math.inf] * n
    energy = [0.0] * n
    weight[source] = 0.0
    energy[source] = model.e_ini
    for _ in range(n + 1):
        new_w, new_e = list(weight), list(energy)
        for seg in net.segments:
            i, j = seg.source, seg.target
            if weight[i] == math.inf or j == source:
                continue
            try:
                cost, after, _ = model.step(seg.length, seg.traffic.index, energy[i])
            except RangeExhausted:
                if strategy is Strategy.COST:
                    continue
                after = 0.0
            if strategy is Strategy.DISTANCE:
                w = weight[i] + seg.length
            elif strategy is Strategy.TIME:
                w = weight[i] + segment_time(seg.length, seg.traffic, speeds)
            else:
                w = weight[i] + cost
            if w < new_w[j]:
                new_w[j], new_e[j] = w, after
        if new_w == weight:
            break
        weight, energy = new_w, new_e
    return weight


def rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
