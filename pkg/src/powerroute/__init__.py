"""Powertrain-aware least-cost routing over traffic-annotated road networks."""

from .network import (
    Network,
    Node,
    Segment,
    TrafficClass,
    generate_grid,
    load_network,
    segment_length,
    write_network,
)
from .powertrain import (
    CycleSpeeds,
    EnergyPrices,
    PowertrainKind,
    VehicleSpec,
    builtin_fleet,
    builtin_vehicle,
    initial_energy,
    segment_cost,
    segment_time,
)
from .routing import Route, Router, Strategy, brute_force_route, route, search

__version__ = "0.1.0"

__all__ = [
    "CycleSpeeds",
    "EnergyPrices",
    "Network",
    "Node",
    "PowertrainKind",
    "Route",
    "Router",
    "Segment",
    "Strategy",
    "TrafficClass",
    "VehicleSpec",
    "brute_force_route",
    "builtin_fleet",
    "builtin_vehicle",
    "generate_grid",
    "initial_energy",
    "load_network",
    "route",
    "search",
    "segment_cost",
    "segment_length",
    "segment_time",
    "write_network",
]
