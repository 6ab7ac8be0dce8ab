"""Command-line front end: ``route``, ``sweep``, ``gen`` and ``validate``.

Exit codes: 0 success, 1 error, 2 no route, 64 bad usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .experiments import (
    ExperimentError,
    changed_and_savings,
    fleet_sweep,
    soc_sweep,
    write_report,
)
from .network import NetworkError, ParseError, ValidationError, generate_grid, load_network, write_network
from .powertrain import (
    CycleSpeeds,
    EnergyPrices,
    RangeExhausted,
    VehicleError,
    builtin_fleet,
    builtin_vehicle,
    load_prices,
    load_speeds,
    load_vehicles,
)
from .routing import RoutingError, Strategy, route

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ROUTE = 2
EXIT_USAGE = 64

log = logging.getLogger("powerroute")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# -- shared option handling ------------------------------------------------------


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", required=True, help="network file (line format, or .json)")
    p.add_argument("--prices", help="prices JSON (default: $0.114/kWh, $2.75/gal)")
    p.add_argument("--speeds", help="cycle speeds JSON with low/avg/heavy mph (default: 48.28/19.58/7.05)")
    p.add_argument("--soc", type=float, help="initial SOC override for plug-in vehicles, e.g. 0.6")
    p.add_argument("--seed", type=int, default=0, help="random seed (accepted for uniformity; routing is deterministic)")


def _load_selection(text: str) -> list:
    """Resolve ``--vehicle``: comma-separated built-in names and/or JSON paths."""
    out = []
    for item in (t.strip() for t in text.split(",")):
        if not item:
            continue
        if item.lower().endswith(".json") or Path(item).exists():
            out.extend(load_vehicles(item))
        else:
            out.append(builtin_vehicle(item))
    if not out:
        raise UsageError("no vehicle selected")
    return out


def _apply_soc(vehicles, soc):
    if soc is None:
        return vehicles
    if not 0.0 <= soc <= 1.0:
        raise UsageError(f"--soc must be in [0, 1], got {soc}")
    for v in vehicles:
        if not v.kind.plug_in:
            raise VehicleError(f"--soc only applies to plug-in vehicles, not {v.name}")
    return [v.with_soc(soc) for v in vehicles]


def _model_inputs(args):
    net = load_network(args.network)
    prices = load_prices(args.prices) if args.prices else EnergyPrices()
    speeds = load_speeds(args.speeds) if args.speeds else CycleSpeeds()
    return net, prices, speeds


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# -- commands ---------------------------------------------------------------------


def cmd_route(args) -> int:
    net, prices, speeds = _model_inputs(args)
    vehicles = _apply_soc(_load_selection(args.vehicle), args.soc)
    if len(vehicles) != 1:
        raise UsageError("route takes exactly one vehicle")
    vehicle = vehicles[0]
    if args.origin == args.dest:
        raise UsageError("--origin and --dest must differ")
    strategy = Strategy(args.strategy)
    try:
        r = route(net, strategy, vehicle, prices, speeds, args.origin, args.dest)
    except RangeExhausted as exc:
        print(f"route exceeds battery range: {exc}", file=sys.stderr)
        return EXIT_NO_ROUTE
    if r is None:
        print(f"no route from {args.origin} to {args.dest} for {vehicle.name}")
        return EXIT_NO_ROUTE
    print(f"{vehicle.name} {strategy.label} route {args.origin} -> {args.dest}")
    print("nodes: " + " ".join(str(n) for n in r.nodes))
    print(f"{'from':>6} {'to':>6} {'traffic':>7} {'miles':>10} {'hours':>10} {'cost_usd':>10} "
          f"{'elec_mi':>10} {'gas_mi':>10} {'kwh_left':>10}")
    for leg in r.legs:
        print(
            f"{leg.source:>6} {leg.target:>6} {leg.traffic.value:>7} {_fmt(leg.length):>10} "
            f"{_fmt(leg.time):>10} {_fmt(leg.cost):>10} {_fmt(leg.electric_miles):>10} "
            f"{_fmt(leg.gas_miles):>10} {_fmt(leg.energy_after):>10}"
        )
    print(
        f"total: {_fmt(r.distance)} mi, {_fmt(r.time)} h, ${_fmt(r.cost)}, "
        f"{_fmt(r.final_energy)} kWh left"
    )
    return EXIT_OK


def _summary_line(report) -> str:
    baseline = Strategy(report.baseline).label
    return (
        f"{report.vehicle} vs {baseline}: changed {report.changed_fraction:.1%}, "
        f"mean saving on changed {report.mean_saving_on_changed:.2%}, "
        f"max saving {report.max_saving:.2%}, "
        f"mean time change {report.mean_time_delta:+.2%} "
        f"({report.n_pairs} pairs, {report.n_unreachable} unreachable)"
    )


def cmd_sweep(args) -> int:
    net, prices, speeds = _model_inputs(args)
    if args.fleet or not args.vehicle:
        vehicles = builtin_fleet()
    else:
        vehicles = _load_selection(args.vehicle)
    out = Path(args.out)
    meta = {
        "network": str(args.network),
        "pairs": args.pairs,
        "prices": {"p_ele": prices.p_ele, "p_gas": prices.p_gas},
        "speeds": {"low": speeds.low, "avg": speeds.avg, "heavy": speeds.heavy},
    }

    if args.soc_sweep:
        levels = _parse_floats(args.soc_sweep, "--soc-sweep")
        if args.fleet or not args.vehicle or len(vehicles) != 1:
            raise UsageError("--soc-sweep needs --vehicle naming one plug-in hybrid")
        log.info("SOC sweep of %s at %s", vehicles[0].name, levels)
        result = soc_sweep(net, vehicles[0], levels, prices, speeds, args.pairs, args.jobs)
        by_level = {}
        for level, recs in zip(result.levels, result.records):
            by_level.setdefault(level, recs)
        records = [r for recs in by_level.values() for r in recs]
        reports = [rep for per_level in result.reports for rep in per_level.values()]
        meta.update(soc_levels=result.levels, divergence=result.divergence, vehicle=result.vehicle)
        write_report(records, reports, out, "soc_sweep", extra=meta)
        for rep in reports:
            print(_summary_line(rep))
        print(f"route divergence between SOC levels ({result.vehicle}):")
        print("        " + " ".join(f"{lv:>7g}" for lv in result.levels))
        for lv, row in zip(result.levels, result.divergence):
            print(f"{lv:>7g} " + " ".join(f"{x:>7.2%}" for x in row))
        return EXIT_OK

    vehicles = _apply_soc(vehicles, args.soc)
    log.info("sweeping %d vehicle(s) over %s pairs", len(vehicles), args.pairs)
    swept = fleet_sweep(net, vehicles, prices, speeds, args.pairs, args.jobs)
    reports = []
    for v in vehicles:
        recs = swept[v.name]
        if not recs:
            continue
        for baseline in (Strategy.DISTANCE, Strategy.TIME):
            rep = changed_and_savings(recs, baseline, args.bin_width, args.changed_only)
            reports.append(rep)
            print(_summary_line(rep))
    records = [r for v in vehicles for r in swept[v.name]]
    table, summary = write_report(records, reports, out, "sweep", extra=meta)
    print(f"wrote {table} and {summary}")
    return EXIT_OK


def cmd_gen(args) -> int:
    weights = _parse_floats(args.traffic, "--traffic")
    if len(weights) != 3:
        raise UsageError("--traffic needs three weights: low,avg,heavy")
    net = generate_grid(args.rows, args.cols, args.spacing, weights, args.seed, args.jitter)
    try:
        write_network(net, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {args.out}: {len(net.nodes)} nodes, {len(net.segments)} directed segments")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        net = load_network(args.network)
    except ValidationError as exc:
        print(f"{args.network}: {len(exc.violations)} violation(s)")
        for v in exc.violations:
            print(f"  - {v}")
        return EXIT_ERROR
    except ParseError as exc:
        print(f"parse error: {exc}")
        return EXIT_ERROR
    out_degree = sum(len(a) for a in net.adjacency)
    isolated = [i for i, a in enumerate(net.adjacency) if not a]
    print(
        f"{args.network}: ok, {len(net.nodes)} nodes, {len(net.segments)} directed segments, "
        f"{net.unordered_pair_count()} unordered O-D pairs"
    )
    assert out_degree == len(net.segments)
    if isolated:
        print(f"note: {len(isolated)} node(s) without outgoing segments: {isolated[:10]}")
    return EXIT_OK


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="powerroute",
        description="Powertrain-aware least-cost routing and comparison sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("route", help="best route between two nodes")
    _add_model_flags(p)
    p.add_argument("--vehicle", required=True, help="built-in name (CV, HEV, PHEV20, PHEV40, PHEV60, BEV100) or vehicle JSON")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="cost", help="objective (default: cost)")
    p.add_argument("--origin", type=int, required=True, help="origin node id")
    p.add_argument("--dest", type=int, required=True, help="destination node id")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("sweep", help="all-pairs comparison of least-cost against distance/time routing")
    _add_model_flags(p)
    p.add_argument("--vehicle", help="comma-separated built-in names or vehicle JSON files (default: whole fleet)")
    p.add_argument("--fleet", action="store_true", help="sweep all six built-in vehicles")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="cost",
                   help="strategy under test; sweeps always compare cost against distance and time")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--pairs", choices=["ordered", "unordered"], default="unordered", help="O-D pair mode (default: unordered)")
    p.add_argument("--jobs", type=int, default=0, help="worker processes (default: all cores)")
    p.add_argument("--bin-width", type=float, default=0.05, help="savings histogram bin width as a fraction (default: 0.05)")
    p.add_argument("--changed-only", action="store_true", help="average traffic composition over changed routes only")
    p.add_argument("--soc-sweep", metavar="LEVELS", help="comma-separated initial SOC levels for one PHEV, e.g. 0.9,0.6,0.4")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a synthetic grid network")
    p.add_argument("--rows", type=int, required=True, help="grid rows (>= 2)")
    p.add_argument("--cols", type=int, required=True, help="grid columns (>= 2)")
    p.add_argument("--spacing", type=float, default=1.0, help="block length in miles (default: 1)")
    p.add_argument("--traffic", default="0.3,0.5,0.2", help="low,avg,heavy class weights (default: 0.3,0.5,0.2)")
    p.add_argument("--jitter", type=float, default=0.0, help="node displacement as a fraction of spacing, in [0, 1) (default: 0)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--out", required=True, help="output file; .json selects the JSON format")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check a network file")
    p.add_argument("--network", required=True, help="network file to check")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"powerroute: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NetworkError, VehicleError, RoutingError, ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
