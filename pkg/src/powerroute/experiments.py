"""All-pairs comparisons of least-cost routing against distance and time routing.

A sweep runs one search per (source, strategy, vehicle) and reads every
destination off the resulting tree. Per-destination totals are accumulated
down the tree in settle order, using the same arithmetic as
:func:`powerroute.routing.replay`, so the numbers in a sweep are bit-identical
to what ``route`` reports for the same pair.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .network import TRAFFIC_CLASSES, Network
from .powertrain import (
    CostModel,
    CycleSpeeds,
    EnergyPrices,
    PowertrainKind,
    RangeExhausted,
    VehicleSpec,
)
from .routing import SearchTree, Strategy, search

STRATEGIES = (Strategy.DISTANCE, Strategy.TIME, Strategy.COST)
PAIR_MODES = ("ordered", "unordered")
DEFAULT_BIN_WIDTH = 0.05


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RouteSummary:
    distance: float
    time: float
    cost: float | None  # None when a battery-electric vehicle cannot drive the path
    path_hash: str
    miles: tuple[float, float, float]
    hours: tuple[float, float, float]


@dataclass(frozen=True, slots=True)
class PairRecord:
    origin: int
    dest: int
    vehicle: str
    distance: RouteSummary | None = None
    time: RouteSummary | None = None
    cost: RouteSummary | None = None

    @property
    def reachable(self) -> bool:
        return self.distance is not None and self.time is not None and self.cost is not None

    def summary(self, strategy: Strategy) -> RouteSummary | None:
        try:
            return getattr(self, _FIELD[strategy])
        except KeyError:
            return getattr(self, Strategy(strategy).value)


_FIELD = {s: s.value for s in Strategy}


def path_hash(nodes: Sequence[int]) -> str:
    """Stable 64-bit digest of a node sequence (hex)."""
    digest = b""
    for node in nodes:
        digest = _extend_hash(digest, node)
    return digest.hex()


def _extend_hash(prefix: bytes, node: int) -> bytes:
    return hashlib.blake2b(prefix + node.to_bytes(4, "little"), digest_size=8).digest()


# -- sweeping ----------------------------------------------------------------


def _tree_paths(net: Network, tree: SearchTree, seg_time: list[float]) -> list[tuple | None]:
    """Vehicle-independent totals along every tree path, indexed by destination.

    Each entry is ``(distance, time, path_hash, miles, hours)``.
    """
    n = len(net.nodes)
    lengths = net.lengths
    classes = net.classes
    out: list[tuple | None] = [None] * n
    digest = [b""] * n
    pred = tree.pred
    via = tree.via
    blake2b = hashlib.blake2b
    for j in tree.order:
        p = pred[j]
        if p < 0:
            digest[j] = _extend_hash(b"", j)
            out[j] = (0.0, 0.0, "", (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
            continue
        k = via[j]
        length = lengths[k]
        t = seg_time[k]
        cls = classes[k]
        d0, t0, _, m, h = out[p]
        if cls == 0:
            m = (m[0] + length, m[1], m[2])
            h = (h[0] + t, h[1], h[2])
        elif cls == 1:
            m = (m[0], m[1] + length, m[2])
            h = (h[0], h[1] + t, h[2])
        else:
            m = (m[0], m[1], m[2] + length)
            h = (h[0], h[1], h[2] + t)
        digest[j] = dj = blake2b(digest[p] + j.to_bytes(4, "little"), digest_size=8).digest()
        out[j] = (d0 + length, t0 + t, dj.hex(), m, h)
    return out


def _tree_costs(net: Network, tree: SearchTree, model: CostModel) -> list[float | None]:
    """The vehicle's cost of driving each tree path (``None`` if it cannot)."""
    if tree.strategy is Strategy.COST:
        return tree.weight
    n = len(net.nodes)
    lengths = net.lengths
    classes = net.classes
    cost: list[float | None] = [None] * n
    energy = [0.0] * n
    pred = tree.pred
    via = tree.via
    step = model.step
    for j in tree.order:
        p = pred[j]
        if p < 0:
            cost[j] = 0.0
            energy[j] = model.e_ini
            continue
        c = cost[p]
        if c is None:
            continue
        k = via[j]
        try:
            sc, energy[j], _ = step(lengths[k], classes[k], energy[p])
        except RangeExhausted:
            continue
        cost[j] = c + sc
    return cost


def _summaries(paths, costs, dests) -> dict[int, RouteSummary]:
    out = {}
    for d in dests:
        p = paths[d]
        if p is not None:
            out[d] = RouteSummary(p[0], p[1], costs[d], p[2], p[3], p[4])
    return out


def _destinations(source: int, n: int, pair_mode: str) -> range | list[int]:
    if pair_mode == "unordered":
        return range(source + 1, n)
    return [d for d in range(n) if d != source]


_worker_state: dict = {}


def _init_worker(net, vehicles, prices, speeds, pair_mode):
    _worker_state.update(
        net=net, vehicles=vehicles, prices=prices, speeds=speeds, pair_mode=pair_mode,
        seg_time=[s.length / speeds.speed(s.traffic) for s in net.segments],
        models=[CostModel(v, prices) for v in vehicles],
    )


def _sweep_sources(sources: Sequence[int]) -> list[list[list[PairRecord]]]:
    st = _worker_state
    net, vehicles, prices, speeds = st["net"], st["vehicles"], st["prices"], st["speeds"]
    n = len(net.nodes)
    out = []
    for source in sources:
        dests = _destinations(source, n, st["pair_mode"])
        if not dests:
            out.append([[] for _ in vehicles])
            continue
        seg_time = st["seg_time"]
        dist_tree = search(net, Strategy.DISTANCE, None, prices, speeds, source)
        time_tree = search(net, Strategy.TIME, None, prices, speeds, source)
        dist_paths = _tree_paths(net, dist_tree, seg_time)
        time_paths = _tree_paths(net, time_tree, seg_time)
        per_vehicle = []
        for vehicle, model in zip(vehicles, st["models"]):
            cost_tree = search(net, Strategy.COST, vehicle, prices, speeds, source)
            sd = _summaries(dist_paths, _tree_costs(net, dist_tree, model), dests)
            stt = _summaries(time_paths, _tree_costs(net, time_tree, model), dests)
            sc = _summaries(_tree_paths(net, cost_tree, seg_time), cost_tree.weight, dests)
            name = vehicle.name
            per_vehicle.append(
                [PairRecord(source, d, name, sd.get(d), stt.get(d), sc.get(d)) for d in dests]
            )
        out.append(per_vehicle)
    return out


def fleet_sweep(
    net: Network,
    vehicles: Sequence[VehicleSpec],
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    pair_mode: str = "unordered",
    jobs: int | None = 1,
) -> dict[str, list[PairRecord]]:
    """Sweep every O-D pair for several vehicles, sharing the distance/time trees.

    Records come back ordered by (origin, dest) whatever ``jobs`` is. A pair
    that is unreachable under any strategy keeps ``None`` summaries for it.
    """
    if pair_mode not in PAIR_MODES:
        raise ExperimentError(f"pair_mode must be one of {PAIR_MODES}, got {pair_mode!r}")
    names = [v.name for v in vehicles]
    if len(set(names)) != len(names):
        raise ExperimentError(f"vehicle names must be unique, got {names}")
    n = len(net.nodes)
    sources = list(range(n))
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    args = (net, tuple(vehicles), prices, speeds, pair_mode)
    if jobs == 1 or n < 2:
        _init_worker(*args)
        chunks_out = [_sweep_sources(sources)]
    else:
        # Interleaved chunks balance work in unordered mode, where early sources
        # have more destinations.
        chunks = [sources[i::jobs * 4] for i in range(jobs * 4)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=args) as pool:
            chunks_out = list(pool.map(_sweep_sources, chunks))
        by_source = {}
        for chunk, result in zip(chunks, chunks_out):
            for source, rec in zip(chunk, result):
                by_source[source] = rec
        chunks_out = [[by_source[s] for s in sources]]
    records: dict[str, list[PairRecord]] = {name: [] for name in names}
    for result in chunks_out:
        for per_vehicle in result:
            for name, recs in zip(names, per_vehicle):
                records[name].extend(recs)
    return records


def all_pairs_sweep(
    net: Network,
    vehicle: VehicleSpec,
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    pair_mode: str = "unordered",
    jobs: int | None = 1,
) -> list[PairRecord]:
    return fleet_sweep(net, [vehicle], prices, speeds, pair_mode, jobs)[vehicle.name]


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class StrategyComposition:
    mean_distance: float
    mean_time: float
    mean_miles: tuple[float, float, float]
    mean_hours: tuple[float, float, float]

    @property
    def mile_shares(self) -> tuple[float, float, float]:
        total = sum(self.mean_miles)
        return tuple(m / total if total else 0.0 for m in self.mean_miles)

    @property
    def hour_shares(self) -> tuple[float, float, float]:
        total = sum(self.mean_hours)
        return tuple(h / total if total else 0.0 for h in self.mean_hours)


@dataclass(frozen=True)
class Composition:
    n_pairs: int
    strategies: dict[str, StrategyComposition]
    baseline: str
    mean_time_delta: float  # mean relative change of least-cost vs baseline travel time
    max_time_delta: float


@dataclass(frozen=True)
class SweepReport:
    vehicle: str
    baseline: str
    n_pairs: int
    n_unreachable: int
    n_infeasible_baseline: int
    n_changed: int
    changed_fraction: float
    mean_saving_on_changed: float
    max_saving: float
    bin_width: float
    savings_histogram: list[int]
    composition: Composition | None = None
    mean_time_delta: float = 0.0
    max_time_delta: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _evaluable(records: Iterable[PairRecord], baseline: Strategy):
    """Split records into usable pairs plus counts of the ones left out."""
    usable, unreachable, infeasible = [], 0, 0
    for rec in records:
        if not rec.reachable:
            unreachable += 1
        elif rec.summary(baseline).cost is None:
            infeasible += 1
        else:
            usable.append(rec)
    return usable, unreachable, infeasible


def saving(rec: PairRecord, baseline: Strategy) -> float:
    """Relative cost reduction of the least-cost path over the baseline path."""
    ref = rec.summary(baseline)
    base = ref.cost
    best = rec.cost.cost
    if ref.path_hash == rec.cost.path_hash or base == 0:
        return 0.0
    return (base - best) / base


def _histogram(values: Iterable[float], bin_width: float) -> list[int]:
    nbins = int(round(1.0 / bin_width))
    counts = [0] * nbins
    for v in values:
        k = int(math.floor(max(v, 0.0) / bin_width + 1e-9))
        counts[min(max(k, 0), nbins - 1)] += 1
    return counts


def traffic_composition(
    records: Sequence[PairRecord],
    baseline: Strategy = Strategy.DISTANCE,
    changed_only: bool = False,
) -> Composition:
    """Mean per-class miles and hours for each strategy over reachable pairs."""
    baseline = Strategy(baseline)
    if not records:
        raise ExperimentError("no records to summarise")
    field = baseline.value
    usable = [r for r in records if r.reachable]
    if changed_only:
        usable = [r for r in usable if getattr(r, field).path_hash != r.cost.path_hash]
    count = len(usable)
    strategies = {}
    for strategy in STRATEGIES:
        name = strategy.value
        columns: list[list[float]] = [[] for _ in range(8)]
        dist, tim, m0, m1, m2, h0, h1, h2 = columns
        for r in usable:
            s = getattr(r, name)
            dist.append(s.distance)
            tim.append(s.time)
            m0.append(s.miles[0])
            m1.append(s.miles[1])
            m2.append(s.miles[2])
            h0.append(s.hours[0])
            h1.append(s.hours[1])
            h2.append(s.hours[2])
        means = [math.fsum(col) / count if count else 0.0 for col in columns]
        strategies[name] = StrategyComposition(means[0], means[1], tuple(means[2:5]), tuple(means[5:8]))
    deltas = _time_deltas(usable, field)
    return Composition(
        count,
        strategies,
        baseline.value,
        math.fsum(deltas) / count if count else 0.0,
        max(deltas, default=0.0),
    )


def _time_deltas(records: Sequence[PairRecord], field: str) -> list[float]:
    out = []
    for r in records:
        base = getattr(r, field).time
        out.append((r.cost.time - base) / base)
    return out


def changed_and_savings(
    records: Sequence[PairRecord],
    baseline: Strategy,
    bin_width: float = DEFAULT_BIN_WIDTH,
    changed_only: bool = False,
) -> SweepReport:
    """Changed-route share and cost savings of least-cost routing against ``baseline``.

    Savings are measured against the vehicle's own cost of driving the
    baseline path. The histogram covers every evaluated pair, unchanged
    pairs landing in the first bin.
    """
    if not records:
        raise ExperimentError("cannot report on an empty sweep")
    if not 0 < bin_width <= 1:
        raise ExperimentError(f"bin_width must be in (0, 1], got {bin_width}")
    baseline = Strategy(baseline)
    vehicles = {r.vehicle for r in records}
    if len(vehicles) != 1:
        raise ExperimentError(f"records mix vehicles: {sorted(vehicles)}")
    usable, unreachable, infeasible = _evaluable(records, baseline)
    field = baseline.value
    savings = [saving(r, baseline) for r in usable]
    changed = [s for r, s in zip(usable, savings) if getattr(r, field).path_hash != r.cost.path_hash]
    n = len(usable)
    comp = traffic_composition(records, baseline, changed_only) if usable else None
    deltas = _time_deltas(usable, field)
    return SweepReport(
        vehicle=records[0].vehicle,
        baseline=baseline.value,
        n_pairs=n,
        n_unreachable=unreachable,
        n_infeasible_baseline=infeasible,
        n_changed=len(changed),
        changed_fraction=len(changed) / n if n else 0.0,
        mean_saving_on_changed=math.fsum(changed) / len(changed) if changed else 0.0,
        max_saving=max(savings, default=0.0),
        bin_width=bin_width,
        savings_histogram=_histogram(savings, bin_width),
        composition=comp,
        mean_time_delta=math.fsum(deltas) / n if n else 0.0,
        max_time_delta=max(deltas, default=0.0),
    )


def divergence(a: Sequence[PairRecord], b: Sequence[PairRecord]) -> float:
    """Share of pairs (reachable in both) whose least-cost paths differ."""
    if len(a) != len(b):
        raise ExperimentError("record sets cover different pairs")
    same = differ = 0
    for ra, rb in zip(a, b):
        if (ra.origin, ra.dest) != (rb.origin, rb.dest):
            raise ExperimentError("record sets are not aligned")
        if ra.cost is None or rb.cost is None:
            continue
        if ra.cost.path_hash == rb.cost.path_hash:
            same += 1
        else:
            differ += 1
    total = same + differ
    return differ / total if total else 0.0


@dataclass(frozen=True)
class SocSweep:
    vehicle: str
    levels: list[float]
    records: list[list[PairRecord]]
    reports: list[dict[str, SweepReport]]
    divergence: list[list[float]]


def soc_sweep(
    net: Network,
    phev_spec: VehicleSpec,
    soc_levels: Sequence[float],
    prices: EnergyPrices = EnergyPrices(),
    speeds: CycleSpeeds = CycleSpeeds(),
    pair_mode: str = "unordered",
    jobs: int | None = 1,
) -> SocSweep:
    """Least-cost sweeps of one plug-in hybrid at several initial SOC levels."""
    if phev_spec.kind is not PowertrainKind.PHEV:
        raise ExperimentError(f"{phev_spec.name} is not a plug-in hybrid")
    levels = [float(s) for s in soc_levels]
    if not levels:
        raise ExperimentError("no SOC levels given")
    for level in levels:
        if not phev_spec.soc_target <= level <= 1.0:
            raise ExperimentError(
                f"SOC level {level} outside [{phev_spec.soc_target}, 1]"
            )
    distinct = sorted(set(levels), reverse=True)
    variants = [phev_spec.with_soc(level) for level in distinct]
    variants = [
        VehicleSpec(f"{v.name}@{level:g}", v.kind, v.factors, v.battery_capacity, v.soc_initial, v.soc_target)
        for v, level in zip(variants, distinct)
    ]
    swept = fleet_sweep(net, variants, prices, speeds, pair_mode, jobs)
    by_level = {level: swept[v.name] for level, v in zip(distinct, variants)}
    records = [by_level[level] for level in levels]
    reports = []
    for recs in records:
        if recs:
            reports.append({b.value: changed_and_savings(recs, b) for b in (Strategy.DISTANCE, Strategy.TIME)})
        else:
            reports.append({})
    matrix = [[0.0 if i == j else divergence(records[i], records[j]) for j in range(len(levels))]
              for i in range(len(levels))]
    return SocSweep(phev_spec.name, levels, records, reports, matrix)


# -- reports -------------------------------------------------------------------

SUMMARY_FIELDS = ("distance_mi", "time_h", "cost_usd", "path_hash") + tuple(
    f"{unit}_{c.value}" for unit in ("miles", "hours") for c in TRAFFIC_CLASSES
)
CSV_HEADER = ["origin", "dest", "vehicle"] + [
    f"{s.value}.{f}" for s in STRATEGIES for f in SUMMARY_FIELDS
]


_BLANK = ("",) * len(SUMMARY_FIELDS)


def _summary_cells(s: RouteSummary | None) -> tuple:
    # csv formats floats with repr(), which round-trips exactly.
    if s is None:
        return _BLANK
    return (s.distance, s.time, "" if s.cost is None else s.cost, s.path_hash) + s.miles + s.hours


def _summary_from_cells(cells: list[str]) -> RouteSummary | None:
    if not cells[0]:
        return None
    return RouteSummary(
        float(cells[0]),
        float(cells[1]),
        float(cells[2]) if cells[2] else None,
        cells[3],
        tuple(float(c) for c in cells[4:7]),
        tuple(float(c) for c in cells[7:10]),
    )


def write_records(records: Iterable[PairRecord], path: str | Path) -> Path:
    """One CSV row per (origin, dest, vehicle); rows sorted by origin then dest.

    Full float precision is kept so statistics recomputed from the file match.
    """
    path = Path(path)
    rows = sorted(records, key=lambda r: (r.origin, r.dest))
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(
                (r.origin, r.dest, r.vehicle)
                + _summary_cells(r.distance)
                + _summary_cells(r.time)
                + _summary_cells(r.cost)
                for r in rows
            )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_records(path: str | Path) -> list[PairRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ExperimentError(f"{path}: unexpected header")
        out = []
        width = len(SUMMARY_FIELDS)
        for row in reader:
            parts = [row[3 + i * width: 3 + (i + 1) * width] for i in range(len(STRATEGIES))]
            out.append(PairRecord(int(row[0]), int(row[1]), row[2], *(_summary_from_cells(p) for p in parts)))
    return out


def write_report(
    records: Sequence[PairRecord],
    reports: Sequence[SweepReport],
    destination: str | Path,
    stem: str = "sweep",
    extra: dict | None = None,
) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (per pair) and ``<stem>.summary.json`` into ``destination``."""
    destination = Path(destination)
    try:
        destination.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {destination}: {exc.strerror or exc}") from exc
    table = write_records(records, destination / f"{stem}.csv")
    summary = {"reports": [r.to_dict() for r in reports]}
    if extra:
        summary.update(extra)
    summary_path = destination / f"{stem}.summary.json"
    try:
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {summary_path}: {exc.strerror or exc}") from exc
    return table, summary_path
