"""Directed road networks with traffic-classed segments.

Two on-disk formats are supported. The line format::

    # comment
    meta coord_scale 62.137
    node 0 121.40 31.20
    node 1 121.41 31.20
    edge 0 1 low 0.62
    edge 1 0 heavy

and a JSON document with ``coord_scale``, ``nodes`` and ``edges`` keys
(see ``schemas/network.schema.json``). Edges without an explicit length get
the scaled Euclidean distance between their endpoints.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

DEFAULT_COORD_SCALE = 62.137


class TrafficClass(Enum):
    """Traffic level of a segment and the drive cycle standing in for it."""

    LOW = "low"
    AVERAGE = "avg"
    HEAVY = "heavy"

    @property
    def index(self) -> int:
        return _VALUE_INDEX[self._value_]

    @property
    def cycle(self) -> str:
        return _CYCLES[self]

    @classmethod
    def parse(cls, text: str) -> "TrafficClass":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown traffic class {text!r} (expected low, avg or heavy)"
            ) from None


TRAFFIC_CLASSES = (TrafficClass.LOW, TrafficClass.AVERAGE, TrafficClass.HEAVY)
_CLASS_INDEX = {c: i for i, c in enumerate(TRAFFIC_CLASSES)}
_VALUE_INDEX = {c.value: i for i, c in enumerate(TRAFFIC_CLASSES)}
_CYCLES = {
    TrafficClass.LOW: "HWFET",
    TrafficClass.AVERAGE: "UDDS",
    TrafficClass.HEAVY: "NYC",
}


class NetworkError(ValueError):
    """Base class for network input problems."""


class ParseError(NetworkError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(NetworkError):
    """Raised with every invariant violation found, not just the first."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Node:
    id: int
    lon: float
    lat: float


@dataclass(frozen=True)
class Segment:
    source: int
    target: int
    traffic: TrafficClass
    length: float


def segment_length(a: Node, b: Node, coord_scale: float = DEFAULT_COORD_SCALE) -> float:
    """Scaled Euclidean distance in miles between two nodes."""
    coords = (a.lon, a.lat, b.lon, b.lat)
    if not all(math.isfinite(c) for c in coords):
        raise NetworkError(f"non-finite coordinates for nodes {a.id}, {b.id}")
    if not (math.isfinite(coord_scale) and coord_scale > 0):
        raise NetworkError(f"coord_scale must be positive and finite, got {coord_scale}")
    return coord_scale * math.hypot(a.lon - b.lon, a.lat - b.lat)


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable directed graph; ``adjacency[i]`` lists indices into ``segments``."""

    nodes: tuple[Node, ...]
    segments: tuple[Segment, ...]
    coord_scale: float = DEFAULT_COORD_SCALE

    def __post_init__(self):
        nodes = tuple(self.nodes)
        segments = tuple(self.segments)
        problems = check(nodes, segments, self.coord_scale)
        if problems:
            raise ValidationError(problems)
        adjacency: list[list[int]] = [[] for _ in nodes]
        for k, seg in enumerate(segments):
            adjacency[seg.source].append(k)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "coord_scale", float(self.coord_scale))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adjacency))
        # Flat per-segment columns for the search inner loops.
        object.__setattr__(self, "lengths", tuple(s.length for s in segments))
        object.__setattr__(self, "classes", tuple(s.traffic.index for s in segments))
        object.__setattr__(self, "targets", tuple(s.target for s in segments))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.segments == other.segments
            and self.coord_scale == other.coord_scale
        )

    __hash__ = object.__hash__

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return f"Network(nodes={len(self.nodes)}, segments={len(self.segments)})"

    def out_segments(self, node: int) -> list[Segment]:
        return [self.segments[k] for k in self.adjacency[node]]

    def find_segment(self, source: int, target: int) -> Segment | None:
        for k in self.adjacency[source]:
            if self.segments[k].target == target:
                return self.segments[k]
        return None

    def unordered_pair_count(self) -> int:
        n = len(self.nodes)
        return n * (n - 1) // 2


def check(nodes: Sequence[Node], segments: Sequence[Segment], coord_scale: float) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems = []
    if not (isinstance(coord_scale, (int, float)) and math.isfinite(coord_scale) and coord_scale > 0):
        problems.append(f"coord_scale must be positive and finite, got {coord_scale!r}")
    for position, node in enumerate(nodes):
        if node.id != position:
            problems.append(
                f"node ids must be dense 0..{len(nodes) - 1} in order; "
                f"found id {node.id} at position {position}"
            )
            break
    for node in nodes:
        if not (math.isfinite(node.lon) and math.isfinite(node.lat)):
            problems.append(f"node {node.id}: non-finite coordinates")
    n = len(nodes)
    seen = set()
    for seg in segments:
        label = f"edge {seg.source}->{seg.target}"
        if not (0 <= seg.source < n):
            problems.append(f"{label}: dangling source node {seg.source}")
        if not (0 <= seg.target < n):
            problems.append(f"{label}: dangling target node {seg.target}")
        if seg.source == seg.target:
            problems.append(f"{label}: self-loop")
        if not isinstance(seg.traffic, TrafficClass):
            problems.append(f"{label}: invalid traffic class {seg.traffic!r}")
        if not math.isfinite(seg.length):
            problems.append(f"{label}: non-finite length {seg.length}")
        elif seg.length <= 0:
            problems.append(f"{label}: non-positive length {seg.length}")
        if (seg.source, seg.target) in seen:
            problems.append(f"{label}: duplicate directed segment")
        seen.add((seg.source, seg.target))
    return problems


# -- reading ---------------------------------------------------------------


def _raw_to_network(raw_nodes, raw_edges, coord_scale) -> Network:
    """Build a Network from parsed records, collecting every violation."""
    problems = []
    ids = [r[0] for r in raw_nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        problems.append(f"duplicate node ids: {dupes}")
    by_id = {r[0]: r for r in raw_nodes}
    nodes = [Node(i, float(by_id[i][1]), float(by_id[i][2])) for i in sorted(by_id)]
    segments = []
    for src, dst, traffic, length, where in raw_edges:
        if length is None:
            if src in by_id and dst in by_id and 0 <= src < len(nodes) and 0 <= dst < len(nodes):
                try:
                    length = segment_length(nodes[src], nodes[dst], coord_scale)
                except NetworkError as exc:
                    problems.append(f"{where}: {exc}")
                    continue
            else:
                length = math.nan
        segments.append(Segment(src, dst, traffic, float(length)))
    problems.extend(check(nodes, segments, coord_scale))
    if problems:
        raise ValidationError(problems)
    return Network(tuple(nodes), tuple(segments), coord_scale)


def parse_network_text(text: str, source: str | None = None) -> Network:
    coord_scale = DEFAULT_COORD_SCALE
    raw_nodes, raw_edges = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0].lower()
        try:
            if kind == "meta":
                if len(fields) != 3 or fields[1] != "coord_scale":
                    raise ValueError("expected 'meta coord_scale <float>'")
                if raw_nodes or raw_edges:
                    raise ValueError("meta header must precede node and edge records")
                coord_scale = float(fields[2])
            elif kind == "node":
                if len(fields) != 4:
                    raise ValueError("expected 'node <id> <lon> <lat>'")
                if raw_edges:
                    raise ValueError("node records must precede edge records")
                raw_nodes.append((_parse_id(fields[1]), float(fields[2]), float(fields[3])))
            elif kind == "edge":
                if len(fields) not in (4, 5):
                    raise ValueError("expected 'edge <from> <to> <low|avg|heavy> [length]'")
                length = float(fields[4]) if len(fields) == 5 else None
                raw_edges.append(
                    (
                        _parse_id(fields[1]),
                        _parse_id(fields[2]),
                        TrafficClass.parse(fields[3]),
                        length,
                        f"line {lineno}",
                    )
                )
            else:
                raise ValueError(f"unknown record type {fields[0]!r}")
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, source=source) from None
    return _raw_to_network(raw_nodes, raw_edges, coord_scale)


def network_from_dict(doc: dict, source: str | None = None) -> Network:
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object", source=source)
    try:
        coord_scale = float(doc.get("coord_scale", DEFAULT_COORD_SCALE))
        raw_nodes = []
        for k, rec in enumerate(doc["nodes"]):
            try:
                raw_nodes.append((_parse_id(rec["id"]), float(rec["lon"]), float(rec["lat"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"nodes[{k}]: {_describe(exc)}", source=source) from None
        raw_edges = []
        for k, rec in enumerate(doc.get("edges", [])):
            try:
                length = rec.get("length")
                raw_edges.append(
                    (
                        _parse_id(rec["from"]),
                        _parse_id(rec["to"]),
                        TrafficClass.parse(rec["traffic"]),
                        None if length is None else float(length),
                        f"edges[{k}]",
                    )
                )
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise ParseError(f"edges[{k}]: {_describe(exc)}", source=source) from None
    except KeyError as exc:
        raise ParseError(f"missing key {exc}", source=source) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), source=source) from None
    return _raw_to_network(raw_nodes, raw_edges, coord_scale)


def load_network(path: str | Path) -> Network:
    """Load a network from the line format or, for ``.json`` files, the JSON format."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, source=str(path)) from None
        return network_from_dict(doc, source=str(path))
    return parse_network_text(text, source=str(path))


def _parse_id(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"invalid node id {value!r}")
    if isinstance(value, int):
        ident = value
    elif isinstance(value, str) and value.strip().lstrip("+").isdigit():
        ident = int(value)
    else:
        raise ValueError(f"invalid node id {value!r}")
    if ident < 0:
        raise ValueError(f"invalid node id {value!r}")
    return ident


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing key {exc}"
    return str(exc)


# -- writing ---------------------------------------------------------------


def format_network_text(net: Network) -> str:
    lines = [f"meta coord_scale {net.coord_scale!r}"]
    lines += [f"node {n.id} {n.lon!r} {n.lat!r}" for n in net.nodes]
    lines += [
        f"edge {s.source} {s.target} {s.traffic.value} {s.length!r}" for s in net.segments
    ]
    return "\n".join(lines) + "\n"


def network_to_dict(net: Network) -> dict:
    return {
        "coord_scale": net.coord_scale,
        "nodes": [{"id": n.id, "lon": n.lon, "lat": n.lat} for n in net.nodes],
        "edges": [
            {"from": s.source, "to": s.target, "traffic": s.traffic.value, "length": s.length}
            for s in net.segments
        ],
    }


def write_network(net: Network, path: str | Path) -> Path:
    """Write ``net`` with explicit lengths so that loading it back is exact."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        text = json.dumps(network_to_dict(net), indent=1) + "\n"
    else:
        text = format_network_text(net)
    path.write_text(text)
    return path


# -- synthesis -------------------------------------------------------------


def generate_grid(
    rows: int,
    cols: int,
    spacing: float = 1.0,
    traffic_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    seed: int = 0,
    jitter: float = 0.0,
) -> Network:
    """Grid city with two-way streets between 4-neighbours.

    Coordinates are in miles (``coord_scale`` 1). Both directions of a street
    share one traffic class drawn from ``traffic_weights`` (low, avg, heavy).
    ``jitter`` displaces each node by up to ``jitter * spacing / 2`` per axis,
    which breaks the many equal-length paths of a perfect grid.
    """
    if int(rows) != rows or int(cols) != cols or rows < 2 or cols < 2:
        raise NetworkError(f"grid needs rows, cols >= 2, got {rows}x{cols}")
    if not (math.isfinite(spacing) and spacing > 0):
        raise NetworkError(f"spacing must be positive, got {spacing}")
    weights = [float(w) for w in traffic_weights]
    if len(weights) != 3 or any(not math.isfinite(w) or w < 0 for w in weights) or sum(weights) <= 0:
        raise NetworkError(f"traffic_weights must be three non-negative numbers, got {traffic_weights}")
    if not (0 <= jitter < 1):
        raise NetworkError(f"jitter must be in [0, 1), got {jitter}")

    rng = random.Random(seed)
    nodes = []
    for r in range(rows):
        for c in range(cols):
            lon, lat = c * spacing, r * spacing
            if jitter:
                lon += rng.uniform(-0.5, 0.5) * jitter * spacing
                lat += rng.uniform(-0.5, 0.5) * jitter * spacing
            nodes.append(Node(r * cols + c, lon, lat))

    streets = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                streets.append((i, i + 1))
            if r + 1 < rows:
                streets.append((i, i + cols))

    segments = []
    for a, b in streets:
        traffic = rng.choices(TRAFFIC_CLASSES, weights=weights)[0]
        length = spacing if not jitter else segment_length(nodes[a], nodes[b], 1.0)
        segments.append(Segment(a, b, traffic, length))
        segments.append(Segment(b, a, traffic, length))
    return Network(tuple(nodes), tuple(segments), 1.0)
