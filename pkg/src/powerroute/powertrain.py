"""Vehicle specifications and per-segment time, cost and battery models."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

from .network import TRAFFIC_CLASSES, TrafficClass


class PowertrainKind(Enum):
    CV = "CV"
    HEV = "HEV"
    PHEV = "PHEV"
    BEV = "BEV"

    @property
    def plug_in(self) -> bool:
        return self in (PowertrainKind.PHEV, PowertrainKind.BEV)


class VehicleError(ValueError):
    pass


class RangeExhausted(VehicleError):
    """A battery-only vehicle cannot cover a segment with the energy left."""


# Per-class values are stored as (low, avg, heavy) tuples indexed by TrafficClass.index.
ClassTable = tuple[float, float, float]


def _class_table(values, what: str) -> ClassTable:
    if isinstance(values, Mapping):
        try:
            values = [values[c.value] for c in TRAFFIC_CLASSES]
        except KeyError as exc:
            raise VehicleError(f"{what}: missing traffic class {exc}") from None
    table = tuple(float(v) for v in values)
    if len(table) != 3:
        raise VehicleError(f"{what}: need three values (low, avg, heavy)")
    if any(not v > 0 for v in table):
        raise VehicleError(f"{what}: factors must be positive, got {table}")
    return table


@dataclass(frozen=True)
class ConversionFactors:
    """Miles per kWh in charge-depleting mode, miles per gallon in charge-sustaining."""

    cd: ClassTable | None = None
    cs: ClassTable | None = None

    def __post_init__(self):
        if self.cd is not None:
            object.__setattr__(self, "cd", _class_table(self.cd, "cd factors"))
        if self.cs is not None:
            object.__setattr__(self, "cs", _class_table(self.cs, "cs factors"))


@dataclass(frozen=True)
class VehicleSpec:
    name: str
    kind: PowertrainKind
    factors: ConversionFactors
    battery_capacity: float = 0.0
    soc_initial: float = 0.0
    soc_target: float = 0.0

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, PowertrainKind):
            try:
                kind = PowertrainKind(str(kind).upper())
            except ValueError:
                raise VehicleError(f"{self.name}: unknown powertrain kind {self.kind!r}") from None
            object.__setattr__(self, "kind", kind)
        for field in ("soc_initial", "soc_target"):
            value = getattr(self, field)
            if not 0.0 <= value <= 1.0:
                raise VehicleError(f"{self.name}: {field} must be in [0, 1], got {value}")
        if self.battery_capacity < 0:
            raise VehicleError(f"{self.name}: negative battery capacity")
        f = self.factors
        if kind in (PowertrainKind.CV, PowertrainKind.HEV, PowertrainKind.PHEV) and f.cs is None:
            raise VehicleError(f"{self.name}: {kind.value} needs charge-sustaining factors")
        if kind.plug_in:
            if f.cd is None:
                raise VehicleError(f"{self.name}: {kind.value} needs charge-depleting factors")
            if not self.battery_capacity > 0:
                raise VehicleError(f"{self.name}: plug-in vehicles need a battery")
        if kind is PowertrainKind.CV and f.cd is not None:
            raise VehicleError(f"{self.name}: a CV has no electric factors")
        if kind is PowertrainKind.BEV and f.cs is not None:
            raise VehicleError(f"{self.name}: a BEV has no gasoline factors")

    def with_soc(self, soc_initial: float) -> "VehicleSpec":
        if not self.kind.plug_in:
            raise VehicleError(f"{self.name}: SOC override only applies to plug-in vehicles")
        return replace(self, soc_initial=soc_initial)


@dataclass(frozen=True)
class EnergyPrices:
    p_ele: float = 0.114  # $/kWh
    p_gas: float = 2.75  # $/gallon

    def __post_init__(self):
        if not (self.p_ele > 0 and self.p_gas > 0):
            raise VehicleError(f"energy prices must be positive, got {self}")


@dataclass(frozen=True)
class CycleSpeeds:
    """Average speed (mph) of the drive cycle behind each traffic class."""

    low: float = 48.28  # HWFET
    avg: float = 19.58  # UDDS
    heavy: float = 7.05  # NYC

    def __post_init__(self):
        if not (self.low > 0 and self.avg > 0 and self.heavy > 0):
            raise VehicleError(f"cycle speeds must be positive, got {self}")

    def as_table(self) -> ClassTable:
        return (self.low, self.avg, self.heavy)

    def speed(self, traffic: TrafficClass) -> float:
        return self.as_table()[traffic.index]


@dataclass(frozen=True)
class SegmentStep:
    cost: float
    energy_after: float
    electric_miles: float
    gas_miles: float


class Mode(Enum):
    """Which branch of the plug-in hybrid cost rule a step used."""

    CS = "cs"
    CD = "cd"
    MIXED = "mixed"


def initial_energy(spec: VehicleSpec) -> float:
    """Usable battery energy (kWh) between the initial and target SOC."""
    if not spec.kind.plug_in:
        return 0.0
    return spec.battery_capacity * max(0.0, spec.soc_initial - spec.soc_target)


def segment_time(length: float, traffic: TrafficClass, speeds: CycleSpeeds = CycleSpeeds()) -> float:
    return length / speeds.speed(traffic)


def phev_mode(energy: float, length: float, mu_cd: float) -> Mode:
    if energy <= 0:
        return Mode.CS
    if energy >= length / mu_cd:
        return Mode.CD
    return Mode.MIXED


class CostModel:
    """Segment cost rule for one vehicle at one set of prices.

    ``step`` is the single arithmetic path shared by :func:`segment_cost`,
    the label-setting search and the brute-force oracle, so all three agree
    to the last bit.
    """

    __slots__ = ("spec", "prices", "kind", "cd", "cs", "e_ini")

    def __init__(self, spec: VehicleSpec, prices: EnergyPrices = EnergyPrices()):
        self.spec = spec
        self.prices = prices
        self.kind = spec.kind
        self.cd = spec.factors.cd
        self.cs = spec.factors.cs
        self.e_ini = initial_energy(spec)

    def step(self, length: float, cls: int, energy: float) -> tuple[float, float, float]:
        """Return ``(cost, energy_after, electric_miles)`` for one segment."""
        kind = self.kind
        if kind is PowertrainKind.CV or kind is PowertrainKind.HEV:
            return self.prices.p_gas * length / self.cs[cls], energy, 0.0
        mu_cd = self.cd[cls]
        need = length / mu_cd
        if kind is PowertrainKind.BEV:
            if energy < need:
                raise RangeExhausted(
                    f"{self.spec.name}: segment needs {need:.6g} kWh, {energy:.6g} kWh left"
                )
            return self.prices.p_ele * need, energy - need, length
        if energy <= 0:
            return self.prices.p_gas * length / self.cs[cls], 0.0, 0.0
        if energy >= need:
            return self.prices.p_ele * need, max(0.0, energy - need), length
        electric = mu_cd * energy
        return (
            self.prices.p_ele * energy + self.prices.p_gas * (length - electric) / self.cs[cls],
            0.0,
            electric,
        )


def segment_cost(
    spec: VehicleSpec,
    prices: EnergyPrices,
    length: float,
    traffic: TrafficClass,
    energy_before: float,
) -> SegmentStep:
    if not length > 0:
        raise VehicleError(f"segment length must be positive, got {length}")
    if energy_before < 0:
        raise VehicleError(f"energy must be non-negative, got {energy_before}")
    cost, after, electric = CostModel(spec, prices).step(length, traffic.index, energy_before)
    return SegmentStep(cost, after, electric, length - electric)


# -- configuration files -----------------------------------------------------


def vehicle_from_dict(doc: Mapping) -> VehicleSpec:
    try:
        cd = doc.get("cd_mi_per_kwh")
        cs = doc.get("cs_mi_per_gal")
        return VehicleSpec(
            name=str(doc["name"]),
            kind=doc["kind"],
            factors=ConversionFactors(
                cd=None if cd is None else _class_table(cd, "cd_mi_per_kwh"),
                cs=None if cs is None else _class_table(cs, "cs_mi_per_gal"),
            ),
            battery_capacity=float(doc.get("battery_kwh", 0.0)),
            soc_initial=float(doc.get("soc_initial", 0.0)),
            soc_target=float(doc.get("soc_target", 0.0)),
        )
    except KeyError as exc:
        raise VehicleError(f"vehicle record missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, VehicleError):
            raise
        raise VehicleError(f"bad vehicle record: {exc}") from None


def vehicle_to_dict(spec: VehicleSpec) -> dict:
    doc = {
        "name": spec.name,
        "kind": spec.kind.value,
        "battery_kwh": spec.battery_capacity,
        "soc_initial": spec.soc_initial,
        "soc_target": spec.soc_target,
    }
    for key, table in (("cd_mi_per_kwh", spec.factors.cd), ("cs_mi_per_gal", spec.factors.cs)):
        if table is not None:
            doc[key] = {c.value: v for c, v in zip(TRAFFIC_CLASSES, table)}
    return doc


def load_vehicles(path: str | Path) -> list[VehicleSpec]:
    """Read a vehicle file holding one record or a ``{"vehicles": [...]}`` list."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise VehicleError(f"{path}:{exc.lineno}: {exc.msg}") from None
    records = doc["vehicles"] if isinstance(doc, dict) and "vehicles" in doc else doc
    if isinstance(records, dict):
        records = [records]
    return [vehicle_from_dict(r) for r in records]


def load_prices(path: str | Path) -> EnergyPrices:
    try:
        doc = json.loads(Path(path).read_text())
        return EnergyPrices(float(doc["price_ele_per_kwh"]), float(doc["price_gas_per_gal"]))
    except json.JSONDecodeError as exc:
        raise VehicleError(f"{path}:{exc.lineno}: {exc.msg}") from None
    except (KeyError, TypeError) as exc:
        raise VehicleError(f"{path}: bad prices file ({exc})") from None


def load_speeds(path: str | Path) -> CycleSpeeds:
    try:
        doc = json.loads(Path(path).read_text())
        return CycleSpeeds(float(doc["low"]), float(doc["avg"]), float(doc["heavy"]))
    except json.JSONDecodeError as exc:
        raise VehicleError(f"{path}:{exc.lineno}: {exc.msg}") from None
    except (KeyError, TypeError) as exc:
        raise VehicleError(f"{path}: bad speeds file ({exc})") from None


def _bundled(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("data").joinpath(name)))


def builtin_fleet() -> list[VehicleSpec]:
    """CV, HEV, PHEV20, PHEV40, PHEV60 and BEV100 with default SOC settings."""
    return load_vehicles(_bundled("fleet.json"))


def builtin_vehicle(name: str) -> VehicleSpec:
    for spec in builtin_fleet():
        if spec.name.lower() == name.lower():
            return spec
    names = ", ".join(v.name for v in builtin_fleet())
    raise VehicleError(f"unknown vehicle {name!r}; built-ins are {names}")


def default_prices() -> EnergyPrices:
    return load_prices(_bundled("prices.json"))


def default_speeds() -> CycleSpeeds:
    return load_speeds(_bundled("speeds.json"))
