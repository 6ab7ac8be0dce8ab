"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line to ``conftest.ACCEPTANCE_RESULTS``; the
lines are printed in a separate section at the end of the pytest run.
"""

import json
import random
import time

import pytest

from conftest import ACCEPTANCE_RESULTS, CITY_ARGS
from helpers import HEAVY, LOW, AVG, diamond, random_network, rel_close
from powerroute.cli import main
from powerroute.experiments import soc_sweep
from powerroute.network import TRAFFIC_CLASSES, generate_grid, write_network
from powerroute.powertrain import CostModel, builtin_fleet, builtin_vehicle, phev_mode, segment_cost
from powerroute.routing import Strategy, brute_force_route, energy_from_cost, route, search


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    assert ok, line


# -- 1 -----------------------------------------------------------------------


def test_1_oracle_equivalence():
    rng = random.Random(20240601)
    fleet = builtin_fleet()
    compared = mismatched = 0
    worst = 0.0
    start = time.perf_counter()
    for _ in range(200):
        net = random_network(rng, max_nodes=9, max_edges=20, length_range=(0.5, 20.0))
        n = len(net.nodes)
        for vehicle in fleet:
            for strategy in Strategy:
                for origin in range(n):
                    tree = search(net, strategy, vehicle, source=origin)
                    for dest in range(n):
                        if dest == origin:
                            continue
                        fast = route(net, strategy, vehicle, origin=origin, dest=dest, tree=tree)
                        slow = brute_force_route(net, strategy, vehicle, origin=origin, dest=dest)
                        compared += 1
                        if (fast is None) != (slow is None):
                            mismatched += 1
                            continue
                        if fast is None:
                            continue
                        err = abs(fast.objective - slow.objective) / max(abs(slow.objective), 1e-300)
                        worst = max(worst, err)
                        if not rel_close(fast.objective, slow.objective) or fast.nodes != slow.nodes:
                            mismatched += 1
    elapsed = time.perf_counter() - start
    record(
        1, "oracle equivalence",
        mismatched == 0 and worst <= 1e-9 and elapsed < 30,
        f"{compared} O-D queries on 200 networks x 3 strategies x 6 vehicles, "
        f"{mismatched} mismatches, max rel err {worst:.1e}, {elapsed:.1f} s (limit 30 s)",
    )


# -- 2 -----------------------------------------------------------------------


def test_2_cost_model_arithmetic(prices):
    fleet = {v.name: v for v in builtin_fleet()}

    def per_mile(name, traffic):
        # one mile with a full battery: pure electric for plug-ins
        return segment_cost(fleet[name], prices, 1.0, traffic, 100.0).cost

    checks = []
    for traffic, mpg, stated in ((LOW, 52.8, 0.052083), (AVG, 32.1, 0.085670), (HEAVY, 16.4, 0.167683)):
        got = per_mile("CV", traffic)
        checks.append((f"CV {traffic.value}", got, 2.75 / mpg, stated))
    checks.append(("PHEV20 low CD", per_mile("PHEV20", LOW), 0.114 / 5.7, 0.020000))
    checks.append(("BEV100 low", per_mile("BEV100", LOW), 0.114 / 4.8, 0.023750))
    ok = all(abs(got - exact) <= 1e-9 and round(got, 6) == stated for _, got, exact, stated in checks)
    hev = {c: per_mile("HEV", c) for c in TRAFFIC_CLASSES}
    argmin = min(hev, key=hev.get)
    ok = ok and argmin is AVG
    detail = ", ".join(f"{name} {got:.6f}" for name, got, _, _ in checks)
    record(2, "per-mile costs", ok, f"{detail}; HEV cheapest class {argmin.value}")


# -- 3 -----------------------------------------------------------------------


def test_3_mixed_mode_segment(prices):
    step = segment_cost(builtin_vehicle("PHEV20"), prices, 10.0, LOW, 1.0)
    ok = abs(step.cost - 0.315791) <= 1e-6 and step.energy_after == 0
    record(3, "mixed-mode segment", ok,
           f"cost ${step.cost:.6f} (target 0.315791 +- 1e-6), energy after {step.energy_after}")


# -- 4 -----------------------------------------------------------------------


def _crossover(vehicle, direct=10.0):
    """Detour length at which least-cost routing switches to the direct edge."""

    def takes_detour(total):
        r = route(diamond(detour_leg=total / 2, direct=direct), Strategy.COST, vehicle, origin=0, dest=2)
        return r.nodes == (0, 1, 2)

    # coarse parametric sweep, then bisection on the bracket where the choice flips
    lengths = [direct * (1 + 0.25 * k) for k in range(0, 25)]
    choices = [takes_detour(x) for x in lengths]
    flips = [i for i in range(len(lengths) - 1) if choices[i] != choices[i + 1]]
    if len(flips) != 1 or not choices[0]:
        return None
    lo, hi = lengths[flips[0]], lengths[flips[0] + 1]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if takes_detour(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_4_route_preference_and_crossover():
    cv, hev = builtin_vehicle("CV"), builtin_vehicle("HEV")
    cv_route = route(diamond(), Strategy.COST, cv, origin=0, dest=2).nodes
    hev_route = route(diamond(), Strategy.COST, hev, origin=0, dest=2).nodes
    found = {name: _crossover(v) for name, v in (("CV", cv), ("HEV", hev))}
    expected = {"CV": 10 * 52.8 / 16.4, "HEV": 10 * 59.7 / 48.0}
    ok = cv_route == (0, 1, 2) and hev_route == (0, 2) and all(
        found[k] is not None and rel_close(found[k], expected[k], 1e-9) for k in expected
    )
    record(
        4, "diamond route preference", ok,
        f"CV takes {cv_route}, HEV takes {hev_route}; crossover detour/direct "
        f"CV {found['CV'] / 10:.6f} (52.8/16.4 = {52.8 / 16.4:.6f}), "
        f"HEV {found['HEV'] / 10:.6f} (59.7/48.0 = {59.7 / 48.0:.6f})",
    )


# -- 5 -----------------------------------------------------------------------


def test_5_soc_behaviour(city):
    levels = [0.30, 0.40, 0.60, 0.90]
    result = soc_sweep(city, builtin_vehicle("PHEV20"), levels, jobs=1)
    violations = 0
    pairs = 0
    for row in zip(*result.records):
        costs = [r.cost.cost for r in row if r.cost is not None]
        if len(costs) != len(levels):
            continue
        pairs += 1
        if any(hi > lo for lo, hi in zip(costs, costs[1:])):
            violations += 1
    i30, i40, i60, i90 = range(4)
    d60 = result.divergence[i90][i60]
    d40 = result.divergence[i90][i40]
    ok = pairs > 0 and violations == 0 and d40 > d60
    record(
        5, "SOC behaviour", ok,
        f"{pairs} pairs, {violations} cost increases with more SOC; "
        f"divergence 0.9 vs 0.6 = {d60:.2%}, 0.9 vs 0.4 = {d40:.2%}, 0.9 vs 0.3 = {result.divergence[i90][i30]:.2%}",
    )


# -- 6 and 8 share one CLI sweep of the whole fleet --------------------------


@pytest.fixture(scope="module")
def cli_sweep(city, tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    net_path = write_network(city, base / "city.net")
    runs = {}
    for jobs in (1, 3):
        out = base / f"jobs{jobs}"
        start = time.perf_counter()
        code = main(["sweep", "--network", str(net_path), "--fleet", "--out", str(out), "--jobs", str(jobs)])
        runs[jobs] = (code, time.perf_counter() - start, out)
    return city, runs


def test_6_fleet_direction(cli_sweep):
    _, runs = cli_sweep
    code, _, out = runs[1]
    reports = json.loads((out / "sweep.summary.json").read_text())["reports"]
    vs_distance = {r["vehicle"]: r for r in reports if r["baseline"] == "distance"}
    cv, bev = vs_distance["CV"], vs_distance["BEV100"]
    ok = (
        code == 0
        and cv["changed_fraction"] > bev["changed_fraction"]
        and cv["mean_saving_on_changed"] > bev["mean_saving_on_changed"]
    )
    record(
        6, "CV vs BEV100 against ShortestDistance", ok,
        f"changed {cv['changed_fraction']:.1%} vs {bev['changed_fraction']:.1%}, "
        f"mean saving on changed {cv['mean_saving_on_changed']:.1%} vs {bev['mean_saving_on_changed']:.1%}",
    )


# -- 7 -----------------------------------------------------------------------


def test_7_energy_from_cost(city, prices):
    rng = random.Random(7)
    labels = []
    for name in ("PHEV20", "PHEV40", "PHEV60"):
        for soc in (0.35, 0.4, 0.6, 0.9):
            vehicle = builtin_vehicle(name).with_soc(soc)
            for source in rng.sample(range(len(city.nodes)), 4):
                tree = search(city, Strategy.COST, vehicle, prices, source=source)
                labels += [(vehicle, tree.label(j)) for j in tree.order]
    sample = rng.sample(labels, 1000)
    depleted = sign_errors = branch_errors = relaxations = 0
    for vehicle, label in sample:
        model = CostModel(vehicle, prices)
        e_cost = energy_from_cost(label, vehicle, prices)
        depleted += label.energy == 0
        if (e_cost <= 0) != (label.energy == 0):
            sign_errors += 1
        for k in city.adjacency[label.node]:
            seg = city.segments[k]
            mu = model.cd[seg.traffic.index]
            relaxations += 1
            if phev_mode(label.energy, seg.length, mu) is not phev_mode(e_cost, seg.length, mu):
                branch_errors += 1
    ok = sign_errors == 0 and branch_errors == 0 and 0 < depleted < len(sample)
    record(
        7, "energy recovered from cost", ok,
        f"1000 labels ({depleted} depleted), {sign_errors} sign disagreements, "
        f"{branch_errors}/{relaxations} relaxations on a different branch",
    )


# -- 8 -----------------------------------------------------------------------


def test_8_scale_and_determinism(cli_sweep):
    city, runs = cli_sweep
    (code1, elapsed, out1), (code3, _, out3) = runs[1], runs[3]
    names = ("sweep.csv", "sweep.summary.json")
    identical = all((out1 / n).read_bytes() == (out3 / n).read_bytes() for n in names)
    rows = (out1 / "sweep.csv").read_text().count("\n") - 1
    pairs = city.unordered_pair_count()
    ok = code1 == code3 == 0 and identical and rows == 6 * pairs and elapsed < 60
    record(
        8, "full-scale sweep", ok,
        f"{len(city.nodes)} nodes, {pairs} unordered pairs x 6 vehicles x 3 strategies in {elapsed:.1f} s "
        f"(limit 60 s, --jobs 1); reports byte-identical with --jobs 3: {identical}",
    )


# -- 9 -----------------------------------------------------------------------


def test_9_all_low_identity():
    cv = builtin_vehicle("CV")
    compared = differing = 0
    for jitter in (0.0, 0.35):
        net = generate_grid(CITY_ARGS["rows"], CITY_ARGS["cols"], 1.0, (1, 0, 0), seed=3, jitter=jitter)
        for source in range(len(net.nodes)):
            by_distance = search(net, Strategy.DISTANCE, cv, source=source)
            by_time = search(net, Strategy.TIME, cv, source=source)
            for dest in range(len(net.nodes)):
                if dest == source:
                    continue
                compared += 1
                if by_distance.path(dest) != by_time.path(dest):
                    differing += 1
    record(
        9, "all-low network", differing == 0,
        f"{compared} ordered pairs on plain and jittered 19x19 grids, {differing} differ between distance and time",
    )
