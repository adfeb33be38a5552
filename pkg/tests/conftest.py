import math
import random

import pytest

from evacnet.cli import bundled_plan_bytes
from evacnet.grid import SAFE_NODE, StaticNetwork
from evacnet.plan import load_plan


@pytest.fixture(scope="session")
def compact4exit():
    return load_plan(bundled_plan_bytes("compact4exit"))


@pytest.fixture(scope="session")
def tworoute():
    return load_plan(bundled_plan_bytes("tworoute"))


def make_net(arcs, node_cap, slot=2.5, cell=3.0):
    """Hand-built static network; arcs maps (i, j) -> capacity per slot."""
    nodes = sorted({n for arc in arcs for n in arc} | {SAFE_NODE})
    caps = {SAFE_NODE: math.inf}
    caps.update(node_cap)
    exit_arcs = tuple((i, j) for (i, j) in arcs if j == SAFE_NODE)
    return StaticNetwork(
        nodes=tuple(nodes),
        arcs=dict(arcs),
        node_capacity=caps,
        slot_seconds=slot,
        cell_size=cell,
        exit_arcs=exit_arcs,
        grid=None,
    )


def random_network(rng: random.Random, max_cells=5, max_cap=4, max_occ=3):
    """Small random connected network plus an admissible occupancy."""
    n_cells = rng.randint(1, max_cells)
    cells = list(range(1, n_cells + 1))
    arcs = {}
    for c in cells[1:]:
        other = rng.choice(cells[: c - 1])
        cap = rng.randint(0, max_cap)
        arcs[(c, other)] = cap
        arcs[(other, c)] = cap
    for _ in range(rng.randint(0, 3)):
        if n_cells > 1:
            a, b = rng.sample(cells, 2)
            cap = rng.randint(0, max_cap)
            arcs[(a, b)] = cap
            arcs[(b, a)] = cap
    for c in rng.sample(cells, min(rng.randint(1, 2), n_cells)):
        arcs[(c, SAFE_NODE)] = rng.randint(1, max_cap)
    node_cap = {}
    occupancy = {}
    for c in cells:
        node_cap[c] = rng.randint(1, 8)
        occupancy[c] = rng.randint(0, min(max_occ, node_cap[c]))
    if sum(occupancy.values()) == 0:
        occupancy[cells[0]] = min(1, node_cap[cells[0]])
    return make_net(arcs, node_cap), occupancy


def assert_flow_solution_valid(prob, sol):
    """Balance, box, shared-capacity, and departure checks on a solution."""
    net = prob.network
    cells = [i for i in net.nodes if i != SAFE_NODE]
    y = {(i, 0): float(prob.occupancy.get(i, 0)) for i in cells}
    for t in range(1, sol.tau + 1):
        for i in cells:
            inflow = sum(f for (a, b, tt), f in sol.flows.items()
                         if b == i and tt == t - 1)
            outflow = sum(f for (a, b, tt), f in sol.flows.items()
                          if a == i and tt == t - 1)
            y[(i, t)] = y[(i, t - 1)] + inflow - outflow
            assert abs(y[(i, t)] - sol.occupancy[(i, t)]) < 1e-6
            assert -1e-6 <= y[(i, t)] <= net.node_capacity[i] + 1e-6
    for t in range(sol.tau):
        for (i, j), c in net.arcs.items():
            used = sol.flows.get((i, j, t), 0.0) + sol.flows.get((j, i, t), 0.0)
            assert used <= c + 1e-6
        departures = {}
        for (a, b, tt), f in sol.flows.items():
            if tt == t:
                departures[a] = departures.get(a, 0.0) + f
        for i, dep in departures.items():
            assert dep <= y[(i, t)] + 1e-6
    profile = sol.profile
    assert all(b >= a - 1e-9 for a, b in zip(profile, profile[1:]))
    assert profile[-1] <= prob.total + 1e-6
