import json
import math

import pytest

from evacnet.grid import (
    NO_RISK,
    SAFE_NODE,
    ConfigWarning,
    DisconnectedPlan,
    NetworkParams,
    NoFeasibleSize,
    RiskSchedule,
    build_grid,
    build_static_network,
    cell_count,
    door_slot_capacity,
    room_error,
    select_cell_size,
    slot_duration,
    time_expand,
)
from evacnet.plan import load_plan


def plan_of(rooms, doors, occupancy=None):
    return load_plan(json.dumps({
        "name": "t", "rooms": rooms, "doors": doors,
        "occupancy": occupancy or {},
    }).encode())


def single_room(w=6.0, q=6.0, kind="flat", door_pos=3.0, door_w=1.0):
    return plan_of(
        [{"id": "a", "width_m": w, "depth_m": q, "kind": kind}],
        [{"from": "a", "to": "EXIT", "width_m": door_w, "position_m": door_pos}],
    )


# -- room_error ---------------------------------------------------------------

def test_room_error_examples():
    assert room_error(6, 6, 3) == 0
    assert room_error(7, 5, 3) == pytest.approx(17)
    assert room_error(10, 10, 3) == pytest.approx(19)


@pytest.mark.parametrize("p,q,a", [
    (7, 5, 3), (10, 10, 3), (9, 4, 2), (11, 7, 3.5), (6, 6, 1.5), (8, 5, 2.5),
])
def test_room_error_is_area_left_uncovered(p, q, a):
    covered = cell_count(p, q, a) * a * a
    assert room_error(p, q, a) == pytest.approx(p * q - covered, abs=1e-9)


# -- select_cell_size ---------------------------------------------------------

def test_select_single_candidate():
    plan = single_room(4, 4, door_pos=2.0)
    assert select_cell_size(plan, [4.0], 10) == 4.0


def test_select_prefers_larger_on_tie():
    plan = plan_of(
        [
            {"id": "a", "width_m": 6, "depth_m": 6},
            {"id": "b", "width_m": 9, "depth_m": 3},
        ],
        [
            {"from": "a", "to": "b", "width_m": 1.0, "position_m": 7.0},
            {"from": "a", "to": "EXIT", "width_m": 1.0, "position_m": 3.0},
        ],
    )
    # both candidates tile exactly (zero error); fewer nodes wins
    assert select_cell_size(plan, [1.5, 3.0], 100) == 3.0


def test_select_respects_node_budget():
    plan = single_room(7, 5, door_pos=3.0)
    with pytest.raises(NoFeasibleSize):
        select_cell_size(plan, [3.0], 1)  # needs 2 cells


def test_select_candidate_above_shortest_edge_rejected():
    plan = single_room(7, 5)
    with pytest.raises(ValueError):
        select_cell_size(plan, [6.0], 100)


def test_select_minimizes_worst_error():
    plan = single_room(10, 10, door_pos=5.0)
    # errors: a=2 -> 0; a=3 -> 19
    assert select_cell_size(plan, [2.0, 3.0], 500) == 2.0


# -- slot duration and capacities (literature-pinned rates) -------------------

def test_slot_duration_values():
    assert slot_duration(3.5, 1.2) == 2.92
    assert slot_duration(3.0, 1.2) == 2.5
    assert slot_duration(1.2, 1.2) == 1.0
    assert slot_duration(1.5, 1.2) == 1.25


def test_door_slot_capacity_values():
    assert door_slot_capacity(1.0, 1.2, 4.0) == 4       # 4.8 raw
    assert door_slot_capacity(1.0, 1.03, 5.0) == 5      # pessimistic rate
    assert door_slot_capacity(1.0, 3.23, 5.0) == 16     # optimistic rate
    assert door_slot_capacity(0.0, 1.2, 2.5) == 0
    assert door_slot_capacity(3.0, 1.2, 2.5) == 9       # open passage 3 m wide


# -- build_grid ---------------------------------------------------------------

def test_minimal_grid_one_cell():
    grid = build_grid(single_room(3, 3, door_pos=1.5), 3.0)
    assert len(grid.cells) == 1
    kinds = [(p.a, p.b, p.kind) for p in grid.passages]
    assert kinds == [(1, SAFE_NODE, "door")]


def test_two_cell_room_open_adjacency():
    grid = build_grid(single_room(6, 3, door_pos=1.5), 3.0)
    assert len(grid.cells) == 2
    open_passages = [p for p in grid.passages if p.kind == "open"]
    assert len(open_passages) == 1
    assert open_passages[0].width == 3.0


def test_cell_counts_follow_tiling():
    plan = plan_of(
        [
            {"id": "a", "width_m": 7, "depth_m": 5},
            {"id": "b", "width_m": 9, "depth_m": 3},
        ],
        [
            {"from": "a", "to": "b", "width_m": 1.0, "position_m": 8.0},
            {"from": "b", "to": "EXIT", "width_m": 1.0, "position_m": 4.0},
        ],
    )
    grid = build_grid(plan, 3.0)
    assert len(grid.room_cells("a")) == cell_count(7, 5, 3.0) == 2
    assert len(grid.room_cells("b")) == cell_count(9, 3, 3.0) == 3


def test_stair_room_gets_dummies_and_longer_paths():
    chain = plan_of(
        [
            {"id": "a", "width_m": 3, "depth_m": 3, "kind": "flat"},
            {"id": "s", "width_m": 3, "depth_m": 3, "kind": "stair"},
            {"id": "b", "width_m": 3, "depth_m": 3, "kind": "flat"},
        ],
        [
            {"from": "a", "to": "s", "width_m": 1.0, "position_m": 4.5},
            {"from": "s", "to": "b", "width_m": 1.0, "position_m": 4.5},
            {"from": "b", "to": "EXIT", "width_m": 1.0, "position_m": 4.5},
        ],
    )
    grid = build_grid(chain, 3.0)
    dummies = [c for c in grid.cells if c.is_dummy]
    assert len(dummies) == 1
    assert dummies[0].room == "s"
    # path a -> exit crosses the stair in two hops instead of one
    from evacnet.evac import exit_distances
    net = build_static_network(grid)
    dist = exit_distances(net)
    a_cell = grid.room_cells("a")[0]
    assert dist[a_cell] == 4  # a -> stair -> dummy -> b -> out


def test_two_cell_stair_room_adds_two_hops():
    chain = plan_of(
        [
            {"id": "a", "width_m": 3, "depth_m": 3, "kind": "flat"},
            {"id": "s", "width_m": 6, "depth_m": 3, "kind": "stair"},
            {"id": "b", "width_m": 3, "depth_m": 3, "kind": "flat"},
        ],
        [
            {"from": "a", "to": "s", "width_m": 1.0, "position_m": 4.5},
            {"from": "s", "to": "b", "width_m": 1.0, "position_m": 7.5},
            {"from": "b", "to": "EXIT", "width_m": 1.0, "position_m": 4.5},
        ],
    )
    grid = build_grid(chain, 3.0)
    assert sum(1 for c in grid.cells if c.is_dummy) == 2
    from evacnet.evac import exit_distances
    dist = exit_distances(build_static_network(grid))
    a_cell = grid.room_cells("a")[0]
    # flat-only path would be 4 hops; two stair cells add one hop each
    assert dist[a_cell] == 6


def test_stair_passages_use_stair_rate():
    chain = plan_of(
        [
            {"id": "a", "width_m": 3, "depth_m": 3, "kind": "flat"},
            {"id": "s", "width_m": 3, "depth_m": 3, "kind": "stair"},
        ],
        [
            {"from": "a", "to": "s", "width_m": 1.0, "position_m": 4.5},
            {"from": "a", "to": "EXIT", "width_m": 1.0, "position_m": 1.5},
        ],
    )
    net = build_static_network(build_grid(chain, 3.0))
    a_cell = net.grid.room_cells("a")[0]
    stair_cell = [c.id for c in net.grid.cells if c.room == "s" and not c.is_dummy][0]
    # 1 m door into the staircase at 1 p/m/s over 2.5 s floors to 2
    assert net.arcs[(a_cell, stair_cell)] == 2
    # exit door keeps the flat rate: floor(1 * 1.2 * 2.5) = 3
    assert net.arcs[(1, SAFE_NODE)] == 3


def test_disconnected_plan_raises():
    # a room whose only door leads to itself is impossible; instead use a
    # plan where one room has no door at all
    plan = plan_of(
        [
            {"id": "a", "width_m": 3, "depth_m": 3},
            {"id": "b", "width_m": 3, "depth_m": 3},
        ],
        [
            {"from": "a", "to": "EXIT", "width_m": 1.0, "position_m": 1.5},
        ],
    )
    with pytest.raises(DisconnectedPlan):
        build_grid(plan, 3.0)


def test_cell_size_above_room_edge_rejected():
    with pytest.raises(ValueError):
        build_grid(single_room(7, 5), 6.0)


# -- build_static_network ------------------------------------------------------

def test_node_capacity_from_density(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    assert net.node_capacity[1] == 11           # floor(9 * 1.25)
    assert net.node_capacity[SAFE_NODE] == math.inf


def test_exit_capacity_total(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    assert sum(net.arcs[a] for a in net.exit_arcs) == 12
    assert net.slot_seconds == 2.5


def test_interior_symmetric_exit_one_way(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    for (i, j), c in net.arcs.items():
        if j == SAFE_NODE:
            assert (SAFE_NODE, i) not in net.arcs
        else:
            assert net.arcs[(j, i)] == c


def test_zero_capacity_warns():
    tiny_door = single_room(6, 6, door_pos=3.0, door_w=0.2)
    with pytest.warns(ConfigWarning):
        build_static_network(build_grid(tiny_door, 3.0))


# -- time_expand ----------------------------------------------------------------

def test_zero_horizon_empty(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    assert time_expand(net, 0).edge_count() == 0


def test_no_risk_full_product(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    expanded = time_expand(net, 7)
    assert expanded.edge_count() == 7 * len(net.arcs)


def test_static_removal_kills_both_directions(tworoute):
    net = build_static_network(build_grid(tworoute, 3.0))
    pair = next((i, j) for (i, j) in net.arcs if j != SAFE_NODE)
    risk = RiskSchedule(static_removals=((2, pair),))
    expanded = time_expand(net, 4, risk)
    assert pair in expanded.arcs_at(1)
    assert pair not in expanded.arcs_at(2)
    assert (pair[1], pair[0]) not in expanded.arcs_at(3)


def test_monotone_removals_shrink(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    risk = RiskSchedule(seeds=(15,), spread_period=2)
    expanded = time_expand(net, 8, risk)
    previous = None
    for t in range(8):
        alive = set(expanded.arcs_at(t))
        if previous is not None:
            assert alive <= previous
        previous = alive


def test_risk_seed_must_exist(compact4exit):
    net = build_static_network(build_grid(compact4exit, 3.0))
    with pytest.raises(ValueError):
        time_expand(net, 3, RiskSchedule(seeds=(999,), spread_period=2))


def test_approximated_area_plus_error_is_exact():
    for p, q, a in [(7.0, 5.0, 3.0), (10.0, 10.0, 3.0), (18.0, 18.0, 3.0)]:
        assert cell_count(p, q, a) * a * a + room_error(p, q, a) == pytest.approx(p * q)
