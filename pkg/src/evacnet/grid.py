"""Cellular approximation of a building plan and network construction.

Rooms are tiled with square cells of side `a` anchored at the room origin
corner; leftover slivers are unoccupiable.  Cells become nodes of a static
network whose arcs carry per-slot person capacities; stair rooms get one
dummy node per cell so that crossing them costs two slots (stair speed is
about half the flat walking speed).  The static network expands over a
discrete horizon into per-slot arc sets, optionally thinned by a risk
schedule (blocked or burning passages).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .plan import (
    EXIT,
    MIRROR_WALL,
    NORTH,
    SOUTH,
    WEST,
    BuildingPlan,
    Room,
    door_position,
    wall_length,
    wall_of,
)

_EPS = 1e-9

SAFE_NODE = 0

OPEN, DOOR, STAIR = "open", "door", "stair"


class NoFeasibleSize(ValueError):
    """No cell-size candidate satisfies the node budget."""


class DisconnectedPlan(ValueError):
    """Some cell has no path to the safe place."""


class ConfigWarning(UserWarning):
    """A parameter combination floored a passage capacity to zero."""


def _ifloor(x: float) -> int:
    return int(math.floor(x + _EPS))


def room_error(p: float, q: float, a: float) -> float:
    """Area lost when a p x q room is tiled with a x a cells."""
    rp = math.fmod(p, a)
    rq = math.fmod(q, a)
    if rp > a - _EPS or rp < _EPS:
        rp = 0.0
    if rq > a - _EPS or rq < _EPS:
        rq = 0.0
    return q * rp + p * rq - rp * rq


def cell_count(p: float, q: float, a: float) -> int:
    return _ifloor(p / a) * _ifloor(q / a)


def select_cell_size(plan: BuildingPlan, candidates, max_nodes: int) -> float:
    """Pick the candidate minimizing the worst per-room tiling error.

    Only candidates whose total cell count fits `max_nodes` qualify; ties
    go to the largest cell size (fewest nodes).
    """
    if not candidates:
        raise ValueError("no cell-size candidates")
    shortest_edge = min(min(r.width, r.depth) for r in plan.rooms)
    best = None
    for a in candidates:
        if a <= 0 or a > shortest_edge + _EPS:
            raise ValueError(
                f"cell size {a} exceeds the shortest room edge {shortest_edge}"
            )
        total = sum(cell_count(r.width, r.depth, a) for r in plan.rooms)
        if total > max_nodes:
            continue
        err = max(room_error(r.width, r.depth, a) for r in plan.rooms)
        if (
            best is None
            or err < best[0] - _EPS
            or (abs(err - best[0]) <= _EPS and a > best[1])
        ):
            best = (err, a)
    if best is None:
        raise NoFeasibleSize(
            f"no candidate cell size keeps the network within {max_nodes} nodes"
        )
    return best[1]


def slot_duration(cell_size: float, velocity: float) -> float:
    """Seconds to cross one cell at free-flow speed, rounded to 2 decimals."""
    if cell_size <= 0 or velocity <= 0:
        raise ValueError("cell size and velocity must be positive")
    return round(cell_size / velocity, 2)


def door_slot_capacity(width: float, rate: float, slot: float) -> int:
    """Whole persons that can cross a passage of given width in one slot."""
    if width < 0 or rate < 0 or slot < 0:
        raise ValueError("width, rate and slot must be non-negative")
    return _ifloor(width * rate * slot)


@dataclass(frozen=True)
class Cell:
    id: int
    room: str
    coords: tuple[int, int]      # (col, row) in the room-local grid
    is_dummy: bool = False


@dataclass(frozen=True)
class Passage:
    a: int
    b: int
    width: float
    kind: str                    # open | door | stair
    a_point: tuple[float, float] | None = None   # door point, room-local on side a
    b_point: tuple[float, float] | None = None


@dataclass(frozen=True)
class CellGrid:
    cell_size: float
    cells: tuple[Cell, ...]
    passages: tuple[Passage, ...]

    def cell(self, cell_id: int) -> Cell:
        return self._by_id[cell_id]

    @property
    def _by_id(self) -> dict[int, Cell]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {c.id: c for c in self.cells}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached

    def room_cells(self, room_id: str, include_dummy: bool = False) -> list[int]:
        return [
            c.id
            for c in self.cells
            if c.room == room_id and (include_dummy or not c.is_dummy)
        ]

    def neighbors(self, cell_id: int) -> list[int]:
        out = []
        for p in self.passages:
            if p.a == cell_id:
                out.append(p.b)
            elif p.b == cell_id:
                out.append(p.a)
        return out


def _door_cell(room: Room, nx: int, ny: int, wall: str, offset: float, a: float):
    """Room-local (col, row) of the cell whose wall segment holds `offset`."""
    idx = _ifloor(offset / a)
    if wall in (SOUTH, NORTH):
        col = min(max(idx, 0), nx - 1)
        row = 0 if wall == SOUTH else ny - 1
    else:
        row = min(max(idx, 0), ny - 1)
        col = 0 if wall == WEST else nx - 1
    return col, row


def _door_point(room: Room, wall: str, offset: float, covered_len: float):
    off = min(max(offset, 0.0), covered_len)
    if wall == SOUTH:
        return (off, 0.0)
    if wall == NORTH:
        return (off, room.depth)
    if wall == WEST:
        return (0.0, off)
    return (room.width, off)


def build_grid(plan: BuildingPlan, a: float) -> CellGrid:
    """Tile every room, wire up open/door/stair passages, insert dummies."""
    shortest_edge = min(min(r.width, r.depth) for r in plan.rooms)
    if a <= 0 or a > shortest_edge + _EPS:
        raise ValueError(f"cell size {a} exceeds the shortest room edge")

    cells: list[Cell] = []
    index: dict[tuple[str, int, int], int] = {}
    dims: dict[str, tuple[int, int]] = {}
    next_id = 1  # 0 is the safe place
    for room in plan.rooms:
        nx, ny = _ifloor(room.width / a), _ifloor(room.depth / a)
        dims[room.id] = (nx, ny)
        for row in range(ny):
            for col in range(nx):
                cells.append(Cell(next_id, room.id, (col, row)))
                index[(room.id, col, row)] = next_id
                next_id += 1

    # Raw passages, each endpoint annotated with the side it leaves through
    # (needed to rewire stair cells onto their dummies below).
    raw: list[tuple[int, int, float, str, str, str, tuple | None, tuple | None]] = []
    for room in plan.rooms:
        nx, ny = dims[room.id]
        for row in range(ny):
            for col in range(nx):
                here = index[(room.id, col, row)]
                if col + 1 < nx:
                    raw.append((here, index[(room.id, col + 1, row)], a, OPEN,
                                "E", "W", None, None))
                if row + 1 < ny:
                    raw.append((here, index[(room.id, col, row + 1)], a, OPEN,
                                "N", "S", None, None))

    for door in plan.doors:
        host = plan.room(door.host)
        nx, ny = dims[host.id]
        wall, off = wall_of(host, door_position(plan, door))
        hc = index[(host.id, *_door_cell(host, nx, ny, wall, off, a))]
        hp = _door_point(host, wall, off, wall_length(host, wall))
        if door.is_exit():
            raw.append((hc, SAFE_NODE, door.width, DOOR, wall, "", hp, None))
        else:
            other = plan.room(door.other)
            onx, ony = dims[other.id]
            owall = MIRROR_WALL[wall]
            oc = index[(other.id, *_door_cell(other, onx, ony, owall, off, a))]
            op = _door_point(other, owall, off, wall_length(other, owall))
            raw.append((hc, oc, door.width, DOOR, wall, owall, hp, op))

    # Stair rooms: each cell splits into (cell, dummy) in series so a
    # crossing costs two slots.  Passages leaving through the east/north
    # side move to the dummy; west/south stay on the main cell.
    stair_rooms = {r.id for r in plan.rooms if r.kind == "stair"}
    dummy_of: dict[int, int] = {}
    for cell in list(cells):
        if cell.room in stair_rooms:
            dummy = Cell(next_id, cell.room, cell.coords, is_dummy=True)
            cells.append(dummy)
            dummy_of[cell.id] = dummy.id
            next_id += 1

    passages: list[Passage] = []
    for u, v, width, kind, uside, vside, up, vp in raw:
        if u in dummy_of and uside in ("E", "N"):
            u = dummy_of[u]
        if v in dummy_of and vside in ("E", "N"):
            v = dummy_of[v]
        touches_stair = any(
            c in dummy_of or c in dummy_of.values() for c in (u, v)
        )
        passages.append(Passage(u, v, width, STAIR if touches_stair else kind,
                                up, vp))
    for main, dummy in sorted(dummy_of.items()):
        passages.append(Passage(main, dummy, a, STAIR))

    grid = CellGrid(cell_size=a, cells=tuple(cells), passages=tuple(passages))

    reachable = {SAFE_NODE}
    frontier = [SAFE_NODE]
    adj: dict[int, list[int]] = {}
    for p in grid.passages:
        adj.setdefault(p.a, []).append(p.b)
        adj.setdefault(p.b, []).append(p.a)
    while frontier:
        node = frontier.pop()
        for nb in adj.get(node, ()):
            if nb not in reachable:
                reachable.add(nb)
                frontier.append(nb)
    missing = [c.id for c in grid.cells if c.id not in reachable]
    if missing:
        raise DisconnectedPlan(f"cells with no path to the exit: {missing}")
    return grid


@dataclass(frozen=True)
class NetworkParams:
    flat_velocity: float = 1.2     # m/s, free-flow walking speed
    door_rate: float = 1.2         # persons/m/s through doors and open passages
    stair_rate: float = 1.0        # persons/m/s on staircases
    density_cap: float = 1.25      # persons per square meter per cell


@dataclass(frozen=True)
class StaticNetwork:
    nodes: tuple[int, ...]                       # includes SAFE_NODE
    arcs: dict[tuple[int, int], int]             # directed arc -> capacity/slot
    node_capacity: dict[int, float]              # n_i; SAFE_NODE is +inf
    slot_seconds: float
    cell_size: float
    exit_arcs: tuple[tuple[int, int], ...]       # (cell, SAFE_NODE) in door order
    grid: CellGrid | None = field(default=None, compare=False, repr=False)

    def undirected_pairs(self) -> list[tuple[int, int]]:
        seen = {}
        for (i, j), c in self.arcs.items():
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen[key] = c
        return sorted(seen)

    def replace_arcs(self, arcs: dict[tuple[int, int], int]) -> "StaticNetwork":
        exit_arcs = tuple(e for e in self.exit_arcs if e in arcs)
        return StaticNetwork(
            nodes=self.nodes,
            arcs=dict(arcs),
            node_capacity=dict(self.node_capacity),
            slot_seconds=self.slot_seconds,
            cell_size=self.cell_size,
            exit_arcs=exit_arcs,
            grid=self.grid,
        )


def build_static_network(grid: CellGrid, params: NetworkParams = NetworkParams()) -> StaticNetwork:
    """Attach per-slot capacities to the grid and add the safe-place node."""
    a = grid.cell_size
    slot = slot_duration(a, params.flat_velocity)
    node_cap: dict[int, float] = {SAFE_NODE: math.inf}
    cell_cap = _ifloor(a * a * params.density_cap)
    for cell in grid.cells:
        node_cap[cell.id] = cell_cap

    arcs: dict[tuple[int, int], int] = {}
    exit_arcs: list[tuple[int, int]] = []
    for p in grid.passages:
        rate = params.stair_rate if p.kind == STAIR else params.door_rate
        cap = door_slot_capacity(p.width, rate, slot)
        if cap == 0:
            warnings.warn(
                f"passage {p.a}-{p.b} ({p.width} m, {p.kind}) floors to zero "
                "capacity per slot",
                ConfigWarning,
                stacklevel=2,
            )
        if p.b == SAFE_NODE or p.a == SAFE_NODE:
            cell = p.a if p.b == SAFE_NODE else p.b
            arcs[(cell, SAFE_NODE)] = arcs.get((cell, SAFE_NODE), 0) + cap
            exit_arcs.append((cell, SAFE_NODE))
        else:
            # parallel passages (e.g. double doors) pool their capacity
            arcs[(p.a, p.b)] = arcs.get((p.a, p.b), 0) + cap
            arcs[(p.b, p.a)] = arcs.get((p.b, p.a), 0) + cap

    nodes = (SAFE_NODE,) + tuple(c.id for c in grid.cells)
    return StaticNetwork(
        nodes=nodes,
        arcs=arcs,
        node_capacity=node_cap,
        slot_seconds=slot,
        cell_size=a,
        exit_arcs=tuple(exit_arcs),
        grid=grid,
    )


@dataclass(frozen=True)
class RiskSchedule:
    """Time-indexed arc removals: static blockages plus optional spreading.

    Removals are undirected (both arc directions die).  With propagation,
    the risky set starts at the seed cells (their arcs are cut at slot 0)
    and every `period` slots grows to all grid-adjacent cells.
    """

    static_removals: tuple[tuple[int, tuple[int, int]], ...] = ()
    seeds: tuple[int, ...] = ()
    spread_period: int = 0

    def __post_init__(self):
        for slot, _ in self.static_removals:
            if slot < 0:
                raise ValueError("removal slots must be non-negative")
        if self.seeds and self.spread_period <= 0:
            raise ValueError("propagation needs a positive spread period")

    @property
    def empty(self) -> bool:
        return not self.static_removals and not self.seeds


NO_RISK = RiskSchedule()


@dataclass(frozen=True)
class TimeExpandedNetwork:
    """Per-slot live arc sets over horizon {0, ..., tau}."""

    net: StaticNetwork
    tau: int
    removed_at: tuple[frozenset, ...]   # removed undirected pairs, per slot

    def arcs_at(self, t: int) -> dict[tuple[int, int], int]:
        removed = self.removed_at[min(t, len(self.removed_at) - 1)] if self.removed_at else frozenset()
        if not removed:
            return self.net.arcs
        return {
            (i, j): c
            for (i, j), c in self.net.arcs.items()
            if (min(i, j), max(i, j)) not in removed
        }

    def edge_count(self) -> int:
        return sum(len(self.arcs_at(t)) for t in range(self.tau))


def time_expand(net: StaticNetwork, tau: int, risk: RiskSchedule = NO_RISK) -> TimeExpandedNetwork:
    if tau < 0:
        raise ValueError("horizon must be non-negative")
    if risk.empty:
        return TimeExpandedNetwork(net=net, tau=tau, removed_at=(frozenset(),))

    for cell in risk.seeds:
        if cell not in net.node_capacity or cell == SAFE_NODE:
            raise ValueError(f"risk seed {cell} is not a grid cell")

    adjacency: dict[int, set[int]] = {}
    for (i, j) in net.arcs:
        adjacency.setdefault(i, set()).add(j)
        adjacency.setdefault(j, set()).add(i)

    removed_at = []
    risky: set[int] = set(risk.seeds)
    removed: set[tuple[int, int]] = set()
    for slot, (i, j) in risk.static_removals:
        if slot == 0:
            removed.add((min(i, j), max(i, j)))
    removed_at.append(frozenset(removed))
    for t in range(1, tau + 1):
        if risk.seeds and risk.spread_period > 0 and t % risk.spread_period == 0:
            grown = set(risky)
            for cell in risky:
                grown |= {n for n in adjacency.get(cell, ()) if n != SAFE_NODE}
            risky = grown
            removed |= _incident_pairs(net, risky)
        for slot, (i, j) in risk.static_removals:
            if slot == t:
                removed.add((min(i, j), max(i, j)))
        removed_at.append(frozenset(removed))
    return TimeExpandedNetwork(net=net, tau=tau, removed_at=tuple(removed_at))


def _incident_pairs(net: StaticNetwork, cells: set[int]) -> set[tuple[int, int]]:
    return {
        (min(i, j), max(i, j))
        for (i, j) in net.arcs
        if i in cells or j in cells
    }
