"""Agent-based social simulation of evacuation for Sim/Opt comparison.

Occupants are modeled as individual agents with heterogeneous walking
speeds, personal space, optional social groups (a group moves at the pace
of its slowest member and regroups when stretched), and per-slot route
intentions taken either from static shortest paths or from the optimizer's
recommended flows.  Movement is waypoint following under hard constraints:
wall margins, pairwise separation, per-door crossings per slot, and cell
hosting capacities.  Blocked agents simply wait, which is what produces
queues at bottlenecks.

Rooms have no global coordinates in the plan, so the simulator lays them
out by chaining door positions; the layout only needs to be consistent
room-to-room, not an exact floor plan.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

import numpy as np

from .evac import EvacuationProblem, FlowSolution, exit_distances, min_evac_time
from .grid import OPEN, SAFE_NODE, CellGrid, NetworkParams, StaticNetwork, \
    build_grid, build_static_network, door_slot_capacity
from .plan import BuildingPlan, Door, wall_of, wall_length, door_position

IDLE, MOVING, EVACUATED = "idle", "moving", "evacuated"

# walking direction candidates: straight, then 30/60 degree sidesteps
_STEP_DIRECTIONS = tuple(
    (math.cos(math.radians(a)), math.sin(math.radians(a)))
    for a in (0, -30, 30, -60, 60)
)


class Overcrowded(RuntimeError):
    """Requested number of agents cannot be placed."""


class NoRoute(RuntimeError):
    """An agent's cell has no path to the safe place."""


class TimeCapExceeded(RuntimeError):
    """Simulated time passed the configured cap before full evacuation."""


class WallTooShort(ValueError):
    """No room on the wall for a second door."""


@dataclass(frozen=True)
class SimConfig:
    guidance: str = "netflow"            # netflow | shortest_path
    grouping: bool = False
    tick: float = 0.1                    # seconds
    seed: int = 0
    wall_margin: float = 0.1             # meters agents keep from walls
    personal_radius: float = 0.2         # meters; separation is twice this
    door_rate: float = 1.2               # persons/m/s through doors
    speed_range: tuple[float, float] = (0.7, 1.2)
    group_size_range: tuple[int, int] = (3, 7)
    cohesion_radius: float = 2.0         # meters from group centroid
    time_cap_s: float = 3600.0


@dataclass
class Agent:
    id: int
    pos: tuple[float, float]             # global meters
    room: str
    cell: int
    speed: float
    group: int | None = None
    radius: float = 0.2
    state: str = IDLE
    next_hop: int | None = None
    exit_time: float | None = None


@dataclass(frozen=True)
class Group:
    id: int
    members: tuple[int, ...]
    speed: float                         # slowest member


@dataclass(frozen=True)
class EvacuationTrace:
    evacuated_by_slot: tuple[int, ...]   # cumulative, index = slot
    exit_times: dict[int, float]         # agent id -> seconds
    total_slots: int
    total_seconds: float
    slot_seconds: float

    @property
    def all_out(self) -> bool:
        return len(self.exit_times) == (self.evacuated_by_slot[-1] if self.evacuated_by_slot else 0)


def room_layout(plan: BuildingPlan) -> dict[str, tuple[float, float]]:
    """Global origin per room, chaining rooms through their doors."""
    origins: dict[str, tuple[float, float]] = {}
    first = plan.rooms[0].id
    origins[first] = (0.0, 0.0)
    changed = True
    while changed:
        changed = False
        for door in plan.doors:
            if door.is_exit():
                continue
            a, b = door.endpoints
            host = plan.room(door.host)
            wall, off = wall_of(host, door_position(plan, door))
            other = plan.room(door.other)
            from .plan import MIRROR_WALL
            owall = MIRROR_WALL[wall]
            hp = _wall_point(host, wall, off)
            op = _wall_point(other, owall, min(off, wall_length(other, owall)))
            if a in origins and b not in origins:
                gx = origins[a][0] + hp[0] if a == door.host else origins[a][0] + op[0]
                gy = origins[a][1] + hp[1] if a == door.host else origins[a][1] + op[1]
                lp = op if a == door.host else hp
                origins[b] = (gx - lp[0], gy - lp[1])
                changed = True
            elif b in origins and a not in origins:
                gx = origins[b][0] + (op[0] if b == door.other else hp[0])
                gy = origins[b][1] + (op[1] if b == door.other else hp[1])
                lp = hp if b == door.other else op
                origins[a] = (gx - lp[0], gy - lp[1])
                changed = True
    # rooms not reachable by inter-room doors get parked in a row clear of
    # the placed ones; only in-room geometry matters for them
    x_park = max((origins[r][0] + plan.room(r).width for r in origins), default=0.0) + 5.0
    for room in plan.rooms:
        if room.id not in origins:
            origins[room.id] = (x_park, 0.0)
            x_park += room.width + 5.0
    return origins


def _wall_point(room, wall, off):
    if wall == "S":
        return (off, 0.0)
    if wall == "N":
        return (off, room.depth)
    if wall == "W":
        return (0.0, off)
    return (room.width, off)


def double_door_variant(plan: BuildingPlan, gap: float = 0.1) -> BuildingPlan:
    """Replace each internal door with two adjacent doors of equal width.

    Exit doors are left untouched.  Raises WallTooShort when a wall cannot
    host the pair.
    """
    doors: list[Door] = []
    for door in plan.doors:
        if door.is_exit():
            doors.append(door)
            continue
        host = plan.room(door.host)
        pos = door_position(plan, door)
        wall, off = wall_of(host, pos)
        limit = wall_length(host, wall)
        other = plan.room(door.other)
        from .plan import MIRROR_WALL
        limit = min(limit, wall_length(other, MIRROR_WALL[wall]))
        shift = door.width / 2.0 + gap / 2.0
        lo_off, hi_off = off - shift, off + shift
        if lo_off - door.width / 2.0 < 0 or hi_off + door.width / 2.0 > limit:
            raise WallTooShort(
                f"wall between {door.endpoints} too short for twin doors"
            )
        base = pos - off
        doors.append(replace(door, position=base + lo_off))
        doors.append(replace(door, position=base + hi_off))
    return replace(plan, doors=tuple(doors))


# ---------------------------------------------------------------------------
# simulation


class Simulation:
    """One seeded evacuation run over a building plan."""

    def __init__(self, plan: BuildingPlan, n_agents: int, cfg: SimConfig,
                 cell_size: float = 3.0,
                 params: NetworkParams | None = None):
        self.plan = plan
        self.cfg = cfg
        params = params or NetworkParams(door_rate=cfg.door_rate)
        self.grid: CellGrid = build_grid(plan, cell_size)
        self.net: StaticNetwork = build_static_network(self.grid, params)
        if cfg.tick > self.net.slot_seconds / 10 + 1e-9:
            raise ValueError("tick must be at most a tenth of the slot duration")
        self.origins = room_layout(plan)
        self.dist = exit_distances(self.net)
        self.agents, self.groups = init_agents(plan, n_agents, cfg,
                                               grid=self.grid, net=self.net,
                                               origins=self.origins)
        self.time = 0.0
        self.slot = -1
        self._group_speed = {g.id: g.speed for g in self.groups}
        self._door_quota: dict[int, int] = {}
        self._door_queue: dict[int, list[int]] = {}
        self._budgets: dict = {}
        self._geometry_index()
        if cfg.guidance == "netflow":
            occupancy: dict[int, int] = {}
            for a in self.agents:
                occupancy[a.cell] = occupancy.get(a.cell, 0) + 1
            prob = EvacuationProblem(network=self.net, occupancy=occupancy)
            self.tau_star, sol = min_evac_time(prob)
            self._budgets = dict(sol.flows)
        elif cfg.guidance != "shortest_path":
            raise ValueError(f"unknown guidance {cfg.guidance!r}")

    # -- geometry ----------------------------------------------------------

    def _geometry_index(self):
        self.room_of_cell = {c.id: c.room for c in self.grid.cells}
        a = self.grid.cell_size
        self.cell_center = {}
        self.room_index: dict[str, tuple[dict, int, int]] = {}
        for c in self.grid.cells:
            ox, oy = self.origins[c.room]
            col, row = c.coords
            self.cell_center[c.id] = (ox + (col + 0.5) * a, oy + (row + 0.5) * a)
            if not c.is_dummy:
                ids = self.room_index.setdefault(c.room, ({}, 0, 0))[0]
                ids[c.coords] = c.id
        for room_id, (ids, _, _) in list(self.room_index.items()):
            ncols = max(cc[0] for cc in ids) + 1
            nrows = max(cc[1] for cc in ids) + 1
            self.room_index[room_id] = (ids, ncols, nrows)
        # door passages between cells (and to the exit), with global points
        self.door_passages: dict[tuple[int, int], list[int]] = {}
        self.passage_info = []
        for idx, p in enumerate(self.grid.passages):
            if p.kind == OPEN or p.a_point is None:
                self.passage_info.append(None)
                continue
            room_a = self.room_of_cell[p.a]
            ax, ay = self.origins[room_a]
            ga = (ax + p.a_point[0], ay + p.a_point[1])
            cap = door_slot_capacity(p.width, self.cfg.door_rate,
                                     self.net.slot_seconds)
            self.passage_info.append({"point": ga, "cap": cap, "width": p.width})
            self.door_passages.setdefault((p.a, p.b), []).append(idx)
            if p.b != SAFE_NODE:
                self.door_passages.setdefault((p.b, p.a), []).append(idx)
        self.cell_count: dict[int, int] = {}
        for agent in self.agents:
            self.cell_count[agent.cell] = self.cell_count.get(agent.cell, 0) + 1

    def _cell_at(self, room: str, pos) -> int:
        ox, oy = self.origins[room]
        a = self.grid.cell_size
        ids, ncols, nrows = self.room_index[room]
        col = min(max(int((pos[0] - ox) // a), 0), ncols - 1)
        row = min(max(int((pos[1] - oy) // a), 0), nrows - 1)
        return ids[(col, row)]

    # -- stepping ----------------------------------------------------------

    def step(self):
        """Advance one tick."""
        cfg = self.cfg
        slot = int(self.time / self.net.slot_seconds + 1e-9)
        if slot != self.slot:
            self.slot = slot
            self._door_quota = {
                idx: info["cap"]
                for idx, info in enumerate(self.passage_info)
                if info is not None
            }
            self._replan_routes()
            self._purge_queues()

        positions = np.array([a.pos for a in self.agents])
        rooms = np.array([a.room for a in self.agents])
        active = np.array([a.state != EVACUATED for a in self.agents])
        sep = 2.0 * cfg.personal_radius

        stretched = set()
        group_front = {}
        if cfg.grouping:
            for g in self.groups:
                alive = [self.agents[m] for m in g.members
                         if self.agents[m].state != EVACUATED]
                if not alive:
                    continue
                cx = sum(a.pos[0] for a in alive) / len(alive)
                cy = sum(a.pos[1] for a in alive) / len(alive)
                group_front[g.id] = min(self.dist.get(a.cell, 0) for a in alive)
                if any(math.hypot(a.pos[0] - cx, a.pos[1] - cy) > cfg.cohesion_radius
                       for a in alive):
                    stretched.add(g.id)

        for agent in self.agents:
            if agent.state == EVACUATED:
                continue
            speed = agent.speed
            if cfg.grouping and agent.group is not None:
                speed = min(speed, self._group_speed[agent.group])
                if (agent.group in stretched
                        and self.dist.get(agent.cell, 0) <= group_front[agent.group]):
                    # the party is stretched: its head crawls so the tail,
                    # still at full group pace, can close the gap
                    speed *= 0.25
            target = self._target_point(agent)
            if target is None:
                continue
            self._move_toward(agent, target, speed * cfg.tick, positions,
                              rooms, active, sep)
            positions[agent.id] = agent.pos

        self.time += cfg.tick

    def _replan_routes(self):
        # members of a group standing in the same cell take the same arc,
        # so a party is never advised to split across escape routes
        cache: dict[tuple[int, int], int | None] = {}
        for agent in self.agents:
            if agent.state == EVACUATED:
                continue
            if self.cfg.grouping and agent.group is not None:
                key = (agent.group, agent.cell)
                if key in cache:
                    hop = cache[key]
                    if hop is not None and self.cfg.guidance == "netflow":
                        bkey = (agent.cell, hop, self.slot)
                        if bkey in self._budgets:
                            self._budgets[bkey] = max(0.0, self._budgets[bkey] - 1.0)
                else:
                    hop = self._route_hop(agent.cell)
                    cache[key] = hop
            else:
                hop = self._route_hop(agent.cell)
            agent.next_hop = hop
            agent.state = MOVING if hop is not None else IDLE

    def _purge_queues(self):
        """Drop queue entries of agents that rerouted or wandered off."""
        for idx, q in self._door_queue.items():
            if not q:
                continue
            point = self.passage_info[idx]["point"]
            keep = []
            for aid in q:
                agent = self.agents[aid]
                if agent.state == EVACUATED or agent.next_hop is None:
                    continue
                if idx not in self.door_passages.get((agent.cell, agent.next_hop), []):
                    continue
                d = math.hypot(agent.pos[0] - point[0], agent.pos[1] - point[1])
                if d <= 1.5:
                    keep.append(aid)
            self._door_queue[idx] = keep

    def _route_hop(self, cell: int) -> int | None:
        if self.cfg.guidance == "netflow":
            hop = netflow_next_hop(self.net, cell, self._budgets, self.slot)
            if hop is not None:
                return hop
        return shortest_next_hop(self.net, self.dist, cell)

    def _target_point(self, agent: Agent):
        hop = agent.next_hop
        if hop is None:
            return None
        if hop == agent.cell:
            return None
        doors = self.door_passages.get((agent.cell, hop))
        if doors:
            # stay with a queue already joined, else head for the shortest
            for idx in doors:
                if agent.id in self._door_queue.get(idx, ()):
                    return self.passage_info[idx]["point"]
            best = min(doors, key=lambda idx: (len(self._door_queue.get(idx, [])), idx))
            return self.passage_info[best]["point"]
        if hop in self.cell_center:
            return self.cell_center[hop]
        return None

    def _move_toward(self, agent: Agent, target, step_len, positions, rooms,
                     active, sep):
        px, py = agent.pos
        tx, ty = target
        dist = math.hypot(tx - px, ty - py)

        hop = agent.next_hop
        crossing = hop is not None and self.door_passages.get((agent.cell, hop))
        if crossing and dist <= max(step_len, 0.15):
            # reached the doorway
            self._attempt_crossing(agent)
            return
        if dist <= 1e-9:
            if hop is not None and not crossing:
                self._update_cell(agent)
            return

        moved = self._try_walk(agent, target, step_len, positions, rooms,
                               active, sep, near_door=bool(crossing))
        if not moved and crossing and dist <= 0.5:
            # wedged in the doorway throat: cross from here
            self._attempt_crossing(agent)

    def _try_walk(self, agent: Agent, target, step_len, positions, rooms,
                  active, sep, near_door=False) -> bool:
        px, py = agent.pos
        tx, ty = target
        dist = math.hypot(tx - px, ty - py)
        ux, uy = (tx - px) / dist, (ty - py) / dist
        full = min(step_len, dist)

        same = active & (rooms == agent.room)
        same[agent.id] = False
        others = positions[same] if same.any() else None

        # straight ahead first, then deterministic sidesteps; a candidate is
        # accepted only if it lands inside the room, keeps everyone's
        # personal space, and still closes on the target
        for cos_a, sin_a in _STEP_DIRECTIONS:
            vx = ux * cos_a - uy * sin_a
            vy = ux * sin_a + uy * cos_a
            for frac in (1.0, 0.5):
                step = full * frac
                if step <= 1e-9:
                    return False
                nx, ny = self._clamp_to_room(agent.room, px + vx * step,
                                             py + vy * step, near_door=near_door)
                if math.hypot(tx - nx, ty - ny) >= dist - 1e-9:
                    continue
                if others is not None and len(others):
                    d_new = np.hypot(others[:, 0] - nx, others[:, 1] - ny)
                    if d_new.min() < sep - 1e-9:
                        continue
                new_cell = self._cell_at(agent.room, (nx, ny))
                if new_cell != agent.cell:
                    cap = self.net.node_capacity[new_cell]
                    if self.cell_count.get(new_cell, 0) + 1 > cap:
                        return False  # blocked: the next cell is full
                    self.cell_count[agent.cell] -= 1
                    self.cell_count[new_cell] = self.cell_count.get(new_cell, 0) + 1
                    agent.cell = new_cell
                agent.pos = (nx, ny)
                return True
        return False

    def _clamp_to_room(self, room_id, x, y, near_door=False):
        ox, oy = self.origins[room_id]
        a = self.grid.cell_size
        _, ncols, nrows = self.room_index[room_id]
        m = 0.0 if near_door else self.cfg.wall_margin
        x = min(max(x, ox + m), ox + ncols * a - m)
        y = min(max(y, oy + m), oy + nrows * a - m)
        return x, y

    def _attempt_crossing(self, agent: Agent):
        hop = agent.next_hop
        doors = self.door_passages.get((agent.cell, hop), [])
        queue_key = None
        for idx in doors:
            q = self._door_queue.setdefault(idx, [])
            if agent.id in q:
                queue_key = idx
                break
        if queue_key is None:
            # join the door actually reached
            def gap(idx):
                px, py = self.passage_info[idx]["point"]
                return math.hypot(agent.pos[0] - px, agent.pos[1] - py)
            queue_key = min(doors, key=lambda idx: (gap(idx), idx))
            self._door_queue.setdefault(queue_key, []).append(agent.id)
        q = self._door_queue[queue_key]
        if q[0] != agent.id:
            return
        if self._door_quota.get(queue_key, 0) <= 0:
            return
        if hop == SAFE_NODE:
            q.pop(0)
            self._door_quota[queue_key] -= 1
            self.cell_count[agent.cell] -= 1
            agent.state = EVACUATED
            agent.exit_time = self.time + self.cfg.tick
            agent.next_hop = None
            return
        cap = self.net.node_capacity[hop]
        if self.cell_count.get(hop, 0) + 1 > cap:
            return
        point = self.passage_info[queue_key]["point"]
        landing = self._find_landing(hop, point)
        if landing is None:
            return  # doorway blocked from the other side
        q.pop(0)
        self._door_quota[queue_key] -= 1
        self.cell_count[agent.cell] -= 1
        self.cell_count[hop] = self.cell_count.get(hop, 0) + 1
        agent.cell = hop
        agent.room = self.room_of_cell[hop]
        agent.pos = landing
        agent.next_hop = self._route_hop(agent.cell)

    def _find_landing(self, hop: int, point):
        """A free spot just inside the target room behind the door."""
        room_id = self.room_of_cell[hop]
        others = [a.pos for a in self.agents
                  if a.state != EVACUATED and a.room == room_id]
        sep = 2.0 * self.cfg.personal_radius
        cx, cy = self.cell_center[hop]
        vx, vy = cx - point[0], cy - point[1]
        norm = math.hypot(vx, vy) or 1.0
        vx, vy = vx / norm, vy / norm
        wx, wy = -vy, vx   # sideways along the wall
        for depth in (0.15, 0.45, 0.75, 1.05):
            for lat in (0.0, -0.45, 0.45, -0.9, 0.9):
                cand = self._nudge_into_room(
                    room_id,
                    (point[0] + vx * depth + wx * lat,
                     point[1] + vy * depth + wy * lat),
                )
                if all((ox - cand[0]) ** 2 + (oy - cand[1]) ** 2 >= (sep - 1e-9) ** 2
                       for ox, oy in others):
                    return cand
        return None

    def _nudge_into_room(self, room_id, point):
        room = self.plan.room(room_id)
        ox, oy = self.origins[room_id]
        eps = self.cfg.wall_margin + 0.05
        x = min(max(point[0], ox + eps), ox + room.width - eps)
        y = min(max(point[1], oy + eps), oy + room.depth - eps)
        return (x, y)

    def _update_cell(self, agent: Agent):
        hop = agent.next_hop
        if hop is None or hop == SAFE_NODE:
            return
        if self.room_of_cell.get(hop) == agent.room:
            center = self.cell_center[hop]
            if math.hypot(agent.pos[0] - center[0], agent.pos[1] - center[1]) < 1e-6:
                agent.next_hop = self._route_hop(agent.cell)

    @property
    def evacuated(self) -> int:
        return sum(1 for a in self.agents if a.state == EVACUATED)

    def run(self) -> EvacuationTrace:
        n = len(self.agents)
        while self.evacuated < n:
            if self.time > self.cfg.time_cap_s:
                raise TimeCapExceeded(
                    f"{self.evacuated} of {n} out after {self.cfg.time_cap_s} s"
                )
            self.step()
        exit_times = {a.id: a.exit_time for a in self.agents}
        total_seconds = max(exit_times.values()) if exit_times else 0.0
        slot = self.net.slot_seconds
        total_slots = int(math.ceil(total_seconds / slot - 1e-9))
        by_slot = []
        for s in range(total_slots + 1):
            by_slot.append(sum(1 for t in exit_times.values() if t <= s * slot + 1e-9))
        return EvacuationTrace(
            evacuated_by_slot=tuple(by_slot),
            exit_times=exit_times,
            total_slots=total_slots,
            total_seconds=total_seconds,
            slot_seconds=slot,
        )


# ---------------------------------------------------------------------------
# module-level operations


def init_agents(plan: BuildingPlan, n_agents: int, cfg: SimConfig,
                grid: CellGrid | None = None, net: StaticNetwork | None = None,
                origins: dict | None = None,
                cell_size: float = 3.0) -> tuple[list[Agent], list[Group]]:
    """Seeded placement of agents, with optional greedy random grouping.

    Placement respects wall margins, pairwise separation, and cell hosting
    capacities; rooms are weighted by the plan's occupancy counts (or by
    area when none are given).  Group members start clustered around a
    common spot, the way parties of visitors actually stand.
    """
    rng = random.Random(cfg.seed)
    grid = grid or build_grid(plan, cell_size)
    net = net or build_static_network(grid, NetworkParams(door_rate=cfg.door_rate))
    origins = origins or room_layout(plan)

    counts = plan.room_occupancy()
    if sum(counts.values()) <= 0:
        counts = {r.id: max(1, int(r.width * r.depth)) for r in plan.rooms}
    rooms, weights = zip(*sorted(counts.items()))
    total_w = sum(weights)

    a = grid.cell_size
    cell_of = {}
    for c in grid.cells:
        if not c.is_dummy:
            cell_of[(c.room, c.coords[0], c.coords[1])] = c.id

    agents: list[Agent] = []
    placed: list[tuple[float, float]] = []
    cell_load: dict[int, int] = {}
    sep = 2.0 * cfg.personal_radius

    def pick_room() -> str:
        r = rng.random() * total_w
        acc = 0.0
        for rid, w in zip(rooms, weights):
            acc += w
            if r < acc:
                return rid
        return rooms[-1]

    def sample_point(room_id: str, near=None, spread=0.0):
        room = plan.room(room_id)
        ox, oy = origins[room_id]
        ncols = int(room.width // a)
        nrows = int(room.depth // a)
        lo_x, hi_x = ox + cfg.wall_margin, ox + ncols * a - cfg.wall_margin
        lo_y, hi_y = oy + cfg.wall_margin, oy + nrows * a - cfg.wall_margin
        if near is not None:
            x = min(max(near[0] + (rng.random() * 2 - 1) * spread, lo_x), hi_x)
            y = min(max(near[1] + (rng.random() * 2 - 1) * spread, lo_y), hi_y)
        else:
            x = lo_x + rng.random() * (hi_x - lo_x)
            y = lo_y + rng.random() * (hi_y - lo_y)
        col = min(int((x - ox) // a), ncols - 1)
        row = min(int((y - oy) // a), nrows - 1)
        return (x, y), cell_of[(room_id, col, row)]

    def place_one(agent_id: int, room_id: str, near=None) -> Agent:
        for attempt in range(600):
            spread = 0.0 if near is None else 0.8 + attempt * 0.01
            pos, cell = sample_point(room_id, near=near, spread=spread)
            if cell_load.get(cell, 0) + 1 > net.node_capacity[cell]:
                continue
            x, y = pos
            if any((px - x) ** 2 + (py - y) ** 2 < sep * sep for px, py in placed):
                continue
            speed = cfg.speed_range[0] + rng.random() * (
                cfg.speed_range[1] - cfg.speed_range[0]
            )
            agent = Agent(id=agent_id, pos=pos, room=room_id, cell=cell,
                          speed=speed, radius=cfg.personal_radius)
            placed.append(pos)
            cell_load[cell] = cell_load.get(cell, 0) + 1
            return agent
        raise Overcrowded(f"could not place agent {agent_id} of {n_agents}")

    groups: list[Group] = []
    if cfg.grouping and n_agents >= 2:
        lo, hi = cfg.group_size_range
        sizes = []
        left = n_agents
        while left > 0:
            size = min(rng.randint(lo, hi), left)
            sizes.append(size)
            left -= size
        next_id = 0
        for gid, size in enumerate(sizes):
            room_id = pick_room()
            anchor, _ = sample_point(room_id)
            members = []
            for _ in range(size):
                agent = place_one(next_id, room_id, near=anchor)
                agent.group = gid
                agents.append(agent)
                members.append(next_id)
                next_id += 1
            speed = min(agents[m].speed for m in members)
            groups.append(Group(id=gid, members=tuple(members), speed=speed))
    else:
        for k in range(n_agents):
            agents.append(place_one(k, pick_room()))
    return agents, groups


def shortest_next_hop(net: StaticNetwork, dist: dict, cell: int) -> int | None:
    """Next cell on a fewest-slot path to the safe place (ties: lowest id)."""
    if cell == SAFE_NODE:
        return None
    if cell not in dist:
        raise NoRoute(f"cell {cell} cannot reach the safe place")
    best = None
    for (i, j), c in net.arcs.items():
        if i == cell and c > 0 and dist.get(j, math.inf) == dist[cell] - 1:
            if best is None or j < best:
                best = j
    return best


def netflow_next_hop(net: StaticNetwork, cell: int, budgets: dict,
                     slot: int) -> int | None:
    """Arc with the largest remaining recommended flow out of `cell` at
    `slot`; consumes one unit of the recommendation.  None when nothing
    is recommended (caller falls back to the static route)."""
    best = None
    best_flow = 0.0
    for (i, j, t), f in budgets.items():
        if i != cell or t != slot or f <= 1e-9:
            continue
        if f > best_flow + 1e-9 or (abs(f - best_flow) <= 1e-9 and (best is None or j < best)):
            best, best_flow = j, f
    if best is None:
        return None
    budgets[(cell, best, slot)] = best_flow - 1.0
    return best


def plan_route(agent: Agent, guidance: str, net: StaticNetwork,
               recommendation: FlowSolution | dict | None = None,
               slot: int = 0) -> list[int]:
    """Waypoints (cell hops) from the agent's cell to the safe place."""
    dist = exit_distances(net)
    if agent.cell not in dist:
        raise NoRoute(f"cell {agent.cell} cannot reach the safe place")
    hops: list[int] = []
    cell = agent.cell
    budgets = None
    if guidance == "netflow" and recommendation is not None:
        flows = recommendation.flows if isinstance(recommendation, FlowSolution) \
            else recommendation
        budgets = dict(flows)
    t = slot
    while cell != SAFE_NODE:
        hop = None
        if budgets is not None:
            hop = netflow_next_hop(net, cell, budgets, t)
        if hop is None:
            hop = shortest_next_hop(net, dist, cell)
        if hop is None:
            raise NoRoute(f"no way forward from cell {cell}")
        hops.append(hop)
        cell = hop
        t += 1
    return hops


def step(sim: Simulation, cfg: SimConfig | None = None) -> Simulation:
    """Advance the simulation one tick (thin functional wrapper)."""
    sim.step()
    return sim


def run(plan: BuildingPlan, n_agents: int, cfg: SimConfig,
        cell_size: float = 3.0) -> EvacuationTrace:
    """Simulate until everyone is out (or the time cap trips)."""
    return Simulation(plan, n_agents, cfg, cell_size=cell_size).run()
