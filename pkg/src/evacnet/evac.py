"""Evacuation optimization: max-outflow horizons, minimum evacuation time,
congestion tiers, shortest-path baseline, time decomposition, and exit
width sweeps.

The core model maximizes the number of people at the safe place by the end
of a horizon of unit time slots, subject to flow conservation at every
cell, shared per-passage capacities, and per-cell hosting capacities.
Congestion optionally tightens each passage with a three-piece concave
decreasing function of the destination cell's occupancy, linearized
through tier variables.  Uncongested instances are solved by an exact
network-flow routine; congested ones (and all oracle comparisons) go
through the bounded-variable simplex.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, replace

from .grid import (
    NO_RISK,
    SAFE_NODE,
    NetworkParams,
    RiskSchedule,
    StaticNetwork,
    build_grid,
    build_static_network,
    time_expand,
)
from .lp import EQ, LE, OPTIMAL, LPInstance, LPSolution, lp_instance, solve_lp
from .maxflow import occupancy_series, solve_max_outflow_flow
from .plan import BuildingPlan

_EPS = 1e-9


class Unevacuable(RuntimeError):
    """Some occupants can never reach the safe place."""


class HorizonCapExceeded(RuntimeError):
    """The horizon search passed the configured cap without evacuating."""


class NonProgress(RuntimeError):
    """A decomposition chunk evacuated nobody and moved nobody."""


class ConfigError(ValueError):
    """Invalid congestion tier configuration."""


@dataclass(frozen=True)
class CongestionCurve:
    """Three-piece linearization of capacity decreasing with occupancy.

    Tier breakpoints sit at fractions (b1, b2) of the cell capacity and
    the tier capacities at multiples (1, m1, m2) of the free capacity.
    Cells too small for three distinct tiers keep constant capacity.
    """

    b1: float = 0.5
    b2: float = 0.8
    m1: float = 0.6
    m2: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.b1 < self.b2 < 1.0):
            raise ConfigError("breakpoint fractions must satisfy 0 < b1 < b2 < 1")
        if not (1.0 > self.m1 > self.m2 > 0.0):
            raise ConfigError("capacity multipliers must satisfy 1 > m1 > m2 > 0")

    def breakpoints(self, n: float) -> tuple[int, int] | None:
        """(n', n'') for a cell of capacity n, or None when degenerate."""
        if not math.isfinite(n):
            return None
        n1 = math.floor(self.b1 * n + _EPS)
        n2 = math.floor(self.b2 * n + _EPS)
        if 0 < n1 < n2 < n:
            return n1, n2
        return None

    def slopes(self, c: float, n: float) -> tuple[float, float, float]:
        """Per-tier capacity loss per occupant; strictly increasing."""
        n1, n2 = self.breakpoints(n)
        c1, c2 = self.m1 * c, self.m2 * c
        return (c - c1) / n1, (c1 - c2) / (n2 - n1), c2 / (n - n2)

    def tier_caps(self, c: float) -> tuple[float, float, float]:
        return c, self.m1 * c, self.m2 * c


@dataclass(frozen=True)
class EvacuationProblem:
    network: StaticNetwork
    occupancy: dict[int, int]                  # y_i^0 per cell, safe node absent
    risk: RiskSchedule = NO_RISK
    congestion: CongestionCurve | None = None

    def __post_init__(self):
        for i, y in self.occupancy.items():
            if i == SAFE_NODE:
                raise ValueError("initial occupancy of the safe place must be zero")
            cap = self.network.node_capacity.get(i)
            if cap is None:
                raise ValueError(f"occupancy references unknown node {i}")
            if y < 0 or y > cap:
                raise ValueError(f"occupancy {y} outside [0, {cap}] at node {i}")

    @property
    def total(self) -> int:
        return sum(self.occupancy.values())


@dataclass(frozen=True)
class FlowSolution:
    """Movements and occupancies of one solved horizon."""

    tau: int
    flows: dict                         # (i, j, t) -> persons moving in (t, t+1]
    occupancy: dict                     # (i, t) -> persons at cell i at slot t
    profile: tuple                      # cumulative evacuees y_0^t, t = 0..tau
    objective: float
    evacuees: int                       # floor(objective)
    integral: bool
    cpu_seconds: float


def spread_occupancy(network: StaticNetwork, room_counts: dict[str, int],
                     seed: int | None = None) -> dict[int, int]:
    """Distribute each room's occupants over its cells.

    Uniform spread with the remainder on the lowest cell ids; a seed
    switches to random placement (still capacity-respecting).
    """
    grid = network.grid
    if grid is None:
        raise ValueError("network carries no grid")
    out: dict[int, int] = {}
    rng = None
    if seed is not None:
        import random

        rng = random.Random(seed)
    for room_id, count in room_counts.items():
        cells = sorted(grid.room_cells(room_id))
        if not cells:
            raise ValueError(f"room {room_id!r} has no cells")
        caps = {c: int(network.node_capacity[c]) for c in cells}
        if count > sum(caps.values()):
            raise ValueError(
                f"room {room_id!r} cannot host {count} occupants "
                f"(capacity {sum(caps.values())})"
            )
        if rng is None:
            base, rem = divmod(count, len(cells))
            alloc = {c: base for c in cells}
            for c in cells[:rem]:
                alloc[c] += 1
            overflow = 0
            for c in cells:
                if alloc[c] > caps[c]:
                    overflow += alloc[c] - caps[c]
                    alloc[c] = caps[c]
            for c in cells:
                if overflow <= 0:
                    break
                take = min(caps[c] - alloc[c], overflow)
                alloc[c] += take
                overflow -= take
        else:
            alloc = {c: 0 for c in cells}
            for _ in range(count):
                open_cells = [c for c in cells if alloc[c] < caps[c]]
                alloc[rng.choice(open_cells)] += 1
        for c, v in alloc.items():
            if v:
                out[c] = out.get(c, 0) + v
    return out


def problem_from_plan(plan: BuildingPlan, cell_size: float,
                      params: NetworkParams = NetworkParams(),
                      risk: RiskSchedule = NO_RISK,
                      congestion: CongestionCurve | None = None,
                      total: int | None = None,
                      seed: int | None = None) -> EvacuationProblem:
    """Grid + network + occupancy in one step, for scenarios and tests."""
    grid = build_grid(plan, cell_size)
    net = build_static_network(grid, params)
    counts = plan.room_occupancy()
    if total is not None:
        counts = _rescale_counts(plan, counts, total)
    occupancy = spread_occupancy(net, counts, seed=seed)
    return EvacuationProblem(network=net, occupancy=occupancy, risk=risk,
                             congestion=congestion)


def _rescale_counts(plan: BuildingPlan, counts: dict[str, int], total: int):
    plan_total = sum(counts.values())
    if plan_total <= 0:
        weights = {r.id: r.width * r.depth for r in plan.rooms}
    else:
        weights = {rid: float(c) for rid, c in counts.items()}
    whole = sum(weights.values())
    exact = {rid: total * w / whole for rid, w in weights.items()}
    out = {rid: int(math.floor(v)) for rid, v in exact.items()}
    drift = total - sum(out.values())
    for rid in sorted(exact, key=lambda r: exact[r] - out[r], reverse=True):
        if drift == 0:
            break
        out[rid] += 1
        drift -= 1
    return out


# ---------------------------------------------------------------------------
# LP construction


def build_mfp(prob: EvacuationProblem, tau: int) -> LPInstance:
    """Max-outflow LP over `tau` slots (congestion-free form).

    Safe-place occupancy is substituted away: the objective is the total
    flow on exit arcs.  Rows: one conservation equality per (cell, slot),
    one departure-limit row per occupied slot (people leaving a cell in a
    slot must already be there, which is what makes moves one-slot hops on
    the time-expanded digraph), and one shared-capacity row per live
    undirected passage per slot.
    """
    expanded = time_expand(prob.network, tau, prob.risk)
    net = prob.network
    cells = _cells(net)
    variables = []
    rows = []
    objective: dict = {}

    for t in range(tau):
        for (i, j) in expanded.arcs_at(t):
            variables.append((("x", i, j, t), 0.0, math.inf))
            if j == SAFE_NODE:
                objective[("x", i, j, t)] = 1.0
    for t in range(1, tau + 1):
        for i in cells:
            variables.append((("y", i, t), 0.0, float(net.node_capacity[i])))

    for t in range(1, tau + 1):
        arcs_prev = expanded.arcs_at(t - 1)
        for j in cells:
            coeffs = {("y", j, t): 1.0}
            rhs = float(prob.occupancy.get(j, 0)) if t == 1 else 0.0
            if t > 1:
                coeffs[("y", j, t - 1)] = -1.0
            for (i, k) in arcs_prev:
                if k == j:
                    coeffs[("x", i, k, t - 1)] = coeffs.get(("x", i, k, t - 1), 0.0) - 1.0
                elif i == j:
                    coeffs[("x", i, k, t - 1)] = coeffs.get(("x", i, k, t - 1), 0.0) + 1.0
            rows.append((coeffs, EQ, rhs))

    for t in range(tau):
        arcs = expanded.arcs_at(t)
        outgoing: dict[int, list] = {}
        for (i, j) in arcs:
            outgoing.setdefault(i, []).append(("x", i, j, t))
        for i in cells:
            names = outgoing.get(i)
            if not names:
                continue
            coeffs = {name: 1.0 for name in names}
            if t == 0:
                rows.append((coeffs, LE, float(prob.occupancy.get(i, 0))))
            else:
                coeffs[("y", i, t)] = -1.0
                rows.append((coeffs, LE, 0.0))

    # per-direction capacity rows keep the constraint matrix a network
    # matrix (integral vertices); the shared two-way bound is restored on
    # extracted solutions by cancelling opposite flows, which changes
    # neither feasibility nor the objective
    for t in range(tau):
        for (i, j), c in expanded.arcs_at(t).items():
            rows.append(({("x", i, j, t): 1.0}, LE, float(c)))

    return lp_instance(variables, rows, objective, label=f"mfp:tau={tau}")


def _tiered_cells(prob: EvacuationProblem) -> dict[int, tuple[int, int]]:
    if prob.congestion is None:
        return {}
    tiers = {}
    for i, cap in prob.network.node_capacity.items():
        if i == SAFE_NODE:
            continue
        bp = prob.congestion.breakpoints(cap)
        if bp is not None:
            tiers[i] = bp
    return tiers


def greedy_tier_split(y: float, n1: int, n2: int) -> tuple[float, float, float]:
    """Canonical occupancy split: fill the first tier, then the second."""
    u = min(y, n1)
    v = min(y - u, n2 - n1)
    return u, v, y - u - v


def build_congested_mfp(prob: EvacuationProblem, tau: int) -> LPInstance:
    """Max-outflow LP with three-tier congestion on gated destinations.

    Flow on a gated arc splits into one variable per tier; the destination
    occupancy one slot before the move splits likewise, and each tier's
    flow is bounded by a line of that tier's slope.  The original shared
    passage capacity stays in force, so congestion can only restrict.
    Arcs into the safe place are never gated; slot-0 and slot-1 moves are
    gated by the known initial occupancy, folding into constant bounds.
    """
    if prob.congestion is None:
        raise ConfigError("problem has no congestion curve")
    curve = prob.congestion
    expanded = time_expand(prob.network, tau, prob.risk)
    net = prob.network
    cells = _cells(net)
    tiers = _tiered_cells(prob)

    variables = []
    rows = []
    objective: dict = {}

    def flow_vars(i, j, t):
        if j in tiers:
            return [("f1", i, j, t), ("f2", i, j, t), ("f3", i, j, t)]
        return [("x", i, j, t)]

    def occ_vars(i, t):
        if i in tiers:
            return [("u", i, t), ("v", i, t), ("w", i, t)]
        return [("y", i, t)]

    for t in range(tau):
        for (i, j), c in expanded.arcs_at(t).items():
            names = flow_vars(i, j, t)
            if len(names) == 1:
                variables.append((names[0], 0.0, math.inf))
                if j == SAFE_NODE:
                    objective[names[0]] = 1.0
                continue
            n1, n2 = tiers[j]
            caps = curve.tier_caps(c)
            slopes = curve.slopes(c, net.node_capacity[j])
            gate_t = t - 1
            if gate_t <= 0:
                # gated by the known initial occupancy
                gates = greedy_tier_split(float(prob.occupancy.get(j, 0)), n1, n2)
                for name, cap, slope, gate in zip(names, caps, slopes, gates):
                    variables.append((name, 0.0, max(0.0, cap - slope * gate)))
            else:
                for name in names:
                    variables.append((name, 0.0, math.inf))

    for t in range(1, tau + 1):
        for i in cells:
            if i in tiers:
                n1, n2 = tiers[i]
                n = net.node_capacity[i]
                variables.append((("u", i, t), 0.0, float(n1)))
                variables.append((("v", i, t), 0.0, float(n2 - n1)))
                variables.append((("w", i, t), 0.0, float(n - n2)))
            else:
                variables.append((("y", i, t), 0.0, float(net.node_capacity[i])))

    # conservation over the (possibly split) occupancy variables
    for t in range(1, tau + 1):
        arcs_prev = expanded.arcs_at(t - 1)
        for j in cells:
            coeffs: dict = {}
            for name in occ_vars(j, t):
                coeffs[name] = 1.0
            rhs = float(prob.occupancy.get(j, 0)) if t == 1 else 0.0
            if t > 1:
                for name in occ_vars(j, t - 1):
                    coeffs[name] = coeffs.get(name, 0.0) - 1.0
            for (i, k) in arcs_prev:
                if k == j:
                    for name in flow_vars(i, k, t - 1):
                        coeffs[name] = coeffs.get(name, 0.0) - 1.0
                elif i == j:
                    for name in flow_vars(i, k, t - 1):
                        coeffs[name] = coeffs.get(name, 0.0) + 1.0
            rows.append((coeffs, EQ, rhs))

    # departures in a slot come from people already in the cell
    for t in range(tau):
        arcs = expanded.arcs_at(t)
        outgoing: dict[int, list] = {}
        for (i, j) in arcs:
            outgoing.setdefault(i, []).extend(flow_vars(i, j, t))
        for i in cells:
            names = outgoing.get(i)
            if not names:
                continue
            coeffs = {name: 1.0 for name in names}
            if t == 0:
                rows.append((coeffs, LE, float(prob.occupancy.get(i, 0))))
            else:
                for name in occ_vars(i, t):
                    coeffs[name] = coeffs.get(name, 0.0) - 1.0
                rows.append((coeffs, LE, 0.0))

    # tier rows (occupancy at t-1 gates moves in (t, t+1]) plus the shared
    # passage capacity over both directions
    for t in range(tau):
        arcs = expanded.arcs_at(t)
        seen = set()
        for (i, j), c in arcs.items():
            if j in tiers and t - 1 >= 1:
                caps = curve.tier_caps(c)
                slopes = curve.slopes(c, net.node_capacity[j])
                for name, cap, slope, gate in zip(
                    flow_vars(i, j, t), caps, slopes, occ_vars(j, t - 1)
                ):
                    rows.append(({name: 1.0, gate: slope}, LE, float(cap)))
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            coeffs = {name: 1.0 for name in flow_vars(i, j, t)}
            if (j, i) in arcs:
                for name in flow_vars(j, i, t):
                    coeffs[name] = 1.0
            rows.append((coeffs, LE, float(c)))

    return lp_instance(variables, rows, objective, label=f"cmfp:tau={tau}")


def add_congestion(inst: LPInstance, prob: EvacuationProblem) -> LPInstance:
    """Congested variant of a previously built max-outflow instance."""
    tau = 0
    for vid, _, _ in inst.variables:
        if vid[0] == "x":
            tau = max(tau, vid[3] + 1)
        elif vid[0] == "y":
            tau = max(tau, vid[2])
    return build_congested_mfp(prob, tau)


# ---------------------------------------------------------------------------
# solving


def _cells(net: StaticNetwork):
    return [i for i in net.nodes if i != SAFE_NODE]


def _profile_from_flows(flows, tau: int) -> tuple:
    per_slot = [0.0] * (tau + 1)
    for (i, j, t), f in flows.items():
        if j == SAFE_NODE:
            per_slot[t + 1] += f
    out = [0.0]
    for t in range(1, tau + 1):
        out.append(out[-1] + per_slot[t])
    return tuple(out)


def _flows_from_values(values: dict) -> dict:
    flows: dict = {}
    for vid, val in values.items():
        if vid[0] in ("x", "f1", "f2", "f3") and val > 1e-9:
            _, i, j, t = vid
            flows[(i, j, t)] = flows.get((i, j, t), 0.0) + val
    return cancel_opposite_flows(flows)


def cancel_opposite_flows(flows: dict) -> dict:
    """Drop offsetting two-way movements on each passage and slot.

    Swapping parties in place is never useful: cancelling the smaller
    direction preserves conservation, departures, and evacuee counts, and
    brings the pair within the shared passage capacity.
    """
    out = dict(flows)
    for (i, j, t) in list(out):
        rev = (j, i, t)
        if (i, j, t) in out and rev in out and i < j:
            d = min(out[(i, j, t)], out[rev])
            if d > 0:
                out[(i, j, t)] -= d
                out[rev] -= d
                if out[(i, j, t)] <= 1e-12:
                    del out[(i, j, t)]
                if out[rev] <= 1e-12:
                    del out[rev]
    return out


def _solution_from_lp(prob: EvacuationProblem, tau: int, sol: LPSolution,
                      cpu: float) -> FlowSolution:
    flows = _flows_from_values(sol.values)
    occupancy = occupancy_series(flows, prob.occupancy, _cells(prob.network), tau)
    return FlowSolution(
        tau=tau,
        flows=flows,
        occupancy=occupancy,
        profile=_profile_from_flows(flows, tau),
        objective=sol.objective,
        evacuees=int(math.floor(sol.objective + 1e-6)),
        integral=sol.integral,
        cpu_seconds=cpu,
    )


def max_outflow(prob: EvacuationProblem, tau: int,
                engine: str = "auto") -> tuple[int, FlowSolution]:
    """Most people at the safe place within `tau` slots.

    engine: 'auto' picks the exact network-flow path for congestion-free
    problems and the simplex otherwise; 'lp' forces the simplex; 'flow'
    forces the network path (congestion-free only).
    """
    start = time.perf_counter()
    if tau < 0:
        raise ValueError("horizon must be non-negative")
    if tau == 0 or prob.total == 0:
        empty = FlowSolution(tau=tau, flows={}, occupancy={}, profile=(0.0,) * (tau + 1),
                             objective=0.0, evacuees=0, integral=True, cpu_seconds=0.0)
        return 0, empty

    if engine == "auto":
        engine = "lp" if prob.congestion is not None else "flow"
    if engine == "flow":
        if prob.congestion is not None:
            raise ValueError("network-flow engine cannot handle congestion tiers")
        expanded = time_expand(prob.network, tau, prob.risk)
        value, flows = solve_max_outflow_flow(expanded, prob.occupancy)
        occupancy = occupancy_series(flows, prob.occupancy, _cells(prob.network), tau)
        sol = FlowSolution(
            tau=tau,
            flows=flows,
            occupancy=occupancy,
            profile=_profile_from_flows(flows, tau),
            objective=float(value),
            evacuees=value,
            integral=True,
            cpu_seconds=time.perf_counter() - start,
        )
        return value, sol
    if engine != "lp":
        raise ValueError(f"unknown engine {engine!r}")
    if prob.congestion is not None:
        inst = build_congested_mfp(prob, tau)
    else:
        inst = build_mfp(prob, tau)
    sol = solve_lp(inst)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"max-outflow LP ended {sol.status}")
    out = _solution_from_lp(prob, tau, sol, time.perf_counter() - start)
    return out.evacuees, out


def exit_distances(net: StaticNetwork, arcs=None) -> dict[int, int]:
    """Fewest slots from each node to the safe place over positive arcs."""
    arcs = net.arcs if arcs is None else arcs
    back: dict[int, list[int]] = {}
    for (i, j), c in arcs.items():
        if c > 0:
            back.setdefault(j, []).append(i)
    dist = {SAFE_NODE: 0}
    queue = deque([SAFE_NODE])
    while queue:
        node = queue.popleft()
        for prev in back.get(node, ()):
            if prev not in dist:
                dist[prev] = dist[node] + 1
                queue.append(prev)
    return dist


def _risk_stabilization_slot(prob: EvacuationProblem) -> int:
    risk = prob.risk
    slot = max((s for s, _ in risk.static_removals), default=0)
    if risk.seeds:
        adjacency: dict[int, set[int]] = {}
        for (i, j) in prob.network.arcs:
            adjacency.setdefault(i, set()).add(j)
            adjacency.setdefault(j, set()).add(i)
        risky = set(risk.seeds)
        steps = 0
        while True:
            grown = set(risky)
            for cell in risky:
                grown |= {n for n in adjacency.get(cell, ()) if n != SAFE_NODE}
            if grown == risky:
                break
            risky = grown
            steps += 1
        slot = max(slot, steps * risk.spread_period)
    return slot


def min_evac_time(prob: EvacuationProblem, horizon_cap: int = 10_000,
                  engine: str = "auto") -> tuple[int, FlowSolution]:
    """Smallest horizon evacuating everyone: doubling then binary search."""
    total = prob.total
    if total == 0:
        return 0, max_outflow(prob, 0, engine)[1]

    if prob.risk.empty:
        dist = exit_distances(prob.network)
        stranded = [i for i, y in prob.occupancy.items() if y > 0 and i not in dist]
        if stranded:
            raise Unevacuable(f"occupied cells cannot reach the exit: {stranded}")

    # by this horizon anyone who can evacuate at all has done so
    settle = (_risk_stabilization_slot(prob) + len(prob.network.nodes) + total + 1)

    tau = 1
    while True:
        value, sol = max_outflow(prob, tau, engine)
        if value >= total:
            break
        if tau >= settle:
            raise Unevacuable(f"outflow stalls at {value} of {total} evacuees")
        if tau > horizon_cap:
            raise HorizonCapExceeded(f"no full evacuation within {horizon_cap} slots")
        tau = min(tau * 2, max(settle, horizon_cap + 1))

    lo, hi = max(1, tau // 2), tau
    best = sol
    while lo < hi:
        mid = (lo + hi) // 2
        value, sol_mid = max_outflow(prob, mid, engine)
        if value >= total:
            hi = mid
            best = sol_mid
        else:
            lo = mid + 1
    return hi, best


def shortest_path_subgraph(net: StaticNetwork) -> StaticNetwork:
    """Arcs lying on some fewest-slot path to the safe place, so oriented."""
    dist = exit_distances(net)
    missing = [i for i in net.nodes if i not in dist]
    if missing:
        raise Unevacuable(f"cells cannot reach the exit: {missing}")
    kept = {
        (i, j): c
        for (i, j), c in net.arcs.items()
        if c > 0 and dist[i] == dist[j] + 1
    }
    return net.replace_arcs(kept)


@dataclass(frozen=True)
class EvacuationProfile:
    """Optimal cumulative evacuees per horizon, one solve per slot."""

    mode: str
    tau_star: int
    evacuees: tuple            # index t-1 -> optimum for horizon t
    cpu_seconds: tuple
    slot_seconds: float
    total: int

    def rows(self):
        for t, (e, cpu) in enumerate(zip(self.evacuees, self.cpu_seconds), start=1):
            yield t, e, cpu


def evacuation_profile(prob: EvacuationProblem, mode: str = "ideal",
                       engine: str = "auto",
                       horizon_cap: int = 10_000) -> EvacuationProfile:
    """Optimum evacuee counts for every horizon up to that mode's tau*."""
    if mode == "ideal":
        sub = prob
    elif mode == "shortest_path":
        sub = replace(prob, network=shortest_path_subgraph(prob.network))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    tau_star, _ = min_evac_time(sub, horizon_cap=horizon_cap, engine=engine)
    evacuees = []
    cpus = []
    for t in range(1, tau_star + 1):
        start = time.perf_counter()
        value, _ = max_outflow(sub, t, engine)
        evacuees.append(value)
        cpus.append(time.perf_counter() - start)
    return EvacuationProfile(
        mode=mode,
        tau_star=tau_star,
        evacuees=tuple(evacuees),
        cpu_seconds=tuple(cpus),
        slot_seconds=prob.network.slot_seconds,
        total=prob.total,
    )


def exit_width_sweep(plan: BuildingPlan, widths, cell_size: float,
                     params: NetworkParams = NetworkParams(),
                     total: int | None = None, seed: int | None = None,
                     congestion: CongestionCurve | None = None,
                     risk: RiskSchedule = NO_RISK,
                     horizon_cap: int = 10_000) -> list[tuple[float, float]]:
    """Minimum evacuation seconds as every exit door takes each width."""
    results = []
    for w in widths:
        if w <= 0:
            raise ValueError("exit widths must be positive")
        doors = tuple(
            replace(d, width=float(w)) if d.is_exit() else d for d in plan.doors
        )
        variant = replace(plan, doors=doors)
        prob = problem_from_plan(variant, cell_size, params=params, risk=risk,
                                 congestion=congestion, total=total, seed=seed)
        tau_star, _ = min_evac_time(prob, horizon_cap=horizon_cap)
        results.append((float(w), tau_star * prob.network.slot_seconds))
    return results


@dataclass(frozen=True)
class DecomposedRun:
    tau_star: int
    profile: tuple                 # cumulative evacuees, index = slot
    cpu_seconds: tuple             # per slot; each chunk's solve time is
                                   # charged to every slot it covers


def time_decomposed_solve(prob: EvacuationProblem, chunk: int,
                          horizon_cap: int = 10_000) -> DecomposedRun:
    """Greedy per-chunk re-solving, as when controllers alternate slots.

    Each step maximizes evacuees over the next `chunk` slots from the
    current occupancy (ties broken toward occupancy packed close to the
    exits, so progress never stalls needlessly), commits the movements,
    and advances.
    """
    if chunk < 1:
        raise ValueError("chunk must be at least one slot")
    if prob.total == 0:
        return DecomposedRun(0, (0.0,), (0.0,))
    if not prob.risk.empty:
        raise ValueError("time decomposition supports risk-free problems only")
    if prob.congestion is not None:
        raise ValueError("time decomposition runs congestion-free")

    # a chunk covering the whole run is exactly the continuous solve
    tau_cont, sol_cont = min_evac_time(prob, horizon_cap=horizon_cap)
    if chunk >= tau_cont:
        per_slot = (sol_cont.cpu_seconds / max(tau_cont, 1),) * (tau_cont + 1)
        return DecomposedRun(tau_cont, sol_cont.profile, per_slot)

    dist = exit_distances(prob.network)
    max_dist = max((dist.get(i, 0) for i in prob.occupancy), default=0)
    # exits dominate the tie-break term lexicographically
    big = float(max_dist * prob.total + 1)

    state = dict(prob.occupancy)
    evacuated = 0.0
    profile = [0.0]
    cpus = [0.0]
    slots_used = 0
    last_arrival = 0

    while evacuated < prob.total - 1e-9:
        if slots_used > horizon_cap:
            raise HorizonCapExceeded(f"decomposition passed {horizon_cap} slots")
        started = time.perf_counter()
        sub = EvacuationProblem(network=prob.network, occupancy=state)
        inst = build_mfp(sub, chunk)
        objective = {vid: big * coef for vid, coef in inst.objective.items()}
        for vid, lo, hi in inst.variables:
            if vid[0] == "y" and vid[2] == chunk and dist.get(vid[1]):
                objective[vid] = objective.get(vid, 0.0) - float(dist[vid[1]])
        sol = solve_lp(LPInstance(variables=inst.variables, rows=inst.rows,
                                  objective=objective, label=f"chunk@{slots_used}"))
        if sol.status != OPTIMAL:
            raise RuntimeError(f"chunk LP ended {sol.status}")
        chunk_cpu = time.perf_counter() - started

        moved = 0.0
        per_slot = [0.0] * chunk
        new_state = dict(state)
        for vid, val in sol.values.items():
            if vid[0] != "x" or val <= 1e-9:
                continue
            _, i, j, t = vid
            moved += val
            new_state[i] = new_state.get(i, 0) - val
            if j == SAFE_NODE:
                per_slot[t] += val
            else:
                new_state[j] = new_state.get(j, 0) + val
        if moved <= 1e-9:
            raise NonProgress(
                f"chunk from slot {slots_used} evacuated nobody and moved nobody"
            )
        for t in range(chunk):
            evacuated += per_slot[t]
            profile.append(evacuated)
            cpus.append(chunk_cpu)
            if per_slot[t] > 1e-9:
                last_arrival = slots_used + t + 1
        slots_used += chunk
        state = {i: int(round(v)) for i, v in new_state.items() if round(v) > 0}

    del profile[last_arrival + 1:]
    del cpus[last_arrival + 1:]
    return DecomposedRun(last_arrival, tuple(profile), tuple(cpus))


# ---------------------------------------------------------------------------
# congestion exchange transformation


def congestion_exchange(prob: EvacuationProblem, values: dict, cell: int,
                        t: int) -> dict | None:
    """Shift occupancy from the middle tier down to the first at (cell, t),
    compensating tier flows on the arcs this occupancy gates.

    Feasibility-preserving and objective-neutral; returns the adjusted
    variable assignment, or None when the move does not apply (first tier
    already full, or middle tier empty).
    """
    tiers = _tiered_cells(prob)
    if cell not in tiers:
        return None
    n1, _ = tiers[cell]
    u = values.get(("u", cell, t), 0.0)
    v = values.get(("v", cell, t), 0.0)
    if u >= n1 - 1e-9 or v <= 1e-9:
        return None
    delta = min(n1 - u, v)
    out = dict(values)
    out[("u", cell, t)] = u + delta
    out[("v", cell, t)] = v - delta

    curve = prob.congestion
    net = prob.network
    n = net.node_capacity[cell]
    # occupancy at t gates moves during (t+1, t+2]
    gated_slot = t + 1
    for (i, j), c in net.arcs.items():
        if j != cell:
            continue
        caps = curve.tier_caps(c)
        s1, _, _ = curve.slopes(c, n)
        f1 = out.get(("f1", i, j, gated_slot), 0.0)
        if f1 <= 0:
            continue
        bound1 = caps[0] - s1 * out[("u", cell, t)]
        if f1 > bound1 + 1e-12:
            shift = f1 - bound1
            out[("f1", i, j, gated_slot)] = f1 - shift
            out[("f2", i, j, gated_slot)] = out.get(("f2", i, j, gated_slot), 0.0) + shift
    return out
