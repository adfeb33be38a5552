"""Exact combinatorial solver for congestion-free max-outflow instances.

The time-expanded network becomes a plain max-flow problem: cells at each
slot are split into in/out nodes (hosting capacity), holdover arcs carry
people who stay put, and each bidirectional passage at each slot routes
through a small gadget whose throughput cap enforces the shared capacity
of the two directions.  People who cannot reach the safe place within the
horizon simply never leave the source.  A repair pass afterwards converts
the raw flow into per-slot movements whose implied occupancies respect
every cell capacity (flows stacked on top of stranded occupants are
truncated backward along their paths, which never changes the number of
evacuees).

Values agree with the LP relaxation of the same instance; the test suite
cross-checks this on randomized networks.
"""

from __future__ import annotations

from collections import deque

from .grid import SAFE_NODE, TimeExpandedNetwork


class _Dinic:
    def __init__(self, n_nodes: int):
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, cap: float) -> int:
        idx = len(self.to)
        self.adj[u].append(idx)
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(idx + 1)
        self.to.append(u)
        self.cap.append(0.0)
        return idx

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        n = len(self.adj)
        while True:
            level = [-1] * n
            level[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for e in self.adj[u]:
                    v = self.to[e]
                    if self.cap[e] > 1e-12 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * n
            while True:
                pushed = self._blocking_path(s, t, level, it)
                if pushed <= 1e-12:
                    break
                flow += pushed

    def _blocking_path(self, s: int, t: int, level, it) -> float:
        """One augmenting path in the level graph, found iteratively."""
        path: list[int] = []
        u = s
        while True:
            if u == t:
                pushed = min(self.cap[e] for e in path)
                for e in path:
                    self.cap[e] -= pushed
                    self.cap[e ^ 1] += pushed
                return pushed
            adj_u = self.adj[u]
            advanced = False
            while it[u] < len(adj_u):
                e = adj_u[it[u]]
                v = self.to[e]
                if self.cap[e] > 1e-12 and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                level[u] = -1
                if not path:
                    return 0.0
                e = path.pop()
                u = self.to[e ^ 1]
                it[u] += 1

    def edge_flow(self, idx: int) -> float:
        return self.cap[idx ^ 1]


def solve_max_outflow_flow(expanded: TimeExpandedNetwork, y0: dict[int, int]):
    """Max evacuees within the horizon, plus per-slot movements.

    Returns (value, flows) where flows maps (i, j, t) to whole persons
    moving i -> j during (t, t+1].
    """
    net = expanded.net
    tau = expanded.tau
    cells = [i for i in net.nodes if i != SAFE_NODE]
    n_cap = net.node_capacity

    node_id: dict = {}

    def nid(key):
        if key not in node_id:
            node_id[key] = len(node_id)
        return node_id[key]

    source, sink = nid("S"), nid("K")
    for t in range(tau + 1):
        for i in cells:
            nid(("in", i, t))
            nid(("out", i, t))

    # gadget nodes, one pair per live bidirectional passage per slot
    slot_pairs = []
    for t in range(tau):
        arcs = expanded.arcs_at(t)
        pairs: dict[tuple[int, int], list] = {}
        for (i, j), c in arcs.items():
            if j == SAFE_NODE:
                pairs[(i, SAFE_NODE)] = [c, False]
            else:
                key = (min(i, j), max(i, j))
                entry = pairs.setdefault(key, [c, False])
                entry[1] = entry[1] or ((j, i) in arcs)
        slot_pairs.append(pairs)
        for (i, j), (c, bidir) in pairs.items():
            if j != SAFE_NODE and bidir:
                nid(("gi", i, j, t))
                nid(("go", i, j, t))

    g = _Dinic(len(node_id))
    big = float(sum(y0.values()) + 1)

    for i in cells:
        supply = y0.get(i, 0)
        if supply:
            g.add_edge(source, nid(("in", i, 0)), float(supply))
    for t in range(tau + 1):
        for i in cells:
            g.add_edge(nid(("in", i, t)), nid(("out", i, t)), float(n_cap[i]))
            if t < tau:
                g.add_edge(nid(("out", i, t)), nid(("in", i, t + 1)), big)

    exit_edges: dict[tuple[int, int], int] = {}
    direct_edges: dict[tuple[int, int, int], int] = {}
    gadget_edges: dict[tuple[int, int, int], tuple[int, int, int, int]] = {}
    for t in range(tau):
        arcs = expanded.arcs_at(t)
        for (i, j), (c, bidir) in slot_pairs[t].items():
            if j == SAFE_NODE:
                exit_edges[(i, t)] = g.add_edge(nid(("out", i, t)), sink, float(c))
            elif bidir:
                gi, go = nid(("gi", i, j, t)), nid(("go", i, j, t))
                e_i = g.add_edge(nid(("out", i, t)), gi, float(c))
                e_j = g.add_edge(nid(("out", j, t)), gi, float(c))
                g.add_edge(gi, go, float(c))
                e_to_j = g.add_edge(go, nid(("in", j, t + 1)), float(c))
                e_to_i = g.add_edge(go, nid(("in", i, t + 1)), float(c))
                gadget_edges[(i, j, t)] = (e_i, e_j, e_to_j, e_to_i)
            else:
                src, dst = (i, j) if (i, j) in arcs else (j, i)
                direct_edges[(src, dst, t)] = g.add_edge(
                    nid(("out", src, t)), nid(("in", dst, t + 1)), float(c)
                )

    value = g.max_flow(source, sink)

    flows: dict[tuple[int, int, int], int] = {}
    for (i, t), e in exit_edges.items():
        f = round(g.edge_flow(e))
        if f:
            flows[(i, SAFE_NODE, t)] = f
    for (i, j, t), e in direct_edges.items():
        f = round(g.edge_flow(e))
        if f:
            flows[(i, j, t)] = f
    for (i, j, t), (e_i, e_j, e_to_j, e_to_i) in gadget_edges.items():
        a = round(g.edge_flow(e_i))       # leaving i into the passage
        q = round(g.edge_flow(e_to_i))    # arriving at i from the passage
        # through-gadget stays cancel; only the net crossing is a move
        if a > q:
            flows[(i, j, t)] = a - q
        elif q > a:
            flows[(j, i, t)] = q - a

    _repair_occupancy(flows, y0, n_cap, cells, tau)
    return int(round(value)), flows


def occupancy_series(flows, y0, cells, tau):
    """Per-slot occupancy of every cell implied by the movements."""
    y = {(i, 0): float(y0.get(i, 0)) for i in cells}
    incoming: dict[tuple[int, int], list] = {}
    outgoing: dict[tuple[int, int], list] = {}
    for (i, j, t), f in flows.items():
        outgoing.setdefault((i, t), []).append(f)
        if j != SAFE_NODE:
            incoming.setdefault((j, t), []).append(f)
    for t in range(1, tau + 1):
        for i in cells:
            y[(i, t)] = (
                y[(i, t - 1)]
                + sum(incoming.get((i, t - 1), ()))
                - sum(outgoing.get((i, t - 1), ()))
            )
    return y

def _repair_occupancy(flows, y0, n_cap, cells, tau):
    """Truncate moves that stack evacuee traffic on stranded occupants.

    If a cell's implied occupancy exceeds its capacity, one arriving unit is
    stopped a cell earlier and the surplus occupant takes over its onward
    route.  Evacuee counts are unaffected; the cascade runs backward along
    paths and terminates at origin cells.
    """
    for _ in range(10000):
        y = occupancy_series(flows, y0, cells, tau)
        violation = None
        for t in range(1, tau + 1):
            for i in cells:
                if y[(i, t)] > n_cap[i] + 1e-9:
                    violation = (i, t)
                    break
            if violation:
                break
        if violation is None:
            return
        i, t = violation
        arrivals = [(j, f) for (j, jj, tt), f in flows.items()
                    if jj == i and tt == t - 1 and f > 0]
        if not arrivals:
            raise AssertionError("occupancy violation without arrivals")
        j = min(a[0] for a in arrivals)
        key = (j, i, t - 1)
        flows[key] -= 1
        if flows[key] == 0:
            del flows[key]
    raise AssertionError("occupancy repair did not converge")
