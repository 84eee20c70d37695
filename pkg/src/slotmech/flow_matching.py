"""Max-weight b-matching of agents to slots as a min-cost flow.

Network layout (node ids)::

    0               source
    1 .. n          agents      source -> agent_i   cap b_i, cost 0
    n+1 .. n+m      slots       agent_i -> slot_j   cap 1,   cost -v_ij
    n+m+1           sink        slot_j -> sink      cap k,   cost 0

The solver is successive shortest paths with node potentials, so every
Dijkstra run sees non-negative reduced costs and all arithmetic stays in
integers.  Augmentation stops as soon as the cheapest source-sink path has
cost >= 0: a unit of zero value is never allocated.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .core import (
    Allocation,
    DivisibleInstance,
    Instance,
    SingleSlotInstance,
)

INF = float("inf")


class SolverError(AssertionError):
    """Raised when an internal optimality invariant is broken."""


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity: int
    cost: int


@dataclass(frozen=True)
class FlowNetwork:
    n_agents: int
    n_slots: int
    arcs: tuple[Arc, ...]

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.n_agents + self.n_slots + 1

    @property
    def n_nodes(self) -> int:
        return self.n_agents + self.n_slots + 2

    def agent_node(self, i: int) -> int:
        return 1 + i

    def slot_node(self, j: int) -> int:
        return 1 + self.n_agents + j

    def match_arc(self, i: int, j: int) -> int:
        """Index of the agent_i -> slot_j arc in ``arcs``."""
        return self.n_agents + i * self.n_slots + j


@dataclass(frozen=True)
class FlowResult:
    flow: tuple[int, ...]
    total_cost: int
    augmentations: int
    potentials: tuple[int, ...]


def build_network(instance: Instance) -> FlowNetwork:
    if isinstance(instance, SingleSlotInstance):
        supply = [1] * instance.n
    elif isinstance(instance, DivisibleInstance):
        supply = list(instance.lengths)
    else:
        raise TypeError(f"no flow model for {instance.kind} instances")
    n, m = instance.n, instance.m
    arcs = [Arc(0, 1 + i, supply[i], 0) for i in range(n)]
    for i in range(n):
        row = instance.values[i]
        for j in range(m):
            arcs.append(Arc(1 + i, 1 + n + j, 1, -row[j]))
    arcs += [Arc(1 + n + j, n + m + 1, instance.capacity, 0) for j in range(m)]
    return FlowNetwork(n, m, tuple(arcs))


class _Residual:
    """Adjacency-list residual graph; arc 2e is forward, 2e+1 its reverse."""

    def __init__(self, network: FlowNetwork, flow=None):
        self.net = network
        N = network.n_nodes
        self.adj = [[] for _ in range(N)]
        self.to = []
        self.cap = []
        self.cost = []
        for e, arc in enumerate(network.arcs):
            f = flow[e] if flow is not None else 0
            self.adj[arc.tail].append(2 * e)
            self.to.append(arc.head)
            self.cap.append(arc.capacity - f)
            self.cost.append(arc.cost)
            self.adj[arc.head].append(2 * e + 1)
            self.to.append(arc.tail)
            self.cap.append(f)
            self.cost.append(-arc.cost)
        self.removed = [False] * N

    def push(self, a: int, amount: int):
        self.cap[a] -= amount
        self.cap[a ^ 1] += amount

    def dijkstra(self, starts: dict, pot: list, stop_at=None):
        """Multi-source Dijkstra on reduced costs.

        ``starts`` maps node -> initial label.  Returns (labels, parent arcs,
        finalized nodes).  Stops once ``stop_at`` is finalized.
        """
        N = len(self.adj)
        dist = [INF] * N
        parent = [-1] * N
        done = [False] * N
        heap = []
        for v, d in starts.items():
            dist[v] = d
            heap.append((d, v))
        heapq.heapify(heap)
        to, cap, cost, adj, removed = self.to, self.cap, self.cost, self.adj, self.removed
        order = []
        while heap:
            d, u = heapq.heappop(heap)
            if done[u] or d > dist[u]:
                continue
            done[u] = True
            order.append(u)
            if u == stop_at:
                break
            pu = pot[u]
            for a in adj[u]:
                if cap[a] <= 0:
                    continue
                v = to[a]
                if done[v] or removed[v]:
                    continue
                rc = cost[a] + pu - pot[v]
                if rc < 0:
                    raise SolverError(f"negative reduced cost on arc {a >> 1}")
                nd = d + rc
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = a
                    heapq.heappush(heap, (nd, v))
        return dist, parent, order

    def flows(self) -> tuple[int, ...]:
        return tuple(self.cap[2 * e + 1] for e in range(len(self.net.arcs)))


def _initial_potentials(network: FlowNetwork) -> list[int]:
    # Shortest distances from the source in the (acyclic) empty-flow network.
    n, m = network.n_agents, network.n_slots
    pot = [0] * network.n_nodes
    for j in range(m):
        pot[network.slot_node(j)] = min(
            (network.arcs[network.match_arc(i, j)].cost for i in range(n)), default=0
        )
    pot[network.sink] = min((pot[network.slot_node(j)] for j in range(m)), default=0)
    return pot


def solve_max_weight_matching(network: FlowNetwork) -> FlowResult:
    res = _Residual(network)
    pot = _initial_potentials(network)
    s, t = network.source, network.sink
    total = 0
    augmentations = 0
    supply = sum(network.arcs[i].capacity for i in range(network.n_agents))
    while True:
        dist, parent, order = res.dijkstra({s: 0}, pot, stop_at=t)
        if dist[t] == INF:
            break
        path_cost = dist[t] + pot[t] - pot[s]
        if path_cost >= 0:
            break
        D = dist[t]
        for v in order:
            pot[v] += dist[v] - D
        push = INF
        v = t
        while v != s:
            a = parent[v]
            push = min(push, res.cap[a])
            v = res.to[a ^ 1]
        v = t
        while v != s:
            a = parent[v]
            res.push(a, push)
            v = res.to[a ^ 1]
        total += push * path_cost
        augmentations += 1
        if augmentations > supply:
            raise SolverError("augmentation count exceeded total supply")
    flow = res.flows()
    if any(f != int(f) or f < 0 for f in flow):
        raise SolverError("non-integral flow")
    return FlowResult(flow, total, augmentations, tuple(pot))


def extract_allocation(result: FlowResult, instance: Instance) -> Allocation:
    net_n, m = instance.n, instance.m
    held = [[] for _ in range(net_n)]
    for i in range(net_n):
        base = net_n + i * m
        for j in range(m):
            if result.flow[base + j] > 0:
                held[i].append(j)
    if instance.kind == "divisible":
        return Allocation("divisible", tuple(frozenset(h) for h in held))
    if any(len(h) > 1 for h in held):
        raise SolverError("single-slot agent matched to more than one slot")
    return Allocation("single", tuple(h[0] if h else None for h in held))


def cost_without_agent(network: FlowNetwork, result: FlowResult, agent: int) -> int:
    """Optimal total cost of ``network`` with ``agent`` deleted.

    Warm start from ``result``: dropping the agent's flow leaves a residual
    graph whose only possible negative cycles run through the slot->sink
    capacity it released.  Each such cycle is found as a shortest path that
    starts at the sink (rerouting an existing unit) or at the source (adding
    a new unit) and ends at a released slot.  Equivalent to re-solving from
    scratch, at the cost of one Dijkstra per released unit.
    """
    res = _Residual(network, result.flow)
    pot = list(result.potentials)
    s, t = network.source, network.sink
    u = network.agent_node(agent)
    freed = {}
    total = result.total_cost
    for j in range(network.n_slots):
        e = network.match_arc(agent, j)
        f = res.cap[2 * e + 1]
        if f:
            res.push(2 * e + 1, f)
            res.push(2 * agent + 1, f)  # source -> agent arc has index `agent`
            sj = network.slot_node(j)
            e_sink = network.n_agents + network.n_agents * network.n_slots + j
            res.push(2 * e_sink + 1, f)
            freed[sj] = freed.get(sj, 0) + f
            total -= f * network.arcs[e].cost
    res.removed[u] = True
    # Source and sink are path starts at actual distance 0; sealing them keeps
    # every found path a simple sink/source -> released-slot path.
    res.removed[s] = res.removed[t] = True
    while freed:
        starts = {t: -pot[t], s: -pot[s]}
        dist, parent, order = res.dijkstra(starts, pot)
        best = None
        for sj in sorted(freed):
            if dist[sj] == INF:
                continue
            c = dist[sj] + pot[sj]
            if best is None or c < best[0]:
                best = (c, sj)
        if best is None or best[0] >= 0:
            break
        c, sj = best
        D = dist[sj]
        for v in order:
            if dist[v] <= D:
                pot[v] += dist[v] - D
        v = sj
        while v not in (s, t):
            a = parent[v]
            res.push(a, 1)
            v = res.to[a ^ 1]
        e_sink = network.n_agents + network.n_agents * network.n_slots + (sj - network.n_agents - 1)
        res.push(2 * e_sink, 1)
        freed[sj] -= 1
        if not freed[sj]:
            del freed[sj]
        total += c
    return total
