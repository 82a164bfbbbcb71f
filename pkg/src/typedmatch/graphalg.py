"""Small-graph workhorses: integral max-flow with a checked min-cut
certificate, and maximum matching on general graphs.

The flow solver is shortest-augmenting-path (BFS) and verifies the
max-flow/min-cut certificate on every call.  General matching wraps the
blossom implementation from networkx; an exhaustive matcher doubles as its
oracle on small graphs.
"""

from __future__ import annotations

from collections import deque

import networkx as nx


class FlowNetwork:
    """Directed network with integer capacities; s has no in-arcs and t no
    out-arcs.  Repeated add_arc calls accumulate capacity."""

    def __init__(self, source="s", sink="t"):
        self.source = source
        self.sink = sink
        self.cap: dict[tuple, int] = {}
        self.vertices: set = {source, sink}

    def add_arc(self, u, v, capacity: int):
        if capacity < 0:
            raise ValueError(f"arc {u}->{v}: negative capacity")
        if u == v:
            raise ValueError(f"arc {u}->{u}: self-loop")
        if v == self.source:
            raise ValueError(f"arc into the source {u}->{v}")
        if u == self.sink:
            raise ValueError(f"arc out of the sink {u}->{v}")
        self.vertices.add(u)
        self.vertices.add(v)
        self.cap[(u, v)] = self.cap.get((u, v), 0) + capacity

    def arcs(self):
        return tuple(sorted(self.cap, key=repr))


def max_flow(net: FlowNetwork):
    """(value, flow dict per arc); integral, certified by a residual min cut.

    The certificate check runs on every call: the residual-unreachable cut's
    capacity must equal the flow value, and conservation must hold at every
    internal vertex.
    """
    residual: dict[tuple, int] = dict(net.cap)
    for (u, v) in net.cap:
        residual.setdefault((v, u), 0)
    adj: dict[object, list] = {x: [] for x in net.vertices}
    for (u, v) in residual:
        adj[u].append(v)
    for u in adj:
        adj[u].sort(key=repr)

    s, t = net.source, net.sink
    value = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and residual[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            break
        bottleneck = None
        v = t
        while parent[v] is not None:
            u = parent[v]
            r = residual[(u, v)]
            bottleneck = r if bottleneck is None else min(bottleneck, r)
            v = u
        v = t
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= bottleneck
            residual[(v, u)] += bottleneck
            v = u
        value += bottleneck

    flow = {}
    for (u, v), c in net.cap.items():
        f = c - residual[(u, v)]
        # opposing arcs share residual bookkeeping; clamp to the real send
        flow[(u, v)] = max(0, f)

    _check_certificate(net, flow, value, residual)
    return value, flow


def _check_certificate(net, flow, value, residual):
    s, t = net.source, net.sink
    # conservation and capacity
    balance: dict[object, int] = {x: 0 for x in net.vertices}
    for (u, v), f in flow.items():
        if not 0 <= f <= net.cap[(u, v)]:
            raise RuntimeError(f"flow on {u}->{v} violates capacity")
        balance[u] -= f
        balance[v] += f
    for x in net.vertices:
        if x not in (s, t) and balance[x] != 0:
            raise RuntimeError(f"flow not conserved at {x!r}")
    if balance[t] != value or balance[s] != -value:
        raise RuntimeError("flow value inconsistent with net balance")
    # min-cut certificate: vertices residual-reachable from s
    reach = {s}
    queue = deque([s])
    adj: dict[object, list] = {x: [] for x in net.vertices}
    for (u, v), r in residual.items():
        if r > 0:
            adj[u].append(v)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in reach:
                reach.add(v)
                queue.append(v)
    if t in reach:
        raise RuntimeError("augmenting path missed; flow not maximum")
    cut = sum(c for (u, v), c in net.cap.items() if u in reach and v not in reach)
    if cut != value:
        raise RuntimeError(f"min-cut certificate failed: cut {cut} != flow {value}")


def min_cut_partition(net: FlowNetwork):
    """(value, source-side vertex set) for reporting; recomputes the flow."""
    value, flow = max_flow(net)
    residual = dict(net.cap)
    for (u, v) in net.cap:
        residual.setdefault((v, u), 0)
    for (u, v), f in flow.items():
        residual[(u, v)] -= f
        residual[(v, u)] += f
    reach = {net.source}
    queue = deque([net.source])
    while queue:
        u = queue.popleft()
        for (a, b), r in residual.items():
            if a == u and r > 0 and b not in reach:
                reach.add(b)
                queue.append(b)
    return value, reach


class SimpleGraph:
    """Undirected graph without self-loops or parallel edges."""

    def __init__(self):
        self.vertices: set = set()
        self.edges: set[frozenset] = set()

    def add_vertex(self, v):
        self.vertices.add(v)

    def add_edge(self, u, v):
        if u == v:
            raise ValueError(f"self-loop at {u!r}")
        self.vertices.add(u)
        self.vertices.add(v)
        self.edges.add(frozenset((u, v)))

    def neighbors(self, u):
        return sorted((next(iter(e - {u})) for e in self.edges if u in e), key=repr)


def max_matching(g: SimpleGraph) -> set[frozenset]:
    """Maximum-cardinality matching via the blossom algorithm."""
    ng = nx.Graph()
    ng.add_nodes_from(sorted(g.vertices, key=repr))
    ng.add_edges_from(sorted((tuple(sorted(e, key=repr)) for e in g.edges), key=repr))
    matched = nx.algorithms.matching.max_weight_matching(ng, maxcardinality=True)
    return {frozenset(e) for e in matched}


def exhaustive_max_matching(g: SimpleGraph) -> set[frozenset]:
    """Reference matcher by edge DFS; refuses graphs over 12 vertices."""
    if len(g.vertices) > 12:
        raise ValueError("exhaustive matching capped at 12 vertices")
    edges = sorted((tuple(sorted(e, key=repr)) for e in g.edges), key=repr)
    best: list[frozenset] = []

    def rec(i, used, chosen):
        nonlocal best
        if len(chosen) + (len(edges) - i) <= len(best):
            return  # even taking every remaining edge cannot beat best
        if i == len(edges):
            if len(chosen) > len(best):
                best = list(chosen)
            return
        u, v = edges[i]
        if u not in used and v not in used:
            used.add(u)
            used.add(v)
            chosen.append(frozenset((u, v)))
            rec(i + 1, used, chosen)
            chosen.pop()
            used.discard(u)
            used.discard(v)
        rec(i + 1, used, chosen)

    rec(0, set(), [])
    return set(best)


def has_perfect_matching(g: SimpleGraph) -> bool:
    return len(g.vertices) % 2 == 0 and \
        2 * len(max_matching(g)) == len(g.vertices)
