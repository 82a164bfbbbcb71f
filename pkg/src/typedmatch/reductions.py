"""Clique questions recast as complete-stable-matching questions.

The constructed instances need only six types regardless of graph size;
all the graph structure rides in per-edge-man promoted candidates.  Used
as a fixture factory and as a correctness check for the complete-matching
oracle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import (
    ExceptionEntry,
    InstanceError,
    TypedInstance,
    TypeInfo,
    TypePreference,
)
from .oracle import OracleCapError, com_stable_exists_brute

__all__ = [
    "UndirectedGraph",
    "clique_to_com_smti",
    "has_clique",
    "parse_graph",
    "verify_reduction",
]

VERIFY_VERTEX_CAP = 6


@dataclass(frozen=True)
class UndirectedGraph:
    """Simple graph on vertices 0..n-1 with a canonical edge tuple."""

    n: int
    edges: tuple

    def __post_init__(self):
        if self.n < 0:
            raise InstanceError("negative vertex count")
        seen = set()
        canon = []
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InstanceError(f"edge ({u},{v}) outside 0..{self.n - 1}")
            if u == v:
                raise InstanceError(f"self-loop at vertex {u}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise InstanceError(f"duplicate edge ({u},{v})")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def m(self) -> int:
        return len(self.edges)


def parse_graph(text: str) -> UndirectedGraph:
    """First line `n m`, then one `u v` line per edge, 0-indexed."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InstanceError("expected two integers", lineno)
        try:
            rows.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InstanceError(f"bad integer in {line!r}", lineno)
    if not rows:
        raise InstanceError("empty graph file")
    n, m = rows[0]
    if m != len(rows) - 1:
        raise InstanceError(f"header promises {m} edges, file has {len(rows) - 1}")
    return UndirectedGraph(n, tuple(rows[1:]))


def has_clique(graph: UndirectedGraph, r: int) -> bool:
    """Exhaustive search for r mutually adjacent vertices."""
    if r <= 1:
        return r <= graph.n
    if r > graph.n:
        return False
    edges = set(graph.edges)
    return any(all(pair in edges for pair in itertools.combinations(group, 2))
               for group in itertools.combinations(range(graph.n), r))


_TYPE_PREFS = {1: [[6], [5], [4]], 2: [[4]], 3: [[4]],
               4: [[2], [1], [3]], 5: [[1]], 6: [[1]]}
_SIDES = {1: "m", 2: "m", 3: "m", 4: "w", 5: "w", 6: "w"}


def clique_to_com_smti(graph: UndirectedGraph, r: int) -> TypedInstance:
    """Instance with a complete stable matching iff the graph has an r-clique.

    Six types: edge-men, r clique-men, the leftover men, vertex-women, the
    C(r,2) clique-edge women, and the leftover women.  Each edge-man slots
    his edge's two vertex-women into a tie between his first two type
    groups.  When the graph has too few edges for any r-clique, a flagged
    one-man instance with nobody mutually acceptable stands in.
    """
    if r < 0 or r > graph.n:
        raise InstanceError(f"clique size {r} outside 0..{graph.n}")
    need = math.comb(r, 2)
    if graph.m < need:
        return TypedInstance("smti", [
            TypeInfo("m", 1, TypePreference([[2]])),
            TypeInfo("w", 0, TypePreference([[1]])),
        ], flags=("trivial-no",), comments=(
            f"only {graph.m} edges, an r-clique needs {need}: no complete "
            "stable matching by construction",))
    counts = {1: graph.m, 2: r, 3: graph.n - r, 4: graph.n,
              5: need, 6: graph.m - need}
    types = [TypeInfo(_SIDES[t], counts[t], TypePreference(_TYPE_PREFS[t]))
             for t in range(1, 7)]
    exceptions = []
    comments = [f"clique size {r} on {graph.n} vertices, {graph.m} edges"]
    for i in range(graph.n):
        comments.append(f"vertex {i} -> 4.{i + 1}")
    for i, (u, v) in enumerate(graph.edges, start=1):
        comments.append(f"edge {i - 1} ({u},{v}) -> 1.{i}")
        for w in (u, v):
            exceptions.append(
                ExceptionEntry(f"1.{i}", f"4.{w + 1}", ("tie_between", 6, 5)))
    return TypedInstance("smti", types, exceptions=exceptions,
                         comments=tuple(comments))


def verify_reduction(graph: UndirectedGraph, r: int) -> bool:
    """Do the clique answer and the gadget's complete-matching answer agree?"""
    if graph.n > VERIFY_VERTEX_CAP:
        raise OracleCapError(
            f"verification enumerates matchings; {graph.n} vertices is past "
            f"the cap of {VERIFY_VERTEX_CAP}")
    want = has_clique(graph, r)
    got, _ = com_stable_exists_brute(clique_to_com_smti(graph, r))
    return want == got
