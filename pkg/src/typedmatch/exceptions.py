"""Promoted favorites: each agent may lift one candidate to a strict top spot.

Agents of one type stop being interchangeable once favorites exist, but
only barely: what matters for stability is which type the best admirer of
an agent belongs to.  Grouping agents into subtypes by that admirer class
and bounding, per subtype, how bad a partner the subtype tolerates turns
the search into an enumeration of small bound maps; each surviving map is
checked with a perfect-matching computation.
"""
from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .core import (
    AgentMatching,
    ExceptionEntry,
    InstanceError,
    TypedInstance,
    TypeInfo,
    agent_key,
)
from .graphalg import SimpleGraph, max_matching
from .oracle import blocking_report

__all__ = [
    "ExWorst",
    "Subtype",
    "build_exception_graph",
    "compute_subtypes",
    "exception_model",
    "exworst_of_matching",
    "is_exception_stable",
    "preprocess_mutual",
    "solve_1top_max_smti",
]

MATCHED_TO_FAVORITE = 0


@dataclass(frozen=True)
class Subtype:
    """Agents of base type whose best admirers form the type class cls.

    cls is a tie group of the base type's list, or {k+1} for agents nobody
    promoted.
    """

    base: int
    cls: frozenset

    def sort_key(self):
        return (self.base, tuple(sorted(self.cls)))

    def __repr__(self):
        inner = " ".join(str(t) for t in sorted(self.cls))
        return f"{self.base}[{inner}]"


class ExWorst:
    """Per-subtype floor on partner quality.

    Values are type ids, k+1 for "may stay unmatched", or 0 for "every
    member ends up with their own promoted favorite".
    """

    __slots__ = ("_map",)

    def __init__(self, entries):
        self._map = dict(entries)

    def value(self, subtype: Subtype) -> int:
        return self._map[subtype]

    def get(self, subtype: Subtype):
        return self._map.get(subtype)

    def items(self):
        return sorted(self._map.items(), key=lambda kv: kv[0].sort_key())

    def validate(self, inst: TypedInstance) -> None:
        unmatched = inst.k + 1
        for st, v in self._map.items():
            if v in (MATCHED_TO_FAVORITE, unmatched):
                continue
            if not inst.pref(st.base).accepts(v):
                raise InstanceError(
                    f"floor {v} for subtype {st!r} is not acceptable to type {st.base}")

    def __eq__(self, other):
        return isinstance(other, ExWorst) and self._map == other._map

    def __hash__(self):
        return hash(tuple(self.items()))

    def __repr__(self):
        inner = ", ".join(f"{st!r}: {v}" for st, v in self.items())
        return f"ExWorst({{{inner}}})"


def exception_model(inst: TypedInstance):
    """(max favorites per agent, placement style) or None without any.

    Style is "top" or "bottom" when every placement agrees, else "any".
    """
    if not inst.exceptions:
        return None
    per = Counter(e.agent for e in inst.exceptions)
    styles = {e.placement[0] for e in inst.exceptions}
    if styles == {"top"}:
        style = "top"
    elif styles == {"bottom"}:
        style = "bottom"
    else:
        style = "any"
    return (max(per.values()), style)


def _plain(inst: TypedInstance) -> None:
    if inst.dummy_type is not None:
        raise InstanceError("exception machinery works on the un-normalized instance")


def _ext_map(inst: TypedInstance) -> dict[str, str]:
    return {e.agent: e.candidate for e in inst.exceptions}


def _require_1top(inst: TypedInstance) -> None:
    _plain(inst)
    if inst.problem_kind != "smti":
        raise InstanceError("the promoted-favorite solver covers two-sided "
                            "one-to-one instances only")
    if inst.refinements:
        raise InstanceError("promoted favorites and refined within-type orders "
                            "cannot be combined")
    seen = set()
    for e in inst.exceptions:
        if e.agent in seen:
            raise InstanceError(f"agent {e.agent} promotes more than one candidate")
        seen.add(e.agent)
        if e.placement != ("top",):
            raise InstanceError(
                f"agent {e.agent} places a favorite at {e.placement[0]}; only "
                "top placement is solvable")


def _no_mutuals(inst: TypedInstance) -> None:
    ext = _ext_map(inst)
    for a, b in ext.items():
        if ext.get(b) == a:
            raise InstanceError(f"mutual favorites {a}<->{b}; reduce them away first")


def _rank_of(inst: TypedInstance, tid: int) -> dict[int, int]:
    """Comparable rank for every floor value type tid can carry."""
    r = {MATCHED_TO_FAVORITE: -1}
    for gi, g in enumerate(inst.pref(tid).groups):
        for t in g:
            r[t] = gi
    r[inst.k + 1] = len(inst.pref(tid).groups)
    return r


# -- mutual-pair reduction ------------------------------------------------


def _reduce_mutual(inst: TypedInstance):
    """(reduced instance, forced pairs, reduced id -> original id)."""
    ext = _ext_map(inst)
    removed = set()
    forced = set()
    for a, b in ext.items():
        if ext.get(b) == a:
            forced.add(tuple(sorted((a, b), key=agent_key)))
            removed.update((a, b))
    if not removed:
        return inst, (), {a: a for a in inst.agents()}
    back: dict[str, str] = {}
    new_types = []
    for tid in inst.real_type_ids:
        info = inst.info(tid)
        survivors = [a for a in inst.type_agents(tid) if a not in removed]
        for idx, old in enumerate(survivors, start=1):
            back[f"{tid}.{idx}"] = old
        new_types.append(TypeInfo(info.side, len(survivors), info.pref, info.capacity))
    fwd = {old: new for new, old in back.items()}
    new_exc = tuple(ExceptionEntry(fwd[a], fwd[b], e.placement)
                    for e in inst.exceptions
                    for a, b in ((e.agent, e.candidate),)
                    if a in fwd and b in fwd)
    reduced = TypedInstance(inst.problem_kind, new_types, exceptions=new_exc,
                            flags=inst.flags, comments=inst.comments)
    ordered = sorted(forced, key=lambda p: (agent_key(p[0]), agent_key(p[1])))
    return reduced, tuple(ordered), back


def preprocess_mutual(inst: TypedInstance):
    """Split off pairs who promoted each other.

    Such a pair sits at the top of both lists, so every stable matching
    contains it; returns the instance without those agents plus the pairs
    to splice back into any answer.
    """
    _require_1top(inst)
    reduced, forced, _ = _reduce_mutual(inst)
    return reduced, forced


# -- subtypes -------------------------------------------------------------


def compute_subtypes(inst: TypedInstance) -> dict[str, Subtype]:
    """Best-admirer class of every agent.

    An admirer whose type the agent's own type does not rank is ignored:
    the two can neither match nor block, so the promotion is inert.
    Mutual favorites must have been reduced away.
    """
    _plain(inst)
    _no_mutuals(inst)
    admirers: dict[str, list[str]] = {}
    for e in inst.exceptions:
        admirers.setdefault(e.candidate, []).append(e.agent)
    unmatched = inst.k + 1
    out: dict[str, Subtype] = {}
    for tid in inst.real_type_ids:
        pref = inst.pref(tid)
        cls_at = {gi: frozenset(g) for gi, g in enumerate(pref.groups)}
        rank = {t: gi for gi, g in enumerate(pref.groups) for t in g}
        for a in inst.type_agents(tid):
            ranked = [rank[inst.agent_type(b)] for b in admirers.get(a, ())
                      if inst.agent_type(b) in rank]
            if not ranked:
                out[a] = Subtype(tid, frozenset((unmatched,)))
            else:
                out[a] = Subtype(tid, cls_at[min(ranked)])
    return out


def _members_by_subtype(assignment: dict[str, Subtype]) -> dict[Subtype, list[str]]:
    out: dict[Subtype, list[str]] = {}
    for a in sorted(assignment, key=agent_key):
        out.setdefault(assignment[a], []).append(a)
    return out


def exworst_of_matching(inst: TypedInstance, matching: AgentMatching,
                        assignment: dict[str, Subtype] | None = None) -> ExWorst:
    """The floor map a concrete matching achieves.

    Members matched to their own favorite do not count; if a whole subtype
    is, its floor is 0.  Ties between equally bad partner types resolve to
    the lowest type id.
    """
    if assignment is None:
        assignment = compute_subtypes(inst)
    ext = _ext_map(inst)
    unmatched = inst.k + 1
    entries = {}
    for st, members in _members_by_subtype(assignment).items():
        rank = _rank_of(inst, st.base)
        got: list[int] = []
        for a in members:
            p = matching.partner(a)
            if p is not None and ext.get(a) == p:
                continue
            got.append(unmatched if p is None else inst.agent_type(p))
        if not got:
            entries[st] = MATCHED_TO_FAVORITE
        else:
            low = max(rank[t] for t in got)
            entries[st] = min(t for t in got if rank[t] == low)
    return ExWorst(entries)


# -- stability of a floor map ---------------------------------------------


def is_exception_stable(inst: TypedInstance, worstmaps: ExWorst) -> bool:
    """Can some matching honoring these floors be stable?

    Checks the two type-level conditions: no pair of types mutually beating
    each other's worst floor, and no type beating the floor of the subtype
    its own class admires.
    """
    _plain(inst)
    worstmaps.validate(inst)
    ranks = {i: _rank_of(inst, i) for i in inst.real_type_ids}
    worst_rank: dict[int, int] = {}
    for st, v in worstmaps.items():
        r = ranks[st.base][v]
        worst_rank[st.base] = max(worst_rank.get(st.base, -1), r)
    for i, j in itertools.permutations(inst.real_type_ids, 2):
        ri, rj = ranks[i], ranks[j]
        if i in worst_rank and j in worst_rank:
            if (j in ri and ri[j] < worst_rank[i]
                    and i in rj and rj[i] < worst_rank[j]):
                return False
        if i in rj:
            cls = next(frozenset(g) for g in inst.pref(j).groups if i in g)
            floor = worstmaps.get(Subtype(j, cls))
            if floor is not None and rj[i] < rj[floor]:
                return False
    return True


# -- the perfect-matching decision ----------------------------------------


def build_exception_graph(inst: TypedInstance, exworst: ExWorst, c: int) -> SimpleGraph:
    """Graph whose perfect matchings are the stable matchings of size >= c
    honoring the floors.

    Agents plus n-2c interchangeable dummy vertices; an agent touches the
    dummies only when its subtype's floor allows staying unmatched.
    """
    _plain(inst)
    exworst.validate(inst)
    if not 0 <= c <= inst.n // 2:
        raise InstanceError(f"target size {c} outside 0..{inst.n // 2}")
    return _graph(inst, exworst, c, compute_subtypes(inst))


def _graph(inst: TypedInstance, exworst: ExWorst, c: int,
           assignment: dict[str, Subtype]) -> SimpleGraph:
    _no_mutuals(inst)
    ext = _ext_map(inst)
    unmatched = inst.k + 1
    ranks = {i: _rank_of(inst, i) for i in inst.real_type_ids}
    g = SimpleGraph()
    men = [a for a in inst.agents() if inst.side(inst.agent_type(a)) == "m"]
    women = [a for a in inst.agents() if inst.side(inst.agent_type(a)) == "w"]
    for v in inst.agents():
        g.add_vertex(v)
    for x in men:
        a = inst.agent_type(x)
        for y in women:
            b = inst.agent_type(y)
            x_likes = inst.pref(a).accepts(b) or ext.get(x) == y
            y_likes = inst.pref(b).accepts(a) or ext.get(y) == x
            if not (x_likes and y_likes):
                continue
            sx, sy = assignment[x], assignment[y]
            if ext.get(x) == y:
                ok = a in sy.cls and exworst.value(sy) in sy.cls
            elif ext.get(y) == x:
                ok = b in sx.cls and exworst.value(sx) in sx.cls
            else:
                ok = (ranks[a][b] <= ranks[a][exworst.value(sx)]
                      and ranks[b][a] <= ranks[b][exworst.value(sy)])
            if ok:
                g.add_edge(x, y)
    dummies = [("dummy", i) for i in range(inst.n - 2 * c)]
    for d in dummies:
        g.add_vertex(d)
    for d1, d2 in itertools.combinations(dummies, 2):
        g.add_edge(d1, d2)
    for v in inst.agents():
        if exworst.value(assignment[v]) == unmatched:
            for d in dummies:
                g.add_edge(v, d)
    return g


def _perfect_pairs(inst: TypedInstance, g: SimpleGraph):
    """Agent pairs of a perfect matching of g, or None."""
    mm = max_matching(g)
    if 2 * len(mm) != len(g.vertices):
        return None
    return [tuple(sorted(e, key=agent_key)) for e in mm
            if all(isinstance(v, str) for v in e)]


def _max_floor_matching(inst, assignment, worstmaps):
    """(size, pairs) of the largest matching honoring the floors, or None."""
    best = _perfect_pairs(inst, _graph(inst, worstmaps, 0, assignment))
    if best is None:
        return None
    lo, hi = 0, inst.n // 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        got = _perfect_pairs(inst, _graph(inst, worstmaps, mid, assignment))
        if got is None:
            hi = mid - 1
        else:
            lo, best = mid, got
    return len(best), best


# -- the solver -----------------------------------------------------------


def solve_1top_max_smti(inst: TypedInstance, jobs: int | None = None):
    """(size, matching) with the most pairs among stable matchings.

    Never reports unsolvable: with floors allowing everyone to stay
    unmatched relaxed per subtype, some floor map always survives.
    """
    _require_1top(inst)
    reduced, forced, back = _reduce_mutual(inst)
    if reduced.n == 0:
        return _finish(inst, forced, [], back)
    assignment = compute_subtypes(reduced)
    members = _members_by_subtype(assignment)
    ext = _ext_map(reduced)
    unmatched = reduced.k + 1
    domain = sorted(members, key=Subtype.sort_key)
    choices = []
    for st in domain:
        vals = []
        if all(a in ext for a in members[st]):
            vals.append(MATCHED_TO_FAVORITE)
        vals.extend(min(g) for g in reduced.pref(st.base).groups)
        vals.append(unmatched)
        choices.append(vals)
    stable_maps = []
    for combo in itertools.product(*choices):
        wm = ExWorst(zip(domain, combo))
        if is_exception_stable(reduced, wm):
            stable_maps.append(wm)
    assert stable_maps, "a floor map must survive for a two-sided instance"

    def evaluate(wm):
        return _max_floor_matching(reduced, assignment, wm)

    cap = reduced.n // 2
    best = None
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, stable_maps))
    else:
        results = map(evaluate, stable_maps)
    for res in results:
        if res is not None and (best is None or res[0] > best[0]):
            best = res
            if best[0] == cap:
                break
    assert best is not None, "every floor map became infeasible"
    return _finish(inst, forced, best[1], back)


def _finish(inst, forced, reduced_pairs, back):
    pairs = list(forced) + [(back[a], back[b]) for a, b in reduced_pairs]
    matching = AgentMatching(inst, pairs)
    report = blocking_report(inst, matching)
    if not report.stable:
        raise RuntimeError("floor search produced an unstable matching")
    return matching.size, matching
