"""Brute-force ground truth for small instances.

Everything here works at agent level on fully expanded preference lists and
makes no use of the type structure beyond expansion, so the polynomial
solvers can be cross-validated against it.  Instance sizes are capped; set
STM_ORACLE_CAP to raise the cap knowingly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .core import (AgentMatching, InstanceError, TypedInstance, agent_key,
                   expand_to_agent_level, rank_table,
                   _equivalence_components)

DEFAULT_CAP_ONESIDED = 10
DEFAULT_CAP_BIPARTITE = 12

INF = float("inf")


class OracleCapError(RuntimeError):
    """Instance too large for exhaustive enumeration."""


def oracle_cap(inst: TypedInstance) -> int:
    env = os.environ.get("STM_ORACLE_CAP")
    if env:
        return int(env)
    return DEFAULT_CAP_ONESIDED if inst.problem_kind == "srti" else DEFAULT_CAP_BIPARTITE


@dataclass(frozen=True)
class BlockingReport:
    """Agent-level blocking events of one matching.

    Event shapes: ("pair", a, b) for one-to-one problems, ("single", r, h),
    ("couple_one", cid, slot, h) and ("couple_both", cid, h1, h2) for
    hospital problems.
    """

    events: tuple

    @property
    def count(self) -> int:
        return len(self.events)

    @property
    def stable(self) -> bool:
        return not self.events

    def blocking_agents(self) -> frozenset:
        """Agents appearing in at least one pairwise blocking event."""
        out = set()
        for ev in self.events:
            if ev[0] != "pair":
                raise InstanceError("blocking agents are defined for one-to-one problems")
            out.update(ev[1:])
        return frozenset(out)


def couple_rank(ct, p: int, q: int) -> int | None:
    """Tie-group index of the ordered hospital-type pair (p, q) in the
    couple's joint list, None when unacceptable."""
    for gi, grp in enumerate(ct.pref):
        if (p, q) in grp:
            return gi
    return None


def _mutual(acc_sets, a, b) -> bool:
    return b in acc_sets.get(a, ()) and a in acc_sets.get(b, ())


def _acc_sets(expanded):
    return {a: frozenset(x for g in gs for x in g) for a, gs in expanded.items()}


def blocking_report(inst: TypedInstance, matching: AgentMatching) -> BlockingReport:
    expanded = expand_to_agent_level(inst)
    ranks = rank_table(expanded)
    acc = _acc_sets(expanded)
    if inst.problem_kind in ("smti", "srti"):
        events = _blocking_one_to_one(inst, matching, ranks, acc)
    else:
        events = _blocking_hospitals(inst, matching, ranks, acc)
    return BlockingReport(tuple(sorted(events)))


def _cur_rank(ranks, matching, a) -> float:
    p = matching.partner(a)
    return INF if p is None else ranks[a][p]


def _blocking_one_to_one(inst, matching, ranks, acc):
    events = []
    agents = sorted(inst.agents(), key=agent_key)
    for i, a in enumerate(agents):
        ra = _cur_rank(ranks, matching, a)
        for b in agents[i + 1:]:
            if not _mutual(acc, a, b) or matching.partner(a) == b:
                continue
            if ranks[a][b] < ra and ranks[b][a] < _cur_rank(ranks, matching, b):
                events.append(("pair", a, b))
    return events


def _hospital_room(inst, matching, h) -> int:
    return inst.agent_capacity(h) - len(matching.assignees(h))


def _prefers_over_some(ranks, h, r, victims) -> bool:
    rr = ranks[h][r]
    return any(ranks[h][v] > rr for v in victims)


def _blocking_hospitals(inst, matching, ranks, acc):
    events = []
    hospitals = [h for t in inst.real_type_ids if inst.side(t) == "h"
                 for h in inst.type_agents(t)]
    singles = [r for t in inst.real_type_ids if inst.side(t) == "r"
               for r in inst.type_agents(t)]
    for r in singles:
        rr = _cur_rank(ranks, matching, r)
        for h in hospitals:
            if not _mutual(acc, r, h) or h in matching.assignees(r):
                continue
            if ranks[r][h] >= rr:
                continue
            if _hospital_room(inst, matching, h) > 0 or \
                    _prefers_over_some(ranks, h, r, matching.assignees(h)):
                events.append(("single", r, h))
    for (cid, m1, m2, ct) in inst.couple_rows():
        events.extend(_blocking_couple(inst, matching, ranks, acc,
                                       cid, m1, m2, ct, hospitals))
    return events


def _blocking_couple(inst, matching, ranks, acc, cid, m1, m2, ct, hospitals):
    events = []
    h1, h2 = matching.partner(m1), matching.partner(m2)
    cur = couple_rank(ct, inst.agent_type(h1), inst.agent_type(h2)) \
        if h1 is not None else INF
    if h1 is not None:
        # move one member, keep the other in place
        for slot, (mov, stay, stay_h) in (((1), (m1, m2, h2)), ((2), (m2, m1, h1))):
            for h in hospitals:
                if mov not in acc.get(h, ()):
                    continue
                tp = inst.agent_type(h)
                joint = couple_rank(ct, tp, inst.agent_type(stay_h)) if slot == 1 \
                    else couple_rank(ct, inst.agent_type(stay_h), tp)
                if joint is None or joint >= cur:
                    continue
                victims = [v for v in matching.assignees(h) if v != stay]
                if _hospital_room(inst, matching, h) > 0 or \
                        _prefers_over_some(ranks, h, mov, victims):
                    events.append(("couple_one", cid, slot, h))
    # move both members
    for ha in hospitals:
        if ha == h1 or m1 not in acc.get(ha, ()):
            continue
        for hb in hospitals:
            if hb == h2 or m2 not in acc.get(hb, ()):
                continue
            joint = couple_rank(ct, inst.agent_type(ha), inst.agent_type(hb))
            if joint is None or joint >= cur:
                continue
            if ha != hb:
                ok_a = _hospital_room(inst, matching, ha) > 0 or \
                    _prefers_over_some(ranks, ha, m1, matching.assignees(ha))
                ok_b = _hospital_room(inst, matching, hb) > 0 or \
                    _prefers_over_some(ranks, hb, m2, matching.assignees(hb))
                ok = ok_a and ok_b
            else:
                room = _hospital_room(inst, matching, ha)
                assignees = matching.assignees(ha)
                if room >= 2:
                    ok = True
                elif room == 1:
                    ok = _prefers_over_some(ranks, ha, m1, assignees) or \
                        _prefers_over_some(ranks, ha, m2, assignees)
                else:
                    ok = any(ranks[ha][m1] < ranks[ha][s] and
                             any(t != s and ranks[ha][m2] < ranks[ha][t]
                                 for t in assignees)
                             for s in assignees)
            if ok:
                events.append(("couple_both", cid, ha, hb))
    return events


# -- enumeration ----------------------------------------------------------


def enumerate_matchings(inst: TypedInstance):
    """Yield every matching over mutually acceptable pairs, each exactly once.

    Couples are placed jointly or not at all.  Deterministic order: agents
    are processed in canonical order, staying unmatched before matching, and
    candidates are tried in canonical order.
    """
    cap = oracle_cap(inst)
    if inst.n > cap:
        raise OracleCapError(
            f"{inst.n} agents exceeds the enumeration cap {cap}; "
            "set STM_ORACLE_CAP to override")
    expanded = expand_to_agent_level(inst)
    acc = _acc_sets(expanded)
    if inst.problem_kind == "srti":
        yield from _enum_one_sided(inst, acc)
    else:
        yield from _enum_two_sided(inst, acc)


def _enum_one_sided(inst, acc):
    agents = sorted(inst.agents(), key=agent_key)
    n = len(agents)
    matched: set[str] = set()
    pairs: list[tuple[str, str]] = []

    def rec(i):
        while i < n and agents[i] in matched:
            i += 1
        if i == n:
            yield AgentMatching(inst, list(pairs))
            return
        a = agents[i]
        yield from rec(i + 1)
        for b in agents[i + 1:]:
            if b in matched or not _mutual(acc, a, b):
                continue
            matched.add(a)
            matched.add(b)
            pairs.append((a, b))
            yield from rec(i + 1)
            pairs.pop()
            matched.discard(a)
            matched.discard(b)

    yield from rec(0)


def _enum_two_sided(inst, acc):
    prop_side = "m" if inst.problem_kind == "smti" else "r"
    units: list = []
    for t in inst.real_type_ids:
        if inst.side(t) == prop_side:
            units.extend(inst.type_agents(t))
    units.sort(key=agent_key)
    units.extend(inst.couple_rows())
    containers = sorted((h for t in inst.real_type_ids if inst.side(t) != prop_side
                         for h in inst.type_agents(t)), key=agent_key)
    room = {h: inst.agent_capacity(h) for h in containers}
    pairs: list[tuple[str, str]] = []

    def rec(i):
        if i == len(units):
            yield AgentMatching(inst, list(pairs))
            return
        u = units[i]
        yield from rec(i + 1)
        if isinstance(u, str):
            for h in containers:
                if room[h] > 0 and _mutual(acc, u, h):
                    room[h] -= 1
                    pairs.append((u, h))
                    yield from rec(i + 1)
                    pairs.pop()
                    room[h] += 1
        else:
            (cid, m1, m2, ct) = u
            for ha in containers:
                if room[ha] < 1 or m1 not in acc.get(ha, ()):
                    continue
                for hb in containers:
                    if room[hb] < (2 if ha == hb else 1):
                        continue
                    if m2 not in acc.get(hb, ()):
                        continue
                    if couple_rank(ct, inst.agent_type(ha), inst.agent_type(hb)) is None:
                        continue
                    room[ha] -= 1
                    room[hb] -= 1
                    pairs.append((m1, ha))
                    pairs.append((m2, hb))
                    yield from rec(i + 1)
                    pairs.pop()
                    pairs.pop()
                    room[ha] += 1
                    room[hb] += 1

    yield from rec(0)


# -- optimization oracles -------------------------------------------------


def stable_matchings_brute(inst: TypedInstance) -> list[AgentMatching]:
    return [m for m in enumerate_matchings(inst)
            if blocking_report(inst, m).stable]


def max_stable_brute(inst: TypedInstance) -> AgentMatching | None:
    """Largest stable matching, or None when no stable matching exists."""
    best = None
    for m in enumerate_matchings(inst):
        if (best is None or m.size > best.size) and blocking_report(inst, m).stable:
            best = m
    return best


def _max_cardinality(inst) -> int:
    return max(m.size for m in enumerate_matchings(inst))


def min_bp_brute(inst: TypedInstance, require_max_size=False):
    """(matching, count) minimizing the number of blocking pairs."""
    cmax = _max_cardinality(inst) if require_max_size else None
    best = None
    best_bp = None
    for m in enumerate_matchings(inst):
        if cmax is not None and m.size != cmax:
            continue
        bp = blocking_report(inst, m).count
        if best_bp is None or bp < best_bp:
            best, best_bp = m, bp
    return best, best_bp


def min_ba_brute(inst: TypedInstance, require_max_size=False):
    """(matching, count) minimizing the number of agents in blocking pairs."""
    cmax = _max_cardinality(inst) if require_max_size else None
    best = None
    best_ba = None
    for m in enumerate_matchings(inst):
        if cmax is not None and m.size != cmax:
            continue
        ba = len(blocking_report(inst, m).blocking_agents())
        if best_ba is None or ba < best_ba:
            best, best_ba = m, ba
    return best, best_ba


def exact_bp_brute(inst: TypedInstance, target: int) -> AgentMatching | None:
    """First matching with exactly the requested number of blocking pairs."""
    for m in enumerate_matchings(inst):
        if blocking_report(inst, m).count == target:
            return m
    return None


# -- complete stable matchings (quotient search) --------------------------


def _swap_invariant(x, y, lists, sides) -> bool:
    """True when exchanging the labels x and y maps the instance to itself."""
    if sides.get(x) != sides.get(y):
        return False

    def sw(z):
        return y if z == x else x if z == y else z

    for a, gs in lists.items():
        mapped = lists[sw(a)]
        if [frozenset(sw(z) for z in g) for g in gs] != mapped:
            return False
    return True


def interchangeability_classes(inst: TypedInstance) -> list[list[str]]:
    """Partition agents into label-swap symmetry classes of the expanded
    instance; stability only depends on class-level pair counts."""
    expanded = expand_to_agent_level(inst)
    lists = {a: [frozenset(g) for g in gs] for a, gs in expanded.items()}
    sides = {a: inst.side(inst.agent_type(a)) for a in lists}
    agents = sorted(lists, key=agent_key)
    parent = {a: a for a in agents}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, x in enumerate(agents):
        for y in agents[i + 1:]:
            if find(x) != find(y) and _swap_invariant(x, y, lists, sides):
                parent[find(y)] = find(x)
    comps: dict[str, list[str]] = {}
    for a in agents:
        comps.setdefault(find(a), []).append(a)
    return sorted(comps.values(), key=lambda c: agent_key(c[0]))


def com_stable_exists_plain(inst: TypedInstance):
    """(exists, witness) by plain enumeration; for cross-checks only."""
    everyone = set(inst.agents())
    for m in enumerate_matchings(inst):
        if m.matched_agents() == everyone and blocking_report(inst, m).stable:
            return True, m
    return False, None


def com_stable_exists_brute(inst: TypedInstance):
    """Does a complete stable matching exist?  Returns (exists, witness).

    Searches class-level pair-count matrices over the label-swap symmetry
    classes instead of raw matchings: matchings with equal counts are
    isomorphic, so one canonical realization per matrix decides stability.
    """
    if inst.problem_kind not in ("smti", "srti"):
        raise InstanceError("complete-stable search covers one-to-one problems only")
    if inst.couples:
        raise InstanceError("complete-stable search does not cover couples")
    expanded = expand_to_agent_level(inst)
    acc = _acc_sets(expanded)
    classes = interchangeability_classes(inst)
    nclasses = len(classes)
    compatible: list[list[int]] = [[] for _ in range(nclasses)]
    for ci in range(nclasses):
        for cj in range(ci, nclasses):
            if ci == cj:
                c = classes[ci]
                if len(c) >= 2 and _mutual(acc, c[0], c[1]):
                    compatible[ci].append(ci)
            else:
                if _mutual(acc, classes[ci][0], classes[cj][0]):
                    compatible[ci].append(cj)
                    compatible[cj].append(ci)
    # process scarcest classes first
    order = sorted(range(nclasses), key=lambda c: (len(compatible[c]), c))
    rem = [len(c) for c in classes]
    counts: dict[tuple[int, int], int] = {}

    def capacity_left(ci) -> int:
        own = (rem[ci] // 2) * 2 if ci in compatible[ci] else 0
        return own + sum(rem[d] for d in compatible[ci] if d != ci)

    def distribute(ci, partners, need):
        # yields ((partner, members-consumed-from-ci), ...) covering `need`;
        # rem[] holds the applied state while a pick is being consumed
        if need == 0:
            yield ()
            return
        if not partners:
            return
        d = partners[0]
        if d == ci:
            top = (need // 2) * 2
            step = 2
        else:
            top = min(need, rem[d])
            step = 1
        for take in range(0, top + 1, step):
            rem[ci] -= take
            if d != ci:
                rem[d] -= take
            for rest in distribute(ci, partners[1:], need - take):
                yield ((d, take),) + rest
            rem[ci] += take
            if d != ci:
                rem[d] += take

    def rec(oi):
        if oi == nclasses:
            if any(rem):
                return None
            m = _realize_counts(inst, classes, counts)
            if blocking_report(inst, m).stable:
                return m
            return None
        ci = order[oi]
        need = rem[ci]
        if need == 0:
            return rec(oi + 1)
        if capacity_left(ci) < need:
            return None
        partners = [d for d in compatible[ci] if rem[d] > 0]
        for picks in distribute(ci, partners, need):
            for (d, take) in picks:
                if take:
                    key = (min(ci, d), max(ci, d))
                    pairs = take if d != ci else take // 2
                    counts[key] = counts.get(key, 0) + pairs
            got = rec(oi + 1)
            for (d, take) in picks:
                if take:
                    key = (min(ci, d), max(ci, d))
                    pairs = take if d != ci else take // 2
                    counts[key] -= pairs
                    if not counts[key]:
                        del counts[key]
            if got is not None:
                return got
        return None

    witness = rec(0)
    return (witness is not None), witness


def _realize_counts(inst, classes, counts) -> AgentMatching:
    """Canonical matching for a class-level pair-count matrix: members are
    consumed in index order, diagonal pairs consecutively."""
    nxt = [0] * len(classes)
    pairs = []
    for (ci, cj) in sorted(counts):
        cnt = counts[(ci, cj)]
        if ci == cj:
            for _ in range(cnt):
                a = classes[ci][nxt[ci]]
                b = classes[ci][nxt[ci] + 1]
                nxt[ci] += 2
                pairs.append((a, b))
        else:
            for _ in range(cnt):
                a = classes[ci][nxt[ci]]
                b = classes[cj][nxt[cj]]
                nxt[ci] += 1
                nxt[cj] += 1
                pairs.append((a, b))
    return AgentMatching(inst, pairs)
