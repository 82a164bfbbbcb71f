"""Data model for type-structured stable-matching instances.

Agents are partitioned into k types; a type fixes the whole preference list
(over types, with ties) and how everyone else ranks the type's members.  On
top of the plain typed model an instance may carry per-type refinements
(agent-level tie-breaking inside types), exceptional candidates spliced into
individual lists, and resident couples with joint preferences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

PROBLEM_KINDS = ("smti", "srti", "hrt", "hrc")
SIDES = ("m", "w", "h", "r", "none")

# Which sides a problem kind allows for real types, and which sides are
# mutually matchable.  Roommates instances are one-sided.
_KIND_SIDES = {
    "smti": ("m", "w"),
    "srti": ("none",),
    "hrt": ("r", "h"),
    "hrc": ("r", "h"),
}


class InstanceError(ValueError):
    """Malformed instance text or inconsistent instance data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class TypePreference:
    """Ordered tie-groups over type ids; a type absent from every group is
    unacceptable to this type's agents."""

    __slots__ = ("groups", "_rank")

    def __init__(self, groups):
        cleaned = []
        seen: set[int] = set()
        for g in groups:
            toks = [int(t) for t in g]
            gs = frozenset(toks)
            if not gs:
                continue
            if len(toks) != len(gs):
                dup = min(t for t in gs if toks.count(t) > 1)
                raise InstanceError(f"type {dup} appears twice in preference groups")
            if seen & gs:
                raise InstanceError(f"type {min(seen & gs)} appears twice in preference groups")
            seen |= gs
            cleaned.append(gs)
        self.groups = tuple(cleaned)
        self._rank = {t: pos for pos, g in enumerate(self.groups) for t in g}

    def rank(self, t: int) -> int | None:
        """Tie-group index of type t, or None when t is unacceptable."""
        return self._rank.get(t)

    def accepts(self, t: int) -> bool:
        return t in self._rank

    @property
    def acceptable(self) -> frozenset[int]:
        return frozenset(self._rank)

    def prefers(self, a: int, b: int) -> bool:
        """Strict preference of acceptable type a over acceptable type b."""
        return self._rank[a] < self._rank[b]

    def appended(self, t: int) -> "TypePreference":
        """Copy with a new singleton last-choice group {t}."""
        return TypePreference(self.groups + (frozenset([t]),))

    def __eq__(self, other):
        return isinstance(other, TypePreference) and self.groups == other.groups

    def __hash__(self):
        return hash(self.groups)

    def __repr__(self):
        return f"TypePreference({[sorted(g) for g in self.groups]})"


@dataclass(frozen=True)
class TypeInfo:
    side: str
    count: int
    pref: TypePreference
    capacity: int = 1


@dataclass(frozen=True)
class ExceptionEntry:
    """One exceptional candidate in one agent's list.

    placement: ("top",), ("bottom",), ("after", t) or ("tie_between", t1, t2).
    """

    agent: str
    candidate: str
    placement: tuple


@dataclass(frozen=True)
class CoupleType:
    """A block of couples sharing the resident-type pair (first, second),
    first <= second, with a joint preference over ordered hospital-type
    pairs given as tie-groups (strict when every group is a singleton)."""

    first: int
    second: int
    count: int
    pref: tuple  # tuple of tie-groups; each tie-group a tuple of (p, q) pairs


def agent_key(aid: str):
    """Sort key giving the deterministic agent order used everywhere:
    typed agents by (type, index), couple members after them."""
    if aid.startswith("c"):
        c, m = aid[1:].split(".")
        return (1, int(c), int(m))
    t, i = aid.split(".")
    return (0, int(t), int(i))


class TypedInstance:
    """Immutable instance: validated on construction, safe to share."""

    def __init__(self, problem_kind, types, *, refinements=None, exceptions=(),
                 couples=(), dummy_type=None, flags=(), comments=()):
        if problem_kind not in PROBLEM_KINDS:
            raise InstanceError(f"unknown problem kind {problem_kind!r}")
        self.problem_kind = problem_kind
        self.types = tuple(types)
        self.dummy_type = dummy_type
        self.k = len(self.types) - (1 if dummy_type is not None else 0)
        self.refinements = dict(refinements) if refinements else {}
        self.exceptions = tuple(exceptions)
        self.couples = tuple(couples)
        self.flags = frozenset(flags)
        self.comments = tuple(comments)
        self._validate()
        self._build_indexes()

    # -- validation -------------------------------------------------------

    def _validate(self):
        kind = self.problem_kind
        if self.k < 1:
            raise InstanceError("an instance needs at least one real type")
        if self.dummy_type is not None and self.dummy_type != self.k + 1:
            raise InstanceError("dummy type must be the last type id")
        allowed = _KIND_SIDES[kind]
        ntypes = len(self.types)
        for tid, info in enumerate(self.types, start=1):
            real = self.dummy_type is None or tid != self.dummy_type
            if info.side not in SIDES:
                raise InstanceError(f"type {tid}: unknown side {info.side!r}")
            if real and info.side not in allowed:
                raise InstanceError(f"type {tid}: side {info.side!r} not allowed in {kind}")
            if info.count < 0:
                raise InstanceError(f"type {tid}: negative count")
            if info.capacity < 1:
                raise InstanceError(f"type {tid}: capacity must be positive")
            if info.capacity != 1 and info.side != "h":
                raise InstanceError(f"type {tid}: only hospital types may have capacity > 1")
            for g in info.pref.groups:
                for t in g:
                    if not 1 <= t <= ntypes:
                        raise InstanceError(f"type {tid}: unknown type {t} in preferences")
                    other = self.types[t - 1]
                    if kind != "srti" and real and (self.dummy_type is None or t != self.dummy_type):
                        if other.side == info.side:
                            raise InstanceError(
                                f"type {tid}: same-side type {t} in preferences")
        if self.couples and kind != "hrc":
            raise InstanceError("couples are only allowed in hrc instances")
        seen_ct: set[tuple[int, int]] = set()
        for ct in self.couples:
            if not (1 <= ct.first <= ct.second <= self.k):
                raise InstanceError(f"couple types ({ct.first},{ct.second}) out of order or range")
            if (ct.first, ct.second) in seen_ct:
                # same-type couples share one joint list; merge the counts
                raise InstanceError(
                    f"duplicate couple block for types ({ct.first},{ct.second})")
            seen_ct.add((ct.first, ct.second))
            for side_t in (ct.first, ct.second):
                if self.types[side_t - 1].side != "r":
                    raise InstanceError(f"couple member type {side_t} is not a resident type")
            if ct.count < 0:
                raise InstanceError("negative couple count")
            for grp in ct.pref:
                for (p, q) in grp:
                    for h in (p, q):
                        hreal = self.dummy_type is not None and h == self.dummy_type
                        if not (1 <= h <= len(self.types)):
                            raise InstanceError(f"couple pref references unknown type {h}")
                        if not hreal and self.types[h - 1].side != "h":
                            raise InstanceError(f"couple pref references non-hospital type {h}")

    def _build_indexes(self):
        self._agents: list[str] = []
        self._type_of: dict[str, int] = {}
        self._type_agents: dict[int, tuple[str, ...]] = {}
        for tid, info in enumerate(self.types, start=1):
            if self.dummy_type is not None and tid == self.dummy_type:
                self._type_agents[tid] = ()
                continue
            ids = tuple(f"{tid}.{i}" for i in range(1, info.count + 1))
            self._type_agents[tid] = ids
            self._agents.extend(ids)
            for a in ids:
                self._type_of[a] = tid
        self._couple_rows: list[tuple[str, str, str, CoupleType]] = []
        cidx = 0
        for ct in self.couples:
            for _ in range(ct.count):
                cidx += 1
                a, b = f"c{cidx}.1", f"c{cidx}.2"
                self._couple_rows.append((f"c{cidx}", a, b, ct))
                self._agents.extend((a, b))
                self._type_of[a] = ct.first
                self._type_of[b] = ct.second
        if self.exceptions:
            seen_pairs = set()
            for e in self.exceptions:
                for aid in (e.agent, e.candidate):
                    if aid not in self._type_of:
                        raise InstanceError(f"exception references unknown agent {aid}")
                if e.agent == e.candidate:
                    raise InstanceError(f"agent {e.agent} cannot be its own exception")
                if (e.agent, e.candidate) in seen_pairs:
                    raise InstanceError(f"duplicate exception {e.agent}->{e.candidate}")
                seen_pairs.add((e.agent, e.candidate))
                if self.problem_kind != "srti":
                    ta, tc = self._type_of[e.agent], self._type_of[e.candidate]
                    if self.types[ta - 1].side == self.types[tc - 1].side:
                        raise InstanceError(
                            f"exception {e.agent}->{e.candidate} does not cross sides")
                pref = self.pref(self._type_of[e.agent])
                for t in e.placement[1:]:
                    if not pref.accepts(t):
                        raise InstanceError(
                            f"exception placement type {t} not acceptable to agent {e.agent}")
                if e.placement[0] == "tie_between":
                    t1, t2 = e.placement[1], e.placement[2]
                    if not pref.prefers(t1, t2):
                        raise InstanceError(
                            f"tie_between({t1},{t2}) is not ordered in agent {e.agent}'s list")
        for viewer, groups in self.refinements.items():
            self._validate_refinement(viewer, groups)

    def _validate_refinement(self, viewer: int, groups):
        if not (1 <= viewer <= self.k):
            raise InstanceError(f"refinement for unknown type {viewer}")
        pref = self.pref(viewer)
        seen: set[str] = set()
        group_types: list[set[int]] = []
        for g in groups:
            ts = set()
            for aid in g:
                if aid in seen:
                    raise InstanceError(f"refinement for type {viewer} lists {aid} twice")
                seen.add(aid)
                t = self._type_of.get(aid)
                if t is None or aid.startswith("c"):
                    raise InstanceError(f"refinement for type {viewer} lists unknown agent {aid}")
                if not pref.accepts(t):
                    raise InstanceError(
                        f"refinement for type {viewer} lists agent {aid} of unacceptable type {t}")
                ts.add(t)
            group_types.append(ts)
        # A type spread over several groups must have those groups to itself;
        # a group mixing types must contain each such type completely.
        for t in {t for ts in group_types for t in ts}:
            holding = [gi for gi, ts in enumerate(group_types) if t in ts]
            if len(holding) > 1:
                for gi in holding:
                    if group_types[gi] != {t}:
                        raise InstanceError(
                            f"refinement for type {viewer}: type {t} mixed into a "
                            "cross-type tie while split across groups")
                if holding[-1] - holding[0] + 1 != len(holding):
                    raise InstanceError(
                        f"refinement for type {viewer}: agents of type {t} "
                        "are interrupted by another type")
        for gi, ts in enumerate(group_types):
            if len(ts) > 1:
                members = set(groups[gi])
                for t in ts:
                    missing = set(self._type_agents[t]) - members
                    if missing:
                        raise InstanceError(
                            f"refinement for type {viewer}: cross-type tie drops "
                            f"{sorted(missing)[0]} of type {t}")
        # The induced type order must follow the declared type-level groups.
        declared = pref.groups
        pos = 0
        for ts in group_types:
            while pos < len(declared) and not (ts & declared[pos]):
                pos += 1
            if pos >= len(declared) or not ts <= declared[pos]:
                raise InstanceError(
                    f"refinement for type {viewer} is inconsistent with the type-level order")
        # A declared tie between types means full indifference between their
        # agents, so the refinement must keep them in one group.
        for dg in declared:
            live = [t for t in dg if self._type_agents.get(t)]
            if len(live) < 2:
                continue
            spread = {gi for gi, ts in enumerate(group_types) if ts & set(live)}
            if len(spread) > 1:
                raise InstanceError(
                    f"refinement for type {viewer} splits the declared tie over "
                    f"types {sorted(dg)}")
        present = {t for ts in group_types for t in ts}
        for t in pref.acceptable:
            if (self.dummy_type is None or t != self.dummy_type) and \
                    self._type_agents.get(t) and t not in present:
                raise InstanceError(
                    f"refinement for type {viewer} drops type {t} entirely; "
                    "make it unacceptable at type level instead")

    # -- accessors --------------------------------------------------------

    def info(self, tid: int) -> TypeInfo:
        return self.types[tid - 1]

    def pref(self, tid: int) -> TypePreference:
        return self.types[tid - 1].pref

    def side(self, tid: int) -> str:
        return self.types[tid - 1].side

    def count(self, tid: int) -> int:
        return self.types[tid - 1].count

    def capacity(self, tid: int) -> int:
        return self.types[tid - 1].capacity

    @property
    def real_type_ids(self) -> range:
        return range(1, self.k + 1)

    @property
    def n(self) -> int:
        """Total number of real agents, couple members included."""
        return len(self._agents)

    def agents(self) -> tuple[str, ...]:
        return tuple(self._agents)

    def type_agents(self, tid: int) -> tuple[str, ...]:
        """Agents declared via the type's count (singles for hrc resident types)."""
        return self._type_agents[tid]

    def agent_type(self, aid: str) -> int:
        return self._type_of[aid]

    def couple_rows(self):
        """(couple id, member 1, member 2, CoupleType) for every couple."""
        return tuple(self._couple_rows)

    def sides_present(self):
        return {info.side for tid, info in enumerate(self.types, 1)
                if (self.dummy_type is None or tid != self.dummy_type)}

    def agent_capacity(self, aid: str) -> int:
        return self.capacity(self._type_of[aid])

    def exceptions_of(self, aid: str) -> tuple[ExceptionEntry, ...]:
        return tuple(e for e in self.exceptions if e.agent == aid)


class AgentMatching:
    """An immutable set of matched pairs over real agents.

    Pairs are stored canonically (endpoints ordered by agent_key, pairs
    sorted), so equal matchings compare and hash equal.  Capacities are
    enforced: unit agents appear at most once, hospitals at most their
    capacity.  Couple members must be matched jointly or not at all.
    """

    __slots__ = ("pairs", "_assigned")

    def __init__(self, inst: TypedInstance, pairs):
        canon = []
        for a, b in pairs:
            if a not in inst._type_of or b not in inst._type_of:
                raise InstanceError(f"matching references unknown agent: ({a}, {b})")
            if a == b:
                raise InstanceError(f"agent {a} matched to itself")
            if agent_key(a) > agent_key(b):
                a, b = b, a
            canon.append((a, b))
        canon.sort(key=lambda p: (agent_key(p[0]), agent_key(p[1])))
        self.pairs = tuple(canon)
        if len(set(self.pairs)) != len(self.pairs):
            raise InstanceError("duplicate pair in matching")
        assigned: dict[str, list[str]] = {}
        for a, b in self.pairs:
            assigned.setdefault(a, []).append(b)
            assigned.setdefault(b, []).append(a)
        for a, partners in assigned.items():
            if len(partners) > inst.agent_capacity(a):
                raise InstanceError(f"agent {a} is over capacity")
        for (_, m1, m2, _) in inst.couple_rows():
            if (m1 in assigned) != (m2 in assigned):
                raise InstanceError(f"couple members {m1}/{m2} must be matched jointly")
        self._assigned = assigned

    @property
    def size(self) -> int:
        return len(self.pairs)

    def partner(self, a: str) -> str | None:
        """Sole partner of a unit-capacity agent (None when unmatched)."""
        got = self._assigned.get(a)
        if got and len(got) > 1:
            raise InstanceError(f"agent {a} has several partners; use assignees()")
        return got[0] if got else None

    def assignees(self, a: str) -> tuple[str, ...]:
        return tuple(self._assigned.get(a, ()))

    def is_matched(self, a: str) -> bool:
        return a in self._assigned

    def matched_agents(self) -> frozenset:
        return frozenset(self._assigned)

    def __eq__(self, other):
        return isinstance(other, AgentMatching) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __repr__(self):
        return f"AgentMatching({list(self.pairs)!r})"


def format_matching(matching: AgentMatching, blocking: int | None = None) -> str:
    lines = [f"pair {a} {b}" for a, b in matching.pairs]
    lines.append(f"size {matching.size}")
    if blocking is not None:
        lines.append(f"blocking_pairs {blocking}")
    return "\n".join(lines) + "\n"


# -- dummy normalization --------------------------------------------------


def normalize_with_dummies(inst: TypedInstance) -> TypedInstance:
    """Append the last-choice dummy type k+1 to every list.

    Dummy agents stay notional: being matched to type k+1 is represented as
    being unmatched, so the instance only records the extra type (count n,
    side-neutral, accepting every real type).
    """
    if inst.dummy_type is not None:
        raise InstanceError("instance already has a dummy type")
    dummy = inst.k + 1
    new_types = [TypeInfo(info.side, info.count, info.pref.appended(dummy), info.capacity)
                 for info in inst.types]
    new_types.append(TypeInfo("none", inst.n, TypePreference([list(inst.real_type_ids)])))
    new_couples = [CoupleType(ct.first, ct.second, ct.count,
                              ct.pref + (((dummy, dummy),),))
                   for ct in inst.couples]
    return TypedInstance(inst.problem_kind, new_types,
                         refinements=inst.refinements, exceptions=inst.exceptions,
                         couples=new_couples, dummy_type=dummy,
                         flags=inst.flags, comments=inst.comments)


def strip_refinements(inst: TypedInstance) -> TypedInstance:
    if not inst.refinements:
        return inst
    return TypedInstance(inst.problem_kind, inst.types, exceptions=inst.exceptions,
                         couples=inst.couples, dummy_type=inst.dummy_type,
                         flags=inst.flags, comments=inst.comments)


# -- agent-level expansion ------------------------------------------------


def expand_to_agent_level(inst: TypedInstance):
    """Per-agent preference lists as tuples of tie-groups of agent ids.

    Refinements replace the default within-type expansion for their viewer
    type, and exceptional candidates are spliced at their declared placement.
    Couple members get no entry (their preferences are joint); dummy types
    expand to nothing.  Order inside a tie-group is the canonical agent order.
    """
    by_agent_exc: dict[str, list[ExceptionEntry]] = {}
    for e in inst.exceptions:
        by_agent_exc.setdefault(e.agent, []).append(e)

    out: dict[str, tuple] = {}
    for tid in inst.real_type_ids:
        base = _viewer_groups(inst, tid)
        for aid in inst.type_agents(tid):
            groups = [[x for x in g if x != aid] for g in base]
            for e in by_agent_exc.get(aid, ()):
                for g in groups:
                    if e.candidate in g:
                        g.remove(e.candidate)
            splice = _placement_slots(inst, tid, groups, by_agent_exc.get(aid, ()))
            for pos, cands in sorted(splice, reverse=True):
                groups.insert(pos, sorted(cands, key=agent_key))
            out[aid] = tuple(tuple(g) for g in groups if g)
    return out


def _viewer_groups(inst: TypedInstance, tid: int):
    """Type tid's agent-level groups before self-removal and exceptions."""
    if tid in inst.refinements:
        return [list(g) for g in inst.refinements[tid]]
    groups = []
    for g in inst.pref(tid).groups:
        members = []
        for t in sorted(g):
            if inst.dummy_type is not None and t == inst.dummy_type:
                continue
            members.extend(inst.type_agents(t))
            if inst.problem_kind == "hrc" and inst.side(tid) == "h":
                for (_, a1, a2, ct) in inst.couple_rows():
                    if ct.first == t:
                        members.append(a1)
                    if ct.second == t:
                        members.append(a2)
        members.sort(key=agent_key)
        if members:
            groups.append(members)
    return groups


def _placement_slots(inst, tid, groups, entries):
    """Resolve exception placements to insertion indices over current groups.

    Entries sharing a placement merge into one tie (two candidates promoted
    to the same slot are mutually tied there).
    """
    if not entries:
        return []
    type_at = []
    for g in groups:
        type_at.append({inst.agent_type(x) for x in g})

    def after_type(t):
        last = -1
        for gi, ts in enumerate(type_at):
            if t in ts:
                last = gi
        if last < 0:
            # every agent of t was removed (tiny instances); anchor behind
            # the last group holding a type the viewer ranks at least as high
            r = inst.pref(tid).rank(t)
            rank = inst.pref(tid).rank
            for gi, ts in enumerate(type_at):
                if any(rank(u) is not None and rank(u) <= r for u in ts):
                    last = gi
        return last + 1

    slots: dict[tuple, set] = {}
    for e in entries:
        slots.setdefault(e.placement, set()).add(e.candidate)
    resolved = []
    for placement, cands in slots.items():
        if placement[0] == "top":
            pos = 0
        elif placement[0] == "bottom":
            pos = len(groups)
        elif placement[0] == "after":
            pos = after_type(placement[1])
        else:  # tie_between
            pos = after_type(placement[1])
        resolved.append((pos, cands))
    return resolved


def acceptability(expanded) -> dict[str, frozenset]:
    """agent -> set of agents it finds acceptable (not yet mutual)."""
    return {a: frozenset(x for g in groups for x in g) for a, groups in expanded.items()}


def rank_table(expanded) -> dict[str, dict[str, int]]:
    """agent -> candidate -> tie-group index (lower is better)."""
    return {a: {x: gi for gi, g in enumerate(groups) for x in g}
            for a, groups in expanded.items()}


# -- type derivation ------------------------------------------------------


def derive_types(agent_level_lists, problem_kind="srti", sides=None) -> TypedInstance:
    """Coarsest partition of agents into types reproducing the given lists.

    agent_level_lists maps agent id -> sequence of tie-groups of agent ids.
    Two agents share a type when their lists agree off the pair and everyone
    else is indifferent between them; we take components of that relation and
    fall back to singleton types when the closure is not itself valid.
    """
    agents = list(agent_level_lists)
    lists = {a: [frozenset(g) for g in gs] for a, gs in agent_level_lists.items()}
    comp = _equivalence_components(agents, lists, sides)
    for candidate in (comp, [[a] for a in agents]):
        built = _try_build(candidate, agents, lists, problem_kind, sides)
        if built is not None:
            return built
    raise AssertionError("singleton partition must always be valid")


def _pair_equivalent(x, y, lists, sides):
    if sides is not None and sides.get(x) != sides.get(y):
        return False
    drop = {x, y}
    lx = [g - drop for g in lists[x]]
    ly = [g - drop for g in lists[y]]
    if [g for g in lx if g] != [g for g in ly if g]:
        return False
    for z, gz in lists.items():
        if z in drop:
            continue
        rx = ry = None
        for gi, g in enumerate(gz):
            if x in g:
                rx = gi
            if y in g:
                ry = gi
        if rx != ry:
            return False
    return True


def _equivalence_components(agents, lists, sides):
    parent = {a: a for a in agents}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, x in enumerate(agents):
        for y in agents[i + 1:]:
            if find(x) != find(y) and _pair_equivalent(x, y, lists, sides):
                parent[find(y)] = find(x)
    comps: dict[str, list] = {}
    for a in agents:
        comps.setdefault(find(a), []).append(a)
    order = {a: i for i, a in enumerate(agents)}
    return sorted(comps.values(), key=lambda c: min(order[a] for a in c))


def _try_build(partition, agents, lists, problem_kind, sides):
    cls = {}
    for tid, members in enumerate(partition, start=1):
        for a in members:
            cls[a] = tid
    type_prefs: dict[int, tuple] = {}
    for tid, members in enumerate(partition, start=1):
        member_set = set(members)
        seqs = set()
        for x in members:
            seq = []
            for g in lists[x]:
                gt = frozenset(cls[y] for y in g)
                # each class in the group must be wholly present (minus x)
                for t in gt:
                    need = set(partition[t - 1]) - {x}
                    if not need <= g:
                        return None
                seq.append(gt)
            flat = [t for gt in seq for t in gt]
            if len(flat) != len(set(flat)):
                return None
            seqs.add(tuple(seq))
        if len(seqs) > 1:
            return None
        type_prefs[tid] = seqs.pop() if seqs else ()
    infos = []
    for tid, members in enumerate(partition, start=1):
        side = sides.get(members[0]) if sides else ("none" if problem_kind == "srti" else None)
        if side is None:
            side = "none"
        infos.append(TypeInfo(side, len(members), TypePreference(type_prefs[tid])))
    try:
        return TypedInstance(problem_kind, infos)
    except InstanceError:
        return None


# -- file format ----------------------------------------------------------

_TYPE_RE = re.compile(
    r"^type\s+(\d+)\s+side=(\S+)\s+count=(\d+)\s+(?:cap=(\d+)\s+)?prefs=(.*)$")
_REFINE_RE = re.compile(r"^refine\s+(\d+)\s*:\s*(.*)$")
_EXCEPT_RE = re.compile(r"^except\s+agent=(\S+)\s+cand=(\S+)\s+place=(\S+)$")
_COUPLE_RE = re.compile(r"^couple\s+types=\((\d+),(\d+)\)\s+count=(\d+)\s+prefs=(.*)$")
_GROUP_RE = re.compile(r"\(([^()]*)\)|(\S+)")


def _parse_groups(text, lineno, to_int=True):
    groups = []
    for m in _GROUP_RE.finditer(text):
        raw = m.group(1) if m.group(1) is not None else m.group(2)
        toks = raw.split()
        if not toks:
            raise InstanceError("empty tie group", lineno)
        if to_int:
            try:
                groups.append([int(t) for t in toks])
            except ValueError:
                raise InstanceError(f"bad type id in {raw!r}", lineno)
        else:
            groups.append(toks)
    return groups


def _parse_placement(text, lineno):
    if text == "top":
        return ("top",)
    if text == "bottom":
        return ("bottom",)
    if text.startswith("after:"):
        return ("after", int(text[len("after:"):]))
    if text.startswith("tiebetween:"):
        a, _, b = text[len("tiebetween:"):].partition(",")
        return ("tie_between", int(a), int(b))
    raise InstanceError(f"unknown placement {text!r}", lineno)


def parse_instance(text: str) -> TypedInstance:
    """Parse the line-oriented instance format (see the package README)."""
    kind = None
    k = None
    typerows: dict[int, TypeInfo] = {}
    refinements: dict[int, tuple] = {}
    exceptions: list[ExceptionEntry] = []
    couples: list[CoupleType] = []
    flags: list[str] = []
    comments: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if raw.strip().startswith("#"):
            comments.append(raw.strip()[1:].strip())
        if not line:
            continue
        if kind is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "problem":
                raise InstanceError("expected `problem <kind>`", lineno)
            if parts[1] not in PROBLEM_KINDS:
                raise InstanceError(f"unknown problem kind {parts[1]!r}", lineno)
            kind = parts[1]
            continue
        if k is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "types" or not parts[1].isdigit():
                raise InstanceError("expected `types <k>`", lineno)
            k = int(parts[1])
            if k < 1:
                raise InstanceError("k must be at least 1", lineno)
            continue
        if line.startswith("type "):
            m = _TYPE_RE.match(line)
            if not m:
                raise InstanceError("bad type line", lineno)
            tid = int(m.group(1))
            if not 1 <= tid <= k:
                raise InstanceError(f"type id {tid} outside 1..{k}", lineno)
            if tid in typerows:
                raise InstanceError(f"type {tid} declared twice", lineno)
            side = m.group(2)
            if side not in SIDES:
                raise InstanceError(f"unknown side {side!r}", lineno)
            cap = int(m.group(4)) if m.group(4) else 1
            groups = _parse_groups(m.group(5), lineno)
            typerows[tid] = TypeInfo(side, int(m.group(3)), TypePreference(groups), cap)
        elif line.startswith("refine "):
            m = _REFINE_RE.match(line)
            if not m:
                raise InstanceError("bad refine line", lineno)
            viewer = int(m.group(1))
            if viewer in refinements:
                raise InstanceError(f"type {viewer} refined twice", lineno)
            refinements[viewer] = tuple(tuple(g) for g in
                                        _parse_groups(m.group(2), lineno, to_int=False))
        elif line.startswith("except "):
            m = _EXCEPT_RE.match(line)
            if not m:
                raise InstanceError("bad except line", lineno)
            exceptions.append(ExceptionEntry(m.group(1), m.group(2),
                                             _parse_placement(m.group(3), lineno)))
        elif line.startswith("couple "):
            m = _COUPLE_RE.match(line)
            if not m:
                raise InstanceError("bad couple line", lineno)
            pairs = []
            for tok in m.group(4).split():
                pm = re.fullmatch(r"\((\d+),(\d+)\)", tok)
                if not pm:
                    raise InstanceError(f"bad hospital pair {tok!r}", lineno)
                pairs.append(((int(pm.group(1)), int(pm.group(2))),))
            couples.append(CoupleType(int(m.group(1)), int(m.group(2)),
                                      int(m.group(3)), tuple(pairs)))
        elif line.startswith("flag "):
            flags.append(line.split(None, 1)[1])
        else:
            raise InstanceError(f"unrecognized line {line!r}", lineno)
    if kind is None or k is None:
        raise InstanceError("missing problem/types header", 1)
    missing = [t for t in range(1, k + 1) if t not in typerows]
    if missing:
        raise InstanceError(f"type {missing[0]} never declared")
    infos = [typerows[t] for t in range(1, k + 1)]
    try:
        return TypedInstance(kind, infos, refinements=refinements,
                             exceptions=exceptions, couples=couples,
                             flags=flags, comments=comments)
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(str(exc))


def format_instance(inst: TypedInstance) -> str:
    """Serialize an instance (without dummies) back to the file format."""
    if inst.dummy_type is not None:
        raise InstanceError("serialize the un-normalized instance")
    lines = [f"# {c}" for c in inst.comments]
    lines.append(f"problem {inst.problem_kind}")
    lines.append(f"types {inst.k}")
    for tid in inst.real_type_ids:
        info = inst.info(tid)
        cap = f" cap={info.capacity}" if info.capacity != 1 else ""
        prefs = " ".join(_fmt_group(sorted(g)) for g in info.pref.groups)
        lines.append(f"type {tid} side={info.side} count={info.count}{cap} prefs={prefs}")
    for viewer in sorted(inst.refinements):
        prefs = " ".join(_fmt_group(g) for g in inst.refinements[viewer])
        lines.append(f"refine {viewer}: {prefs}")
    for e in inst.exceptions:
        lines.append(f"except agent={e.agent} cand={e.candidate} place={_fmt_place(e.placement)}")
    for ct in inst.couples:
        prefs = " ".join(f"({p},{q})" for grp in ct.pref for (p, q) in grp)
        lines.append(f"couple types=({ct.first},{ct.second}) count={ct.count} prefs={prefs}")
    for f in sorted(inst.flags):
        lines.append(f"flag {f}")
    return "\n".join(lines) + "\n"


def _fmt_group(items) -> str:
    toks = [str(x) for x in items]
    return toks[0] if len(toks) == 1 else "(" + " ".join(toks) + ")"


def _fmt_place(placement) -> str:
    tag = placement[0]
    if tag == "top" or tag == "bottom":
        return tag
    if tag == "after":
        return f"after:{placement[1]}"
    return f"tiebetween:{placement[1]},{placement[2]}"


def parse_matching(text: str):
    """Read `pair a b` lines; footer lines (`size`, `blocking_pairs`) are ignored."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "pair":
            if len(parts) != 3:
                raise InstanceError("bad pair line", lineno)
            pairs.append((parts[1], parts[2]))
        elif parts[0] in ("size", "blocking_pairs", "blocking_agents"):
            continue
        else:
            raise InstanceError(f"unrecognized matching line {line!r}", lineno)
    return pairs
