"""Core fixed-parameter solvers for typed stable matching.

The search space is the set of (worst, secondworst) partner-type profiles:
stability of a matching depends only on its profile, so the solver
enumerates feasible profiles, keeps the stable ones, and maximizes the
realizing matching per profile.  Realization is an integer program in the
one-sided case and a max-flow binary search in the bipartite case.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from . import smallip
from .core import (AgentMatching, InstanceError, TypedInstance, TypeInfo,
                   normalize_with_dummies)
from .graphalg import FlowNetwork, max_flow
from .smallip import Infeasible, IntegerProgram


class NoStableError(Exception):
    """The instance admits no stable matching."""


class WorstProfile:
    """Hypothesized least-preferred (and second-least) partner types.

    Maps cover the nonempty real types only.  secondworst is None entirely
    for the bipartite solver (where it plays no role) and None per type for
    singleton types.
    """

    __slots__ = ("worst", "secondworst")

    def __init__(self, worst: dict, secondworst: dict | None):
        self.worst = dict(worst)
        self.secondworst = dict(secondworst) if secondworst is not None else None

    def key(self):
        sw = tuple(sorted(self.secondworst.items())) if self.secondworst is not None else ()
        return (tuple(sorted(self.worst.items())), sw)

    def __eq__(self, other):
        return isinstance(other, WorstProfile) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"WorstProfile({self.worst!r}, {self.secondworst!r})"


class TypeCountMatrix:
    """Pair counts by unordered type pair; (i,i) counts within-type pairs,
    (i, dummy) counts unmatched agents of type i."""

    def __init__(self, entries=None):
        self.entries: dict[tuple[int, int], int] = {}
        if entries:
            for (i, j), v in dict(entries).items():
                if v:
                    self.entries[(min(i, j), max(i, j))] = int(v)

    def get(self, i: int, j: int) -> int:
        return self.entries.get((min(i, j), max(i, j)), 0)

    def items(self):
        return tuple(sorted(self.entries.items()))

    def real_pair_total(self, dummy: int) -> int:
        return sum(v for (i, j), v in self.entries.items() if j != dummy)

    def row_sum(self, i: int, dummy: int) -> int:
        """Agents of type i covered: diagonal pairs count twice."""
        total = 0
        for (a, b), v in self.entries.items():
            if a == i and b == i:
                total += 2 * v
            elif a == i or b == i:
                total += v
        return total

    def validate(self, inst: TypedInstance):
        dummy = inst.dummy_type
        if dummy is None:
            raise InstanceError("count matrix needs a dummy-normalized instance")
        for i in inst.real_type_ids:
            if inst.count(i) and self.row_sum(i, dummy) != inst.count(i):
                raise InstanceError(f"row {i} covers {self.row_sum(i, dummy)} "
                                    f"agents, expected {inst.count(i)}")

    def __eq__(self, other):
        return isinstance(other, TypeCountMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.items())

    def __repr__(self):
        return f"TypeCountMatrix({dict(self.items())!r})"


def _require_normalized(inst: TypedInstance) -> int:
    if inst.dummy_type is None:
        raise InstanceError("operation needs a dummy-normalized instance")
    return inst.dummy_type


def nonempty_types(inst: TypedInstance) -> list[int]:
    return [i for i in inst.real_type_ids if inst.count(i) > 0]


# -- profiles -------------------------------------------------------------


def profile_is_feasible(inst: TypedInstance, p: WorstProfile) -> bool:
    dummy = _require_normalized(inst)
    live = nonempty_types(inst)
    if sorted(p.worst) != live:
        return False
    for i in live:
        pref = inst.pref(i)
        if not pref.accepts(p.worst[i]):
            return False
        if p.secondworst is None:
            continue
        sw = p.secondworst.get(i)
        if sw is None:
            if inst.count(i) != 1:
                return False
            continue
        if inst.count(i) == 1:
            return False
        if not pref.accepts(sw):
            return False
        if pref.rank(sw) > pref.rank(p.worst[i]):
            return False
        if sw == p.worst[i] and inst.count(sw) < 2:
            return False
    return True


def is_I_stable(inst: TypedInstance, p: WorstProfile) -> bool:
    """Stability of the hypothesized profile: no cross-type pair can
    jointly improve on both worsts, and no type with two or more agents
    strictly prefers itself to its second-worst."""
    if not profile_is_feasible(inst, p):
        raise InstanceError(f"infeasible profile {p!r}")
    live = nonempty_types(inst)
    for ai, i in enumerate(live):
        pi = inst.pref(i)
        for j in live[ai + 1:]:
            pj = inst.pref(j)
            if pi.accepts(j) and pj.accepts(i) and \
                    pi.rank(j) < pi.rank(p.worst[i]) and \
                    pj.rank(i) < pj.rank(p.worst[j]):
                return False
    if p.secondworst is not None:
        for i in live:
            if inst.count(i) < 2:
                continue
            sw = p.secondworst[i]
            pi = inst.pref(i)
            if pi.accepts(i) and pi.rank(i) < pi.rank(sw):
                return False
    return True


def enumerate_feasible_profiles(inst: TypedInstance):
    """All feasible (worst, secondworst) profiles in deterministic order."""
    dummy = _require_normalized(inst)
    live = nonempty_types(inst)

    def per_type(i):
        pref = inst.pref(i)
        worsts = sorted(pref.acceptable)
        out = []
        for w in worsts:
            if inst.count(i) == 1:
                out.append((w, None))
                continue
            for sw in worsts:
                if pref.rank(sw) > pref.rank(w):
                    continue
                if sw == w and inst.count(sw) < 2:
                    continue
                out.append((w, sw))
        return out

    choices = [per_type(i) for i in live]

    def rec(idx, worst, sw):
        if idx == len(live):
            yield WorstProfile(worst, sw)
            return
        for (w, s) in choices[idx]:
            worst[live[idx]] = w
            if s is not None:
                sw[live[idx]] = s
            else:
                sw[live[idx]] = None
            yield from rec(idx + 1, worst, sw)
            del worst[live[idx]]
            del sw[live[idx]]

    yield from rec(0, {}, {})


def enumerate_worst_profiles(inst: TypedInstance):
    """Bipartite variant: worst maps only, secondworst untracked."""
    _require_normalized(inst)
    live = nonempty_types(inst)
    choices = [sorted(inst.pref(i).acceptable) for i in live]

    def rec(idx, worst):
        if idx == len(live):
            yield WorstProfile(worst, None)
            return
        for w in choices[idx]:
            worst[live[idx]] = w
            yield from rec(idx + 1, worst)
            del worst[live[idx]]

    yield from rec(0, {})


def induced_profile(inst: TypedInstance, matching: AgentMatching,
                    track_secondworst: bool = True) -> WorstProfile:
    """The (worst, secondworst) profile a concrete matching realizes.

    Ties at the worst rank resolve to the smallest type id; the second
    entry is the runner-up of the same ordering.  Unmatched agents count as
    dummy partners.
    """
    dummy = _require_normalized(inst)
    worst: dict[int, int] = {}
    sw: dict[int, int | None] = {}
    for i in nonempty_types(inst):
        pref = inst.pref(i)
        partner_types = []
        for a in inst.type_agents(i):
            p = matching.partner(a)
            partner_types.append(dummy if p is None else inst.agent_type(p))
        partner_types.sort(key=lambda t: (-pref.rank(t), t))
        worst[i] = partner_types[0]
        sw[i] = partner_types[1] if len(partner_types) > 1 else None
    return WorstProfile(worst, sw if track_secondworst else None)


# -- realization: integer program (one-sided or bipartite) ---------------


def build_realising_program(inst: TypedInstance, p: WorstProfile):
    """Lemma-style integer program whose optimum is the largest matching
    realizing the profile.  Returns (program, variable name maps)."""
    dummy = _require_normalized(inst)
    live = nonempty_types(inst)
    ip = IntegerProgram()
    cross = {}
    diag = {}
    dummy_var = {}
    for ai, i in enumerate(live):
        pi = inst.pref(i)
        if pi.accepts(i) and inst.count(i) >= 2:
            name = f"p_{i}"
            ip.add_var(name, 0, inst.count(i) // 2)
            diag[i] = name
        for j in live[ai + 1:]:
            if pi.accepts(j) and inst.pref(j).accepts(i):
                name = f"x_{i}_{j}"
                ip.add_var(name, 0, min(inst.count(i), inst.count(j)))
                cross[(i, j)] = name
        name = f"d_{i}"
        ip.add_var(name, 0, inst.count(i))
        dummy_var[i] = name

    def coeff_terms(i):
        """(name, weight, partner type) covering all of type i's agents."""
        out = []
        if i in diag:
            out.append((diag[i], 2, i))
        for (a, b), name in cross.items():
            if a == i:
                out.append((name, 1, b))
            elif b == i:
                out.append((name, 1, a))
        out.append((dummy_var[i], 1, dummy))
        return out

    for i in live:
        pref = inst.pref(i)
        terms = coeff_terms(i)
        ip.add_constraint({n: w for (n, w, _) in terms}, "=", inst.count(i))
        wrank = pref.rank(p.worst[i])
        upper = {n: w for (n, w, t) in terms if pref.rank(t) <= wrank}
        ip.add_constraint(upper, "=", inst.count(i))
        if p.secondworst is not None and p.secondworst.get(i) is not None:
            srank = pref.rank(p.secondworst[i])
            upper2 = {n: w for (n, w, t) in terms if pref.rank(t) <= srank}
            ip.add_constraint(upper2, ">=", inst.count(i) - 1)
    objective = {name: 1 for name in cross.values()}
    objective.update({name: 1 for name in diag.values()})
    ip.set_objective("max", objective)
    return ip, cross, diag, dummy_var


def max_realising_srti(inst: TypedInstance, p: WorstProfile):
    """(size, TypeCountMatrix) of the largest matching realizing p, or
    raise Infeasible."""
    dummy = _require_normalized(inst)
    ip, cross, diag, dummy_var = build_realising_program(inst, p)
    value, assignment = smallip.solve(ip)
    entries = {}
    for (i, j), name in cross.items():
        entries[(i, j)] = assignment[name]
    for i, name in diag.items():
        entries[(i, i)] = assignment[name]
    for i, name in dummy_var.items():
        entries[(i, dummy)] = assignment[name]
    matrix = TypeCountMatrix(entries)
    matrix.validate(inst)
    return value, matrix


# -- realization: flow network (bipartite) --------------------------------


def _bipartite_sides(inst):
    dummy = _require_normalized(inst)
    if inst.problem_kind == "srti":
        raise InstanceError("flow realization needs a bipartite instance")
    w_side = "w" if inst.problem_kind == "smti" else "h"
    m_side = "m" if inst.problem_kind == "smti" else "r"
    women = [i for i in nonempty_types(inst) if inst.side(i) == w_side]
    men = [i for i in nonempty_types(inst) if inst.side(i) == m_side]
    return women, men


def build_flow_network(inst: TypedInstance, worst: dict, c: int) -> FlowNetwork:
    """The realization network: saturating flow (value n1+n2-c) exists iff
    some matching realizing `worst` has at least c real pairs."""
    dummy = _require_normalized(inst)
    women, men = _bipartite_sides(inst)
    n1 = sum(inst.count(i) for i in women)
    n2 = sum(inst.count(j) for j in men)
    net = FlowNetwork("s", "t")
    for i in women:
        net.add_arc("s", ("v", i), inst.count(i))
    net.add_arc("s", "d_w", n2 - c)
    for i in women:
        pi = inst.pref(i)
        for j in men:
            pj = inst.pref(j)
            if pi.accepts(j) and pj.accepts(i) and \
                    pi.rank(j) <= pi.rank(worst[i]) and \
                    pj.rank(i) <= pj.rank(worst[j]):
                net.add_arc(("v", i), ("v", j), min(inst.count(i), inst.count(j)))
        if worst[i] == dummy:
            net.add_arc(("v", i), "d_m", inst.count(i))
    for j in men:
        if worst[j] == dummy:
            net.add_arc("d_w", ("v", j), inst.count(j))
    net.add_arc("d_w", "d_m", min(n1, n2) - c)
    for j in men:
        net.add_arc(("v", j), "t", inst.count(j))
    net.add_arc("d_m", "t", n1 - c)
    return net


def _flow_counts(inst, worst, c):
    """Counts matrix read off a saturating flow at threshold c, or None."""
    dummy = inst.dummy_type
    women, men = _bipartite_sides(inst)
    n1 = sum(inst.count(i) for i in women)
    n2 = sum(inst.count(j) for j in men)
    net = build_flow_network(inst, worst, c)
    value, flow = max_flow(net)
    if value != n1 + n2 - c:
        return None
    entries = {}
    for (u, v), f in flow.items():
        if f and isinstance(u, tuple) and isinstance(v, tuple):
            entries[(u[1], v[1])] = f
    for i in women:
        entries[(i, dummy)] = flow.get((("v", i), "d_m"), 0)
    for j in men:
        entries[(j, dummy)] = flow.get(("d_w", ("v", j)), 0)
    matrix = TypeCountMatrix(entries)
    matrix.validate(inst)
    return matrix


def max_realising_smti(inst: TypedInstance, worst: dict) -> int:
    """Largest realizable size for a worst-map, by binary search on the
    saturating-flow threshold; raises Infeasible when nothing realizes it."""
    size, _ = max_realising_smti_with_counts(inst, worst)
    return size


def max_realising_smti_with_counts(inst: TypedInstance, worst: dict):
    dummy = _require_normalized(inst)
    women, men = _bipartite_sides(inst)
    n1 = sum(inst.count(i) for i in women)
    n2 = sum(inst.count(j) for j in men)
    hi = min(n1, n2)
    all_dummy = all(worst[i] == dummy for i in worst)
    if all_dummy:
        lo = 0
    else:
        if hi < 1 or _flow_counts(inst, worst, 1) is None:
            raise Infeasible("no matching realizes this worst-map")
        lo = 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _flow_counts(inst, worst, mid) is not None:
            lo = mid
        else:
            hi = mid - 1
    if lo == 0:
        entries = {(i, dummy): inst.count(i) for i in worst}
        return 0, TypeCountMatrix(entries)
    matrix = _flow_counts(inst, worst, lo)
    if matrix is None:
        raise AssertionError("threshold found by search must be feasible")
    return lo, matrix


# -- counts to concrete matchings -----------------------------------------


def counts_to_matching(inst: TypedInstance, matrix: TypeCountMatrix) -> AgentMatching:
    """Concrete matching with the given pair counts: agents are consumed
    in index order per type, within-type pairs consecutively.

    Dummy entries (type id above inst.k) are skipped, so the matrix from a
    normalized instance can be realized on the original one."""
    cursors = {i: 0 for i in inst.real_type_ids}

    def take(i, amount):
        ids = inst.type_agents(i)
        if cursors[i] + amount > len(ids):
            raise InstanceError(f"matrix asks for more type-{i} agents than exist")
        got = ids[cursors[i]:cursors[i] + amount]
        cursors[i] += amount
        return got

    pairs = []
    for (i, j), v in matrix.items():
        if j > inst.k:
            continue
        if i == j:
            members = take(i, 2 * v)
            pairs.extend((members[x], members[x + 1]) for x in range(0, 2 * v, 2))
        else:
            left = take(i, v)
            right = take(j, v)
            pairs.extend(zip(left, right))
    return AgentMatching(inst, pairs)


def matching_to_counts(inst: TypedInstance, matching: AgentMatching) -> TypeCountMatrix:
    """Pair counts of a concrete matching; unmatched agents land in the
    (type, k+1) entries whether or not the instance carries the dummy."""
    dummy = inst.k + 1
    entries: dict[tuple[int, int], int] = {}
    for a, b in matching.pairs:
        i, j = inst.agent_type(a), inst.agent_type(b)
        key = (min(i, j), max(i, j))
        entries[key] = entries.get(key, 0) + 1
    for a in inst.agents():
        if not matching.is_matched(a):
            i = inst.agent_type(a)
            entries[(i, dummy)] = entries.get((i, dummy), 0) + 1
    return TypeCountMatrix(entries)


# -- top-level solvers ----------------------------------------------------


def solve_max_srti(inst: TypedInstance, jobs: int | None = None):
    """(size, matching, profile) maximizing stable-matching size over all
    stable profiles; raises NoStableError when no profile works.

    Also covers bipartite instances (the integer-program path then agrees
    with the flow path)."""
    base = inst if inst.dummy_type is not None else normalize_with_dummies(inst)
    profiles = list(enumerate_feasible_profiles(base))

    def evaluate(p):
        if not is_I_stable(base, p):
            return None
        try:
            return max_realising_srti(base, p)
        except Infeasible:
            return None

    best = None
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, profiles))
    else:
        results = map(evaluate, profiles)
    for p, res in zip(profiles, results):
        if res is None:
            continue
        size, matrix = res
        if best is None or size > best[0]:
            best = (size, matrix, p)
    if best is None:
        raise NoStableError("no stable matching exists")
    size, matrix, p = best
    return size, counts_to_matching(inst, matrix), p


def solve_max_smti(inst: TypedInstance, jobs: int | None = None):
    """Bipartite solver via the flow path; same contract as solve_max_srti."""
    base = inst if inst.dummy_type is not None else normalize_with_dummies(inst)
    if base.problem_kind == "srti":
        raise InstanceError("use solve_max_srti for one-sided instances")
    profiles = list(enumerate_worst_profiles(base))

    def evaluate(p):
        if not is_I_stable(base, p):
            return None
        try:
            return max_realising_smti_with_counts(base, p.worst)
        except Infeasible:
            return None

    best = None
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, profiles))
    else:
        results = map(evaluate, profiles)
    for p, res in zip(profiles, results):
        if res is None:
            continue
        size, matrix = res
        if best is None or size > best[0]:
            best = (size, matrix, p)
    if best is None:
        raise NoStableError("no stable matching exists")
    size, matrix, p = best
    return size, counts_to_matching(inst, matrix), p


def clone_hospitals_to_smti(inst: TypedInstance) -> TypedInstance:
    """Unit-capacity mirror of an hrt instance: every hospital becomes as
    many same-type slots as it has capacity."""
    if inst.problem_kind != "hrt":
        raise InstanceError("cloning applies to hrt instances")
    new_types = []
    for t in inst.real_type_ids:
        info = inst.info(t)
        if info.side == "h":
            new_types.append(TypeInfo("w", info.count * info.capacity, info.pref))
        else:
            new_types.append(TypeInfo("m", info.count, info.pref))
    return TypedInstance("smti", new_types)


def fold_cloned_matching(inst: TypedInstance, clone: TypedInstance,
                         matching: AgentMatching) -> AgentMatching:
    """Map slot agents of the cloned instance back onto hospitals."""
    pairs = []
    for a, b in matching.pairs:
        out = []
        for x in (a, b):
            t = int(x.split(".")[0])
            if inst.side(t) == "h":
                idx = int(x.split(".")[1])
                cap = inst.capacity(t)
                x = f"{t}.{(idx - 1) // cap + 1}"
            out.append(x)
        pairs.append(tuple(out))
    return AgentMatching(inst, pairs)


def solve_max_hrt(inst: TypedInstance, jobs: int | None = None):
    """(size, matching, profile) for hospitals/residents with ties, by
    cloning hospitals into unit slots and solving the bipartite problem."""
    clone = clone_hospitals_to_smti(inst)
    size, matching, profile = solve_max_smti(clone, jobs=jobs)
    return size, fold_cloned_matching(inst, clone, matching), profile
