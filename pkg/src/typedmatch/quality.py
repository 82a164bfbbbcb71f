"""Quality objectives: fewest blocking pairs, fewest blocked agents.

The size solvers demand stability outright; the solvers here take any
matching respecting the preference lists and ask how close to stable it
can get.  All of them reason over per-type partner counts, so the number
of agents only enters through variable bounds.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import smallip
from .core import (
    AgentMatching,
    InstanceError,
    TypedInstance,
    normalize_with_dummies,
)
from .graphalg import FlowNetwork, max_flow
from .oracle import blocking_report
from .smallip import IntegerProgram
from .typed import TypeCountMatrix, counts_to_matching, nonempty_types

__all__ = [
    "TypeSignature",
    "signature_of_counts",
    "count_bp_from_counts",
    "count_ba_from_counts",
    "max_cardinality",
    "solve_min_bp",
    "solve_min_ba",
    "solve_exact_bp",
]


def _base(inst: TypedInstance) -> TypedInstance:
    return inst if inst.dummy_type is not None else normalize_with_dummies(inst)


@dataclass(frozen=True)
class TypeSignature:
    """Which unordered type pairs a matching occupies at all.

    A pair (i, k+1) records that some type-i agent is unmatched; every
    pair absent from `active` is empty.
    """

    active: frozenset

    def is_active(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.active

    def validate(self, inst: TypedInstance):
        base = _base(inst)
        dummy = base.dummy_type
        for i, j in self.active:
            if not (1 <= i <= j <= dummy) or i == dummy:
                raise InstanceError(f"signature pair ({i}, {j}) out of range")
            if j != dummy and not (base.pref(i).accepts(j)
                                   and base.pref(j).accepts(i)):
                raise InstanceError(
                    f"signature pair ({i}, {j}) is not mutually acceptable")


def signature_of_counts(inst: TypedInstance, matrix: TypeCountMatrix) -> TypeSignature:
    """Occupancy pattern of a count matrix, for soundness checks."""
    return TypeSignature(frozenset(pair for pair, _ in matrix.items()))


# -- counting against a matrix --------------------------------------------


def count_bp_from_counts(inst: TypedInstance, matrix: TypeCountMatrix) -> int:
    """Blocking pairs of any matching with these pair counts.

    Two agents block together exactly when each strictly prefers the
    other's type to their current partner's type, so the count factors
    through the matrix.  Within one type the product would pair agents
    with themselves, hence the choose-two correction there.
    """
    base = _base(inst)
    dummy = base.dummy_type
    live = nonempty_types(base)

    def cnt(i, u):
        v = matrix.get(i, u)
        return 2 * v if u == i else v

    def happier_with(i, j):
        pi = base.pref(i)
        if not pi.accepts(j):
            return 0
        return sum(cnt(i, u) for u in [*live, dummy]
                   if pi.accepts(u) and pi.prefers(j, u))

    total = 0
    for pos, i in enumerate(live):
        for j in live[pos + 1:]:
            total += happier_with(i, j) * happier_with(j, i)
        s = happier_with(i, i)
        total += s * (s - 1) // 2
    return total


def _slot_witnesses(inst, i, j, active):
    """Can a type-i agent matched to type j find a blocking partner?

    Scans the occupied pair slots for a candidate type the agent strictly
    prefers to j whose member strictly prefers i back.  The agent's own
    slot qualifies only through a second agent in the same position, so
    that case is reported separately: it needs two agents to matter.
    """
    dummy = inst.dummy_type
    pi = inst.pref(i)
    others = own = False
    for a, b in active:
        for cand, cur in ((a, b),) if a == b else ((a, b), (b, a)):
            if cand == dummy:
                continue
            if not (pi.accepts(cand) and pi.prefers(cand, j)):
                continue
            pc = inst.pref(cand)
            if not (pc.accepts(i) and pc.prefers(i, cur)):
                continue
            if (cand, cur) == (i, j):
                own = True
            else:
                others = True
    return others, own


def count_ba_from_counts(inst: TypedInstance, matrix: TypeCountMatrix) -> int:
    """Agents of any realization of the matrix that belong to at least
    one blocking pair."""
    base = _base(inst)
    dummy = base.dummy_type
    live = nonempty_types(base)
    active = [pair for pair, _ in matrix.items()]
    total = 0
    for i in live:
        for j in [*live, dummy]:
            n = 2 * matrix.get(i, i) if j == i else matrix.get(i, j)
            if n == 0:
                continue
            others, own = _slot_witnesses(base, i, j, active)
            if others or (own and n >= 2):
                total += n
    return total


# -- shared program layout ------------------------------------------------


def _count_program(inst, *, with_dummy=True, relation="="):
    """Count variables for cross pairs, within-type pairs and unmatched
    agents, plus one row per type covering its agents.

    Returns (program, live types, slots, pair_vars) where slots maps each
    ordered (type, partner type) to its variable and per-unit weight, and
    pair_vars maps the unordered pair keys to variable names.
    """
    live = nonempty_types(inst)
    dummy = inst.dummy_type
    ip = IntegerProgram()
    slots = {}
    pair_vars = {}
    for pos, i in enumerate(live):
        pi = inst.pref(i)
        if pi.accepts(i) and inst.count(i) >= 2:
            name = f"p_{i}"
            ip.add_var(name, 0, inst.count(i) // 2)
            slots[(i, i)] = (name, 2)
            pair_vars[(i, i)] = name
        for j in live[pos + 1:]:
            if pi.accepts(j) and inst.pref(j).accepts(i):
                name = f"x_{i}_{j}"
                ip.add_var(name, 0, min(inst.count(i), inst.count(j)))
                slots[(i, j)] = (name, 1)
                slots[(j, i)] = (name, 1)
                pair_vars[(i, j)] = name
        if with_dummy:
            name = f"d_{i}"
            ip.add_var(name, 0, inst.count(i))
            slots[(i, dummy)] = (name, 1)
            pair_vars[(i, dummy)] = name
    for i in live:
        row = {name: w for (a, _), (name, w) in slots.items() if a == i}
        ip.add_constraint(row, relation, inst.count(i))
    return ip, live, slots, pair_vars


def _twice_bp_terms(inst, live, slots):
    """Linear and quadratic parts of twice the blocking-pair count, in
    the variables of _count_program."""

    def gains(i, j):
        pi = inst.pref(i)
        if not pi.accepts(j):
            return []
        return [(name, w) for (a, u), (name, w) in slots.items()
                if a == i and pi.prefers(j, u)]

    lin = {}
    quad = {}

    def add_product(ta, tb, scale):
        for na, wa in ta:
            for nb, wb in tb:
                key = (na, nb) if na <= nb else (nb, na)
                quad[key] = quad.get(key, 0) + scale * wa * wb

    for pos, i in enumerate(live):
        for j in live[pos + 1:]:
            add_product(gains(i, j), gains(j, i), 2)
        s = gains(i, i)
        if s:
            add_product(s, s, 1)
            for name, w in s:
                lin[name] = lin.get(name, 0) - w
    return lin, quad


def _matrix_of(assignment, pair_vars):
    return TypeCountMatrix({pair: assignment[name]
                            for pair, name in pair_vars.items()})


def _max_size_row(ip, pair_vars, dummy, cap):
    row = {name: 1 for (_, b), name in pair_vars.items() if b != dummy}
    ip.add_constraint(row, "=", cap)


# -- largest matching under the lists alone --------------------------------


def max_cardinality(inst: TypedInstance) -> int:
    """Most pairs any list-respecting matching can form, stability aside.

    Bipartite instances go through the flow solver; one-sided ones need a
    within-type pair variable, so they use the count program directly.
    """
    base = _base(inst)
    live = nonempty_types(base)
    if base.problem_kind == "smti":
        women = [i for i in live if base.side(i) == "w"]
        men = [j for j in live if base.side(j) == "m"]
        net = FlowNetwork()
        for i in women:
            net.add_arc("s", ("v", i), base.count(i))
        for j in men:
            net.add_arc(("v", j), "t", base.count(j))
        for i in women:
            for j in men:
                if base.pref(i).accepts(j) and base.pref(j).accepts(i):
                    net.add_arc(("v", i), ("v", j),
                                min(base.count(i), base.count(j)))
        value, _ = max_flow(net)
        return value
    if base.problem_kind == "srti":
        ip, _, _, pair_vars = _count_program(base, with_dummy=False,
                                             relation="<=")
        ip.set_objective("max", {name: 1 for name in pair_vars.values()})
        value, _ = smallip.solve(ip)
        return value
    raise InstanceError("quality objectives cover one-to-one instances only")


# -- solvers ----------------------------------------------------------------


def solve_min_bp(inst: TypedInstance, require_max_size: bool = False):
    """(fewest blocking pairs, a matching attaining them).

    Minimizes a quadratic count objective over the pair-count variables;
    with require_max_size the matching must also reach max_cardinality.
    The result is recounted at the agent level before being returned.
    """
    base = _base(inst)
    ip, live, slots, pair_vars = _count_program(base)
    lin, quad = _twice_bp_terms(base, live, slots)
    if require_max_size:
        _max_size_row(ip, pair_vars, base.dummy_type, max_cardinality(base))
    ip.set_objective("min", lin, quad)
    value, assignment = smallip.solve(ip)
    if value % 2:
        raise RuntimeError("doubled blocking-pair objective came out odd")
    count = value // 2
    matrix = _matrix_of(assignment, pair_vars)
    if count_bp_from_counts(base, matrix) != count:
        raise RuntimeError("objective value disagrees with the matrix recount")
    matching = counts_to_matching(inst, matrix)
    if blocking_report(inst, matching).count != count:
        raise RuntimeError("matrix count disagrees with the agent-level recount")
    return count, matching


def solve_exact_bp(inst: TypedInstance, target: int):
    """A matching with exactly `target` blocking pairs, or None.

    Feasibility variant of solve_min_bp: the count objective moves into a
    pair of quadratic constraint rows and the first witness wins.
    """
    if target < 0:
        raise InstanceError("blocking-pair target must be nonnegative")
    base = _base(inst)
    ip, live, slots, pair_vars = _count_program(base)
    lin, quad = _twice_bp_terms(base, live, slots)
    ip.add_quadratic_constraint(lin, quad, "<=", 2 * target)
    ip.add_quadratic_constraint(lin, quad, ">=", 2 * target)
    ip.set_objective("min", {})
    try:
        _, assignment = smallip.solve(ip)
    except smallip.Infeasible:
        return None
    matrix = _matrix_of(assignment, pair_vars)
    matching = counts_to_matching(inst, matrix)
    if blocking_report(inst, matching).count != target:
        raise RuntimeError("exact-count witness failed the agent-level recount")
    return matching


def solve_min_ba(inst: TypedInstance, require_max_size: bool = False,
                 jobs: int | None = None):
    """(fewest agents stuck in blocking pairs, a matching attaining them).

    Whether the agents of one (type, partner type) slot are blocked
    depends only on which pair slots are occupied, never on how heavily.
    So: fix an occupancy pattern, charge each blocked slot its agent
    count, solve the resulting linear program, and take the best pattern.

    One wrinkle: a slot whose only blocking partners sit in the same slot
    is blocked exactly when it holds at least two agents.  Those slots
    get a gated charge (binary trigger plus overflow variable) instead of
    a plain one.
    """
    base = _base(inst)
    dummy = base.dummy_type
    cap = max_cardinality(base) if require_max_size else None
    _, live, _, layout = _count_program(base)
    universe = sorted(layout)
    if len(universe) > 16:
        raise InstanceError("too many type pairs for pattern enumeration")

    def evaluate(flags):
        ip, _, slots, pair_vars = _count_program(base)
        for pair, on in zip(universe, flags):
            ip.add_constraint({pair_vars[pair]: 1}, ">=" if on else "=",
                              1 if on else 0)
        if cap is not None:
            _max_size_row(ip, pair_vars, dummy, cap)
        active = [pair for pair, on in zip(universe, flags) if on]
        objective = {}
        gates = 0
        for (i, j), (name, w) in sorted(slots.items()):
            others, own = _slot_witnesses(base, i, j, active)
            if others:
                objective[name] = objective.get(name, 0) + w
            elif own:
                bound = base.count(i)
                trigger = f"z{gates}"
                charge = f"w{gates}"
                gates += 1
                ip.add_var(trigger, 0, 1)
                ip.add_var(charge, 0, bound)
                ip.add_constraint({name: w, trigger: -bound}, "<=", 1)
                ip.add_constraint({charge: 1, name: -w, trigger: -bound},
                                  ">=", -bound)
                objective[charge] = objective.get(charge, 0) + 1
        ip.set_objective("min", objective)
        try:
            value, assignment = smallip.solve(ip)
        except smallip.Infeasible:
            return None
        return value, _matrix_of(assignment, pair_vars)

    patterns = itertools.product((False, True), repeat=len(universe))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, patterns))
    else:
        results = map(evaluate, patterns)

    best = None
    for res in results:
        if res is None:
            continue
        if best is None or res[0] < best[0]:
            best = res
            if best[0] == 0:
                break
    if best is None:
        raise RuntimeError("every occupancy pattern came back infeasible")
    count, matrix = best
    matching = counts_to_matching(inst, matrix)
    blocked = blocking_report(inst, matching).blocking_agents()
    if len(blocked) != count:
        raise RuntimeError("pattern count disagrees with the agent-level recount")
    return count, matching
