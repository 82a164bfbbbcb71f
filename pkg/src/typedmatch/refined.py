"""Refined within-type orders: realizing count solutions agent by agent.

A refinement lets agents of one type rank the members of another type
unequally, as long as whole types still compare the way the type-level
lists say.  Solving still happens on the type-level relaxation; the work
here is turning a count matrix into concrete pairs that stay stable (or
keep the promised block count) under the refined lists, and checking the
strict-preference special case where every stable matching has one size.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import (
    AgentMatching,
    InstanceError,
    TypedInstance,
    TypePreference,
    agent_key,
    strip_refinements,
)
from .oracle import blocking_report, stable_matchings_brute
from .quality import (
    count_bp_from_counts,
    solve_exact_bp,
    solve_min_ba,
    solve_min_bp,
)
from .typed import TypeCountMatrix, matching_to_counts, solve_max_srti

__all__ = [
    "RealizationError",
    "StrictTypesReport",
    "has_truncation",
    "realize_refined",
    "solve_max_refined_srti",
    "solve_refined_quality",
    "verify_strict_types",
]


class RealizationError(Exception):
    """The count matrix cannot be turned into concrete pairs as asked."""


def has_truncation(inst: TypedInstance) -> bool:
    """True when some refinement leaves out agents of an acceptable type."""
    for viewer, groups in inst.refinements.items():
        visible = {a for g in groups for a in g}
        for t in inst.pref(viewer).acceptable:
            if any(a not in visible for a in inst.type_agents(t)):
                return True
    return False


def _view_of(inst, viewer, target):
    """Ordered tie-groups of target-type agents as the viewer type ranks
    them; agents a truncated refinement omits are invisible."""
    members = inst.type_agents(target)
    groups = inst.refinements.get(viewer)
    if groups is None:
        return (members,)
    mset = set(members)
    out = []
    for g in groups:
        got = tuple(sorted((a for a in g if a in mset), key=agent_key))
        if got:
            out.append(got)
    return tuple(out)


def _view_rank(view):
    return {a: pos for pos, g in enumerate(view) for a in g}


def _check_matrix(inst, matrix):
    for (i, j), _ in matrix.items():
        if j > inst.k:
            continue
        if not (inst.pref(i).accepts(j) and inst.pref(j).accepts(i)):
            raise InstanceError(f"matrix pairs unacceptable types {i} and {j}")
    for i in inst.real_type_ids:
        if matrix.row_sum(i, inst.k + 1) != inst.count(i):
            raise InstanceError(f"matrix row {i} does not cover type {i}")


def realize_refined(inst: TypedInstance, matrix: TypeCountMatrix,
                    require_stable: bool = True) -> AgentMatching:
    """Concrete matching with exactly the matrix's pair counts, built so
    the refined lists add no blocking pairs beyond the type-level count.

    Each type hands out its agents to partner types from its most
    preferred type downwards, always giving away the agents the receiving
    type ranks best; the two sides of a pair are then aligned rank by
    rank.  Ties anywhere break toward the lowest agent index.

    With require_stable the matrix must be stable at type level.  Agents
    invisible to a type through truncation cannot be handed to it; if
    that leaves too few, the matrix is not realizable as asked.
    """
    _check_matrix(inst, matrix)
    if require_stable and count_bp_from_counts(strip_refinements(inst), matrix):
        raise RealizationError("count matrix is not stable at type level")

    chosen: dict[tuple[int, int], list] = {}
    for i in inst.real_type_ids:
        available = set(inst.type_agents(i))
        for group in inst.pref(i).groups:
            for j in sorted(group):
                need = (2 if j == i else 1) * matrix.get(i, j)
                if need == 0:
                    continue
                pool = [a for g in _view_of(inst, j, i) for a in g
                        if a in available]
                if len(pool) < need:
                    raise RealizationError(
                        f"type {j} sees too few type-{i} agents for the matrix")
                chosen[(i, j)] = pool[:need]
                available.difference_update(pool[:need])
        if len(available) != matrix.get(i, inst.k + 1):
            raise RealizationError(
                f"type {i} leftovers disagree with the unmatched count")

    pairs = []
    for (i, j), left in sorted(chosen.items()):
        if j < i:
            continue
        if i == j:
            rank = _view_rank(_view_of(inst, i, i))
            left = sorted(left, key=lambda a: (rank[a], agent_key(a)))
            pairs.extend((left[x], left[x + 1]) for x in range(0, len(left), 2))
        else:
            lrank = _view_rank(_view_of(inst, j, i))
            rrank = _view_rank(_view_of(inst, i, j))
            left = sorted(left, key=lambda a: (lrank[a], agent_key(a)))
            right = sorted(chosen[(j, i)], key=lambda a: (rrank[a], agent_key(a)))
            pairs.extend(zip(left, right))
    matching = AgentMatching(inst, pairs)
    if matching_to_counts(inst, matching) != matrix:
        raise RuntimeError("realization lost track of the pair counts")
    return matching


def solve_max_refined_srti(inst: TypedInstance, jobs: int | None = None):
    """(size, matching) stable under the refined lists, size equal to the
    type-level optimum; NoStableError when the relaxation has none."""
    relaxed = strip_refinements(inst)
    size, matching_t, _ = solve_max_srti(relaxed, jobs=jobs)
    matrix = matching_to_counts(relaxed, matching_t)
    matching = realize_refined(inst, matrix)
    if matching.size != size:
        raise RuntimeError("realization changed the matching size")
    if not blocking_report(inst, matching).stable:
        raise RuntimeError("realized matching is unstable under refined lists")
    return size, matching


def solve_refined_quality(inst: TypedInstance, objective: str,
                          target: int | None = None,
                          require_max_size: bool = False):
    """Quality objectives on a refined instance via the type relaxation.

    min-bp / min-ba return (count, matching); exact-bp returns a witness
    matching or None.  The realized matching is recounted on the refined
    lists; without truncation the recount must equal the type-level
    count, with truncation blocks can only disappear, and the recounted
    value is the one reported.
    """
    relaxed = strip_refinements(inst)
    truncated = has_truncation(inst)
    if objective == "min-bp":
        count, matching_t = solve_min_bp(relaxed, require_max_size=require_max_size)
    elif objective == "min-ba":
        count, matching_t = solve_min_ba(relaxed, require_max_size=require_max_size)
    elif objective == "exact-bp":
        if target is None:
            raise InstanceError("exact-bp needs a target count")
        matching_t = solve_exact_bp(relaxed, target)
        if matching_t is None:
            return None
        count = target
    else:
        raise InstanceError(f"unknown quality objective: {objective}")

    matrix = matching_to_counts(inst, matching_t)
    matching = realize_refined(inst, matrix, require_stable=False)
    report = blocking_report(inst, matching)
    got = len(report.blocking_agents()) if objective == "min-ba" else report.count
    if got > count:
        raise RuntimeError("realization introduced new blocking pairs")
    if got < count and not truncated:
        raise RuntimeError("realization lost blocking pairs without truncation")
    if objective == "exact-bp":
        if got != target:
            raise RealizationError(
                "truncation changed the block count; no exact witness this way")
        return matching
    return got, matching


@dataclass(frozen=True)
class StrictTypesReport:
    """What exhaustive enumeration says about a strict-preference
    instance and its consistently tie-broken agent-level version.

    `sizes` and `tiebroken_sizes` hold the distinct stable-matching
    cardinalities of each; an empty tuple means no stable matching.
    """

    sizes: tuple
    tiebroken_sizes: tuple

    @property
    def uniform_size(self) -> bool:
        return len(self.sizes) <= 1

    @property
    def existence_preserved(self) -> bool:
        return bool(self.sizes) == bool(self.tiebroken_sizes)


def _index_refinements(inst):
    """Refinements listing every candidate singly, types in preference
    order, members by index: the canonical consistent tie-break."""
    refinements = {}
    for i in inst.real_type_ids:
        groups = []
        for g in inst.pref(i).groups:
            for t in sorted(g):
                groups.extend((a,) for a in inst.type_agents(t))
        if groups:
            refinements[i] = tuple(groups)
    return refinements


def verify_strict_types(inst: TypedInstance) -> StrictTypesReport:
    """Exhaustively check the strict-preference promises: every stable
    matching has the same size, and breaking within-type ties the same
    way for everyone preserves whether a stable matching exists.

    Requires strict type-level lists and a brute-forceable size.
    """
    if inst.problem_kind not in ("smti", "srti"):
        raise InstanceError("strict-type verification covers one-to-one kinds")
    for i in inst.real_type_ids:
        if any(len(g) > 1 for g in inst.pref(i).groups):
            raise InstanceError(f"type {i} has tied type preferences")
    base = strip_refinements(inst)
    stable = stable_matchings_brute(base)
    broken = TypedInstance(base.problem_kind, list(base.types),
                           refinements=_index_refinements(base))
    broken_stable = stable_matchings_brute(broken)
    return StrictTypesReport(tuple(sorted({m.size for m in stable})),
                             tuple(sorted({m.size for m in broken_stable})))
