"""Seeded random instance generators for property suites and the CLI.

Every generator is a pure function of (seed, shape): equal arguments yield
equal instances, hence byte-identical files after serialization, on any
platform.  Defaults are sized for the exhaustive reference checkers, whose
enumeration caps bound how large a verifiable instance can be.
"""

from __future__ import annotations

import random

from .core import (CoupleType, ExceptionEntry, InstanceError, TypedInstance,
                   TypeInfo, TypePreference)

MODELS = ("typed", "refined", "1top", "hrc")


def _check_shape(ok: bool, msg: str) -> None:
    if not ok:
        raise InstanceError(f"inconsistent shape: {msg}")


def _tie_groups(rng, candidates, *, tie, accept):
    """Grouped ranking over a random nonempty subset of candidates.

    accept is each candidate's chance of making the list; tie is the chance
    a group keeps growing past each member.
    """
    pool = [t for t in candidates if rng.random() < accept]
    if not pool and candidates:
        pool = [rng.choice(list(candidates))]
    rng.shuffle(pool)
    groups: list[list[int]] = []
    cur: list[int] = []
    for t in pool:
        cur.append(t)
        if rng.random() >= tie:
            groups.append(cur)
            cur = []
    if cur:
        groups.append(cur)
    return groups


def _draw_sides(rng, kind: str, k: int) -> list[str]:
    if kind == "srti":
        return ["none"] * k
    a, b = ("m", "w") if kind == "smti" else ("r", "h")
    sides = [a if rng.random() < 0.5 else b for _ in range(k)]
    if len(set(sides)) == 1:
        # both sides must be inhabited for anything to match
        sides[rng.randrange(k)] = b if sides[0] == a else a
    return sides


def _draw_counts(rng, k, counts, sides, max_count) -> list[int]:
    if counts is not None:
        counts = [int(c) for c in counts]
        _check_shape(len(counts) == k, f"expected {k} counts, got {len(counts)}")
        _check_shape(all(c >= 0 for c in counts), "counts must be non-negative")
        return counts
    drawn = [rng.randint(0, max_count) for _ in range(k)]
    by_side: dict[str, list[int]] = {}
    for i, s in enumerate(sides):
        by_side.setdefault(s, []).append(i)
    for idxs in by_side.values():
        if all(drawn[i] == 0 for i in idxs):
            drawn[rng.choice(idxs)] = 1
    return drawn


def _typed_body(rng, kind, k, counts, tie, accept, max_count, max_cap):
    sides = _draw_sides(rng, kind, k)
    counts = _draw_counts(rng, k, counts, sides, max_count)
    types = []
    for tid in range(1, k + 1):
        side = sides[tid - 1]
        if kind == "srti":
            cands = list(range(1, k + 1))
        else:
            cands = [t for t in range(1, k + 1) if sides[t - 1] != side]
        cap = rng.randint(1, max_cap) if kind == "hrt" and side == "h" else 1
        pref = TypePreference(_tie_groups(rng, cands, tie=tie, accept=accept))
        types.append(TypeInfo(side, counts[tid - 1], pref, capacity=cap))
    return types


def gen_typed(seed, *, kind="smti", k=4, counts=None, tie=0.4, accept=0.8,
              max_count=3, max_cap=2) -> TypedInstance:
    """Plain typed instance; kind picks two-sided, one-sided, or capacitated."""
    _check_shape(kind in ("smti", "srti", "hrt"), f"kind {kind!r} has no typed generator")
    _check_shape(k >= 1, "k must be positive")
    _check_shape(kind == "srti" or k >= 2, f"{kind} needs at least two types")
    _check_shape(counts is not None or max_count >= 1, "max_count must be positive")
    rng = random.Random(seed)
    types = _typed_body(rng, kind, k, counts, tie, accept, max_count, max_cap)
    return TypedInstance(kind, types)


def _refine_groups(rng, inst, viewer, tie):
    """Agent-level tie-break of the viewer's list, one shared order per type.

    A declared tie spanning several inhabited types is full indifference
    between their members, so it stays one block; a single-type group may
    split into smaller consecutive ties.
    """
    out = []
    for declared in inst.pref(viewer).groups:
        live = sorted(t for t in declared if inst.count(t) > 0)
        if not live:
            continue
        if len(live) > 1:
            members = [a for t in live for a in inst.type_agents(t)]
            rng.shuffle(members)
            out.append(tuple(members))
            continue
        members = list(inst.type_agents(live[0]))
        rng.shuffle(members)
        cur = []
        for a in members:
            cur.append(a)
            if rng.random() >= tie:
                out.append(tuple(cur))
                cur = []
        if cur:
            out.append(tuple(cur))
    return out


def gen_refined(seed, *, kind="smti", k=4, counts=None, tie=0.5, accept=0.85,
                max_count=3, refine_prob=0.8) -> TypedInstance:
    """Typed instance plus shared agent-level tie-breaks for some types."""
    _check_shape(kind in ("smti", "srti"), "refinements target one-partner kinds")
    _check_shape(k >= 1, "k must be positive")
    _check_shape(kind == "srti" or k >= 2, f"{kind} needs at least two types")
    rng = random.Random(seed)
    types = _typed_body(rng, kind, k, counts, tie, accept, max_count, 1)
    base = TypedInstance(kind, types)
    eligible = [v for v in range(1, k + 1)
                if base.count(v) > 0
                and any(base.count(t) > 0 for t in base.pref(v).acceptable)]
    refinements = {}
    for viewer in eligible:
        if rng.random() < refine_prob:
            refinements[viewer] = _refine_groups(rng, base, viewer, tie)
    if not refinements and eligible:
        viewer = rng.choice(eligible)
        refinements[viewer] = _refine_groups(rng, base, viewer, tie)
    return TypedInstance(kind, types, refinements=refinements)


def gen_1top(seed, *, k=4, counts=None, tie=0.4, accept=0.8, max_count=2,
             except_prob=0.3) -> TypedInstance:
    """Two-sided typed instance where some agents promote one candidate
    from the other side to the strict top of their list.

    except_prob 0 leaves the instance plain typed.
    """
    _check_shape(k >= 2, "two-sided instances need at least two types")
    _check_shape(0.0 <= except_prob <= 1.0, "except_prob must be a probability")
    rng = random.Random(seed)
    types = _typed_body(rng, "smti", k, counts, tie, accept, max_count, 1)
    base = TypedInstance("smti", types)
    entries = []
    for agent in base.agents():
        if rng.random() >= except_prob:
            continue
        side = base.side(base.agent_type(agent))
        others = [b for b in base.agents()
                  if base.side(base.agent_type(b)) != side]
        if others:
            entries.append(ExceptionEntry(agent, rng.choice(others), ("top",)))
    if not entries:
        return base
    return TypedInstance("smti", types, exceptions=entries)


def _couple_pref(rng, htypes, tie, accept):
    allpairs = [(p, q) for p in htypes for q in htypes]
    pool = [pq for pq in allpairs if rng.random() < accept]
    rng.shuffle(pool)
    groups: list[tuple] = []
    cur: list[tuple[int, int]] = []
    for pq in pool:
        cur.append(pq)
        if rng.random() >= tie:
            groups.append(tuple(cur))
            cur = []
    if cur:
        groups.append(tuple(cur))
    return tuple(groups)


def gen_hrc(seed, *, k_r=2, k_h=2, counts=None, tie=0.4, accept=0.8,
            max_count=2, max_cap=2, couple_blocks=1) -> TypedInstance:
    """Hospitals/residents instance with jointly-listed resident couples.

    counts, when given, covers resident types then hospital types in id
    order and controls single residents only; each requested couple block
    is always emitted.
    """
    _check_shape(k_r >= 1 and k_h >= 1, "need at least one type per side")
    npairs = k_r * (k_r + 1) // 2
    _check_shape(0 <= couple_blocks <= npairs,
                 f"{k_r} resident types allow at most {npairs} couple blocks")
    rng = random.Random(seed)
    rtypes = list(range(1, k_r + 1))
    htypes = list(range(k_r + 1, k_r + k_h + 1))
    k = k_r + k_h
    if counts is not None:
        counts = [int(c) for c in counts]
        _check_shape(len(counts) == k, f"expected {k} counts, got {len(counts)}")
        _check_shape(all(c >= 0 for c in counts), "counts must be non-negative")
    pairs_all = [(i, j) for i in rtypes for j in rtypes if i <= j]
    rng.shuffle(pairs_all)
    couples = []
    for i, j in sorted(pairs_all[:couple_blocks]):
        cnt = rng.randint(1, max(1, min(2, max_count)))
        couples.append(CoupleType(i, j, cnt, _couple_pref(rng, htypes, tie, accept)))
    types = []
    for t in rtypes:
        c = counts[t - 1] if counts is not None else rng.randint(0, max_count)
        pref = TypePreference(_tie_groups(rng, htypes, tie=tie, accept=accept))
        types.append(TypeInfo("r", c, pref))
    for t in htypes:
        c = counts[t - 1] if counts is not None else rng.randint(1, max(1, max_count))
        cap = rng.randint(1, max_cap)
        pref = TypePreference(_tie_groups(rng, rtypes, tie=tie, accept=accept))
        types.append(TypeInfo("h", c, pref, capacity=cap))
    return TypedInstance("hrc", types, couples=couples)


def generate(model: str, seed: int, **shape) -> TypedInstance:
    """Dispatch by model name; shape keywords are model-specific."""
    if model == "typed":
        return gen_typed(seed, **shape)
    if model == "refined":
        return gen_refined(seed, **shape)
    if model == "1top":
        return gen_1top(seed, **shape)
    if model == "hrc":
        return gen_hrc(seed, **shape)
    raise InstanceError(f"unknown model {model!r}; pick one of {', '.join(MODELS)}")
