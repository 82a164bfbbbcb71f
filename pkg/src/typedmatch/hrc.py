"""Hospitals/residents with couples on typed instances.

A couple applies as one unit, ranking ordered pairs of hospital types
jointly, and its two seats may land at different hospitals of those
types.  That breaks the count-level guarantees the other solvers rest
on: stable matchings can fail to exist, and whether a matching is
blocked depends on how seats split across the individual hospitals of a
type.  The default solver therefore searches canonical seat assignments
at hospital granularity and trusts only the agent-level blocking
analysis.  The profile route (worst maps plus couple placement
indicators, a four-condition stability test, a count program per
surviving profile) is also provided: it is exact on couple-free
instances but knowingly unsound with couples, because its test pools
seats per hospital type and its witness rows insist on single
residents; see hrc_profile_stable and the tests for concrete
divergences.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from itertools import combinations, product

from . import smallip
from .core import (AgentMatching, InstanceError, TypedInstance,
                   normalize_with_dummies)
from .oracle import blocking_report, couple_rank
from .smallip import Infeasible, IntegerProgram
from .typed import NoStableError, _require_normalized

__all__ = [
    "HrcProfile",
    "enumerate_hrc_profiles",
    "hrc_blocking_report",
    "hrc_profile_is_feasible",
    "hrc_profile_stable",
    "induced_hrc_profile",
    "solve_max_hrc",
]


class HrcProfile:
    """Hypothesized worst-assignment summary of a couples matching.

    worst_single maps each resident type with singles to the hospital
    type (or dummy) its worst-off single receives; worst_couple maps
    each couple-type pair to its least preferred realized hospital-type
    pair; worst_hospital and secondworst give the one (or two) least
    desirable resident types seated per hospital type, dummy seats
    included, secondworst only where the type has two or more seats;
    assigned is the set of ((i, j), (p, q)) couple placements that occur
    at all.
    """

    __slots__ = ("worst_single", "worst_couple", "worst_hospital",
                 "secondworst", "assigned")

    def __init__(self, worst_single, worst_couple, worst_hospital,
                 secondworst, assigned):
        self.worst_single = dict(worst_single)
        self.worst_couple = dict(worst_couple)
        self.worst_hospital = dict(worst_hospital)
        self.secondworst = dict(secondworst)
        self.assigned = frozenset(assigned)

    def key(self):
        return (tuple(sorted(self.worst_single.items())),
                tuple(sorted(self.worst_couple.items())),
                tuple(sorted(self.worst_hospital.items())),
                tuple(sorted(self.secondworst.items())),
                tuple(sorted(self.assigned)))

    def __eq__(self, other):
        return isinstance(other, HrcProfile) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (f"HrcProfile({self.worst_single!r}, {self.worst_couple!r}, "
                f"{self.worst_hospital!r}, {self.secondworst!r}, "
                f"{sorted(self.assigned)!r})")


def _require_hrc(inst: TypedInstance):
    if inst.problem_kind != "hrc":
        raise InstanceError("operation needs an hrc instance")


def _live_singles(inst: TypedInstance) -> list[int]:
    return [i for i in inst.real_type_ids
            if inst.side(i) == "r" and inst.count(i) > 0]


def _live_hospitals(inst: TypedInstance) -> list[int]:
    return [p for p in inst.real_type_ids
            if inst.side(p) == "h" and inst.count(p) > 0]


def _live_couples(inst: TypedInstance):
    return sorted((ct for ct in inst.couples if ct.count > 0),
                  key=lambda ct: (ct.first, ct.second))


def _seats(inst: TypedInstance, p: int) -> int:
    return inst.count(p) * inst.capacity(p)


def _member_supply(inst: TypedInstance, t: int) -> int:
    """Residents of type t available at all: singles plus couple members."""
    total = inst.count(t)
    for ct in inst.couples:
        total += ct.count * ((ct.first == t) + (ct.second == t))
    return total


# -- agent-level blocking --------------------------------------------------


def hrc_blocking_report(inst: TypedInstance, matching: AgentMatching):
    """Agent-level blocking analysis, validity enforced first: singles sit
    at hospitals that mutually accept them, couples are jointly placed at
    a pair from their joint list or jointly unmatched."""
    _require_hrc(inst)
    for i in _live_singles(inst):
        for a in inst.type_agents(i):
            h = matching.partner(a)
            if h is None:
                continue
            p = inst.agent_type(h)
            if not inst.pref(i).accepts(p) or not inst.pref(p).accepts(i):
                raise InstanceError(
                    f"matched pair ({a}, {h}) is not mutually acceptable")
    for (cid, m1, m2, ct) in inst.couple_rows():
        h1 = matching.partner(m1)
        if h1 is None:
            continue
        h2 = matching.partner(m2)
        p, q = inst.agent_type(h1), inst.agent_type(h2)
        if couple_rank(ct, p, q) is None:
            raise InstanceError(f"couple {cid} placed at unlisted pair ({p},{q})")
        if not inst.pref(p).accepts(ct.first) or not inst.pref(q).accepts(ct.second):
            raise InstanceError(f"couple {cid} is not acceptable to its hospitals")
    return blocking_report(inst, matching)


# -- profiles --------------------------------------------------------------


def induced_hrc_profile(inst: TypedInstance, matching: AgentMatching) -> HrcProfile:
    """The worst-assignment summary a concrete matching realizes.

    Ties at the worst rank resolve to the smallest type id (smallest
    pair for couples); unmatched agents and free seats count as dummies.
    """
    dummy = _require_normalized(inst)
    worst_single: dict[int, int] = {}
    for i in _live_singles(inst):
        pref = inst.pref(i)
        got = []
        for a in inst.type_agents(i):
            h = matching.partner(a)
            got.append(dummy if h is None else inst.agent_type(h))
        got.sort(key=lambda t: (-pref.rank(t), t))
        worst_single[i] = got[0]

    worst_couple: dict[tuple[int, int], tuple[int, int]] = {}
    assigned: set = set()
    rows_of: dict[tuple[int, int], list] = {}
    ct_of: dict[tuple[int, int], object] = {}
    for (_, m1, m2, ct) in inst.couple_rows():
        pair = (ct.first, ct.second)
        ct_of[pair] = ct
        rows_of.setdefault(pair, []).append((m1, m2))
    for pair in sorted(rows_of):
        ct = ct_of[pair]
        got = []
        for (m1, m2) in rows_of[pair]:
            h1, h2 = matching.partner(m1), matching.partner(m2)
            pq = (dummy, dummy) if h1 is None else \
                (inst.agent_type(h1), inst.agent_type(h2))
            got.append(pq)
            assigned.add((pair, pq))
        got.sort(key=lambda pq: (-couple_rank(ct, *pq), pq))
        worst_couple[pair] = got[0]

    worst_hospital: dict[int, int] = {}
    secondworst: dict[int, int] = {}
    for p in _live_hospitals(inst):
        pref = inst.pref(p)
        seats: list[int] = []
        for h in inst.type_agents(p):
            types = [inst.agent_type(r) for r in matching.assignees(h)]
            seats.extend(types)
            seats.extend([dummy] * (inst.capacity(p) - len(types)))
        seats.sort(key=lambda t: (-pref.rank(t), t))
        worst_hospital[p] = seats[0]
        if len(seats) >= 2:
            secondworst[p] = seats[1]
    return HrcProfile(worst_single, worst_couple, worst_hospital,
                      secondworst, assigned)


def hrc_profile_is_feasible(inst: TypedInstance, prof: HrcProfile) -> bool:
    dummy = _require_normalized(inst)
    cts = {(ct.first, ct.second): ct for ct in _live_couples(inst)}
    hospitals = _live_hospitals(inst)
    if sorted(prof.worst_single) != _live_singles(inst):
        return False
    if sorted(prof.worst_couple) != sorted(cts):
        return False
    if sorted(prof.worst_hospital) != hospitals:
        return False
    if sorted(prof.secondworst) != [p for p in hospitals if _seats(inst, p) >= 2]:
        return False
    for i, p in prof.worst_single.items():
        if not inst.pref(i).accepts(p):
            return False
    for pair, pq in prof.worst_couple.items():
        if couple_rank(cts[pair], *pq) is None:
            return False
    for p, t in prof.worst_hospital.items():
        if not inst.pref(p).accepts(t):
            return False
    for p, t in prof.secondworst.items():
        pref = inst.pref(p)
        if not pref.accepts(t):
            return False
        if pref.rank(t) > pref.rank(prof.worst_hospital[p]):
            return False
        if t == prof.worst_hospital[p] and t != dummy and _member_supply(inst, t) < 2:
            return False
    per_pair: dict[tuple[int, int], int] = {pair: 0 for pair in cts}
    for (pair, pq) in prof.assigned:
        if pair not in cts:
            return False
        r = couple_rank(cts[pair], *pq)
        if r is None or r > couple_rank(cts[pair], *prof.worst_couple[pair]):
            return False
        per_pair[pair] += 1
    for pair, ct in cts.items():
        if (pair, prof.worst_couple[pair]) not in prof.assigned:
            return False
        if per_pair[pair] > ct.count:
            return False
    return True


def _subsets_upto(items, maxn):
    for r in range(min(len(items), maxn) + 1):
        yield from combinations(items, r)


def enumerate_hrc_profiles(inst: TypedInstance):
    """Feasible profiles in deterministic order.

    Assigned sets are pruned at the source: entries stay within the
    couple's pairs at least as good as its declared worst, never
    outnumber the couples, and always include the worst pair itself.
    """
    dummy = _require_normalized(inst)
    singles = _live_singles(inst)
    hospitals = _live_hospitals(inst)
    cts = _live_couples(inst)

    def hosp_options(p):
        pref = inst.pref(p)
        out = []
        for w in sorted(pref.acceptable):
            if _seats(inst, p) < 2:
                out.append((w, None))
                continue
            for sw in sorted(pref.acceptable):
                if pref.rank(sw) > pref.rank(w):
                    continue
                if sw == w and sw != dummy and _member_supply(inst, sw) < 2:
                    continue
                out.append((w, sw))
        return out

    def couple_options(ct):
        pairs = [pq for grp in ct.pref for pq in sorted(grp)]
        out = []
        for w in pairs:
            wr = couple_rank(ct, *w)
            peers = [pq for pq in pairs
                     if pq != w and couple_rank(ct, *pq) <= wr]
            for extra in _subsets_upto(peers, ct.count - 1):
                out.append((w, frozenset(extra) | {w}))
        return out

    s_opts = [sorted(inst.pref(i).acceptable) for i in singles]
    h_opts = [hosp_options(p) for p in hospitals]
    c_opts = [couple_options(ct) for ct in cts]

    for svals in product(*s_opts):
        ws = dict(zip(singles, svals))
        for hvals in product(*h_opts):
            wh = {p: w for p, (w, _) in zip(hospitals, hvals)}
            sw = {p: s for p, (_, s) in zip(hospitals, hvals) if s is not None}
            for cvals in product(*c_opts):
                wc = {}
                asg = set()
                for ct, (w, entries) in zip(cts, cvals):
                    pair = (ct.first, ct.second)
                    wc[pair] = w
                    asg |= {(pair, pq) for pq in entries}
                yield HrcProfile(ws, wc, wh, sw, asg)


def hrc_profile_stable(inst: TypedInstance, prof: HrcProfile) -> bool:
    """True when none of the four type-level blocking conditions fires.

    The conditions mirror the agent-level analysis through worst maps
    alone and are exact on couple-free instances.  With couples they
    overreach: a hospital type's pooled worst seat may be the moving
    member's own partner, whom the agent-level definition exempts, so
    stable matchings can be rejected here (the solver's profile mode
    inherits that; the tests pin a concrete instance).  Conditions are
    evaluated as stated, including the scan over every assigned pair for
    every hospital type in the one-member case.
    """
    _require_normalized(inst)
    if not hrc_profile_is_feasible(inst, prof):
        raise InstanceError(f"infeasible profile {prof!r}")
    cts = {(ct.first, ct.second): ct for ct in _live_couples(inst)}
    hospitals = _live_hospitals(inst)

    def takes(p, t):
        """Hospital type p strictly prefers resident type t to its worst seat."""
        pref = inst.pref(p)
        return pref.accepts(t) and pref.rank(t) < pref.rank(prof.worst_hospital[p])

    # a single resident and a hospital improving on both worsts
    for i, wi in prof.worst_single.items():
        pref = inst.pref(i)
        for p in hospitals:
            if pref.accepts(p) and pref.rank(p) < pref.rank(wi) and takes(p, i):
                return False
    for pair, ct in sorted(cts.items()):
        i, j = pair
        wrank = couple_rank(ct, *prof.worst_couple[pair])
        # one member redirected while the other stays put
        for (apair, (p, q)) in prof.assigned:
            if apair != pair:
                continue
            cur = couple_rank(ct, p, q)
            for ell in hospitals:
                if takes(ell, i):
                    r = couple_rank(ct, ell, q)
                    if r is not None and r < cur:
                        return False
                if takes(ell, j):
                    r = couple_rank(ct, p, ell)
                    if r is not None and r < cur:
                        return False
        # both members into hospitals of two distinct types
        for ell in hospitals:
            if not takes(ell, i):
                continue
            for p in hospitals:
                if p == ell or not takes(p, j):
                    continue
                r = couple_rank(ct, ell, p)
                if r is not None and r < wrank:
                    return False
        # both members into one hospital type: its two least desirable
        # seats must both resist
        for ell in hospitals:
            if _seats(inst, ell) < 2:
                continue
            r = couple_rank(ct, ell, ell)
            if r is None or r >= wrank:
                continue
            if takes(ell, i) and takes(ell, j):
                pref = inst.pref(ell)
                swr = pref.rank(prof.secondworst[ell])
                if pref.rank(i) < swr or pref.rank(j) < swr:
                    return False
    return True


# -- realization: count program -------------------------------------------


def _build_hrc_program(inst: TypedInstance, prof: HrcProfile):
    """Count program for the largest matching realizing the profile.

    Variables exist only where resident, hospital, and couple worsts all
    tolerate the assignment, which folds the worst-compliance sums into
    the row sums.  The witness rows are kept exactly as the count
    formulation states them: the hospital worst witness is a singles
    count even where only a couple member could occupy that seat, so
    profiles realized purely by couples come out infeasible here.
    """
    dummy = _require_normalized(inst)
    ip = IntegerProgram()
    singles = _live_singles(inst)
    hospitals = _live_hospitals(inst)
    cts = _live_couples(inst)

    svar: dict[tuple[int, int], str] = {}
    for i in singles:
        pref = inst.pref(i)
        wrank = pref.rank(prof.worst_single[i])
        for p in hospitals + [dummy]:
            if not pref.accepts(p) or pref.rank(p) > wrank:
                continue
            if p != dummy:
                hpref = inst.pref(p)
                if not hpref.accepts(i) or \
                        hpref.rank(i) > hpref.rank(prof.worst_hospital[p]):
                    continue
            name = f"s_{i}_{p}"
            ip.add_var(name, 0, inst.count(i))
            svar[(i, p)] = name

    cvar: dict[tuple, str] = {}
    for ct in cts:
        pair = (ct.first, ct.second)
        wrank = couple_rank(ct, *prof.worst_couple[pair])
        for grp in ct.pref:
            for (p, q) in sorted(grp):
                if (p == dummy) != (q == dummy):
                    continue
                if couple_rank(ct, p, q) > wrank:
                    continue
                ok = True
                for (t, m) in ((p, ct.first), (q, ct.second)):
                    if t == dummy:
                        continue
                    if t not in prof.worst_hospital:
                        ok = False
                        break
                    hpref = inst.pref(t)
                    if not hpref.accepts(m) or \
                            hpref.rank(m) > hpref.rank(prof.worst_hospital[t]):
                        ok = False
                        break
                if ok:
                    name = f"c_{ct.first}_{ct.second}_{p}_{q}"
                    ip.add_var(name, 0, ct.count)
                    cvar[(pair, (p, q))] = name

    dvar: dict[int, str] = {}
    for p in hospitals:
        if prof.worst_hospital[p] == dummy:
            name = f"d_{p}"
            ip.add_var(name, 0, _seats(inst, p))
            dvar[p] = name

    def witness(var_map, key, lo):
        name = var_map.get(key)
        if name is None:
            raise Infeasible(f"no variable can witness {key}")
        ip.add_constraint({name: 1}, ">=", lo)

    for i in singles:
        row = {name: 1 for (ii, _), name in svar.items() if ii == i}
        ip.add_constraint(row, "=", inst.count(i))
        witness(svar, (i, prof.worst_single[i]), 1)
    for ct in cts:
        pair = (ct.first, ct.second)
        row = {name: 1 for (pp, _), name in cvar.items() if pp == pair}
        ip.add_constraint(row, "=", ct.count)
        witness(cvar, (pair, prof.worst_couple[pair]), 1)
    for p in hospitals:
        row: dict[str, int] = {}
        for (i, pp), name in svar.items():
            if pp == p:
                row[name] = row.get(name, 0) + 1
        for ((_, _), (pp, qq)), name in cvar.items():
            w = (pp == p) + (qq == p)
            if w:
                row[name] = row.get(name, 0) + w
        if p in dvar:
            row[dvar[p]] = 1
        ip.add_constraint(row, "=", _seats(inst, p))
        w = prof.worst_hospital[p]
        if w == dummy:
            witness(dvar, p, 1)
        else:
            witness(svar, (w, p), 1)

    for p in hospitals:
        sw = prof.secondworst.get(p)
        if sw is None:
            continue
        pref = inst.pref(p)
        w = prof.worst_hospital[p]
        band = {name: 1 for (i, pp), name in svar.items()
                if pp == p and pref.rank(sw) < pref.rank(i) < pref.rank(w)}
        if band:
            ip.add_constraint(band, "=", 0)

        def seat_var(t):
            return dvar.get(p) if t == dummy else svar.get((t, p))

        if sw == w:
            name = seat_var(w)
            if name is None:
                raise Infeasible(f"no variable can witness two {w} seats at {p}")
            ip.add_constraint({name: 1}, ">=", 2)
        else:
            na, nb = seat_var(w), seat_var(sw)
            if na is None or nb is None:
                raise Infeasible(f"no variables can witness the worst seats at {p}")
            ip.add_constraint({na: 1, nb: 1}, ">=", 2)

    for (pair, pq) in sorted(prof.assigned):
        witness(cvar, (pair, pq), 1)

    obj: dict[str, int] = {}
    for (_, p), name in svar.items():
        if p != dummy:
            obj[name] = 1
    for ((_, _), (p, _)), name in cvar.items():
        if p != dummy:
            obj[name] = 2
    ip.set_objective("max", obj)
    return ip, svar, cvar, dvar


def _max_realising_hrc(inst: TypedInstance, prof: HrcProfile):
    """(matched residents, singles counts, couple counts) maximizing the
    realization of prof, or raise Infeasible."""
    ip, svar, cvar, _ = _build_hrc_program(inst, prof)
    value, assignment = smallip.solve(ip)
    scount = {key: assignment[name] for key, name in svar.items()
              if assignment[name]}
    ccount = {key: assignment[name] for key, name in cvar.items()
              if assignment[name]}
    return value, scount, ccount


def _counts_to_hrc_matching(inst: TypedInstance, dummy: int,
                            scount, ccount) -> AgentMatching:
    """Greedy agent realization of a count solution; the counts fill each
    hospital type exactly, so seat-by-seat filling cannot fail."""
    room = {h: inst.capacity(p) for p in _live_hospitals(inst)
            for h in inst.type_agents(p)}
    by_type = {p: list(inst.type_agents(p)) for p in _live_hospitals(inst)}

    def take_seat(p):
        for h in by_type[p]:
            if room[h] > 0:
                room[h] -= 1
                return h
        raise InstanceError("count solution overfills a hospital type")

    pairs: list[tuple[str, str]] = []
    queues = {i: list(inst.type_agents(i)) for i in _live_singles(inst)}
    for (i, p), cnt in sorted(scount.items()):
        if p == dummy:
            continue
        for _ in range(cnt):
            pairs.append((queues[i].pop(0), take_seat(p)))
    rows_of: dict[tuple[int, int], list] = {}
    for (_, m1, m2, ct) in inst.couple_rows():
        rows_of.setdefault((ct.first, ct.second), []).append((m1, m2))
    for (pair, (p, q)), cnt in sorted(ccount.items()):
        if p == dummy:
            continue
        for _ in range(cnt):
            m1, m2 = rows_of[pair].pop(0)
            pairs.append((m1, take_seat(p)))
            pairs.append((m2, take_seat(q)))
    return AgentMatching(inst, pairs)


# -- canonical seat search -------------------------------------------------


def _search_exact(inst: TypedInstance):
    """Largest stable matching by canonical count search, or None.

    Residents of a type are interchangeable, as are the couples of a
    block, so only the counts per (type, hospital) and per (block,
    ordered hospital pair) matter; one canonical realization per count
    vector is checked with the agent-level blocking analysis.  Option
    indices are forced non-decreasing within each block and type, which
    enumerates every count vector exactly once.
    """
    hospitals = [h for p in inst.real_type_ids if inst.side(p) == "h"
                 for h in inst.type_agents(p)]
    room = {h: inst.agent_capacity(h) for h in hospitals}

    rows_of: dict[tuple[int, int], list] = {}
    ct_of: dict[tuple[int, int], object] = {}
    for (_, m1, m2, ct) in inst.couple_rows():
        pair = (ct.first, ct.second)
        ct_of[pair] = ct
        rows_of.setdefault(pair, []).append((m1, m2))

    def couple_pairs(ct):
        out = []
        for ha in hospitals:
            pa = inst.agent_type(ha)
            if not inst.pref(pa).accepts(ct.first):
                continue
            for hb in hospitals:
                pb = inst.agent_type(hb)
                if not inst.pref(pb).accepts(ct.second):
                    continue
                if couple_rank(ct, pa, pb) is not None:
                    out.append((ha, hb))
        return out

    blocks = [(ct_of[pair], rows_of[pair], couple_pairs(ct_of[pair]))
              for pair in sorted(rows_of)]
    single_rows = []
    for i in _live_singles(inst):
        opts = [h for h in hospitals
                if inst.pref(i).accepts(inst.agent_type(h))
                and inst.pref(inst.agent_type(h)).accepts(i)]
        single_rows.append((inst.type_agents(i), opts))

    total_units = 2 * sum(len(rows) for (_, rows, _) in blocks) + \
        sum(len(agents) for (agents, _) in single_rows)
    placements: list[tuple[str, str]] = []
    best: list = [None, None]

    def finish(placed):
        if best[0] is not None and placed <= best[0]:
            return
        m = AgentMatching(inst, list(placements))
        if blocking_report(inst, m).stable:
            best[0], best[1] = placed, m

    def place_singles(si, ai, oi, placed, rem):
        if best[0] is not None and placed + rem <= best[0]:
            return
        if si == len(single_rows):
            finish(placed)
            return
        agents, opts = single_rows[si]
        if ai == len(agents):
            place_singles(si + 1, 0, 0, placed, rem)
            return
        for o in range(oi, len(opts)):
            h = opts[o]
            if room[h] < 1:
                continue
            room[h] -= 1
            placements.append((agents[ai], h))
            place_singles(si, ai + 1, o, placed + 1, rem - 1)
            placements.pop()
            room[h] += 1
        # this agent and the rest of its type stay unmatched
        place_singles(si + 1, 0, 0, placed, rem - (len(agents) - ai))

    def place_couples(bi, ri, oi, placed, rem):
        if best[0] is not None and placed + rem <= best[0]:
            return
        if bi == len(blocks):
            place_singles(0, 0, 0, placed, rem)
            return
        _, rows, opts = blocks[bi]
        if ri == len(rows):
            place_couples(bi + 1, 0, 0, placed, rem)
            return
        m1, m2 = rows[ri]
        for o in range(oi, len(opts)):
            ha, hb = opts[o]
            if ha == hb:
                if room[ha] < 2:
                    continue
            elif room[ha] < 1 or room[hb] < 1:
                continue
            room[ha] -= 1
            room[hb] -= 1
            placements.append((m1, ha))
            placements.append((m2, hb))
            place_couples(bi, ri + 1, o, placed + 2, rem - 2)
            placements.pop()
            placements.pop()
            room[ha] += 1
            room[hb] += 1
        # this couple and the rest of its block stay unmatched
        place_couples(bi + 1, 0, 0, placed, rem - 2 * (len(rows) - ri))

    place_couples(0, 0, 0, 0, total_units)
    if best[0] is None:
        return None
    return best[0], best[1]


# -- solver ----------------------------------------------------------------


def solve_max_hrc(inst: TypedInstance, jobs: int | None = None,
                  mode: str = "auto"):
    """(matched residents, matching) maximizing matched residents over
    all stable matchings; raises NoStableError when none exists.

    mode "exact" searches canonical seat assignments and trusts only the
    agent-level blocking analysis.  mode "profile" enumerates worst-map
    profiles, filters them with the type-level test and realizes
    survivors through the count program; with couples that route is
    unsound (see hrc_profile_stable), so "auto" takes it only on
    couple-free instances.  jobs parallelizes the profile evaluations.
    """
    _require_hrc(inst)
    if mode not in ("auto", "exact", "profile"):
        raise InstanceError(f"unknown mode {mode!r}")
    if mode == "auto":
        mode = "exact" if inst.couple_rows() else "profile"
    if mode == "exact":
        got = _search_exact(inst)
        if got is None:
            raise NoStableError("no stable matching exists")
        return got

    base = inst if inst.dummy_type is not None else normalize_with_dummies(inst)
    profiles = list(enumerate_hrc_profiles(base))

    def evaluate(prof):
        if not hrc_profile_stable(base, prof):
            return None
        try:
            return _max_realising_hrc(base, prof)
        except Infeasible:
            return None

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(evaluate, profiles))
    else:
        results = map(evaluate, profiles)
    best = None
    for res in results:
        if res is None:
            continue
        value, scount, ccount = res
        if best is None or value > best[0]:
            best = (value, scount, ccount)
    if best is None:
        raise NoStableError("no stable matching exists")
    value, scount, ccount = best
    return value, _counts_to_hrc_matching(inst, base.dummy_type, scount, ccount)
