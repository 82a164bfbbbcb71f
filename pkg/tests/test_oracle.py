"""Brute-force reference implementations on small instances."""

import pytest
from hypothesis import given, settings, strategies as st

from conftest import ODD_CYCLE_TEXT, two_sided
from typedmatch.core import AgentMatching, expand_to_agent_level, parse_instance
from typedmatch.gen import gen_typed
from typedmatch.oracle import (OracleCapError, blocking_report,
                               com_stable_exists_brute,
                               com_stable_exists_plain, enumerate_matchings,
                               exact_bp_brute, max_stable_brute, min_ba_brute,
                               min_bp_brute, stable_matchings_brute)
from typedmatch.reductions import clique_to_com_smti, parse_graph

TRIANGLE = parse_graph("3 3\n0 1\n0 2\n1 2\n")
PATH3 = parse_graph("3 2\n0 1\n1 2\n")


# -- blocking reports ------------------------------------------------------


def test_man_settling_for_last_group_blocks_with_idle_women(paper_example):
    m = AgentMatching(paper_example, [("1.1", "4.1")])
    report = blocking_report(paper_example, m)
    assert ("pair", "1.1", "2.1") in report.events
    assert not report.stable
    assert "1.1" in report.blocking_agents()


def test_first_choice_matching_has_empty_report():
    inst = two_sided([[2]], [1], men_count=1)
    m = AgentMatching(inst, [("1.1", "2.1")])
    report = blocking_report(inst, m)
    assert report.stable and report.count == 0
    assert report.blocking_agents() == frozenset()


def test_idle_mutually_acceptable_pair_blocks():
    inst = two_sided([[2]], [1], men_count=1)
    report = blocking_report(inst, AgentMatching(inst, []))
    assert report.events == (("pair", "1.1", "2.1"),)


def test_blocking_agents_are_event_endpoints(paper_example):
    report = blocking_report(paper_example, AgentMatching(paper_example, []))
    expected = {a for ev in report.events for a in ev[1:]}
    assert report.blocking_agents() == frozenset(expected)


# -- matching enumeration --------------------------------------------------


def test_enumerate_single_pair():
    inst = two_sided([[2]], [1], men_count=1)
    assert len(list(enumerate_matchings(inst))) == 2


def test_enumerate_two_by_two_complete():
    inst = two_sided([[2]], [2], men_count=2)
    ms = list(enumerate_matchings(inst))
    assert len(ms) == 7
    assert len(set(ms)) == 7
    assert sorted(m.size for m in ms) == [0, 1, 1, 1, 1, 2, 2]


def test_enumerate_unacceptable_pair_gives_only_empty():
    inst = parse_instance("problem srti\ntypes 2\n"
                          "type 1 side=none count=1 prefs=2\n"
                          "type 2 side=none count=1 prefs=\n")
    ms = list(enumerate_matchings(inst))
    assert len(ms) == 1 and ms[0].size == 0


def test_enumeration_cap_is_enforced():
    inst = parse_instance("problem srti\ntypes 1\n"
                          "type 1 side=none count=11 prefs=1\n")
    with pytest.raises(OracleCapError):
        list(enumerate_matchings(inst))


# -- brute optima ----------------------------------------------------------


def test_max_stable_on_two_sided_example(paper_example):
    best = max_stable_brute(paper_example)
    assert best is not None and best.size == 3
    assert blocking_report(paper_example, best).stable


def test_max_stable_single_pair():
    inst = two_sided([[2]], [1], men_count=1)
    assert max_stable_brute(inst).size == 1


def test_odd_preference_cycle_has_no_stable_matching():
    inst = parse_instance(ODD_CYCLE_TEXT)
    assert max_stable_brute(inst) is None
    assert stable_matchings_brute(inst) == []


def test_min_bp_zero_when_complete_stable_exists():
    inst = two_sided([[2]], [2], men_count=2)
    m, count = min_bp_brute(inst, require_max_size=True)
    assert count == 0 and m.size == 2


def test_single_pair_matchings_on_two_by_two_leave_one_blocking_pair():
    inst = two_sided([[2]], [2], men_count=2)
    counts = [blocking_report(inst, m).count
              for m in enumerate_matchings(inst) if m.size == 1]
    assert min(counts) == 1


def test_odd_cycle_repair_costs():
    inst = parse_instance(ODD_CYCLE_TEXT)
    _, bp = min_bp_brute(inst)
    _, ba = min_ba_brute(inst)
    assert bp == 1 and ba == 2


def test_exact_bp_miss_returns_none(paper_example):
    assert exact_bp_brute(paper_example, 99) is None
    hit = exact_bp_brute(paper_example, 0)
    assert hit is not None and blocking_report(paper_example, hit).count == 0


# -- complete stable matchings ---------------------------------------------


def test_triangle_gadget_admits_complete_stable_matching():
    inst = clique_to_com_smti(TRIANGLE, 3)
    assert "trivial-no" not in inst.flags
    exists, witness = com_stable_exists_brute(inst)
    assert exists
    assert witness.matched_agents() == frozenset(inst.agents())
    assert blocking_report(inst, witness).stable


def test_path_gadget_admits_none():
    inst = clique_to_com_smti(PATH3, 3)
    assert "trivial-no" in inst.flags
    exists, witness = com_stable_exists_brute(inst)
    assert not exists and witness is None


def test_single_mutual_pair_is_completable():
    inst = two_sided([[2]], [1], men_count=1)
    exists, witness = com_stable_exists_brute(inst)
    assert exists and witness.size == 1


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 10_000))
def test_quotient_search_matches_plain_enumeration(seed):
    inst = gen_typed(seed, k=3, max_count=2)
    if inst.n > 8:
        return
    assert com_stable_exists_plain(inst)[0] == com_stable_exists_brute(inst)[0]


# -- cross-checks ----------------------------------------------------------


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_stable_set_agrees_with_blocking_reports(seed):
    inst = gen_typed(seed, kind="srti", k=3, max_count=2)
    if inst.n > 7:
        return
    stable = stable_matchings_brute(inst)
    for m in stable:
        assert blocking_report(inst, m).stable
    best = max_stable_brute(inst)
    if stable:
        assert best.size == max(m.size for m in stable)
    else:
        assert best is None


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_strict_singleton_instances_have_equal_size_stable_matchings(seed):
    # counts of 1 and no type-level ties keep the expanded lists strict
    inst = gen_typed(seed, kind="smti", k=5, tie=0.0, max_count=1)
    expanded = expand_to_agent_level(inst)
    assert all(len(g) == 1 for gs in expanded.values() for g in gs)
    sizes = {m.size for m in stable_matchings_brute(inst)}
    assert len(sizes) == 1
