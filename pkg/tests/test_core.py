"""Instance model: parsing, validation, expansion, type derivation."""

import pytest
from hypothesis import given, settings, strategies as st

from conftest import P, PAPER_EXAMPLE_TEXT, two_sided
from typedmatch.core import (AgentMatching, CoupleType, ExceptionEntry,
                             InstanceError, TypedInstance, TypeInfo,
                             agent_key, derive_types, expand_to_agent_level,
                             format_instance, format_matching,
                             normalize_with_dummies, parse_instance,
                             parse_matching)
from typedmatch.gen import gen_typed
from typedmatch.oracle import stable_matchings_brute


# -- parsing ---------------------------------------------------------------


def test_parse_two_sided_example():
    inst = parse_instance(PAPER_EXAMPLE_TEXT)
    assert inst.problem_kind == "smti"
    assert inst.k == 4
    assert inst.side(1) == "m" and inst.count(1) == 3
    assert [inst.count(t) for t in (2, 3, 4)] == [2, 2, 3]
    assert inst.pref(1).groups == (frozenset({2, 3}), frozenset({4}))
    assert all(inst.pref(t).groups == (frozenset({1}),) for t in (2, 3, 4))
    assert inst.n == 10


def test_parse_smallest_self_matching_type():
    inst = parse_instance("problem srti\ntypes 1\n"
                          "type 1 side=none count=2 prefs=1\n")
    assert inst.k == 1 and inst.n == 2
    expanded = expand_to_agent_level(inst)
    assert expanded["1.1"] == (("1.2",),)
    assert expanded["1.2"] == (("1.1",),)


def test_parse_rejects_same_side_preference():
    text = ("problem smti\ntypes 2\n"
            "type 1 side=m count=1 prefs=1\n"
            "type 2 side=w count=1 prefs=1\n")
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_parse_rejects_duplicate_tie_membership():
    text = ("problem smti\ntypes 2\n"
            "type 1 side=m count=1 prefs=(2 2)\n"
            "type 2 side=w count=1 prefs=1\n")
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_parse_rejects_unknown_type_id():
    text = ("problem smti\ntypes 2\n"
            "type 1 side=m count=1 prefs=9\n"
            "type 2 side=w count=1 prefs=1\n")
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_parse_error_carries_line_number():
    text = "problem smti\ntypes 2\nnot a real line\n"
    with pytest.raises(InstanceError, match="line 3"):
        parse_instance(text)


def test_parse_ignores_comments_and_blank_lines():
    text = "# a comment\n\n" + PAPER_EXAMPLE_TEXT
    assert parse_instance(text).k == 4


def test_format_parse_round_trip(paper_example):
    text = format_instance(paper_example)
    again = parse_instance(text)
    assert format_instance(again) == text


def test_capacity_reserved_for_hospital_side():
    with pytest.raises(InstanceError):
        TypedInstance("smti", [TypeInfo("m", 1, P([[2]]), capacity=2),
                               TypeInfo("w", 1, P([[1]]))])


def test_duplicate_couple_block_rejected():
    with pytest.raises(InstanceError, match="duplicate couple block"):
        TypedInstance("hrc", [
            TypeInfo("r", 0, P([[2]])),
            TypeInfo("h", 1, P([[1]])),
        ], couples=[CoupleType(1, 1, 1, (((2, 2),),)),
                    CoupleType(1, 1, 1, (((2, 2),),))])


def test_preference_groups_reject_internal_duplicates():
    with pytest.raises(InstanceError):
        P([[1, 2], [2]])


# -- dummy normalization ---------------------------------------------------


def test_normalize_appends_last_choice_type(paper_example):
    base = normalize_with_dummies(paper_example)
    assert base.dummy_type == 5
    assert base.pref(1).groups == (frozenset({2, 3}), frozenset({4}),
                                   frozenset({5}))
    assert base.pref(5).groups == (frozenset({1, 2, 3, 4}),)
    assert base.count(5) == paper_example.n
    assert base.type_agents(5) == ()


def test_normalize_refuses_double_application(paper_example):
    with pytest.raises(InstanceError):
        normalize_with_dummies(normalize_with_dummies(paper_example))


def test_normalize_extends_couple_lists():
    inst = TypedInstance("hrc", [
        TypeInfo("r", 0, P([[2]])),
        TypeInfo("h", 1, P([[1]])),
    ], couples=[CoupleType(1, 1, 1, (((2, 2),),))])
    base = normalize_with_dummies(inst)
    assert base.couples[0].pref[-1] == ((3, 3),)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_normalization_never_disturbs_stable_set(seed):
    inst = gen_typed(seed, k=3, max_count=2)
    if inst.n > 8:
        return
    plain = {m.pairs for m in stable_matchings_brute(inst)}
    dummied = {m.pairs for m in stable_matchings_brute(normalize_with_dummies(inst))}
    assert plain == dummied


# -- agent-level expansion -------------------------------------------------


def test_expand_two_sided_example(paper_example):
    expanded = expand_to_agent_level(paper_example)
    women_tie = ("2.1", "2.2", "3.1", "3.2")
    tail = ("4.1", "4.2", "4.3")
    for m in ("1.1", "1.2", "1.3"):
        assert expanded[m] == (women_tie, tail)
    men = ("1.1", "1.2", "1.3")
    for w in women_tie + tail:
        assert expanded[w] == (men,)


def test_expand_singleton_types_give_strict_lists():
    inst = two_sided([[2], [3]], [1, 1], men_count=1)
    expanded = expand_to_agent_level(inst)
    assert expanded["1.1"] == (("2.1",), ("3.1",))


def test_expand_applies_shared_refinement():
    inst = TypedInstance("srti", [TypeInfo("none", 6, P([[1]]))],
                         refinements={1: [("1.1", "1.2", "1.3"),
                                          ("1.4", "1.5", "1.6")]})
    expanded = expand_to_agent_level(inst)
    assert expanded["1.1"] == (("1.2", "1.3"), ("1.4", "1.5", "1.6"))
    assert expanded["1.5"] == (("1.1", "1.2", "1.3"), ("1.4", "1.6"))


def test_expand_preserves_acceptability(paper_example):
    expanded = expand_to_agent_level(paper_example)
    for a, groups in expanded.items():
        listed = {x for g in groups for x in g}
        want = {x for t in paper_example.pref(paper_example.agent_type(a)).acceptable
                for x in paper_example.type_agents(t) if x != a}
        assert listed == want


# -- coarsest-partition derivation -----------------------------------------


def test_derive_recovers_example_partition():
    men = ("m1", "m2", "m3")
    lists = {m: (("w1", "w2", "w3", "w4"), ("w5", "w6", "w7")) for m in men}
    for w in ("w1", "w2"):
        lists[w] = (men,)
    for w in ("w3", "w4"):
        lists[w] = ()
    for w in ("w5", "w6", "w7"):
        lists[w] = (men,)
    sides = {a: ("m" if a in men else "w") for a in lists}
    derived = derive_types(lists, problem_kind="smti", sides=sides)
    assert derived.k == 4
    counts = sorted(derived.count(t) for t in derived.real_type_ids)
    assert counts == [2, 2, 3, 3]


def test_derive_merges_indistinguishable_groups(paper_example):
    # all women share one list and men tie w1..w4, so types 2 and 3 collapse
    expanded = expand_to_agent_level(paper_example)
    sides = {a: paper_example.side(paper_example.agent_type(a))
             for a in paper_example.agents()}
    derived = derive_types(expanded, problem_kind="smti", sides=sides)
    assert derived.k == 3
    assert sorted(derived.count(t) for t in derived.real_type_ids) == [3, 3, 4]


def test_derive_full_indifference_gives_two_types():
    lists = {}
    men = [f"m{i}" for i in range(3)]
    women = [f"w{i}" for i in range(3)]
    for m in men:
        lists[m] = (tuple(women),)
    for w in women:
        lists[w] = (tuple(men),)
    sides = {a: ("m" if a in men else "w") for a in lists}
    derived = derive_types(lists, problem_kind="smti", sides=sides)
    assert derived.k == 2


def test_derive_splits_disagreeing_agents():
    lists = {
        "a": (("w1",), ("w2",)),
        "b": (("w2",), ("w1",)),
        "w1": (("a", "b"),),
        "w2": (("a", "b"),),
    }
    sides = {"a": "m", "b": "m", "w1": "w", "w2": "w"}
    derived = derive_types(lists, problem_kind="smti", sides=sides)
    assert derived.k >= 3


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10_000))
def test_derive_round_trip_reproduces_expansion(seed):
    inst = gen_typed(seed, kind="srti", k=3, max_count=2)
    expanded = expand_to_agent_level(inst)
    derived = derive_types(expanded)
    assert derived.k <= inst.k
    assert derived.n == inst.n
    re_expanded = expand_to_agent_level(derived)

    def shape(groups):
        return tuple(len(g) for g in groups)

    assert sorted(shape(gs) for gs in expanded.values()) \
        == sorted(shape(gs) for gs in re_expanded.values())
    assert derive_types(re_expanded).k == derived.k
    if inst.n <= 7:
        old = sorted(len(m.pairs) for m in stable_matchings_brute(inst))
        new = sorted(len(m.pairs) for m in stable_matchings_brute(derived))
        assert old == new


# -- matchings -------------------------------------------------------------


def test_matching_round_trip(paper_example):
    m = AgentMatching(paper_example, [("1.1", "2.1"), ("1.2", "3.1")])
    text = format_matching(m, blocking=0)
    assert "size 2" in text and "blocking_pairs 0" in text
    assert parse_matching(text) == [("1.1", "2.1"), ("1.2", "3.1")]


def test_matching_rejects_capacity_violation(paper_example):
    with pytest.raises(InstanceError):
        AgentMatching(paper_example, [("1.1", "2.1"), ("1.1", "2.2")])


def test_matching_rejects_unknown_agent(paper_example):
    with pytest.raises(InstanceError):
        AgentMatching(paper_example, [("9.9", "2.1")])


def test_matching_rejects_self_pair(paper_example):
    with pytest.raises(InstanceError):
        AgentMatching(paper_example, [("1.1", "1.1")])


def test_matching_canonicalizes_pair_order(paper_example):
    a = AgentMatching(paper_example, [("2.1", "1.1")])
    b = AgentMatching(paper_example, [("1.1", "2.1")])
    assert a == b and hash(a) == hash(b)


def test_hospital_capacity_allows_multiple_assignees():
    inst = TypedInstance("hrt", [
        TypeInfo("r", 2, P([[2]])),
        TypeInfo("h", 1, P([[1]]), capacity=2),
    ])
    m = AgentMatching(inst, [("1.1", "2.1"), ("1.2", "2.1")])
    assert m.assignees("2.1") == ("1.1", "1.2")


def test_couple_members_matched_jointly_or_not_at_all():
    inst = TypedInstance("hrc", [
        TypeInfo("r", 0, P([[2]])),
        TypeInfo("h", 2, P([[1]])),
    ], couples=[CoupleType(1, 1, 1, (((2, 2),),))])
    AgentMatching(inst, [("c1.1", "2.1"), ("c1.2", "2.2")])
    with pytest.raises(InstanceError, match="jointly"):
        AgentMatching(inst, [("c1.1", "2.1")])


def test_matching_parser_tolerates_footers_and_comments():
    assert parse_matching("# note\npair 1.1 2.1\nsize 1\nblocking_pairs 0\n") \
        == [("1.1", "2.1")]
    with pytest.raises(InstanceError):
        parse_matching("pair 1.1\n")


def test_agent_order_puts_couples_after_typed_agents():
    assert agent_key("2.1") < agent_key("10.1")
    assert agent_key("10.1") < agent_key("c1.1")
    assert agent_key("c1.1") < agent_key("c1.2")


# -- exceptions in lists ---------------------------------------------------


def test_exception_splices_candidate_at_top():
    inst = two_sided([[2], [3]], [1, 1], men_count=1)
    spliced = TypedInstance("smti", list(inst.types),
                            exceptions=[ExceptionEntry("1.1", "3.1", ("top",))])
    expanded = expand_to_agent_level(spliced)
    assert expanded["1.1"] == (("3.1",), ("2.1",))


def test_exception_must_cross_sides(paper_example):
    with pytest.raises(InstanceError, match="cross"):
        TypedInstance("smti", list(paper_example.types),
                      exceptions=[ExceptionEntry("1.1", "1.2", ("top",))])
