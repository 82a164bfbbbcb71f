"""Exact bounded integer programming against grid search."""

import pytest
from hypothesis import given, settings, strategies as st

from conftest import two_sided
from typedmatch.oracle import max_stable_brute
from typedmatch.smallip import (BudgetExceeded, Infeasible, IntegerProgram,
                                grid_optimum, parse_program, solve)


def _program(bounds, rows=(), sense="max", linear=None, quadratic=None):
    ip = IntegerProgram()
    for name, lb, ub in bounds:
        ip.add_var(name, lb, ub)
    for coeffs, rel, rhs in rows:
        ip.add_constraint(coeffs, rel, rhs)
    ip.set_objective(sense, linear, quadratic)
    return ip


def test_shared_budget_splits_to_three():
    ip = _program([("x1", 0, 2), ("x2", 0, 2)],
                  rows=[({"x1": 1, "x2": 1}, "<=", 3)],
                  linear={"x1": 1, "x2": 1})
    value, assignment = solve(ip)
    assert value == 3
    assert sum(assignment.values()) == 3


def test_pair_count_program_matches_brute_maximum(paper_example):
    # men only take partners from their top tie-class, women take men
    ip = _program([("x12", 0, 2), ("x13", 0, 2), ("x14", 0, 0)],
                  rows=[({"x12": 1, "x13": 1, "x14": 1}, "<=", 3)],
                  linear={"x12": 1, "x13": 1, "x14": 1})
    value, _ = solve(ip)
    assert value == 3
    assert value == max_stable_brute(paper_example).size


def test_diagonal_quadratic_prefers_balanced_split():
    ip = _program([("x1", 0, 2), ("x2", 0, 2)],
                  rows=[({"x1": 1, "x2": 1}, "=", 2)],
                  sense="min",
                  quadratic={("x1", "x1"): 1, ("x2", "x2"): 1})
    value, assignment = solve(ip)
    assert value == 2
    assert assignment == {"x1": 1, "x2": 1}


def test_infeasible_row_raises():
    ip = _program([("x", 0, 1)], rows=[({"x": 1}, ">=", 5)])
    with pytest.raises(Infeasible):
        solve(ip)


def test_node_budget_guard():
    ip = _program([("x", 0, 1), ("y", 0, 1)], linear={"x": 1, "y": 1})
    with pytest.raises(BudgetExceeded):
        solve(ip, node_budget=1)


def test_strict_relations_are_not_a_relation():
    ip = _program([("x", 0, 1)])
    with pytest.raises(ValueError):
        ip.add_constraint({"x": 1}, ">", 0)


def test_duplicate_variable_rejected():
    ip = IntegerProgram()
    ip.add_var("x", 0, 1)
    with pytest.raises(ValueError):
        ip.add_var("x", 0, 1)


def test_quadratic_constraint_rows():
    ip = IntegerProgram()
    ip.add_var("x", 0, 3)
    ip.add_var("y", 0, 3)
    ip.add_quadratic_constraint({}, {("x", "y"): 1}, ">=", 4)
    ip.set_objective("min", {"x": 1, "y": 1})
    value, assignment = solve(ip)
    assert value == 4 and assignment["x"] * assignment["y"] >= 4
    assert grid_optimum(ip)[0] == 4


def test_parse_program_round_trip():
    ip = parse_program("# demo\n"
                       "var x 0 3\n"
                       "var y 0 2\n"
                       "max: 2 x + y + x*y\n"
                       "st: x + y <= 4\n"
                       "st: x - y >= 0\n")
    value, assignment = solve(ip)
    assert (value, assignment) == grid_optimum(ip)
    assert value == ip.evaluate([assignment["x"], assignment["y"]])


def test_parse_program_rejects_garbage():
    with pytest.raises(ValueError, match="line 2"):
        parse_program("var x 0 1\nwat\n")


@st.composite
def tiny_programs(draw):
    ip = IntegerProgram()
    names = [f"x{i}" for i in range(draw(st.integers(1, 4)))]
    for name in names:
        lb = draw(st.integers(0, 1))
        ip.add_var(name, lb, draw(st.integers(lb, 3)))
    coef = st.integers(-3, 3)
    for _ in range(draw(st.integers(0, 3))):
        ip.add_constraint({n: draw(coef) for n in names},
                          draw(st.sampled_from(("<=", "=", ">="))),
                          draw(st.integers(-5, 8)))
    quad = {}
    for _ in range(draw(st.integers(0, 2))):
        i = draw(st.integers(0, len(names) - 1))
        j = draw(st.integers(0, len(names) - 1))
        quad[(names[i], names[j])] = draw(st.integers(-2, 2))
    ip.set_objective(draw(st.sampled_from(("min", "max"))),
                     {n: draw(coef) for n in names},
                     quad or None)
    return ip


@settings(deadline=None, max_examples=200)
@given(tiny_programs())
def test_solver_agrees_with_grid_search(ip):
    try:
        expected = grid_optimum(ip)
    except Infeasible:
        with pytest.raises(Infeasible):
            solve(ip)
        return
    assert solve(ip) == expected
