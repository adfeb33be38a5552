import itertools
import math
import random

import pytest

from evacnet.lp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    NodeLimitExceeded,
    check_solution,
    lp_instance,
    solve_integer,
    solve_lp,
    write_lp_text,
)


def brute_force_integer(inst):
    """Exhaustive enumeration over the integer box; the test-side oracle."""
    best = None
    ranges = [range(int(lo), int(hi) + 1) for _, lo, hi in inst.variables]
    ids = [vid for vid, _, _ in inst.variables]
    for combo in itertools.product(*ranges):
        vals = dict(zip(ids, combo))
        feasible = True
        for coeffs, sense, rhs in inst.rows:
            lhs = sum(c * vals[v] for v, c in coeffs.items())
            if sense == "<=" and lhs > rhs + 1e-9:
                feasible = False
            elif sense == ">=" and lhs < rhs - 1e-9:
                feasible = False
            elif sense == "=" and abs(lhs - rhs) > 1e-9:
                feasible = False
            if not feasible:
                break
        if feasible:
            obj = sum(c * vals[v] for v, c in inst.objective.items())
            if best is None or obj > best:
                best = obj
    return best


def test_bound_attaining():
    sol = solve_lp(lp_instance([("x", 0, 5)], [], {"x": 1}))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(5)
    assert sol.integral


def test_vertex_optimum():
    inst = lp_instance(
        [("x", 0, 2), ("y", 0, 2)],
        [({"x": 1, "y": 1}, "<=", 3)],
        {"x": 1, "y": 1},
    )
    sol = solve_lp(inst)
    assert sol.objective == pytest.approx(3)
    assert not check_solution(inst, sol)


def test_contradictory_rows_infeasible():
    inst = lp_instance(
        [("x", 0, 5)],
        [({"x": 1}, ">=", 1), ({"x": 1}, "<=", 0)],
        {"x": 1},
    )
    assert solve_lp(inst).status == INFEASIBLE


def test_unbounded_detected():
    inst = lp_instance([("x", 0, math.inf)], [], {"x": 1})
    assert solve_lp(inst).status == UNBOUNDED


def test_integer_rounding_down():
    inst = lp_instance([("x", 0, 5)], [({"x": 2}, "<=", 3)], {"x": 1})
    sol = solve_integer(inst)
    assert sol.objective == pytest.approx(1)
    assert sol.integral


def test_integral_relaxation_returned_unchanged():
    inst = lp_instance([("x", 0, 4)], [({"x": 1}, "<=", 2)], {"x": 1})
    rel = solve_lp(inst)
    ip = solve_integer(inst)
    assert rel.integral
    assert ip.objective == rel.objective


def test_node_limit():
    rng = random.Random(5)
    variables = [(f"v{i}", 0, 6) for i in range(10)]
    rows = [({f"v{i}": rng.uniform(0.7, 1.3) for i in range(10)}, "<=", 21.5)]
    inst = lp_instance(variables, rows, {f"v{i}": 1 for i in range(10)})
    with pytest.raises(NodeLimitExceeded):
        solve_integer(inst, node_limit=2)


def test_random_instances_match_enumeration():
    rng = random.Random(17)
    for _ in range(120):
        nv = rng.randint(1, 4)
        variables = [(f"v{i}", 0, rng.randint(1, 4)) for i in range(nv)]
        rows = []
        for _ in range(rng.randint(0, 3)):
            coeffs = {f"v{i}": rng.randint(-3, 3) for i in range(nv)
                      if rng.random() < 0.8}
            if coeffs:
                rows.append((coeffs, rng.choice(["<=", ">=", "="]),
                             rng.randint(-4, 8)))
        inst = lp_instance(variables, rows,
                           {f"v{i}": rng.randint(-3, 3) for i in range(nv)})
        expected = brute_force_integer(inst)
        got = solve_integer(inst, node_limit=5000)
        if expected is None:
            assert got.status == INFEASIBLE
        else:
            assert got.status == OPTIMAL
            assert got.objective == pytest.approx(expected)
            relaxed = solve_lp(inst)
            # relaxation bounds the integer optimum from above
            assert relaxed.objective >= expected - 1e-6


def test_weak_duality_spot_check():
    rng = random.Random(23)
    for _ in range(40):
        nv = rng.randint(2, 5)
        variables = [(f"v{i}", 0.0, rng.uniform(1, 5)) for i in range(nv)]
        rows = []
        for _ in range(rng.randint(1, 4)):
            coeffs = {f"v{i}": rng.uniform(-2, 2) for i in range(nv)}
            rows.append((coeffs, "<=", rng.uniform(0.5, 6)))
        obj = {f"v{i}": rng.uniform(-1, 2) for i in range(nv)}
        inst = lp_instance(variables, rows, obj)
        sol = solve_lp(inst)
        if sol.status != OPTIMAL:
            continue
        # any feasible point scores no better than the reported optimum
        for _ in range(20):
            point = {v: rng.uniform(lo, hi) for v, lo, hi in inst.variables}
            feasible = all(
                sum(c * point[v] for v, c in coeffs.items()) <= rhs + 1e-9
                for coeffs, _, rhs in inst.rows
            )
            if feasible:
                value = sum(c * point[v] for v, c in obj.items())
                assert value <= sol.objective + 1e-6


def test_constraints_satisfied_within_tolerance():
    rng = random.Random(31)
    for _ in range(60):
        nv = rng.randint(1, 6)
        variables = [(f"v{i}", 0.0, rng.choice([2.0, 5.0, math.inf]))
                     for i in range(nv)]
        rows = []
        for _ in range(rng.randint(0, 5)):
            coeffs = {f"v{i}": rng.uniform(-3, 3) for i in range(nv)
                      if rng.random() < 0.8}
            if coeffs:
                rows.append((coeffs, rng.choice(["<=", ">=", "="]),
                             rng.uniform(-4, 8)))
        inst = lp_instance(variables, rows,
                           {f"v{i}": rng.uniform(-3, 3) for i in range(nv)})
        sol = solve_lp(inst)
        if sol.status == OPTIMAL:
            assert not check_solution(inst, sol)


def test_duplicate_variable_ids_rejected():
    with pytest.raises(ValueError):
        lp_instance([("x", 0, 1), ("x", 0, 2)], [], {})


def test_row_referencing_unknown_variable_rejected():
    with pytest.raises(ValueError):
        lp_instance([("x", 0, 1)], [({"y": 1}, "<=", 1)], {})


def test_lp_text_dump_mentions_all_parts():
    inst = lp_instance(
        [("x", 0, 2), ("y", 0, 3)],
        [({"x": 1, "y": -2}, "<=", 4), ({"y": 1}, ">=", 1)],
        {"x": 1, "y": 1},
    )
    text = write_lp_text(inst)
    assert "Maximize" in text and "Subject To" in text and "Bounds" in text
    assert text.count("v0") >= 2 and "r1:" in text
