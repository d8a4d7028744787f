import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import tiny_scenario
from rabs_isac.link import build_coefficients
from rabs_isac.lp import from_arrays
from rabs_isac.robust import COMMUNICATION, SENSING, TaskData, task_data
from rabs_isac.scenario import RadioConfig, build_scenario
from rabs_isac.solve import (Assignment, BudgetExceeded, ConstraintViolation, bnb_task,
                             branch_and_bound, branch_and_bound_milp, enumerate_task,
                             evaluate_assignment, exact_enumeration, round_task,
                             solve_at_location, sweep_locations)


def _task(bar, hat, demand, level, weight=0.5):
    bar = np.asarray(bar, float)
    return TaskData(SENSING, 0, bar, np.asarray(hat, float), np.asarray(demand, float),
                    np.full(bar.shape[0], float(level)), weight)


def test_no_subcarriers_gives_empty_allocation():
    sc = build_scenario(area_w=40, area_h=20, cell=20, num_locations=2,
                        radio=RadioConfig(num_subcarriers=0))
    co = build_coefficients(sc)
    a = sweep_locations(sc, co)
    assert a.objective == 0.0 and a.x.shape == (2, 0)
    assert evaluate_assignment(a, sc, co).objective == 0.0


def test_single_grid_single_subcarrier_needs_one_lp():
    ts = round_task(_task([[5.0]], [[0.0]], [4.0], 0.0))
    assert ts.x.tolist() == [[1]] and ts.sr == 1.0
    assert ts.trace.lp_count == 1


def test_two_grid_hand_case():
    data = _task([[3.0, 1.0], [1.0, 3.0]], np.zeros((2, 2)), [3.0, 3.0], 0.0)
    x, sr = enumerate_task(data)
    assert x.tolist() == [[1, 0], [0, 1]] and sr == 1.0
    ts = round_task(data)
    assert ts.x.tolist() == [[1, 0], [0, 1]] and ts.weighted == 0.5


def test_hand_case_with_bias():
    # either diagonal gives each grid 2/4 once its single bias is charged
    data = _task([[4.0, 2.0], [2.0, 4.0]], [[2.0, 0.0], [0.0, 2.0]], [4.0, 4.0], 1.0)
    _, sr = enumerate_task(data)
    assert sr == pytest.approx(0.5, abs=1e-12)
    assert round_task(data).sr <= sr + 1e-12


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 4), st.floats(0, 1),
       st.sampled_from([SENSING, COMMUNICATION]))
def test_rounding_bounded_by_exact_and_relaxation(seed, I, K, share, task):
    gamma = share * K
    sc, co = tiny_scenario(seed, num_grids=I, num_locations=1, num_subcarriers=K,
                           gamma=gamma, lam=gamma)
    data = task_data(sc, co, 0, task)
    ts = round_task(data)
    _, exact = enumerate_task(data)
    assert set(np.unique(ts.x)) <= {0, 1} and np.all(ts.x.sum(axis=0) <= 1)
    assert ts.sr == pytest.approx(data.min_sr(ts.x), abs=0)
    assert ts.sr <= exact + 1e-12
    assert data.weight * exact <= ts.root_bound + 1e-7
    assert 1 <= ts.trace.lp_count <= I * K
    fixed = [s.fixed for s in ts.trace.steps if s.fixed is not None]
    assert len(fixed) == len(set(fixed))


def test_rounding_is_deterministic():
    sc, co = tiny_scenario(4, num_grids=3, num_locations=2, num_subcarriers=4, delta=0.3)
    a, b = sweep_locations(sc, co), sweep_locations(sc, co)
    assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
    assert a.objective == b.objective and a.location == b.location


def test_single_location_sweep_equals_fixed_cell():
    sc, co = tiny_scenario(3, num_grids=2, num_locations=1, num_subcarriers=3)
    a = sweep_locations(sc, co)
    b = solve_at_location(0, sc, co)
    assert a.location == 0 and a.objective == b.objective


def test_duplicate_locations_tie_to_lowest_index():
    sc = build_scenario(area_w=40, area_h=20, cell=20, locations=[[20, 10, 10]] * 3,
                        radio=RadioConfig(num_subcarriers=3), m_sen=0.5, m_com=1e7)
    a = sweep_locations(sc, build_coefficients(sc))
    assert a.location == 0


@pytest.mark.parametrize("seed", range(4))
def test_sweep_keeps_best_location(seed):
    sc, co = tiny_scenario(seed, num_grids=2, num_locations=3, num_subcarriers=3, delta=0.2)
    a = sweep_locations(sc, co)
    assert sorted(a.per_location) == [0, 1, 2]
    totals = [s.weighted + c.weighted for s, c in a.per_location.values()]
    assert a.objective == max(totals)
    assert evaluate_assignment(a, sc, co).objective == pytest.approx(a.objective, abs=1e-12)


def test_carried_allocations_keep_descending_levels_monotone():
    sc, co = tiny_scenario(8, num_grids=3, num_locations=2, num_subcarriers=4)
    carry, prev = None, -np.inf
    for delta in (1.0, 0.5, 0.2, 0.05, 0.0):
        s = sc.with_delta(delta)
        # link coefficients do not depend on the protection level
        a = sweep_locations(s, co, carry=carry)
        if carry is not None:
            for j, pair in carry.per_location.items():
                for old, new in zip(pair, a.per_location[j]):
                    data = task_data(s, co, j, old.task)
                    assert new.weighted >= data.weight * data.min_sr(old.x)
        assert a.objective >= prev - 1e-12
        prev, carry = a.objective, a


def test_enumeration_budget_refusal():
    sc, co = tiny_scenario(0, num_grids=3, num_locations=2, num_subcarriers=4)
    with pytest.raises(BudgetExceeded):
        exact_enumeration(sc, co, budget=100)


@pytest.mark.parametrize("seed", range(8))
def test_branch_and_bound_matches_enumeration(seed):
    sc, co = tiny_scenario(seed, num_grids=2, num_locations=2, num_subcarriers=3, delta=0.3)
    bb = branch_and_bound(sc, co, gap_tol=0.0)
    ex = exact_enumeration(sc, co)
    assert bb.certified
    assert bb.objective == pytest.approx(ex.objective, abs=1e-9)
    assert evaluate_assignment(bb, sc, co).objective == pytest.approx(bb.objective, abs=1e-12)


def test_integral_root_needs_no_branching():
    res = bnb_task(_task([[5.0]], [[0.0]], [10.0], 0.0))
    assert res.nodes == 0 and res.certified and res.sr == 0.5


def test_node_limit_reports_bound():
    # knapsack whose relaxation takes b = 1, a = 5/6
    model = from_arrays([5, 4], [[6, 4]], ["<="], [9], [0, 0], [1, 1], integer=[True, True])
    capped = branch_and_bound_milp(model, node_limit=0)
    assert capped.status == "node-limit" and not capped.certified
    assert capped.bound == pytest.approx(49 / 6) and capped.nodes == 0
    full = branch_and_bound_milp(model)
    assert full.certified and full.objective == pytest.approx(5.0) and full.nodes > 0


def test_joint_node_limit_flags_uncertified():
    sc, co = tiny_scenario(2, num_grids=3, num_locations=2, num_subcarriers=4, delta=0.4)
    bb = branch_and_bound(sc, co, node_limit=0)
    if not bb.certified:
        assert bb.bound >= bb.objective - 1e-12
    full = branch_and_bound(sc, co)
    assert full.certified and full.objective >= bb.objective - 1e-12


def test_evaluate_rejects_shared_subcarrier():
    sc, co = tiny_scenario(1, num_grids=2, num_locations=2, num_subcarriers=3)
    x = np.array([[0, 1, 0], [0, 1, 0]], np.int8)
    bad = Assignment(x, np.zeros_like(x), 0)
    with pytest.raises(ConstraintViolation, match="subcarrier 1"):
        evaluate_assignment(bad, sc, co)
    with pytest.raises(ConstraintViolation, match="outside"):
        evaluate_assignment(Assignment(np.zeros_like(x), np.zeros_like(x), 5), sc, co)
    with pytest.raises(ConstraintViolation, match="binary"):
        evaluate_assignment(Assignment(x * 0.5, np.zeros_like(x), 0), sc, co)


def test_evaluate_empty_assignment_is_zero():
    sc, co = tiny_scenario(1, num_grids=2, num_locations=2, num_subcarriers=3)
    ev = evaluate_assignment(Assignment.empty(2, 3), sc, co)
    assert ev.objective == 0.0 and np.all(ev.grid_sr_sense == 0)


def test_from_tensors_checks_location_links():
    x = np.zeros((1, 2, 1))
    z = np.array([1.0, 1.0])
    with pytest.raises(ConstraintViolation, match="more than one"):
        Assignment.from_tensors(x, x, z)
    x[0, 1, 0] = 1
    with pytest.raises(ConstraintViolation, match="not deployed"):
        Assignment.from_tensors(x, np.zeros_like(x), np.array([1.0, 0.0]))
    a = Assignment.from_tensors(x, np.zeros_like(x), np.array([0.0, 1.0]))
    assert a.location == 1 and a.x.tolist() == [[1]]
