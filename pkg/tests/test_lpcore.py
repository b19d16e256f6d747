import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from orgnet import lpcore
from orgnet.lpcore import (IterationLimitError, LpBuilder, LpInputError, LpModel, Status, check_farkas,
                           check_ray, check_solution, solve, to_lp_format)
from orgnet.oracle import lp_vertex_enum

from .lp_strategies import random_lp, tiny_lps


def test_single_binding_constraint():
    model = LpModel.from_rows([1.0], [([1.0], ">=", 3.0)])
    sol = solve(model)
    assert sol.status is Status.OPTIMAL
    assert sol.primal == pytest.approx([3.0])
    assert sol.objective == pytest.approx(3.0)


def test_gap_is_exactly_zero_on_single_constraint():
    model = LpModel.from_rows([1.0], [([1.0], ">=", 3.0)])
    report = check_solution(model, solve(model))
    assert report.gap == 0.0
    assert report.ok


def test_negative_sum_is_infeasible_with_certificate():
    model = LpModel.from_rows([1.0, 1.0], [([1.0, 1.0], "=", -1.0)])
    sol = solve(model)
    assert sol.status is Status.INFEASIBLE
    assert check_farkas(model, sol.certificate, sol.bound_multipliers)


def test_unbounded_ray():
    model = LpModel.from_rows([-1.0, 0.0], [([1.0, -1.0], "<=", 1.0)])
    sol = solve(model)
    assert sol.status is Status.UNBOUNDED
    assert check_ray(model, sol.certificate)


def test_upper_bounds_and_unconstrained():
    model = LpModel(np.array([-1.0, 2.0]), np.zeros((0, 2)), (), np.zeros(0), None, np.array([4.0, 5.0]))
    sol = solve(model)
    assert sol.primal == pytest.approx([4.0, 0.0])
    free = LpModel(np.array([-1.0]), np.zeros((0, 1)), (), np.zeros(0))
    assert solve(free).status is Status.UNBOUNDED


def test_perturbed_primal_is_flagged():
    model = LpModel.from_rows([1.0, 1.0], [([1.0, 1.0], "<=", 4.0), ([1.0, 0.0], ">=", 1.0), ([0.0, 1.0], ">=", 2.0)])
    sol = solve(model)
    assert check_solution(model, sol).ok
    sol.primal = sol.primal + np.array([0.0, 3.0])
    report = check_solution(model, sol)
    assert report.violated_rows == [0]
    assert not report.ok


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_input_rejected(bad):
    with pytest.raises(LpInputError):
        LpModel.from_rows([1.0, bad], [([1.0, 1.0], ">=", 1.0)])
    with pytest.raises(LpInputError):
        LpModel.from_rows([1.0, 1.0], [([1.0, bad], ">=", 1.0)])


def test_shape_and_bound_errors():
    with pytest.raises(LpInputError):
        LpModel(np.ones(2), np.ones((1, 3)), ("<=",), np.ones(1))
    with pytest.raises(LpInputError):
        LpModel(np.ones(1), np.ones((1, 1)), ("<=",), np.ones(1), np.array([2.0]), np.array([1.0]))
    with pytest.raises(LpInputError):
        LpModel(np.ones(1), np.ones((1, 1)), ("<>",), np.ones(1))


def test_iteration_cap():
    rng = np.random.default_rng(3)
    model = LpModel(-np.ones(6), rng.integers(1, 4, size=(6, 6)).astype(float), ("<=",) * 6, np.full(6, 10.0))
    with pytest.raises(IterationLimitError):
        solve(model, iter_cap=1)


def test_iteration_cap_from_environment(monkeypatch):
    monkeypatch.setenv("ORGNET_ITER_CAP", "7")
    assert lpcore.default_iter_cap(100, 100) == 7
    monkeypatch.delenv("ORGNET_ITER_CAP")
    assert lpcore.default_iter_cap(3, 4) == 350


def test_unknown_pricing_rule():
    with pytest.raises(ValueError):
        solve(LpModel.from_rows([1.0], [([1.0], ">=", 1.0)]), pricing="steepest")


@pytest.mark.parametrize("seed", range(20))
def test_random_five_by_six_matches_vertex_enumeration(seed):
    model = random_lp(np.random.default_rng(seed), 5, 6)
    ref = lp_vertex_enum(model)
    sol = solve(model)
    assert sol.status.value == ref.status
    if ref.status == "optimal":
        assert sol.objective == pytest.approx(ref.objective, abs=1e-7)
        assert check_solution(model, sol).ok


@given(tiny_lps())
@settings(max_examples=150)
def test_oracle_equivalence(model):
    ref = lp_vertex_enum(model)
    sol = solve(model)
    assert sol.status.value == ref.status
    if ref.status == "optimal":
        assert abs(sol.objective - ref.objective) <= 1e-7
    elif ref.status == "infeasible":
        assert check_farkas(model, sol.certificate, sol.bound_multipliers)
    else:
        assert check_ray(model, sol.certificate)


@given(tiny_lps(), st.sampled_from(["devex", "dantzig", "bland"]), st.booleans())
@settings(max_examples=120)
def test_pricing_rules_and_paths_agree(model, pricing, debug):
    base = solve(model)
    other = solve(model, pricing=pricing, debug=debug)
    assert other.status is base.status
    if base.optimal:
        assert other.objective == pytest.approx(base.objective, abs=1e-7)
        assert check_solution(model, other).ok


@given(tiny_lps())
@settings(max_examples=100)
def test_weak_duality_along_debug_trace(model):
    sol = solve(model, debug=True)
    for _, primal, bound in sol.trace:
        assert bound <= primal + 1e-7 * (1 + abs(primal))


@given(tiny_lps(), st.sampled_from([0.25, 1.0, 3.0, 1000.0]))
@settings(max_examples=100)
def test_scale_covariance(model, lam):
    base = solve(model)
    scaled = solve(model.scaled(lam))
    assert scaled.status is base.status
    if base.optimal:
        assert scaled.objective == pytest.approx(lam * base.objective, abs=1e-7 * lam * (1 + abs(base.objective)))
        # the unscaled optimum stays optimal for the scaled objective
        assert lam * base.objective == pytest.approx(model.scaled(lam).objective @ base.primal, abs=1e-7 * lam)


def _beale():
    # classic cycling example under Dantzig pricing with lowest-index ties
    c = [-0.75, 150.0, -0.02, 6.0]
    rows = [([0.25, -60.0, -0.04, 9.0], "<=", 0.0),
            ([0.5, -90.0, -0.02, 3.0], "<=", 0.0),
            ([0.0, 0.0, 1.0, 0.0], "<=", 1.0)]
    return LpModel.from_rows(c, rows), -0.05


def _kuhn():
    c = [-2.0, -3.0, 1.0, 12.0]
    rows = [([-2.0, -9.0, 1.0, 9.0], "<=", 0.0),
            ([1 / 3, 1.0, -1 / 3, -2.0], "<=", 0.0),
            ([2.0, 3.0, -1.0, -12.0], "<=", 2.0)]
    return LpModel.from_rows(c, rows), None


def _degenerate_suite():
    yield _beale()
    yield _kuhn()
    rng = np.random.default_rng(11)
    for _ in range(25):
        n, m = rng.integers(2, 7), rng.integers(3, 9)
        A = rng.integers(-2, 3, size=(m, n)).astype(float)
        b = np.where(rng.random(m) < 0.7, 0.0, rng.integers(0, 3, size=m)).astype(float)
        c = rng.integers(-2, 3, size=n).astype(float)
        yield LpModel(c, A, ("<=",) * m, b, None, np.full(n, 5.0)), None


@pytest.mark.parametrize("case", list(_degenerate_suite()), ids=lambda c: f"n{c[0].n_vars}m{c[0].n_constraints}")
def test_bland_terminates_on_degenerate_suite(case):
    model, known = case
    sol = solve(model, pricing="bland", iter_cap=10_000)
    ref = lp_vertex_enum(model)
    assert sol.status.value == ref.status
    if ref.status == "optimal":
        assert sol.objective == pytest.approx(ref.objective, abs=1e-7)
    if known is not None:
        assert sol.objective == pytest.approx(known, abs=1e-9)


def _transport(k, seed):
    rng = np.random.default_rng(seed)
    lp = LpBuilder()
    cost = rng.integers(1, 20, size=(k, k)).astype(float)
    x = {(i, j): lp.add_var(("x", i, j), cost=cost[i, j]) for i in range(k) for j in range(k)}
    supply = rng.integers(5, 15, size=k).astype(float)
    demand = supply[rng.permutation(k)]
    for i in range(k):
        lp.add_row({x[i, j]: 1.0 for j in range(k)}, "<=", supply[i], label=("supply", i))
    for j in range(k):
        lp.add_row({x[i, j]: 1.0 for i in range(k)}, ">=", demand[j], label=("demand", j))
    return lp.build()


@pytest.mark.parametrize("k", [20, 75])
def test_sparse_path_is_certified(k):
    model = _transport(k, k)
    assert sp.issparse(model.A) == (model.nnz >= lpcore.DENSE_NNZ_LIMIT)
    sol = solve(model)
    assert sol.optimal
    assert check_solution(model, sol).ok


def test_seed_reproduces_pivots():
    model = _transport(30, 1)
    a, b = solve(model, seed=5), solve(model, seed=5)
    assert a.iterations == b.iterations
    assert np.array_equal(a.primal, b.primal)


def test_lp_format_export():
    lp = LpBuilder()
    x = lp.add_var("x", cost=1.0)
    y = lp.add_var("y", cost=-2.0, upper=3.0)
    lp.add_row({x: 1.0, y: 1.0}, ">=", 1.0, label="cover")
    text = to_lp_format(lp.build(), name="tiny")
    assert text.startswith("\\* tiny *\\")
    assert "Minimize" in text and "Subject To" in text and "End" in text
    assert "c0_cover: x0_x + x1_y >= 1" in text
    assert "0 <= x1_y <= 3" in text


def test_equality_duals_align_with_input_rows():
    model = LpModel.from_rows([1.0, 2.0], [([1.0, 1.0], "=", 2.0), ([1.0, 0.0], "<=", 1.5)])
    sol = solve(model)
    assert sol.objective == pytest.approx(2.5)
    assert sol.dual == pytest.approx([2.0, -1.0])
    assert math.isclose(float(model.rhs @ sol.dual), sol.objective)
