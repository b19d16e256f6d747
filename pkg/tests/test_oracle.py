import dataclasses

import numpy as np
import pytest

from orgnet.contingency import FlowSet, Topology, solve_contingency
from orgnet.lpcore import LpModel, solve
from orgnet.model import Edge, Graph, NodeRef, butterfly_graph
from orgnet.multicast import unit_capacities
from orgnet.netcode import butterfly_code
from orgnet.oracle import (Method, OracleLimitError, OracleReport, check_lp, check_max_flow, copy_forward_outcomes,
                           exhaustive_gf2_check, lp_vertex_enum, min_cut_enum, recheck_appendix_constraints)

from .lp_strategies import random_lp


def test_butterfly_cut():
    g = butterfly_graph()
    assert min_cut_enum(g, unit_capacities(g), "S", "R1") == 2


def test_single_edge_cut():
    g = Graph((NodeRef("S", "sender"), NodeRef("T", "receiver")), (Edge("S", "T", 1.0),))
    assert min_cut_enum(g, {("S", "T"): 7.0}, "S", "T") == 7.0


def test_disconnected_cut():
    g = Graph((NodeRef("S", "sender"), NodeRef("T", "receiver")), ())
    assert min_cut_enum(g, {}, "S", "T") == 0


def test_cut_size_cap():
    g = butterfly_graph()
    with pytest.raises(OracleLimitError):
        min_cut_enum(g, unit_capacities(g), "S", "R1", max_nodes=4)


def test_check_max_flow_reports_witness():
    g = butterfly_graph()
    bad = check_max_flow(g, unit_capacities(g), "S", "R1", 3.0)
    assert not bad.passed and bad.witness == {"max_flow": 3.0, "min_cut": 2.0}


def test_vertex_enum_basics():
    assert lp_vertex_enum(LpModel.from_rows([1.0], [([1.0], ">=", 3.0)])).objective == 3.0
    assert lp_vertex_enum(LpModel.from_rows([1.0, 1.0], [([1.0, 1.0], "=", -1.0)])).status == "infeasible"
    assert lp_vertex_enum(LpModel.from_rows([-1.0], [([1.0], ">=", 0.0)])).status == "unbounded"


def test_vertex_enum_redundant_equalities():
    model = LpModel.from_rows([1.0, 2.0], [([1.0, 1.0], "=", 1.0), ([2.0, 2.0], "=", 2.0)])
    ref = lp_vertex_enum(model)
    assert ref.status == "optimal" and ref.objective == 1.0


def test_vertex_enum_cap():
    with pytest.raises(OracleLimitError):
        lp_vertex_enum(LpModel(np.ones(9), np.ones((1, 9)), (">=",), np.ones(1)))


@pytest.mark.parametrize("seed", range(15))
def test_random_four_var_agreement(seed):
    model = random_lp(np.random.default_rng(100 + seed), 4, 5, upper=True)
    sol = solve(model)
    assert check_lp(model, sol.status.value, sol.objective).passed


def test_check_lp_catches_wrong_objective():
    model = LpModel.from_rows([1.0], [([1.0], ">=", 3.0)])
    report = check_lp(model, "optimal", 2.5)
    assert not report.passed and report.witness["enumeration"] == 3.0


def test_failing_report_needs_witness():
    with pytest.raises(ValueError):
        OracleReport("x", Method.CUT_ENUM, False)
    assert "pass" in str(OracleReport("x", Method.CUT_ENUM, True))


def test_recheck_valid_butterfly(butterfly_strict):
    res = solve_contingency(butterfly_strict)
    report = recheck_appendix_constraints(butterfly_strict, res.topology, res.flows)
    assert report.passed and report.worst_residual <= 1e-8


@pytest.mark.parametrize("which", range(6))
def test_recheck_names_family_of_bumped_pair_flow(butterfly_strict, which):
    res = solve_contingency(butterfly_strict)
    pairs = dict(res.flows.pair_flows)
    key = sorted(pairs)[which]
    pairs[key] += 0.1
    report = recheck_appendix_constraints(butterfly_strict, res.topology, FlowSet(res.flows.message_flows, pairs))
    assert not report.passed
    assert report.witness["family"] in {"consistency", "pair-sender", "pair-receiver", "pair-conservation"}
    assert report.worst_residual == pytest.approx(0.1)


def test_recheck_capacity_family(butterfly_strict):
    res = solve_contingency(butterfly_strict)
    weights = {**res.topology.weights, ("V", "W"): 0.5}
    report = recheck_appendix_constraints(butterfly_strict, Topology(weights), res.flows)
    assert report.witness["family"] == "capacity"


def test_recheck_node_limits(butterfly_strict):
    res = solve_contingency(butterfly_strict)
    p = dataclasses.replace(butterfly_strict, node_limits={"V": (1.0, None)})
    report = recheck_appendix_constraints(p, res.topology, res.flows)
    assert not report.passed and report.witness["family"] == "node-in-limit"


def test_recheck_negative_weight(butterfly_strict):
    res = solve_contingency(butterfly_strict)
    weights = {**res.topology.weights, ("S", "A"): -1.0}
    assert recheck_appendix_constraints(butterfly_strict, Topology(weights), res.flows).witness["family"] \
        in {"nonnegativity", "capacity"}


def test_gf2_check_catches_a_bad_decoder():
    code = butterfly_code("xor")

    class Wrong:
        in_edges = (("A", "R1"), ("W", "R1"))

        def decode(self, received):
            return (received[("A", "R1")], received[("A", "R1")])

    report = exhaustive_gf2_check(code, {"R1": Wrong()})
    assert not report.passed and report.witness["receiver"] == "R1"


def test_copy_forward_outcomes():
    outcomes = copy_forward_outcomes(butterfly_code("xor"), "V")
    assert sorted(tuple(ok) for _, ok in outcomes) == [(), ("R1",), ("R2",)]
