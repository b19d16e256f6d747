import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from orgnet.contingency import solve_contingency, solve_weighted_delivery
from orgnet.corpus import corpus, packaged, random_problem
from orgnet.documents import (DocumentError, dump_problem, dump_solution, number, parse_problem, parse_solution,
                              problem_to_dict)
from orgnet.dot import to_dot
from orgnet.model import Replication, butterfly_graph


def _doc(**changes):
    d = problem_to_dict(packaged("butterfly").problem)
    d.update(changes)
    return json.dumps(d)


def test_packaged_fixtures():
    bf = packaged("butterfly")
    assert len(bf.problem.graph.edges) == 9
    assert set(bf.capacities.values()) == {1.0}
    assert packaged("disjoint_paths").problem.sender_replication is Replication.STRICT


def test_number_formatting():
    assert number(1 / 3) == 0.333333333333
    assert number(-0.0) == 0.0 and str(number(-1e-300 * 1e-300)) == "0.0"
    assert number(float("inf")) is None


@pytest.mark.parametrize("name,p", corpus()[::7], ids=lambda x: x if isinstance(x, str) else "")
def test_problem_round_trip(name, p):
    text = dump_problem(p)
    again = parse_problem(text).problem
    assert again == p
    assert dump_problem(again) == text


@given(st.integers(0, 5000), st.sampled_from(list(Replication)))
@settings(max_examples=30)
def test_random_round_trip(seed, mode):
    p = random_problem(seed, 2, 2, 1, 2, 2, mode=mode)
    assert parse_problem(dump_problem(p)).problem == p


def test_capacities_round_trip():
    doc = packaged("butterfly")
    text = dump_problem(doc.problem, doc.capacities)
    assert parse_problem(text).capacities == doc.capacities


def test_unknown_field_rejected():
    with pytest.raises(DocumentError, match="unknown field 'colour'"):
        parse_problem(_doc(colour="red"))


def test_missing_field_rejected():
    d = json.loads(_doc())
    del d["edges"]
    with pytest.raises(DocumentError, match="missing field 'edges'"):
        parse_problem(json.dumps(d))


def test_malformed_json_names_the_line():
    text = _doc()
    with pytest.raises(DocumentError, match=r"line \d+ column \d+"):
        parse_problem(text[: len(text) // 2])


def test_wrong_format_and_version():
    with pytest.raises(DocumentError, match="format"):
        parse_problem(_doc(format="other"))
    with pytest.raises(DocumentError, match="version"):
        parse_problem(_doc(version=99))


def test_bad_field_types_name_the_field():
    d = json.loads(_doc())
    d["edges"][2]["cost"] = "cheap"
    with pytest.raises(DocumentError, match=r"edges\[2\]\.cost"):
        parse_problem(json.dumps(d))
    d = json.loads(_doc())
    d["nodes"][0]["kind"] = "boss"
    with pytest.raises(DocumentError, match=r"nodes\[0\]\.kind"):
        parse_problem(json.dumps(d))


def test_invalid_problem_reports_violation():
    d = json.loads(_doc())
    d["broadcasts"][0]["messages"][0]["receivers"] = []
    with pytest.raises(DocumentError, match="empty-receivers"):
        parse_problem(json.dumps(d))


def test_partial_capacities_rejected():
    d = json.loads(dump_problem(packaged("butterfly").problem, packaged("butterfly").capacities))
    del d["edges"][0]["capacity"]
    with pytest.raises(DocumentError):
        parse_problem(json.dumps(d))


def test_solution_document(butterfly_strict):
    res = solve_contingency(butterfly_strict)
    text = dump_solution(butterfly_strict, res)
    d = json.loads(text)
    assert d["status"] == "optimal" and d["objective"] == 9.0
    assert {"duals", "duality_gap", "max_residual"} <= d["certificates"].keys()
    sd = parse_solution(text, butterfly_strict)
    assert sd.weights == res.topology.weights
    assert sd.pair_flows == res.flows.pair_flows


def test_solution_documents_are_deterministic(butterfly_strict):
    a = dump_solution(butterfly_strict, solve_contingency(butterfly_strict))
    b = dump_solution(butterfly_strict, solve_contingency(butterfly_strict))
    assert a == b


def test_infeasible_solution_has_farkas(disjoint_strict):
    d = json.loads(dump_solution(disjoint_strict, solve_contingency(disjoint_strict)))
    assert d["status"] == "infeasible"
    assert d["certificates"]["farkas"]["rows"]


def test_weighted_solution_round_trip(butterfly_strict):
    p = dataclasses.replace(butterfly_strict, importance={("b0", 0, "R1"): 10.0, ("b0", 0, "R2"): 10.0})
    assert parse_problem(dump_problem(p)).problem == p
    res = solve_weighted_delivery(p)
    sd = parse_solution(dump_solution(p, res), p)
    assert sd.delivered == res.delivered


def test_solution_for_the_wrong_problem(butterfly_strict, disjoint_relaxed):
    text = dump_solution(butterfly_strict, solve_contingency(butterfly_strict))
    with pytest.raises(DocumentError, match="not in the problem"):
        parse_solution(text, disjoint_relaxed)


def test_dot_rendering():
    g = butterfly_graph()
    plain = to_dot(g)
    assert plain.startswith('digraph "orgnet" {') and plain.count("->") == 9
    weights = {e.key: 0.0 for e in g.edges}
    weights[("S", "A")] = 2.0
    weights[("S", "B")] = 1.0
    text = to_dot(g, weights, name="plan")
    assert '"S" -> "A" [color="#08306b", penwidth=4.00, label="2"];' in text
    assert '"V" -> "W" [color="#bdbdbd", style=dashed];' in text
    assert '"R1" [shape=doublecircle' in text
