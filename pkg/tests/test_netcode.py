import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orgnet.model import Edge, Graph, NodeRef
from orgnet.netcode import (CodeError, LinearCode, butterfly_code, copy_forward_rules, decodable, evaluate,
                            gf2_left_inverse, propagate, truth_table)
from orgnet.oracle import exhaustive_gf2_check, recovers_all, simulate_bits


def _chain_code(rule=(1, 0)):
    g = Graph((NodeRef("S", "sender"), NodeRef("A", "relay"), NodeRef("T", "receiver")),
              (Edge("S", "A", 1.0), Edge("A", "T", 1.0)))
    return LinearCode(g, 2, {("S", "A"): rule, ("A", "T"): (1,)})


def test_xor_on_the_bridge():
    vectors = propagate(butterfly_code("xor"))
    assert vectors[("V", "W")].tolist() == [1, 1]
    assert vectors[("W", "R1")].tolist() == [1, 1]


def test_identity_chain():
    assert all(v.tolist() == [1, 0] for v in propagate(_chain_code()).values())


def test_zero_rules():
    code = butterfly_code("none")
    zero = LinearCode(code.graph, 2, {k: (0,) * len(r) for k, r in code.local_rules.items()})
    assert all(not v.any() for v in propagate(zero).values())


@pytest.mark.parametrize("bits,bridge", [((1, 0), 1), ((0, 1), 1), ((1, 1), 0), ((0, 0), 0)])
def test_bridge_bit(bits, bridge):
    assert evaluate(butterfly_code("xor"), bits)[("V", "W")] == bridge


def test_all_zero_input():
    assert set(evaluate(butterfly_code("xor"), (0, 0)).values()) == {0}


def test_wrong_bit_count():
    with pytest.raises(CodeError):
        evaluate(butterfly_code(), (1, 0, 1))


def test_both_receivers_decode_xor():
    code = butterfly_code("xor")
    for t in ("R1", "R2"):
        dec = decodable(code, t)
        assert dec is not None
        for bits in itertools.product((0, 1), repeat=2):
            edge_bits = evaluate(code, bits)
            assert dec.decode({k: edge_bits[k] for k in dec.in_edges}) == bits


def test_r1_recovers_b_from_the_bridge():
    code = butterfly_code("xor")
    dec = decodable(code, "R1")
    # second output row reads b = (A->R1) xor (W->R1)
    b_row = dict(zip(dec.in_edges, dec.matrix[1]))
    assert b_row == {("A", "R1"): 1, ("W", "R1"): 1}


@pytest.mark.parametrize("rule", ["a", "b"])
def test_copy_forward_serves_exactly_one(rule):
    code = butterfly_code(rule)
    served = [t for t in ("R1", "R2") if decodable(code, t) is not None]
    assert len(served) == 1


def test_receiver_without_in_edges():
    g = Graph((NodeRef("S", "sender"), NodeRef("A", "relay"), NodeRef("T", "receiver")), (Edge("S", "A", 1.0),))
    code = LinearCode(g, 1, {("S", "A"): (1,)})
    assert decodable(code, "T") is None


def test_unknown_receiver():
    with pytest.raises(CodeError):
        decodable(butterfly_code(), "nowhere")


def test_cyclic_graph_rejected():
    g = Graph((NodeRef("S", "sender"), NodeRef("A", "relay"), NodeRef("B", "relay"), NodeRef("T", "receiver")),
              (Edge("S", "A", 1.0), Edge("A", "B", 1.0), Edge("B", "A", 1.0), Edge("B", "T", 1.0)))
    with pytest.raises(CodeError):
        LinearCode(g, 1, {("S", "A"): (1,), ("A", "B"): (1, 1), ("B", "A"): (1,), ("B", "T"): (1,)})


def test_missing_or_wrong_width_rule():
    code = butterfly_code()
    rules = dict(code.local_rules)
    del rules[("V", "W")]
    with pytest.raises(CodeError):
        LinearCode(code.graph, 2, rules)
    rules[("V", "W")] = (1, 1, 1)
    with pytest.raises(CodeError):
        LinearCode(code.graph, 2, rules)


def test_truth_table_has_four_rows():
    table = truth_table(butterfly_code())
    assert [bits for bits, _ in table] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert table[2][1][("V", "W")] == 1


def test_gf2_left_inverse():
    M = np.array([[1, 0], [1, 1], [0, 1]], dtype=np.uint8)
    D = gf2_left_inverse(M)
    assert ((D @ M) % 2 == np.eye(2, dtype=np.uint8)).all()
    assert gf2_left_inverse(np.array([[1, 1], [1, 1]])) is None


def test_copy_forward_rules():
    assert copy_forward_rules(2) == [(0, 0), (1, 0), (0, 1)]


def test_exhaustive_check_passes():
    code = butterfly_code("xor")
    report = exhaustive_gf2_check(code, {t: decodable(code, t) for t in ("R1", "R2")})
    assert report.passed


def test_no_copy_forward_rule_serves_both():
    code = butterfly_code("xor")
    for rule in copy_forward_rules(2):
        rules = {**code.local_rules, ("V", "W"): rule}
        assert sum(recovers_all(code.graph, "S", rules, 2, t) for t in ("R1", "R2")) <= 1


# random acyclic codes on the butterfly graph
codes = st.builds(
    lambda vw, wr1, wr2, av, ar1, bv, br2: LinearCode(butterfly_code().graph, 2, {
        ("S", "A"): (1, 0), ("S", "B"): (0, 1), ("A", "V"): av, ("A", "R1"): ar1, ("B", "V"): bv,
        ("B", "R2"): br2, ("V", "W"): vw, ("W", "R1"): wr1, ("W", "R2"): wr2}),
    st.tuples(st.integers(0, 1), st.integers(0, 1)), *[st.tuples(st.integers(0, 1))] * 6)
words = st.tuples(st.integers(0, 1), st.integers(0, 1))


@given(codes, words, words)
def test_linearity(code, x, y):
    xy = tuple(a ^ b for a, b in zip(x, y))
    ex, ey, exy = evaluate(code, x), evaluate(code, y), evaluate(code, xy)
    assert all(exy[k] == ex[k] ^ ey[k] for k in exy)


@given(codes, words)
def test_evaluation_matches_bit_simulation(code, bits):
    assert evaluate(code, bits) == simulate_bits(code.graph, code.source, code.local_rules, bits)


@given(codes, st.sampled_from(["R1", "R2"]), st.booleans())
@settings(max_examples=60)
def test_decodability_ignores_in_edge_order(code, t, flip):
    keys = [code.graph.edges[i].key for i in code.graph.in_edges(t)]
    order = keys[::-1] if flip else keys
    a, b = decodable(code, t), decodable(code, t, order)
    assert (a is None) == (b is None)
    assert (a is not None) == recovers_all(code.graph, code.source, code.local_rules, 2, t)
