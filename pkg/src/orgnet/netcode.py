"""Linear network codes over GF(2) on acyclic organisation graphs.

Every edge carries one bit.  An edge leaving the source selects a GF(2)
combination of the ``k`` source bits; an edge leaving any other node
combines the bits on that node's in-edges.  Composing these local rules in
topological order gives each edge a global coding vector, and a receiver
can decode exactly when its in-edge vectors span GF(2)^k.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .model import Graph, NodeKind, butterfly_graph

EdgeKey = tuple[str, str]


class CodeError(ValueError):
    pass


@dataclass(frozen=True)
class LinearCode:
    """Local GF(2) rules keyed by out-edge.

    For a source out-edge the rule is a length-``k`` selector over the source
    bits; for any other out-edge it is a coefficient row over
    ``graph.in_edges(tail)`` in graph edge order.
    """

    graph: Graph
    source_dim: int
    local_rules: Mapping[EdgeKey, tuple[int, ...]]

    def __post_init__(self):
        g = self.graph
        senders = g.senders
        if len(senders) != 1:
            raise CodeError("a linear code needs exactly one source")
        if self.source_dim < 1:
            raise CodeError("source dimension must be positive")
        if not nx.is_directed_acyclic_graph(_digraph(g)):
            raise CodeError("network codes are only defined here on acyclic graphs")
        rules = {}
        for e in g.edges:
            if e.key not in self.local_rules:
                raise CodeError(f"edge {e.src}->{e.dst} has no local rule")
            rule = tuple(int(v) & 1 for v in self.local_rules[e.key])
            width = self.source_dim if e.src == self.source else len(g.in_edges(e.src))
            if len(rule) != width:
                raise CodeError(f"rule for {e.src}->{e.dst} has {len(rule)} coefficients, expected {width}")
            rules[e.key] = rule
        object.__setattr__(self, "local_rules", rules)

    @property
    def source(self) -> str:
        return self.graph.senders[0].id


def _digraph(g: Graph) -> nx.DiGraph:
    dg = nx.DiGraph()
    dg.add_nodes_from(n.id for n in g.nodes)
    dg.add_edges_from(e.key for e in g.edges)
    return dg


def propagate(code: LinearCode) -> dict[EdgeKey, np.ndarray]:
    """Global coding vector of every edge, as uint8 arrays of length k."""
    g = code.graph
    vectors: dict[EdgeKey, np.ndarray] = {}
    for node in nx.topological_sort(_digraph(g)):
        if node == code.source:
            for i in g.out_edges(node):
                key = g.edges[i].key
                vectors[key] = np.array(code.local_rules[key], dtype=np.uint8)
            continue
        parents = [vectors[g.edges[i].key] for i in g.in_edges(node)]
        for i in g.out_edges(node):
            key = g.edges[i].key
            v = np.zeros(code.source_dim, dtype=np.uint8)
            for coef, pv in zip(code.local_rules[key], parents):
                if coef:
                    v ^= pv
            vectors[key] = v
    return vectors


def evaluate(code: LinearCode, source_bits: Sequence[int]) -> dict[EdgeKey, int]:
    bits = np.asarray(source_bits, dtype=np.uint8) & 1
    if bits.shape != (code.source_dim,):
        raise CodeError(f"expected {code.source_dim} source bits, got {len(source_bits)}")
    return {key: int(v @ bits) & 1 for key, v in propagate(code).items()}


def gf2_left_inverse(M: np.ndarray) -> np.ndarray | None:
    """D with D @ M = I over GF(2), or None when M lacks full column rank."""
    M = np.asarray(M, dtype=np.uint8) & 1
    rows, k = M.shape
    aug = np.concatenate([M, np.eye(rows, dtype=np.uint8)], axis=1)
    r = 0
    for col in range(k):
        hits = np.flatnonzero(aug[r:, col]) + r
        if hits.size == 0:
            return None
        p = hits[0]
        aug[[r, p]] = aug[[p, r]]
        for i in np.flatnonzero(aug[:, col]):
            if i != r:
                aug[i] ^= aug[r]
        r += 1
    # rows 0..k-1 now read I = E_top @ M
    return aug[:k, k:].copy()


@dataclass(frozen=True)
class Decoder:
    receiver: str
    in_edges: tuple[EdgeKey, ...]
    matrix: np.ndarray  # k x len(in_edges)

    def decode(self, received: Mapping[EdgeKey, int]) -> tuple[int, ...]:
        r = np.array([received[e] for e in self.in_edges], dtype=np.uint8)
        return tuple(int(v) for v in (self.matrix @ r) & 1)


def decodable(code: LinearCode, receiver: str, edge_order: Sequence[EdgeKey] | None = None) -> Decoder | None:
    """Decoder for ``receiver`` if its in-edges determine all source bits."""
    g = code.graph
    if receiver not in g:
        raise CodeError(f"unknown node {receiver!r}")
    keys = tuple(edge_order) if edge_order is not None else tuple(g.edges[i].key for i in g.in_edges(receiver))
    if not keys:
        return None
    vectors = propagate(code)
    M = np.stack([vectors[k] for k in keys])
    D = gf2_left_inverse(M)
    return None if D is None else Decoder(receiver, keys, D)


def butterfly_code(relay_rule: Sequence[int] | str = "xor") -> LinearCode:
    """Two source bits (a, b) on the butterfly; V combines its inputs per ``relay_rule``.

    ``"xor"`` sends a XOR b over V->W, ``"a"``/``"b"`` copy one input, or
    pass an explicit coefficient pair over V's in-edges (A->V, B->V).
    """
    g = butterfly_graph()
    named = {"xor": (1, 1), "a": (1, 0), "b": (0, 1), "none": (0, 0)}
    v_rule = named[relay_rule] if isinstance(relay_rule, str) else tuple(relay_rule)
    rules = {e.key: (1,) * len(g.in_edges(e.src)) for e in g.edges if e.src != "S"}
    rules[("S", "A")] = (1, 0)
    rules[("S", "B")] = (0, 1)
    rules[("V", "W")] = v_rule
    return LinearCode(g, 2, rules)


def copy_forward_rules(n_inputs: int) -> list[tuple[int, ...]]:
    """Rules that forward at most one input unchanged."""
    out = [tuple([0] * n_inputs)]
    for i in range(n_inputs):
        rule = [0] * n_inputs
        rule[i] = 1
        out.append(tuple(rule))
    return out


def truth_table(code: LinearCode) -> list[tuple[tuple[int, ...], dict[EdgeKey, int]]]:
    return [(bits, evaluate(code, bits)) for bits in itertools.product((0, 1), repeat=code.source_dim)]


def receivers_of(code: LinearCode) -> list[str]:
    return [n.id for n in code.graph.nodes if n.kind is NodeKind.RECEIVER]
