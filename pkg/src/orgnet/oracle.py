"""Brute-force verifiers for the solvers in this package.

Nothing here shares code with what it checks: cuts are enumerated over node
bipartitions, LP optima over basic solutions, contingency constraints are
re-evaluated from the problem data, and network codes are simulated bit by
bit rather than through coding vectors.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .lpcore import GE, LE, LpModel
from .model import Graph, NodeKind, Replication, Problem

MAX_CUT_NODES = 16
MAX_ENUM_VARS = 8
MAX_ENUM_ROWS = 12


class OracleLimitError(ValueError):
    pass


class Method(str, enum.Enum):
    CUT_ENUM = "CutEnum"
    VERTEX_ENUM = "VertexEnum"
    CONSTRAINT_RECHECK = "ConstraintRecheck"
    EXHAUSTIVE_GF2 = "ExhaustiveGF2"


@dataclass(frozen=True)
class OracleReport:
    subject: str
    method: Method
    passed: bool
    worst_residual: float = 0.0
    witness: Any = None

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("a failing report needs a witness")

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __str__(self):
        line = f"{self.subject}: {self.method.value} {self.verdict} (worst residual {self.worst_residual:.3g})"
        if self.witness is not None:
            line += f"; witness: {self.witness}"
        return line


# --------------------------------------------------------------------------- #
# cuts


def min_cut_enum(g: Graph, caps: Mapping[tuple[str, str], float], s: str, t: str,
                 max_nodes: int = MAX_CUT_NODES) -> float:
    """Minimum s-t cut capacity over every bipartition of the nodes."""
    ids = [n.id for n in g.nodes]
    if len(ids) > max_nodes:
        raise OracleLimitError(f"cut enumeration is capped at {max_nodes} nodes, graph has {len(ids)}")
    if s not in ids or t not in ids or s == t:
        raise OracleLimitError("s and t must be distinct nodes of the graph")
    others = [v for v in ids if v not in (s, t)]
    arcs = [(e.src, e.dst, caps[e.key]) for e in g.edges]
    best = math.inf
    for mask in range(1 << len(others)):
        side = {s} | {v for i, v in enumerate(others) if mask >> i & 1}
        value = sum(c for a, b, c in arcs if a in side and b not in side)
        best = min(best, value)
    return best


def check_max_flow(g: Graph, caps, s: str, t: str, value: float, tol: float = 0.0) -> OracleReport:
    cut = min_cut_enum(g, caps, s, t)
    gap = abs(cut - value)
    ok = gap <= tol
    return OracleReport(f"maxflow {s}->{t}", Method.CUT_ENUM, ok, gap,
                        None if ok else {"max_flow": value, "min_cut": cut})


# --------------------------------------------------------------------------- #
# tiny LPs


@dataclass(frozen=True)
class VertexEnumResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    objective: float
    x: np.ndarray | None = None


def _halfspaces(model: LpModel):
    """All constraints as G x <= h plus equalities E x = f, bounds included."""
    A = model.A.toarray() if hasattr(model.A, "toarray") else np.asarray(model.A, dtype=float)
    n = model.n_vars
    G, h, E, f = [], [], [], []
    for row, sense, rhs in zip(A, model.senses, model.rhs):
        if sense == LE:
            G.append(row), h.append(rhs)
        elif sense == GE:
            G.append(-row), h.append(-rhs)
        else:
            E.append(row), f.append(rhs)
    eye = np.eye(n)
    for j in range(n):
        G.append(-eye[j]), h.append(-model.lower[j])
        if math.isfinite(model.upper[j]):
            G.append(eye[j]), h.append(model.upper[j])

    def arr(rows, width):
        return np.array(rows, dtype=float).reshape(len(rows), width)

    return arr(G, n), np.array(h, dtype=float), arr(E, n), np.array(f, dtype=float)


def _independent_rows(E) -> list[int]:
    keep: list[int] = []
    for i in range(E.shape[0]):
        if np.linalg.matrix_rank(E[keep + [i]]) > len(keep):
            keep.append(i)
    return keep


def _vertices(G, h, E, f, tol):
    """Feasible basic points of {G x <= h, E x = f} (equalities always active)."""
    n = G.shape[1]
    keep = _independent_rows(E)
    fixed_M, fixed_r = E[keep], f[keep]
    out = []
    for subset in itertools.combinations(range(G.shape[0]), n - len(keep)):
        M = np.vstack([fixed_M, G[list(subset)]])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.concatenate([fixed_r, h[list(subset)]]))
        if (G @ x <= h + tol).all() and np.allclose(E @ x, f, atol=tol):
            out.append(x)
    return out


def lp_vertex_enum(model: LpModel, tol: float = 1e-9) -> VertexEnumResult:
    """Optimum of a tiny LP by enumerating its basic solutions.

    Lower bounds are finite, so a nonempty feasible set has a vertex and a
    finite optimum is attained at one.  Unboundedness is decided the same
    way on the recession cone cut by the hyperplane c @ d = -1.
    """
    n, m = model.n_vars, model.n_constraints
    if n > MAX_ENUM_VARS or m > MAX_ENUM_ROWS:
        raise OracleLimitError(f"vertex enumeration is capped at {MAX_ENUM_VARS} variables and "
                               f"{MAX_ENUM_ROWS} constraints, model has {n} and {m}")
    G, h, E, f = _halfspaces(model)
    points = _vertices(G, h, E, f, tol)
    if not points:
        return VertexEnumResult("infeasible", math.inf)
    c = model.objective
    # recession directions: G d <= 0, E d = 0, and c @ d = -1
    rays = _vertices(G, np.zeros_like(h), np.vstack([E, c[None, :]]), np.concatenate([np.zeros_like(f), [-1.0]]), tol)
    if rays:
        return VertexEnumResult("unbounded", -math.inf, rays[0])
    best = min(points, key=lambda x: float(c @ x))
    return VertexEnumResult("optimal", float(c @ best), best)


def check_lp(model: LpModel, status: str, objective: float, tol: float = 1e-7, subject: str = "lp") -> OracleReport:
    ref = lp_vertex_enum(model)
    if ref.status != status:
        return OracleReport(subject, Method.VERTEX_ENUM, False, math.inf,
                            {"solver": status, "enumeration": ref.status})
    if status != "optimal":
        return OracleReport(subject, Method.VERTEX_ENUM, True)
    gap = abs(ref.objective - objective)
    ok = gap <= tol * (1.0 + abs(ref.objective))
    return OracleReport(subject, Method.VERTEX_ENUM, ok, gap,
                        None if ok else {"solver": objective, "enumeration": ref.objective})


# --------------------------------------------------------------------------- #
# contingency constraints, re-derived from the problem data


def recheck_appendix_constraints(p: Problem, t, f, delivered: Mapping[tuple, float] | None = None,
                                 tol: float = 1e-8) -> OracleReport:
    """Evaluate every contingency-plan constraint on a candidate solution.

    ``t`` carries ``weights`` keyed by edge; ``f`` carries ``message_flows``
    keyed by (broadcast id, message index, edge) and ``pair_flows`` keyed by
    (broadcast id, message index, edge, receiver).  Missing keys are zero.
    In weighted-delivery mode ``delivered`` holds the amount delivered per
    (broadcast id, message index, receiver) and replaces the message size on
    the receiver side.
    """
    weights, message_flows, pair_flows = t.weights, f.message_flows, f.pair_flows
    g = p.graph
    edges = [e.key for e in g.edges]
    into = {n.id: [k for k in edges if k[1] == n.id] for n in g.nodes}
    outof = {n.id: [k for k in edges if k[0] == n.id] for n in g.nodes}
    strict = p.sender_replication is Replication.STRICT
    worst = {"family": None, "where": None, "residual": 0.0}

    def note(family, where, residual):
        if residual > worst["residual"]:
            worst.update(family=family, where=where, residual=residual)

    def w(k):
        return weights.get(k, 0.0)

    def f(bid, mi, k):
        return message_flows.get((bid, mi, k), 0.0)

    def fh(bid, mi, k, t):
        return pair_flows.get((bid, mi, k, t), 0.0)

    for k in edges:
        note("nonnegativity", ("w", k), -w(k))
    for (bid, mi, k), v in message_flows.items():
        note("nonnegativity", ("f", bid, mi, k), -v)
    for (bid, mi, k, t), v in pair_flows.items():
        note("nonnegativity", ("fhat", bid, mi, k, t), -v)

    for b in p.broadcasts:
        for k in edges:
            load = sum(f(b.id, mi, k) for mi in range(len(b.messages)))
            note("capacity", (b.id, k), load - w(k))
        for mi, m in enumerate(b.messages):
            def target(t, m=m, mi=mi, bid=b.id):
                return m.size if delivered is None else delivered.get((bid, mi, t), 0.0)

            sent = sum(f(b.id, mi, k) for k in outof[m.source])
            if delivered is None:
                need = m.size
                note("msg-sender", (b.id, mi), abs(sent - need) if strict else need - sent)
            elif strict:
                # one sent amount, at most the size, covers every delivery
                note("msg-sender", (b.id, mi), max(target(t) for t in m.receivers) - sent)
                note("msg-sender", (b.id, mi), sent - m.size)
            else:
                for t in m.receivers:
                    note("msg-sender", (b.id, mi, t), target(t) - sent)
            if delivered is not None:
                for t in m.receivers:
                    note("delivery-bounds", (b.id, mi, t), max(-target(t), target(t) - m.size))
            for t in m.receivers:
                got = sum(f(b.id, mi, k) for k in into[t])
                note("msg-receiver", (b.id, mi, t), abs(got - target(t)))
            for node in g.nodes:
                if node.id == m.source or node.id in m.receivers:
                    continue
                inflow = sum(f(b.id, mi, k) for k in into[node.id])
                for k in outof[node.id]:
                    note("relay-replication", (b.id, mi, node.id, k), f(b.id, mi, k) - inflow)
            for t in m.receivers:
                for k in edges:
                    note("consistency", (b.id, mi, t, k), fh(b.id, mi, k, t) - f(b.id, mi, k))
                out_s = sum(fh(b.id, mi, k, t) for k in outof[m.source])
                note("pair-sender", (b.id, mi, t), abs(out_s - target(t)))
                in_t = sum(fh(b.id, mi, k, t) for k in into[t])
                note("pair-receiver", (b.id, mi, t), abs(in_t - target(t)))
                for node in g.nodes:
                    if node.id in (m.source, t):
                        continue
                    bal = sum(fh(b.id, mi, k, t) for k in into[node.id]) - sum(fh(b.id, mi, k, t) for k in outof[node.id])
                    note("pair-conservation", (b.id, mi, t, node.id), abs(bal))

    for node, (cap_in, cap_out) in (p.node_limits or {}).items():
        if cap_in is not None:
            note("node-in-limit", node, sum(w(k) for k in into[node]) - cap_in)
        if cap_out is not None:
            note("node-out-limit", node, sum(w(k) for k in outof[node]) - cap_out)

    ok = worst["residual"] <= tol
    return OracleReport("contingency plan", Method.CONSTRAINT_RECHECK, ok, worst["residual"],
                        None if ok else dict(worst))


# --------------------------------------------------------------------------- #
# GF(2) network codes


def simulate_bits(graph: Graph, source: str, rules: Mapping[tuple[str, str], Sequence[int]],
                  bits: Sequence[int]) -> dict[tuple[str, str], int]:
    """Edge bits by repeated sweeps until every edge is determined."""
    in_keys = {n.id: [e.key for e in graph.edges if e.dst == n.id] for n in graph.nodes}
    values: dict[tuple[str, str], int] = {}
    pending = [e.key for e in graph.edges]
    while pending:
        left = []
        for key in pending:
            tail = key[0]
            rule = rules[key]
            if tail == source:
                values[key] = sum(c & x for c, x in zip(rule, bits)) % 2
            elif all(k in values for k in in_keys[tail]):
                values[key] = sum(c & values[k] for c, k in zip(rule, in_keys[tail])) % 2
            else:
                left.append(key)
        if len(left) == len(pending):
            raise ValueError("edge bits cannot be determined: the graph has a cycle")
        pending = left
    return values


def exhaustive_gf2_check(code, decoders: Mapping[str, Any]) -> OracleReport:
    """Every source word must be recovered exactly by every given decoder.

    ``decoders`` maps a receiver to an object with ``in_edges`` and
    ``decode(received)``; ``code`` provides graph, source, source_dim and
    local_rules.
    """
    for bits in itertools.product((0, 1), repeat=code.source_dim):
        edge_bits = simulate_bits(code.graph, code.source, code.local_rules, bits)
        for t, dec in decoders.items():
            got = tuple(dec.decode({k: edge_bits[k] for k in dec.in_edges}))
            if got != bits:
                return OracleReport(f"code at {t}", Method.EXHAUSTIVE_GF2, False, 1.0,
                                    {"receiver": t, "sent": bits, "decoded": got})
    return OracleReport("code", Method.EXHAUSTIVE_GF2, True)


def recovers_all(graph: Graph, source: str, rules, k: int, receiver: str) -> bool:
    """Whether the receiver's in-edge bits determine the source word (by tabulation)."""
    keys = [e.key for e in graph.edges if e.dst == receiver]
    seen: dict[tuple[int, ...], tuple[int, ...]] = {}
    for bits in itertools.product((0, 1), repeat=k):
        vals = simulate_bits(graph, source, rules, bits)
        obs = tuple(vals[key] for key in keys)
        if seen.setdefault(obs, bits) != bits:
            return False
    return True


def copy_forward_outcomes(code, node: str) -> list[tuple[dict, list[str]]]:
    """Decodable receivers for every copy-and-forward choice at ``node``.

    Each out-edge of ``node`` may forward nothing or exactly one of its
    in-edges unchanged; all other rules stay as in ``code``.
    """
    g = code.graph
    n_in = sum(1 for e in g.edges if e.dst == node)
    outs = [e.key for e in g.edges if e.src == node]
    choices = [tuple(int(i == j) for i in range(n_in)) for j in range(-1, n_in)]
    receivers = [n.id for n in g.nodes if n.kind is NodeKind.RECEIVER]
    results = []
    for combo in itertools.product(choices, repeat=len(outs)):
        rules = dict(code.local_rules)
        rules.update(zip(outs, combo))
        ok = [t for t in receivers if recovers_all(g, code.source, rules, code.source_dim, t)]
        results.append((dict(zip(outs, combo)), ok))
    return results
