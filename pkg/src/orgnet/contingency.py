"""Minimum-cost contingency planning as a linear program.

Columns are laid out in three blocks: edge weights ``w[e]``, then message
flows ``f[b, m, e]`` by broadcast and message, then receiver flows
``fhat[b, m, t, e]``.  Rows are emitted in a fixed order so dual multipliers
can be read back by label:

1. ``capacity``            sum_m f[b,m,e] <= w[e]                  per (b, e)
2. ``msg-sender``          sum_{e out of s(m)} f[b,m,e] = size     per (b, m)  (>= in relaxed mode)
3. ``msg-receiver``        sum_{e into t} f[b,m,e] = size          per (b, m, t)
4. ``relay-replication``   f[b,m,e_out] <= sum_{e into n} f[b,m,e] per (b, m, n, e_out), n not s(m) or in T(m)
5. ``consistency``         fhat[b,m,t,e] <= f[b,m,e]               per (b, m, t, e)
6. ``pair-sender``         sum_{e out of s(m)} fhat[b,m,t,e] = size
7. ``pair-receiver``       sum_{e into t} fhat[b,m,t,e] = size
8. ``pair-conservation``   inflow = outflow of fhat[b,m,t,.]       at every node except s(m), t

Optional node limits append ``node-in-limit`` / ``node-out-limit`` rows on
the weights.  The objective is ``sum_e cost[e] * w[e]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lpcore
from .lpcore import EQ, GE, LE, LpBuilder, LpModel, LpSolution, Status
from .model import Problem, Replication, ValidationError, require_valid, validate_problem

SUPPORT_TOL = 1e-9
_ZERO = 1e-12

FAMILIES = ("capacity", "msg-sender", "msg-receiver", "relay-replication", "consistency",
            "pair-sender", "pair-receiver", "pair-conservation")


@dataclass(frozen=True)
class VarIndex:
    """Bijection between LP columns and (kind, broadcast, message, receiver, edge)."""

    n_edges: int
    f_start: dict[tuple[int, int], int]
    fhat_start: dict[tuple[int, int, str], int]
    extra: dict[tuple, int] = field(default_factory=dict)

    def w(self, e: int) -> int:
        return e

    def f(self, b: int, m: int, e: int) -> int:
        return self.f_start[b, m] + e

    def fhat(self, b: int, m: int, t: str, e: int) -> int:
        return self.fhat_start[b, m, t] + e

    @property
    def n_flow_cols(self) -> int:
        return self.n_edges * (1 + len(self.f_start) + len(self.fhat_start))

    @property
    def n_cols(self) -> int:
        return self.n_flow_cols + len(self.extra)

    def describe(self, col: int) -> tuple:
        if col < self.n_edges:
            return ("w", col)
        for key, start in self.f_start.items():
            if start <= col < start + self.n_edges:
                return ("f", *key, col - start)
        for key, start in self.fhat_start.items():
            if start <= col < start + self.n_edges:
                return ("fhat", *key, col - start)
        for key, c in self.extra.items():
            if c == col:
                return key
        raise IndexError(col)


def expected_columns(p: Problem) -> int:
    n_e = len(p.graph.edges)
    n_msg = sum(len(b.messages) for b in p.broadcasts)
    n_pairs = sum(len(m.receivers) for b in p.broadcasts for m in b.messages)
    return n_e + n_msg * n_e + n_pairs * n_e


def _check(p: Problem):
    problems = validate_problem(p)
    if problems:
        raise ValidationError(problems)


def _flow_columns(lp: LpBuilder, p: Problem):
    g = p.graph
    n_e = len(g.edges)
    for e in g.edges:
        lp.add_var(("w", e.src, e.dst), cost=e.cost)
    f_start, fhat_start = {}, {}
    for bi, mi, b, m in p.messages():
        f_start[bi, mi] = len(lp.costs)
        for e in g.edges:
            lp.add_var(("f", b.id, mi, e.src, e.dst))
    for bi, mi, b, m in p.messages():
        for t in m.receivers:
            fhat_start[bi, mi, t] = len(lp.costs)
            for e in g.edges:
                lp.add_var(("fhat", b.id, mi, t, e.src, e.dst))
    return VarIndex(n_e, f_start, fhat_start)


def _emit_rows(lp: LpBuilder, p: Problem, idx: VarIndex, delivered=None, sent=None):
    """Emit the eight families.  ``delivered``/``sent`` switch on variable delivery."""
    g = p.graph
    n_e = len(g.edges)
    strict = p.sender_replication is Replication.STRICT

    def amount(coeffs, key, var_map):
        # hard size on the rhs, or a delivered-amount column moved to the lhs
        if var_map is None:
            return coeffs
        coeffs = dict(coeffs)
        coeffs[var_map[key]] = coeffs.get(var_map[key], 0.0) - 1.0
        return coeffs

    for bi, b in enumerate(p.broadcasts):
        for e in range(n_e):
            row = {idx.f(bi, mi, e): 1.0 for mi in range(len(b.messages))}
            row[idx.w(e)] = -1.0
            lp.add_row(row, LE, 0.0, ("capacity", b.id, g.edges[e].key))
    for bi, mi, b, m in p.messages():
        out_s = g.out_edges(m.source)
        row = {idx.f(bi, mi, e): 1.0 for e in out_s}
        if delivered is None:
            lp.add_row(row, EQ if strict else GE, m.size, ("msg-sender", b.id, mi))
        elif strict:
            lp.add_row(amount(row, (bi, mi), sent), EQ, 0.0, ("msg-sender", b.id, mi))
            for t in m.receivers:
                lp.add_row({delivered[bi, mi, t]: 1.0, sent[bi, mi]: -1.0}, LE, 0.0, ("delivery-bound", b.id, mi, t))
        else:
            for t in m.receivers:
                lp.add_row(amount(row, (bi, mi, t), delivered), GE, 0.0, ("msg-sender", b.id, mi, t))
        for t in m.receivers:
            row = {idx.f(bi, mi, e): 1.0 for e in g.in_edges(t)}
            rhs = m.size if delivered is None else 0.0
            lp.add_row(amount(row, (bi, mi, t), delivered), EQ, rhs, ("msg-receiver", b.id, mi, t))
        skip = {m.source, *m.receivers}
        for node in g.nodes:
            if node.id in skip:
                continue
            ins = g.in_edges(node.id)
            for e_out in g.out_edges(node.id):
                row = {idx.f(bi, mi, e): -1.0 for e in ins}
                row[idx.f(bi, mi, e_out)] = row.get(idx.f(bi, mi, e_out), 0.0) + 1.0
                lp.add_row(row, LE, 0.0, ("relay-replication", b.id, mi, node.id, g.edges[e_out].key))
    for bi, mi, b, m in p.messages():
        for t in m.receivers:
            for e in range(n_e):
                lp.add_row({idx.fhat(bi, mi, t, e): 1.0, idx.f(bi, mi, e): -1.0}, LE, 0.0,
                           ("consistency", b.id, mi, t, g.edges[e].key))
    for bi, mi, b, m in p.messages():
        for t in m.receivers:
            rhs = m.size if delivered is None else 0.0
            row = {idx.fhat(bi, mi, t, e): 1.0 for e in g.out_edges(m.source)}
            lp.add_row(amount(row, (bi, mi, t), delivered), EQ, rhs, ("pair-sender", b.id, mi, t))
            row = {idx.fhat(bi, mi, t, e): 1.0 for e in g.in_edges(t)}
            lp.add_row(amount(row, (bi, mi, t), delivered), EQ, rhs, ("pair-receiver", b.id, mi, t))
            for node in g.nodes:
                if node.id in (m.source, t):
                    continue
                row = {}
                for e in g.in_edges(node.id):
                    row[idx.fhat(bi, mi, t, e)] = row.get(idx.fhat(bi, mi, t, e), 0.0) + 1.0
                for e in g.out_edges(node.id):
                    row[idx.fhat(bi, mi, t, e)] = row.get(idx.fhat(bi, mi, t, e), 0.0) - 1.0
                lp.add_row(row, EQ, 0.0, ("pair-conservation", b.id, mi, t, node.id))
    for node, (cap_in, cap_out) in (p.node_limits or {}).items():
        if cap_in is not None:
            lp.add_row({idx.w(e): 1.0 for e in g.in_edges(node)}, LE, cap_in, ("node-in-limit", node))
        if cap_out is not None:
            lp.add_row({idx.w(e): 1.0 for e in g.out_edges(node)}, LE, cap_out, ("node-out-limit", node))


def build_lp(p: Problem) -> tuple[LpModel, VarIndex]:
    """Assemble the contingency-planning LP for ``p``."""
    _check(p)
    lp = LpBuilder()
    idx = _flow_columns(lp, p)
    _emit_rows(lp, p, idx)
    return lp.build(), idx


@dataclass
class Topology:
    weights: dict[tuple[str, str], float]
    support_tol: float = SUPPORT_TOL

    @property
    def support(self) -> list[tuple[str, str]]:
        return [k for k, w in self.weights.items() if w > self.support_tol]

    def cost(self, graph) -> float:
        return sum(e.cost * self.weights.get(e.key, 0.0) for e in graph.edges)


@dataclass
class FlowSet:
    """Non-zero flows keyed by ``(broadcast_id, message_index, edge)`` and
    ``(broadcast_id, message_index, edge, receiver)``."""

    message_flows: dict[tuple, float] = field(default_factory=dict)
    pair_flows: dict[tuple, float] = field(default_factory=dict)


@dataclass
class ContingencyResult:
    status: Status
    objective: float
    topology: Topology | None
    flows: FlowSet | None
    solution: LpSolution
    model: LpModel
    index: VarIndex
    delivered: dict[tuple, float] | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def net_benefit(self) -> float:
        """For weighted delivery: total importance delivered minus cost."""
        return -self.objective + 0.0


def _clean(v: float) -> float:
    return 0.0 if abs(v) < _ZERO else float(v)


def _extract(p: Problem, idx: VarIndex, x: np.ndarray) -> tuple[Topology, FlowSet]:
    g = p.graph
    weights = {e.key: max(_clean(x[idx.w(i)]), 0.0) for i, e in enumerate(g.edges)}
    fs = FlowSet()
    for bi, mi, b, m in p.messages():
        for i, e in enumerate(g.edges):
            v = _clean(x[idx.f(bi, mi, i)])
            if v:
                fs.message_flows[b.id, mi, e.key] = v
            for t in m.receivers:
                v = _clean(x[idx.fhat(bi, mi, t, i)])
                if v:
                    fs.pair_flows[b.id, mi, e.key, t] = v
    return Topology(weights), fs


def _finish(p, model, idx, sol, delivered_cols=None) -> ContingencyResult:
    if not sol.optimal:
        return ContingencyResult(sol.status, sol.objective, None, None, sol, model, idx)
    topo, flows = _extract(p, idx, sol.primal)
    delivered = None
    if delivered_cols is not None:
        delivered = {(p.broadcasts[bi].id, mi, t): _clean(sol.primal[c]) for (bi, mi, t), c in delivered_cols.items()}
    return ContingencyResult(sol.status, sol.objective, topo, flows, sol, model, idx, delivered)


def solve_contingency(p: Problem, tol_feas: float = lpcore.TOL_FEAS, tol_gap: float = lpcore.TOL_GAP,
                      **solver_kw) -> ContingencyResult:
    """Cheapest standing weights that can carry every broadcast."""
    model, idx = build_lp(p)
    sol = lpcore.solve(model, tol_feas, tol_gap, **solver_kw)
    return _finish(p, model, idx, sol)


def build_weighted_lp(p: Problem) -> tuple[LpModel, VarIndex, dict]:
    """Contingency LP with delivery amounts ``d[b,m,t]`` in ``[0, size]``.

    Receiver-side size equalities become ``= d``; strict mode adds a sent
    amount ``sigma[b,m]`` with ``d <= sigma`` that sets the source total.
    The objective is ``sum cost*w - sum importance*d``.
    """
    require_valid(p)
    if p.importance is None:
        raise ValueError("weighted delivery needs an importance map")
    lp = LpBuilder()
    idx = _flow_columns(lp, p)
    delivered, sent = {}, {}
    for bi, mi, b, m in p.messages():
        for t in m.receivers:
            beta = p.importance.get((b.id, mi, t), 0.0)
            delivered[bi, mi, t] = lp.add_var(("d", b.id, mi, t), cost=-beta, upper=m.size)
            idx.extra[("d", bi, mi, t)] = delivered[bi, mi, t]
        if p.sender_replication is Replication.STRICT:
            sent[bi, mi] = lp.add_var(("sigma", b.id, mi), upper=m.size)
            idx.extra[("sigma", bi, mi)] = sent[bi, mi]
    _emit_rows(lp, p, idx, delivered=delivered, sent=sent)
    return lp.build(), idx, delivered


def solve_weighted_delivery(p: Problem, tol_feas: float = lpcore.TOL_FEAS, tol_gap: float = lpcore.TOL_GAP,
                            **solver_kw) -> ContingencyResult:
    """Maximise importance-weighted delivery minus standing cost."""
    model, idx, delivered = build_weighted_lp(p)
    sol = lpcore.solve(model, tol_feas, tol_gap, **solver_kw)
    return _finish(p, model, idx, sol, delivered)


@dataclass
class Report:
    support: list[tuple[tuple[str, str], float]]
    utilization: dict[tuple[str, str], float]
    routes: dict[tuple[str, int], list[tuple[str, str]]]

    def to_dict(self) -> dict:
        return {
            "support": [{"from": a, "to": b, "weight": w} for (a, b), w in self.support],
            "utilization": [{"from": a, "to": b, "value": u} for (a, b), u in self.utilization.items()],
            "routes": [{"broadcast": bid, "message": mi, "edges": [[a, b] for a, b in edges]}
                       for (bid, mi), edges in self.routes.items()],
        }

    def to_table(self) -> str:
        lines = [f"{'edge':<24}{'weight':>14}{'utilization':>14}"]
        for key, w in self.support:
            lines.append(f"{key[0] + '->' + key[1]:<24}{w:>14.6g}{self.utilization.get(key, 0.0):>14.6g}")
        for (bid, mi), edges in self.routes.items():
            lines.append(f"route {bid}/{mi}: " + ", ".join(f"{a}->{b}" for a, b in edges))
        return "\n".join(lines)


def extract_report(t: Topology, f: FlowSet) -> Report:
    support = [(k, t.weights[k]) for k in t.support]
    loads: dict[tuple, float] = {}
    for (bid, mi, key), v in f.message_flows.items():
        loads[bid, key] = loads.get((bid, key), 0.0) + v
    util = {}
    for key, w in support:
        peak = max((v for (bid, k), v in loads.items() if k == key), default=0.0)
        util[key] = peak / w
    routes: dict[tuple[str, int], list] = {}
    for (bid, mi, key), v in f.message_flows.items():
        if v > t.support_tol:
            routes.setdefault((bid, mi), []).append(key)
    return Report(support, util, routes)
