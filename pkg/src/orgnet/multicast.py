"""Coded multicast on organisation graphs.

Max-flow and multicast capacity, the minimum-cost coded multicast LP, welfare
maximisation over the multicast rate, and the middle-manager comparison.

With network coding a common rate r reaches every receiver exactly when each
receiver alone can receive r, so per-receiver flows x^t may share an edge's
weight w_e instead of adding up on it: the constraint is x^t_e <= w_e for
every t, not sum_t x^t_e <= w_e.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from . import lpcore
from .contingency import Topology
from .lpcore import EQ, LE, LpBuilder, LpSolution, Status
from .model import MANAGER, SOURCE, FirmCosts, FirmSpec, Graph, NodeKind, NodeRef, firm_topology

EdgeKey = tuple[str, str]
CapacityMap = Mapping[EdgeKey, float]

_ZERO = 1e-12


class MulticastInputError(ValueError):
    pass


def _node_id(g: Graph, node: str | NodeRef) -> str:
    nid = node.id if isinstance(node, NodeRef) else node
    if nid not in g:
        raise MulticastInputError(f"unknown node {nid!r}")
    return nid


def _capacities(g: Graph, caps: CapacityMap) -> dict[EdgeKey, float]:
    out = {}
    for e in g.edges:
        if e.key not in caps:
            raise MulticastInputError(f"no capacity for edge {e.src}->{e.dst}")
        c = caps[e.key]
        if not (math.isfinite(c) and c >= 0):
            raise MulticastInputError(f"capacity of {e.src}->{e.dst} must be finite and >= 0, got {c}")
        out[e.key] = c
    extra = set(caps) - set(g.edge_index)
    if extra:
        raise MulticastInputError(f"capacities given for edges not in the graph: {sorted(extra)}")
    return out


def unit_capacities(g: Graph, value: float = 1.0) -> dict[EdgeKey, float]:
    return {e.key: value for e in g.edges}


@dataclass(frozen=True)
class FlowResult:
    """A maximum flow with its min-cut certificate.

    ``cut`` is the source side of a cut whose capacity equals ``value``.
    """

    value: float
    flow: dict[EdgeKey, float]
    cut: frozenset[str]

    def cut_edges(self, g: Graph) -> list[EdgeKey]:
        return [e.key for e in g.edges if e.src in self.cut and e.dst not in self.cut]


def max_flow(g: Graph, caps: CapacityMap, s: str | NodeRef, t: str | NodeRef) -> FlowResult:
    """Maximum s-t flow by shortest augmenting paths."""
    s, t = _node_id(g, s), _node_id(g, t)
    if s == t:
        raise MulticastInputError("source and sink must differ")
    capacity = _capacities(g, caps)
    dg = nx.DiGraph()
    dg.add_nodes_from(n.id for n in g.nodes)
    for key, c in capacity.items():
        dg.add_edge(*key, capacity=c)
    residual = edmonds_karp(dg, s, t)
    value = float(residual.graph["flow_value"])
    # the residual network leaves out zero-capacity edges
    flow = {}
    for a, b in capacity:
        attr = residual[a].get(b)
        flow[a, b] = float(max(attr["flow"], 0)) if attr else 0.0
    # nodes still reachable from s in the residual graph form a minimum cut
    side = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        for v, attr in residual[u].items():
            if v not in side and attr["capacity"] - attr["flow"] > _ZERO:
                side.add(v)
                stack.append(v)
    return FlowResult(value, flow, frozenset(side))


def multicast_capacity(g: Graph, caps: CapacityMap, source: str | NodeRef,
                       receivers: Sequence[str | NodeRef]) -> float:
    """Largest common rate, with coding, from ``source`` to every receiver."""
    if not receivers:
        raise MulticastInputError("receivers must be nonempty")
    return min(max_flow(g, caps, source, t).value for t in receivers)


# --------------------------------------------------------------------------- #
# LP formulations


@dataclass
class MulticastResult:
    status: Status
    objective: float
    topology: Topology | None
    flows: dict[str, dict[EdgeKey, float]] | None
    solution: LpSolution

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class WelfareResult:
    status: Status
    rate: float
    cost: float
    welfare: float
    topology: Topology | None
    solution: LpSolution
    message: str = ""
    flows: dict[str, dict[EdgeKey, float]] | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class PiecewiseBenefit:
    """Concave piecewise-linear benefit of the rate.

    ``pieces`` are (slope, breakpoint) pairs: the slope applies up to the
    breakpoint rate, which increases strictly from piece to piece; the last
    breakpoint may be ``inf``.  Slopes must be nonnegative and nonincreasing.
    """

    pieces: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pieces = tuple((float(s), float(b)) for s, b in self.pieces)
        if not pieces:
            raise MulticastInputError("piecewise benefit needs at least one piece")
        prev_s, prev_b = math.inf, 0.0
        for s, b in pieces:
            if not (math.isfinite(s) and s >= 0):
                raise MulticastInputError(f"benefit slope must be finite and >= 0, got {s}")
            if s > prev_s:
                raise MulticastInputError("benefit slopes must be nonincreasing (concave benefit)")
            if not b > prev_b:
                raise MulticastInputError("benefit breakpoints must increase strictly")
            prev_s, prev_b = s, b
        if any(math.isinf(b) for _, b in pieces[:-1]):
            raise MulticastInputError("only the last breakpoint may be infinite")
        object.__setattr__(self, "pieces", pieces)

    def segments(self):
        start = 0.0
        for s, b in self.pieces:
            yield s, b - start
            start = b

    def __call__(self, rate: float) -> float:
        total, start = 0.0, 0.0
        for s, b in self.pieces:
            if rate <= start:
                break
            total += s * (min(rate, b) - start)
            start = b
        return total


Benefit = float | PiecewiseBenefit | Sequence[tuple[float, float]]


def _as_benefit(benefit: Benefit) -> PiecewiseBenefit:
    if isinstance(benefit, PiecewiseBenefit):
        return benefit
    if isinstance(benefit, (int, float)):
        if not (math.isfinite(benefit) and benefit >= 0):
            raise MulticastInputError(f"benefit per unit must be finite and >= 0, got {benefit}")
        return PiecewiseBenefit(((float(benefit), math.inf),))
    return PiecewiseBenefit(tuple(benefit))


def _edge_costs(g: Graph, costs: Mapping[EdgeKey, float] | None) -> dict[EdgeKey, float]:
    out = {e.key: e.cost for e in g.edges}
    if costs is not None:
        extra = set(costs) - set(out)
        if extra:
            raise MulticastInputError(f"costs given for edges not in the graph: {sorted(extra)}")
        out.update(costs)
    for key, c in out.items():
        if not (math.isfinite(c) and c >= 0):
            raise MulticastInputError(f"cost of {key[0]}->{key[1]} must be finite and >= 0, got {c}")
    return out


def _receiver_ids(g: Graph, source: str, receivers) -> list[str]:
    ids = [_node_id(g, t) for t in receivers]
    if not ids:
        raise MulticastInputError("receivers must be nonempty")
    if len(set(ids)) != len(ids):
        raise MulticastInputError("duplicate receiver")
    if source in ids:
        raise MulticastInputError("the source cannot also be a receiver")
    return ids


def _multicast_rows(lp: LpBuilder, g: Graph, source: str, receivers: list[str], costs, caps, rate):
    """Weights, per-receiver flows, sharing rows and conservation rows.

    ``rate`` is either a number (fixed) or an LP column index (variable).
    """
    w = {}
    for e in g.edges:
        upper = math.inf if caps is None else caps[e.key]
        w[e.key] = lp.add_var(("w", *e.key), cost=costs[e.key], upper=upper)
    x = {}
    for t in receivers:
        for e in g.edges:
            x[t, e.key] = lp.add_var(("x", t, *e.key))
    for t in receivers:
        for e in g.edges:
            lp.add_row({x[t, e.key]: 1.0, w[e.key]: -1.0}, LE, 0.0, ("share", t, *e.key))
    fixed = not isinstance(rate, tuple)
    for t in receivers:
        for node in g.nodes:
            row: dict[int, float] = {}
            for i in g.out_edges(node.id):
                row[x[t, g.edges[i].key]] = row.get(x[t, g.edges[i].key], 0.0) + 1.0
            for i in g.in_edges(node.id):
                row[x[t, g.edges[i].key]] = row.get(x[t, g.edges[i].key], 0.0) - 1.0
            supply = 1.0 if node.id == source else -1.0 if node.id == t else 0.0
            if fixed:
                lp.add_row(row, EQ, supply * rate, ("conserve", t, node.id))
            else:
                if supply:
                    row[rate[0]] = -supply
                lp.add_row(row, EQ, 0.0, ("conserve", t, node.id))
    return w, x


def _read(g, receivers, w, x, primal):
    def clean(v):
        return 0.0 if abs(v) < _ZERO else float(v)

    weights = {key: max(clean(primal[c]), 0.0) for key, c in w.items()}
    flows = {t: {e.key: clean(primal[x[t, e.key]]) for e in g.edges if clean(primal[x[t, e.key]])}
             for t in receivers}
    return Topology(weights), flows


def min_cost_coded_multicast(g: Graph, source: str | NodeRef, receivers: Sequence[str | NodeRef], rate: float,
                             costs: Mapping[EdgeKey, float] | None = None, caps: CapacityMap | None = None,
                             tol_feas: float = lpcore.TOL_FEAS, tol_gap: float = lpcore.TOL_GAP,
                             **solver_kw) -> MulticastResult:
    """Cheapest weights carrying a coded multicast of ``rate``.

    Costs default to the graph's edge costs.  Without ``caps`` the weights are
    free and every finite rate is feasible.
    """
    if not (math.isfinite(rate) and rate >= 0):
        raise MulticastInputError(f"rate must be finite and >= 0, got {rate}")
    source = _node_id(g, source)
    ids = _receiver_ids(g, source, receivers)
    edge_cost = _edge_costs(g, costs)
    capacity = None if caps is None else _capacities(g, caps)
    lp = LpBuilder()
    w, x = _multicast_rows(lp, g, source, ids, edge_cost, capacity, float(rate))
    sol = lpcore.solve(lp.build(), tol_feas, tol_gap, **solver_kw)
    if not sol.optimal:
        return MulticastResult(sol.status, sol.objective, None, None, sol)
    topo, flows = _read(g, ids, w, x, sol.primal)
    return MulticastResult(sol.status, sol.objective, topo, flows, sol)


UNBOUNDED_MESSAGE = ("welfare is unbounded: the benefit per unit of rate exceeds the cheapest "
                     "per-unit delivery cost and nothing limits the rate; pass a rate ceiling "
                     "or edge capacities")


def optimize_welfare(g: Graph, source: str | NodeRef, receivers: Sequence[str | NodeRef], benefit: Benefit,
                     costs: Mapping[EdgeKey, float] | None = None, caps: CapacityMap | None = None,
                     rate_ceiling: float | None = None, tol_feas: float = lpcore.TOL_FEAS,
                     tol_gap: float = lpcore.TOL_GAP, **solver_kw) -> WelfareResult:
    """Maximise benefit(rate) - sum c_e w_e over the coded-multicast region."""
    curve = _as_benefit(benefit)
    if rate_ceiling is not None and not (rate_ceiling >= 0):
        raise MulticastInputError(f"rate ceiling must be >= 0, got {rate_ceiling}")
    source = _node_id(g, source)
    ids = _receiver_ids(g, source, receivers)
    edge_cost = _edge_costs(g, costs)
    capacity = None if caps is None else _capacities(g, caps)
    lp = LpBuilder()
    ceiling = math.inf if rate_ceiling is None else float(rate_ceiling)
    rate_col = lp.add_var(("rate",), upper=ceiling)
    w, x = _multicast_rows(lp, g, source, ids, edge_cost, capacity, (rate_col,))
    pieces = [lp.add_var(("benefit-piece", k), cost=-s, upper=length)
              for k, (s, length) in enumerate(curve.segments())]
    # rate = sum of pieces; concavity makes the LP fill the steep pieces first
    lp.add_row({rate_col: 1.0, **{c: -1.0 for c in pieces}}, EQ, 0.0, ("rate-split",))
    sol = lpcore.solve(lp.build(), tol_feas, tol_gap, **solver_kw)
    if sol.status is Status.UNBOUNDED:
        return WelfareResult(sol.status, math.inf, math.nan, math.inf, None, sol, UNBOUNDED_MESSAGE)
    if not sol.optimal:
        return WelfareResult(sol.status, math.nan, math.nan, math.nan, None, sol, "the welfare LP is infeasible")
    topo, flows = _read(g, ids, w, x, sol.primal)
    rate = max(float(sol.primal[rate_col]), 0.0)
    if abs(rate) < _ZERO:
        rate = 0.0
    cost = sum(edge_cost[k] * v for k, v in topo.weights.items())
    return WelfareResult(sol.status, rate, cost, curve(rate) - cost, topo, sol, flows=flows)


# --------------------------------------------------------------------------- #
# middle-manager experiment


@dataclass(frozen=True)
class ManagerValue:
    welfare_without: float
    welfare_with: float
    delta: float
    without: WelfareResult = field(repr=False, compare=False)
    with_manager: WelfareResult = field(repr=False, compare=False)


def manager_value(spec: FirmSpec, benefit: Benefit, ceiling: float | None,
                  costs: FirmCosts | None = None, **solver_kw) -> ManagerValue:
    """Welfare of the firm with and without the middle manager.

    ``spec.with_manager`` is ignored: both variants are solved.
    """
    edge_costs = costs if costs is not None else spec.edge_costs
    results = []
    for with_manager in (False, True):
        g = firm_topology(FirmSpec(spec.n_observers, spec.n_receivers, with_manager, edge_costs))
        receivers = [n.id for n in g.nodes if n.kind is NodeKind.RECEIVER]
        res = optimize_welfare(g, SOURCE, receivers, benefit, rate_ceiling=ceiling, **solver_kw)
        if not res.optimal:
            raise lpcore.LpInputError(f"firm welfare LP ended {res.status.value}: {res.message}")
        results.append(res)
    a, b = results
    return ManagerValue(a.welfare, b.welfare, b.welfare - a.welfare, a, b)


__all__ = [
    "CapacityMap", "FlowResult", "ManagerValue", "MulticastInputError", "MulticastResult",
    "PiecewiseBenefit", "UNBOUNDED_MESSAGE", "WelfareResult", "MANAGER", "manager_value",
    "max_flow", "min_cost_coded_multicast", "multicast_capacity", "optimize_welfare", "unit_capacities",
]
