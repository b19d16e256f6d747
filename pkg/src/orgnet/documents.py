"""JSON documents for problems and solutions.

Problem document::

    {"format": "orgnet-problem", "version": 1,
     "nodes": [{"id": "S", "kind": "sender"}, ...],
     "edges": [{"from": "S", "to": "A", "cost": 1, "capacity": 1}, ...],
     "broadcasts": [{"id": "b0", "messages": [{"source": "S", "receivers": ["R1"], "size": 2}]}],
     "sender_replication": "strict",
     "node_limits": [{"node": "A", "in": 2, "out": null}],
     "importance": [{"broadcast": "b0", "message": 0, "receiver": "R1", "value": 10}]}

``capacity``, ``sender_replication``, ``node_limits`` and ``importance`` are
optional.  Unknown fields are rejected so that typos surface as errors.

Numbers are written with 12 significant digits and keys in a fixed order,
so identical inputs give byte-identical documents.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from .model import (Broadcast, Edge, Graph, Message, NodeKind, NodeRef, Problem, Replication,
                    ValidationError, validate_problem)
from .lpcore import check_solution

PROBLEM_FORMAT = "orgnet-problem"
SOLUTION_FORMAT = "orgnet-solution"
VERSION = 1


class DocumentError(ValueError):
    """Malformed document; the message names the offending field or line."""


@dataclass(frozen=True)
class ProblemDocument:
    problem: Problem
    capacities: dict[tuple[str, str], float] | None = None


def number(x: float) -> float | int | None:
    """Round to 12 significant digits; None for non-finite values."""
    x = float(x)
    if not math.isfinite(x):
        return None
    y = float(f"{x:.12g}")
    return 0.0 if y == 0 else y


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------- #
# reading helpers


def _load(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _obj(v, where: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(v, dict):
        raise DocumentError(f"{where}: expected an object")
    missing = sorted(required - v.keys())
    if missing:
        raise DocumentError(f"{where}: missing field {missing[0]!r}")
    unknown = sorted(v.keys() - required - optional)
    if unknown:
        raise DocumentError(f"{where}: unknown field {unknown[0]!r}")
    return v


def _list(v, where: str) -> list:
    if not isinstance(v, list):
        raise DocumentError(f"{where}: expected a list")
    return v


def _str(v, where: str) -> str:
    if not isinstance(v, str) or not v:
        raise DocumentError(f"{where}: expected a nonempty string")
    return v


def _num(v, where: str, allow_null: bool = False) -> float | None:
    if v is None and allow_null:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DocumentError(f"{where}: expected a number")
    return float(v)


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"{where}: expected an integer")
    return v


def _header(d: dict, fmt: str, where: str = "document"):
    if d.get("format") != fmt:
        raise DocumentError(f"{where}.format: expected {fmt!r}")
    if d.get("version") != VERSION:
        raise DocumentError(f"{where}.version: expected {VERSION}")


# --------------------------------------------------------------------------- #
# problems


def parse_problem(text: str) -> ProblemDocument:
    d = _obj(_load(text), "document", {"format", "version", "nodes", "edges", "broadcasts"},
             {"sender_replication", "node_limits", "importance"})
    _header(d, PROBLEM_FORMAT)
    kinds = {k.value: k for k in NodeKind}
    nodes = []
    for i, n in enumerate(_list(d["nodes"], "nodes")):
        w = f"nodes[{i}]"
        _obj(n, w, {"id", "kind"})
        kind = _str(n["kind"], f"{w}.kind")
        if kind not in kinds:
            raise DocumentError(f"{w}.kind: expected one of {sorted(kinds)}")
        nodes.append(NodeRef(_str(n["id"], f"{w}.id"), kinds[kind]))
    edges, caps = [], {}
    for i, e in enumerate(_list(d["edges"], "edges")):
        w = f"edges[{i}]"
        _obj(e, w, {"from", "to", "cost"}, {"capacity"})
        edge = Edge(_str(e["from"], f"{w}.from"), _str(e["to"], f"{w}.to"), _num(e["cost"], f"{w}.cost"))
        edges.append(edge)
        if "capacity" in e:
            c = _num(e["capacity"], f"{w}.capacity")
            if not (math.isfinite(c) and c >= 0):
                raise DocumentError(f"{w}.capacity: must be finite and >= 0")
            caps[edge.key] = c
    if caps and len(caps) != len(edges):
        raise DocumentError("edges: give a capacity on every edge or on none")
    broadcasts = []
    for i, b in enumerate(_list(d["broadcasts"], "broadcasts")):
        w = f"broadcasts[{i}]"
        _obj(b, w, {"id", "messages"})
        msgs = []
        for j, m in enumerate(_list(b["messages"], f"{w}.messages")):
            wm = f"{w}.messages[{j}]"
            _obj(m, wm, {"source", "receivers", "size"})
            recv = tuple(_str(t, f"{wm}.receivers[{k}]") for k, t in enumerate(_list(m["receivers"], f"{wm}.receivers")))
            msgs.append(Message(_str(m["source"], f"{wm}.source"), recv, _num(m["size"], f"{wm}.size")))
        broadcasts.append(Broadcast(_str(b["id"], f"{w}.id"), tuple(msgs)))
    mode = d.get("sender_replication", Replication.STRICT.value)
    modes = {r.value: r for r in Replication}
    if mode not in modes:
        raise DocumentError(f"sender_replication: expected one of {sorted(modes)}")
    limits = None
    if "node_limits" in d:
        limits = {}
        for i, lim in enumerate(_list(d["node_limits"], "node_limits")):
            w = f"node_limits[{i}]"
            _obj(lim, w, {"node"}, {"in", "out"})
            limits[_str(lim["node"], f"{w}.node")] = (_num(lim.get("in"), f"{w}.in", True),
                                                     _num(lim.get("out"), f"{w}.out", True))
    importance = None
    if "importance" in d:
        importance = {}
        for i, imp in enumerate(_list(d["importance"], "importance")):
            w = f"importance[{i}]"
            _obj(imp, w, {"broadcast", "message", "receiver", "value"})
            key = (_str(imp["broadcast"], f"{w}.broadcast"), _int(imp["message"], f"{w}.message"),
                   _str(imp["receiver"], f"{w}.receiver"))
            importance[key] = _num(imp["value"], f"{w}.value")
    try:
        graph = Graph(tuple(nodes), tuple(edges))
        problem = Problem(graph, tuple(broadcasts), modes[mode], limits, importance)
    except ValidationError as exc:
        raise DocumentError(f"invalid problem: {exc}") from None
    issues = validate_problem(problem)
    if issues:
        raise DocumentError(f"invalid problem: {ValidationError(issues)}")
    return ProblemDocument(problem, caps or None)


def problem_to_dict(p: Problem, capacities: dict | None = None) -> dict:
    edges = []
    for e in p.graph.edges:
        item = {"from": e.src, "to": e.dst, "cost": number(e.cost)}
        if capacities is not None:
            item["capacity"] = number(capacities[e.key])
        edges.append(item)
    d = {
        "format": PROBLEM_FORMAT,
        "version": VERSION,
        "nodes": [{"id": n.id, "kind": n.kind.value} for n in p.graph.nodes],
        "edges": edges,
        "broadcasts": [{"id": b.id, "messages": [{"source": m.source, "receivers": list(m.receivers),
                                                   "size": number(m.size)} for m in b.messages]}
                       for b in p.broadcasts],
        "sender_replication": p.sender_replication.value,
    }
    if p.node_limits is not None:
        d["node_limits"] = [{"node": k, "in": None if a is None else number(a), "out": None if b is None else number(b)}
                            for k, (a, b) in p.node_limits.items()]
    if p.importance is not None:
        d["importance"] = [{"broadcast": b, "message": m, "receiver": t, "value": number(v)}
                           for (b, m, t), v in p.importance.items()]
    return d


def dump_problem(p: Problem, capacities: dict | None = None) -> str:
    return dumps(problem_to_dict(p, capacities))


# --------------------------------------------------------------------------- #
# solutions


def _label(label) -> str:
    if isinstance(label, tuple):
        return "/".join(f"{x[0]}->{x[1]}" if isinstance(x, tuple) else str(x) for x in label)
    return str(label)


def solution_to_dict(p: Problem, res) -> dict:
    """Solution document for a contingency result (plain or weighted delivery)."""
    sol = res.solution
    doc: dict[str, Any] = {
        "format": SOLUTION_FORMAT,
        "version": VERSION,
        "status": res.status.value,
        "mode": p.sender_replication.value,
        "objective": number(res.objective),
    }
    certificates: dict[str, Any] = {}
    if res.optimal:
        doc["weights"] = [{"from": a, "to": b, "weight": number(w)} for (a, b), w in res.topology.weights.items()]
        doc["flows"] = {
            "messages": [{"broadcast": bid, "message": mi, "from": k[0], "to": k[1], "value": number(v)}
                         for (bid, mi, k), v in res.flows.message_flows.items()],
            "pairs": [{"broadcast": bid, "message": mi, "receiver": t, "from": k[0], "to": k[1], "value": number(v)}
                      for (bid, mi, k, t), v in res.flows.pair_flows.items()],
        }
        if res.delivered is not None:
            doc["delivered"] = [{"broadcast": bid, "message": mi, "receiver": t, "value": number(v)}
                                for (bid, mi, t), v in res.delivered.items()]
        labels = res.model.row_labels or [None] * res.model.n_constraints
        certificates["duals"] = [{"row": _label(lab), "value": number(y)}
                                 for lab, y in zip(labels, sol.dual) if number(y) != 0]
        report = check_solution(res.model, sol)
        certificates["duality_gap"] = number(report.gap)
        certificates["max_residual"] = number(report.max_residual)
    elif sol.certificate is not None and res.status.value == "infeasible":
        labels = res.model.row_labels or [None] * res.model.n_constraints
        certificates["farkas"] = {
            "rows": [{"row": _label(lab), "value": number(y)} for lab, y in zip(labels, sol.certificate) if number(y) != 0],
            "bounds": [{"column": _label(res.model.col_labels[j]) if res.model.col_labels else str(j), "value": number(v)}
                       for j, v in enumerate(sol.bound_multipliers) if number(v) != 0]
            if sol.bound_multipliers is not None else [],
        }
    elif sol.certificate is not None:
        certificates["ray"] = [number(v) for v in sol.certificate]
    doc["certificates"] = certificates
    return doc


def dump_solution(p: Problem, res) -> str:
    return dumps(solution_to_dict(p, res))


@dataclass(frozen=True)
class SolutionDocument:
    status: str
    objective: float | None
    weights: dict[tuple[str, str], float]
    message_flows: dict[tuple, float]
    pair_flows: dict[tuple, float]
    delivered: dict[tuple, float] | None


def parse_solution(text: str, p: Problem) -> SolutionDocument:
    """Read a solution document and check it refers to ``p``'s edges and messages."""
    d = _obj(_load(text), "document", {"format", "version", "status", "objective", "certificates"},
             {"mode", "weights", "flows", "delivered"})
    _header(d, SOLUTION_FORMAT)
    status = _str(d["status"], "status")
    objective = _num(d["objective"], "objective", allow_null=True)
    edges = set(p.graph.edge_index)
    msgs = {(b.id, mi): m for b in p.broadcasts for mi, m in enumerate(b.messages)}

    def edge(item, w):
        k = (_str(item["from"], f"{w}.from"), _str(item["to"], f"{w}.to"))
        if k not in edges:
            raise DocumentError(f"{w}: edge {k[0]}->{k[1]} is not in the problem")
        return k

    def message(item, w):
        key = (_str(item["broadcast"], f"{w}.broadcast"), _int(item["message"], f"{w}.message"))
        if key not in msgs:
            raise DocumentError(f"{w}: message {key[0]}/{key[1]} is not in the problem")
        return key

    def receiver(item, key, w):
        t = _str(item["receiver"], f"{w}.receiver")
        if t not in msgs[key].receivers:
            raise DocumentError(f"{w}: {t} does not receive message {key[0]}/{key[1]}")
        return t

    weights = {}
    for i, item in enumerate(_list(d.get("weights", []), "weights")):
        w = f"weights[{i}]"
        _obj(item, w, {"from", "to", "weight"})
        weights[edge(item, w)] = _num(item["weight"], f"{w}.weight")
    mf, pf = {}, {}
    flows = _obj(d.get("flows", {"messages": [], "pairs": []}), "flows", {"messages", "pairs"})
    for i, item in enumerate(_list(flows["messages"], "flows.messages")):
        w = f"flows.messages[{i}]"
        _obj(item, w, {"broadcast", "message", "from", "to", "value"})
        mf[(*message(item, w), edge(item, w))] = _num(item["value"], f"{w}.value")
    for i, item in enumerate(_list(flows["pairs"], "flows.pairs")):
        w = f"flows.pairs[{i}]"
        _obj(item, w, {"broadcast", "message", "receiver", "from", "to", "value"})
        key = message(item, w)
        pf[(*key, edge(item, w), receiver(item, key, w))] = _num(item["value"], f"{w}.value")
    delivered = None
    if "delivered" in d:
        delivered = {}
        for i, item in enumerate(_list(d["delivered"], "delivered")):
            w = f"delivered[{i}]"
            _obj(item, w, {"broadcast", "message", "receiver", "value"})
            key = message(item, w)
            delivered[(*key, receiver(item, key, w))] = _num(item["value"], f"{w}.value")
    return SolutionDocument(status, objective, weights, mf, pf, delivered)

