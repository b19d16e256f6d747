"""Organisation graphs, messages, broadcasts and problem instances.

A graph has three disjoint node classes (senders, relays, receivers) and
directed edges drawn from four pair classes: sender->receiver,
sender->relay, relay->receiver and relay->relay (no self-loops).  Each
edge carries a cost per unit of standing weight.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence


class NodeKind(str, enum.Enum):
    SENDER = "sender"
    RELAY = "relay"
    RECEIVER = "receiver"


class Replication(str, enum.Enum):
    """How the per-message flow total at the source is constrained."""

    STRICT = "strict"  # total out of the source equals the message size
    RELAXED = "relaxed"  # total out of the source is at least the message size


_ALLOWED_PAIRS = {
    (NodeKind.SENDER, NodeKind.RECEIVER),
    (NodeKind.SENDER, NodeKind.RELAY),
    (NodeKind.RELAY, NodeKind.RECEIVER),
    (NodeKind.RELAY, NodeKind.RELAY),
}


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


class ValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class NodeRef:
    id: str
    kind: NodeKind

    def __post_init__(self):
        object.__setattr__(self, "kind", NodeKind(self.kind))


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    cost: float = 1.0

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


def graph_violations(nodes: Sequence[NodeRef], edges: Sequence[Edge]) -> list[Violation]:
    out: list[Violation] = []
    kinds: dict[str, NodeKind] = {}
    for n in nodes:
        if n.id in kinds:
            out.append(Violation("duplicate-node", f"node {n.id!r} declared twice"))
        kinds[n.id] = n.kind
    seen = set()
    for e in edges:
        if e.key in seen:
            out.append(Violation("duplicate-edge", f"edge {e.src}->{e.dst} declared twice"))
        seen.add(e.key)
        if e.src == e.dst:
            out.append(Violation("self-loop", f"edge {e.src}->{e.dst} is a self-loop"))
        if not (e.cost >= 0) or e.cost == float("inf"):
            out.append(Violation("negative-cost", f"edge {e.src}->{e.dst} has cost {e.cost}"))
        missing = [x for x in (e.src, e.dst) if x not in kinds]
        if missing:
            out.append(Violation("unknown-endpoint", f"edge {e.src}->{e.dst} references unknown node {missing[0]!r}"))
        elif (kinds[e.src], kinds[e.dst]) not in _ALLOWED_PAIRS:
            out.append(Violation("bad-edge-class",
                                 f"edge {e.src}->{e.dst} joins a {kinds[e.src].value} to a {kinds[e.dst].value}"))
    return out


@dataclass(frozen=True)
class Graph:
    """Immutable organisation graph.  Node and edge order is preserved."""

    nodes: tuple[NodeRef, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        problems = graph_violations(self.nodes, self.edges)
        if problems:
            raise ValidationError(problems)

    def _of_kind(self, kind):
        return tuple(n for n in self.nodes if n.kind is kind)

    @property
    def senders(self) -> tuple[NodeRef, ...]:
        return self._of_kind(NodeKind.SENDER)

    @property
    def relays(self) -> tuple[NodeRef, ...]:
        return self._of_kind(NodeKind.RELAY)

    @property
    def receivers(self) -> tuple[NodeRef, ...]:
        return self._of_kind(NodeKind.RECEIVER)

    @cached_property
    def index(self) -> dict[str, int]:
        """Stable dense integer id for every node."""
        return {n.id: i for i, n in enumerate(self.nodes)}

    @cached_property
    def edge_index(self) -> dict[tuple[str, str], int]:
        return {e.key: i for i, e in enumerate(self.edges)}

    @cached_property
    def _adjacency(self):
        ins = {n.id: [] for n in self.nodes}
        outs = {n.id: [] for n in self.nodes}
        for i, e in enumerate(self.edges):
            outs[e.src].append(i)
            ins[e.dst].append(i)
        return ins, outs

    def kind(self, node_id: str) -> NodeKind:
        return self.nodes[self.index[node_id]].kind

    def __contains__(self, node_id) -> bool:
        return node_id in self.index

    def in_edges(self, node_id: str) -> list[int]:
        return self._adjacency[0][node_id]

    def out_edges(self, node_id: str) -> list[int]:
        return self._adjacency[1][node_id]

    def without_nodes(self, node_ids: Iterable[str]) -> "Graph":
        drop = set(node_ids)
        return Graph(tuple(n for n in self.nodes if n.id not in drop),
                     tuple(e for e in self.edges if e.src not in drop and e.dst not in drop))

    def without_edges(self, keys: Iterable[tuple[str, str]]) -> "Graph":
        drop = set(keys)
        return Graph(self.nodes, tuple(e for e in self.edges if e.key not in drop))

    def with_costs(self, cost_of: Callable[[Edge], float]) -> "Graph":
        return Graph(self.nodes, tuple(Edge(e.src, e.dst, float(cost_of(e))) for e in self.edges))


@dataclass(frozen=True)
class Message:
    source: str
    receivers: tuple[str, ...]
    size: float

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))


@dataclass(frozen=True)
class Broadcast:
    id: str
    messages: tuple[Message, ...]

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))


@dataclass(frozen=True)
class Problem:
    """A contingency-planning instance.

    ``node_limits`` maps a node id to ``(in_capacity, out_capacity)``; either
    side may be ``None`` for no limit.  ``importance`` maps
    ``(broadcast_id, message_index, receiver_id)`` to a benefit per delivered
    unit; pairs that are absent have importance 0.
    """

    graph: Graph
    broadcasts: tuple[Broadcast, ...]
    sender_replication: Replication = Replication.STRICT
    node_limits: Mapping[str, tuple[float | None, float | None]] | None = None
    importance: Mapping[tuple[str, int, str], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "broadcasts", tuple(self.broadcasts))
        object.__setattr__(self, "sender_replication", Replication(self.sender_replication))
        if self.node_limits is not None:
            object.__setattr__(self, "node_limits", dict(self.node_limits))
        if self.importance is not None:
            object.__setattr__(self, "importance", dict(self.importance))

    def messages(self):
        """Yield ``(broadcast_index, message_index, broadcast, message)``."""
        for bi, b in enumerate(self.broadcasts):
            for mi, m in enumerate(b.messages):
                yield bi, mi, b, m


def validate_problem(p: Problem) -> list[Violation]:
    """Return every invariant violation of ``p``; an empty list means valid."""
    out: list[Violation] = []
    g = p.graph
    if not p.broadcasts:
        out.append(Violation("no-broadcasts", "problem has no broadcasts"))
    bids = set()
    for b in p.broadcasts:
        if b.id in bids:
            out.append(Violation("duplicate-broadcast", f"broadcast id {b.id!r} repeated"))
        bids.add(b.id)
        if not b.messages:
            out.append(Violation("empty-broadcast", f"broadcast {b.id!r} has no messages"))
        for mi, m in enumerate(b.messages):
            where = f"broadcast {b.id!r} message {mi}"
            if m.source not in g:
                out.append(Violation("unknown-node", f"{where}: source {m.source!r} not in graph"))
            elif g.kind(m.source) is not NodeKind.SENDER:
                out.append(Violation("bad-source-kind", f"{where}: source {m.source!r} is a {g.kind(m.source).value}"))
            if not m.receivers:
                out.append(Violation("empty-receivers", f"{where}: receiver set is empty"))
            if len(set(m.receivers)) != len(m.receivers):
                out.append(Violation("duplicate-receiver", f"{where}: receiver listed twice"))
            for t in m.receivers:
                if t not in g:
                    out.append(Violation("unknown-node", f"{where}: receiver {t!r} not in graph"))
                elif g.kind(t) is not NodeKind.RECEIVER:
                    out.append(Violation("bad-receiver-kind", f"{where}: receiver {t!r} is a {g.kind(t).value}"))
            if not (m.size > 0) or m.size == float("inf"):
                out.append(Violation("nonpositive-size", f"{where}: size {m.size} must be positive and finite"))
    for node, caps in (p.node_limits or {}).items():
        if node not in g:
            out.append(Violation("unknown-node", f"node limit for unknown node {node!r}"))
        for side in caps:
            if side is not None and not side >= 0:
                out.append(Violation("bad-node-limit", f"node {node!r} has limit {side}"))
    bmap = {b.id: b for b in p.broadcasts}
    for key, value in (p.importance or {}).items():
        bid, mi, t = key
        b = bmap.get(bid)
        if b is None or not 0 <= mi < len(b.messages) or t not in b.messages[mi].receivers:
            out.append(Violation("bad-importance", f"importance entry {key!r} matches no (message, receiver)"))
        if not value >= 0 or value == float("inf"):
            out.append(Violation("bad-importance", f"importance {value} for {key!r} must be finite and >= 0"))
    return out


def require_valid(p: Problem) -> None:
    problems = validate_problem(p)
    if problems:
        raise ValidationError(problems)


def _ids(spec, prefix: str) -> list[str]:
    if isinstance(spec, int):
        if spec < 0:
            raise ValueError(f"node count must be >= 0, got {spec}")
        return [f"{prefix}{i}" for i in range(spec)]
    return [str(x) for x in spec]


def build_graph(senders: int | Sequence[str], receivers: int | Sequence[str], relays: int | Sequence[str] = 0,
                cost_fn: Callable[[NodeRef, NodeRef], float] | None = None) -> Graph:
    """Complete organisation graph over every allowed pair class.

    Integer arguments generate ids ``S0..``, ``T0..`` and ``R0..``.
    """
    nodes = ([NodeRef(i, NodeKind.SENDER) for i in _ids(senders, "S")]
             + [NodeRef(i, NodeKind.RELAY) for i in _ids(relays, "R")]
             + [NodeRef(i, NodeKind.RECEIVER) for i in _ids(receivers, "T")])
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValidationError([Violation("duplicate-node", f"node {dup!r} declared twice")])
    by_kind = {k: [n for n in nodes if n.kind is k] for k in NodeKind}
    S, R, T = by_kind[NodeKind.SENDER], by_kind[NodeKind.RELAY], by_kind[NodeKind.RECEIVER]
    pairs = itertools.chain(itertools.product(S, T), itertools.product(S, R), itertools.product(R, T),
                            ((a, b) for a, b in itertools.product(R, R) if a.id != b.id))
    cost_fn = cost_fn or (lambda a, b: 1.0)
    edges = []
    for a, b in pairs:
        c = float(cost_fn(a, b))
        if not c >= 0:
            raise ValueError(f"cost_fn returned {c} for {a.id}->{b.id}")
        edges.append(Edge(a.id, b.id, c))
    return Graph(tuple(nodes), tuple(edges))


def complete_edge_count(n_senders: int, n_receivers: int, n_relays: int) -> int:
    return n_senders * n_receivers + n_senders * n_relays + n_relays * n_receivers + n_relays * (n_relays - 1)


@dataclass(frozen=True)
class FirmCosts:
    """Per-class edge costs for the firm topology (uniform by default)."""

    source_observer: float = 1.0
    observer_receiver: float = 1.0
    observer_manager: float = 1.0
    manager_receiver: float = 1.0


@dataclass(frozen=True)
class FirmSpec:
    n_observers: int
    n_receivers: int
    with_manager: bool = False
    edge_costs: FirmCosts = field(default_factory=FirmCosts)

    def __post_init__(self):
        if self.n_observers < 1 or self.n_receivers < 1:
            raise ValueError("a firm needs at least one observer and one receiver")


SOURCE, MANAGER = "S", "M"


def firm_topology(spec: FirmSpec) -> Graph:
    """Source S feeding observers I0.., each observer linked to every receiver R0...

    With a manager, relay M additionally hears every observer and talks to
    every receiver.
    """
    c = spec.edge_costs
    obs = [f"I{i}" for i in range(spec.n_observers)]
    rec = [f"R{j}" for j in range(spec.n_receivers)]
    nodes = [NodeRef(SOURCE, NodeKind.SENDER)] + [NodeRef(i, NodeKind.RELAY) for i in obs]
    if spec.with_manager:
        nodes.append(NodeRef(MANAGER, NodeKind.RELAY))
    nodes += [NodeRef(r, NodeKind.RECEIVER) for r in rec]
    edges = [Edge(SOURCE, i, c.source_observer) for i in obs]
    edges += [Edge(i, r, c.observer_receiver) for i in obs for r in rec]
    if spec.with_manager:
        edges += [Edge(i, MANAGER, c.observer_manager) for i in obs]
        edges += [Edge(MANAGER, r, c.manager_receiver) for r in rec]
    return Graph(tuple(nodes), tuple(edges))


def butterfly_graph(cost: float = 1.0) -> Graph:
    """The two-receiver butterfly: S splits to A and B, which meet at V->W."""
    nodes = [NodeRef("S", NodeKind.SENDER)] + [NodeRef(x, NodeKind.RELAY) for x in "ABVW"]
    nodes += [NodeRef("R1", NodeKind.RECEIVER), NodeRef("R2", NodeKind.RECEIVER)]
    pairs = [("S", "A"), ("S", "B"), ("A", "V"), ("B", "V"), ("V", "W"),
             ("A", "R1"), ("W", "R1"), ("W", "R2"), ("B", "R2")]
    return Graph(tuple(nodes), tuple(Edge(a, b, cost) for a, b in pairs))


def disjoint_paths_graph(cost: float = 1.0) -> Graph:
    """S->A->R1 and S->B->R2 with nothing in between."""
    nodes = [NodeRef("S", NodeKind.SENDER), NodeRef("A", NodeKind.RELAY), NodeRef("B", NodeKind.RELAY),
             NodeRef("R1", NodeKind.RECEIVER), NodeRef("R2", NodeKind.RECEIVER)]
    pairs = [("S", "A"), ("A", "R1"), ("S", "B"), ("B", "R2")]
    return Graph(tuple(nodes), tuple(Edge(a, b, cost) for a, b in pairs))


def single_message_problem(graph: Graph, source: str, receivers: Sequence[str], size: float,
                           mode: Replication | str = Replication.STRICT, **extra) -> Problem:
    return Problem(graph, (Broadcast("b0", (Message(source, tuple(receivers), size),)),),
                   Replication(mode), **extra)
