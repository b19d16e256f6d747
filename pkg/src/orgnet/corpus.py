"""Deterministic instance families for the regression corpus and scale runs.

``python -m orgnet.corpus DIR`` writes the corpus as problem documents.
"""
from __future__ import annotations

import argparse
import dataclasses
import random
from importlib import resources
from pathlib import Path

from .documents import ProblemDocument, dump_problem, parse_problem
from .model import (Broadcast, FirmCosts, FirmSpec, Message, Problem, Replication, build_graph,
                    butterfly_graph, disjoint_paths_graph, firm_topology, single_message_problem)

CORPUS_SIZE = 60


def packaged(name: str) -> ProblemDocument:
    """One of the shipped fixtures: ``butterfly`` or ``disjoint_paths``."""
    text = resources.files("orgnet").joinpath("data", f"{name}.json").read_text()
    return parse_problem(text)


def random_problem(seed: int, senders: int, receivers: int, relays: int, broadcasts: int,
                   messages_per_broadcast: int, max_receivers: int = 3, max_cost: int = 9,
                   max_size: int = 4, mode: Replication = Replication.STRICT) -> Problem:
    """Complete organisation graph with random integer costs and random demands."""
    rng = random.Random(seed)
    g = build_graph(senders, receivers, relays, cost_fn=lambda a, b: rng.randint(1, max_cost))
    src = [n.id for n in g.senders]
    dst = [n.id for n in g.receivers]
    out = []
    for b in range(broadcasts):
        msgs = []
        for _ in range(messages_per_broadcast):
            k = rng.randint(1, min(max_receivers, len(dst)))
            msgs.append(Message(rng.choice(src), tuple(rng.sample(dst, k)), rng.randint(1, max_size)))
        out.append(Broadcast(f"b{b}", tuple(msgs)))
    return Problem(g, tuple(out), mode)


def scale_problem(seed: int = 1) -> Problem:
    """Generated instance with more than 10,000 columns and 10,000 rows."""
    return random_problem(seed, senders=2, receivers=5, relays=5, broadcasts=24, messages_per_broadcast=3)


def corpus() -> list[tuple[str, Problem]]:
    """The fixed regression corpus: fixtures, firms and small random instances."""
    items: list[tuple[str, Problem]] = []
    for mode in Replication:
        for size in (1, 2, 3):
            items.append((f"butterfly-{mode.value}-w{size}",
                          single_message_problem(butterfly_graph(), "S", ["R1", "R2"], size, mode)))
        items.append((f"disjoint-{mode.value}",
                      single_message_problem(disjoint_paths_graph(), "S", ["R1", "R2"], 2, mode)))
    for observers, receivers, manager in ((2, 2, False), (3, 3, False), (3, 3, True), (4, 2, True)):
        g = firm_topology(FirmSpec(observers, receivers, manager, FirmCosts(1, 4, 1, 1)))
        recv = [n.id for n in g.receivers]
        for mode in Replication:
            tag = "m" if manager else "flat"
            items.append((f"firm-{observers}x{receivers}-{tag}-{mode.value}",
                          single_message_problem(g, "S", recv, 1, mode)))
    rng = random.Random(7)
    k = 0
    while len(items) < CORPUS_SIZE:
        mode = Replication.STRICT if k % 2 == 0 else Replication.RELAXED
        p = random_problem(1000 + k, rng.randint(1, 2), rng.randint(1, 3), rng.randint(0, 2),
                           rng.randint(1, 2), rng.randint(1, 2), mode=mode)
        if k % 5 == 4:
            node = rng.choice([n.id for n in p.graph.nodes])
            p = dataclasses.replace(p, node_limits={node: (rng.randint(2, 8), None)})
        items.append((f"random-{k:03d}-{mode.value}", p))
        k += 1
    return items


def write_corpus(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, p in corpus():
        path = directory / f"{name}.json"
        path.write_text(dump_problem(p))
        paths.append(path)
    return paths


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m orgnet.corpus", description=__doc__.splitlines()[0])
    ap.add_argument("directory", type=Path)
    args = ap.parse_args(argv)
    for path in write_corpus(args.directory):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
