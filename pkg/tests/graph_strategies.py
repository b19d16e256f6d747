"""Random small organisation graphs with integer capacities."""
import random

from orgnet.model import build_graph, Graph


def random_graph(seed: int, max_nodes: int = 8, max_cap: int = 5, density: float = 0.5):
    """A random subgraph of a complete organisation graph; returns (graph, caps, sender, receivers)."""
    rng = random.Random(seed)
    n = rng.randint(2, max_nodes)
    s = rng.randint(1, max(1, min(2, n - 1)))
    t = rng.randint(1, n - s)
    r = n - s - t
    full = build_graph(s, t, r)
    edges = tuple(e for e in full.edges if rng.random() < density)
    g = Graph(full.nodes, edges)
    caps = {e.key: float(rng.randint(0, max_cap)) for e in edges}
    senders = [x.id for x in g.senders]
    receivers = [x.id for x in g.receivers]
    return g, caps, senders[0], receivers
