"""Graphviz DOT rendering of organisation graphs and their planned weights."""
from __future__ import annotations

from typing import Mapping

from .model import Graph, NodeKind

_SHAPES = {NodeKind.SENDER: "box", NodeKind.RELAY: "ellipse", NodeKind.RECEIVER: "doublecircle"}
# light to dark blue, indexed by weight relative to the heaviest edge
_RAMP = ("#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b")


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: Graph, weights: Mapping[tuple[str, str], float] | None = None, name: str = "orgnet",
           labels: Mapping[tuple[str, str], str] | None = None, tol: float = 1e-9) -> str:
    """DOT text for ``g``.

    With ``weights`` the support edges are coloured and thickened by weight
    and the other edges are drawn dashed grey.  ``labels`` overrides edge
    labels (for instance with coding vectors).
    """
    top = max((w for w in (weights or {}).values() if w > tol), default=0.0)
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;", "  node [fontname=\"Helvetica\"];"]
    for n in g.nodes:
        lines.append(f"  {_quote(n.id)} [shape={_SHAPES[n.kind]}, label={_quote(n.id)}];")
    for e in g.edges:
        attrs = []
        text = labels.get(e.key) if labels else None
        if weights is not None:
            w = weights.get(e.key, 0.0)
            if w > tol:
                shade = _RAMP[min(int(len(_RAMP) * w / top), len(_RAMP) - 1)]
                attrs += [f"color={_quote(shade)}", f"penwidth={1.0 + 3.0 * w / top:.2f}"]
                text = text or f"{w:.6g}"
            else:
                attrs += ['color="#bdbdbd"', "style=dashed"]
        if text:
            attrs.append(f"label={_quote(text)}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"
