"""Ground graphs: a model structure applied to one skeleton."""

from __future__ import annotations

from .graph import DiGraph
from .model import RelationalModel
from .paths import terminal_set
from .schema import Skeleton

AttrInstance = tuple[str, str]  # (instance id, attribute)


def ground_graph(
    model: RelationalModel, skeleton: Skeleton, *, bridge_burning: bool = True
) -> DiGraph:
    """Every attribute instance is a node, isolated or not; each dependency
    contributes ``i_k.Y -> i_j.X`` for every ``i_k`` in the cause path's
    terminal set from ``i_j``.  ``bridge_burning=False`` grounds with the
    non-excluding terminal sets, for comparison only."""
    g = DiGraph()
    schema = model.schema
    for cls in schema.item_classes:
        for attr in schema.attributes_of(cls):
            for inst in skeleton.of_class(cls):
                g.add_node((inst, attr))
    for dep in model.dependencies:
        path, y, x = dep.cause.path, dep.cause.attribute, dep.effect.attribute
        for ij in skeleton.of_class(dep.base):
            for ik in terminal_set(skeleton, path, ij, bridge_burning=bridge_burning):
                g.add_edge((ik, y), (ij, x))
    return g


def _label(node: AttrInstance) -> str:
    return f"{node[0]}.{node[1]}"


def to_edge_list(g: DiGraph) -> str:
    lines = sorted(f"{_label(u)} -> {_label(v)}" for u, v in g.edges())
    return "\n".join(lines) + ("\n" if lines else "")


def to_dot(g: DiGraph, name: str = "ground") -> str:
    out = [f"digraph {name} {{"]
    for n in sorted(g.nodes):
        out.append(f'  "{_label(n)}";')
    for u, v in sorted(g.edges()):
        out.append(f'  "{_label(u)}" -> "{_label(v)}";')
    out.append("}")
    return "\n".join(out) + "\n"
