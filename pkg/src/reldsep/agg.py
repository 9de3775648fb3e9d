"""Abstract ground graphs over relational and intersection variables."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

from .errors import RelDSepError
from .graph import DiGraph
from .model import RelationalModel, RelationalVariable
from .paths import RelationalPath, enumerate_paths, extend, positionally_differ

RELVAR = "RELVAR"
INTERSECTION = "INTERSECTION"


@dataclass(frozen=True)
class AggNode:
    kind: str
    rvs: tuple[RelationalVariable, ...]

    @classmethod
    def relvar(cls, rv: RelationalVariable) -> "AggNode":
        return cls(RELVAR, (rv,))

    @classmethod
    def intersection(cls, a: RelationalVariable, b: RelationalVariable) -> "AggNode":
        return cls(INTERSECTION, tuple(sorted((a, b), key=str)))

    @property
    def is_relvar(self) -> bool:
        return self.kind == RELVAR

    @property
    def rv(self) -> RelationalVariable:
        if not self.is_relvar:
            raise RelDSepError("NOT_RELVAR", f"{self} is an intersection node")
        return self.rvs[0]

    @property
    def attribute(self) -> str:
        return self.rvs[0].attribute

    def involves(self, rv: RelationalVariable) -> bool:
        return rv in self.rvs

    def sort_key(self) -> tuple:
        return (self.kind != RELVAR, tuple(rv.sort_key() for rv in self.rvs))

    def __str__(self) -> str:
        if self.is_relvar:
            return str(self.rvs[0])
        a, b = self.rvs
        return f"{a.path} ∩ {b.path}.{a.attribute}"


@dataclass
class AbstractGroundGraph:
    perspective: str
    hop_threshold: int
    graph: DiGraph = field(default_factory=DiGraph)
    # relational variable -> intersection nodes it belongs to
    intersections_of: dict = field(default_factory=lambda: defaultdict(list))

    @property
    def nodes(self):
        return self.graph.nodes

    def node(self, rv: RelationalVariable) -> AggNode:
        n = AggNode.relvar(rv)
        if n not in self.graph:
            raise RelDSepError("UNKNOWN_NODE", f"{rv} is not a node of this AGG")
        return n

    def relvar_nodes(self) -> list[AggNode]:
        return sorted((n for n in self.graph.nodes if n.is_relvar), key=AggNode.sort_key)

    def intersection_nodes(self) -> list[AggNode]:
        return sorted((n for n in self.graph.nodes if not n.is_relvar), key=AggNode.sort_key)

    def sorted_nodes(self) -> list[AggNode]:
        return sorted(self.graph.nodes, key=AggNode.sort_key)

    def num_nodes(self) -> int:
        return self.graph.num_nodes()

    def num_edges(self) -> int:
        return self.graph.num_edges()

    def intersection_edge_count(self) -> int:
        return sum(1 for u, v in self.graph.edges() if not (u.is_relvar and v.is_relvar))

    def to_dict(self) -> dict:
        nodes = self.sorted_nodes()
        index = {n: i for i, n in enumerate(nodes)}
        return {
            "perspective": self.perspective,
            "hops": self.hop_threshold,
            "nodes": [
                {"kind": n.kind, "paths": [str(rv.path) for rv in n.rvs], "attribute": n.attribute}
                for n in nodes
            ],
            "edges": sorted([index[u], index[v]] for u, v in self.graph.edges()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_dot(self) -> str:
        nodes = self.sorted_nodes()
        index = {n: i for i, n in enumerate(nodes)}
        out = [f'digraph "AGG {self.perspective} h={self.hop_threshold}" {{']
        for n in nodes:
            shape = "box" if n.is_relvar else "box, style=dashed"
            label = str(n).replace('"', '\\"')
            out.append(f'  n{index[n]} [label="{label}", shape={shape}];')
        for u, v in sorted((index[u], index[v]) for u, v in self.graph.edges()):
            out.append(f"  n{u} -> n{v};")
        out.append("}")
        return "\n".join(out) + "\n"


def required_hop_threshold(h_r: int, h_m: int) -> int:
    if h_r < 0 or h_m < 0:
        raise RelDSepError("BAD_HOPS", f"hop counts must be >= 0, got {h_r}, {h_m}")
    return max(h_r + h_m, h_r + 2 * h_m - 2)


def _add_rve_edges(model: RelationalModel, g: DiGraph, rvs: list[RelationalVariable], h: int,
                   keep=None) -> None:
    deps_by_effect = defaultdict(list)
    for dep in model.dependencies:
        deps_by_effect[(dep.base, dep.effect.attribute)].append(dep)
    schema = model.schema
    for rv in rvs:
        for dep in deps_by_effect.get((rv.path.terminal, rv.attribute), ()):
            for p in extend(rv.path, dep.cause.path, schema):
                if p.hops > h:
                    continue
                cause = RelationalVariable(p, dep.cause.attribute)
                if keep is not None and not keep(cause):
                    continue
                g.add_edge(AggNode.relvar(cause), AggNode.relvar(rv))


def build_agg(model: RelationalModel, perspective: str, h: int) -> AbstractGroundGraph:
    schema = model.schema
    if not schema.has_class(perspective):
        raise RelDSepError("UNKNOWN_PERSPECTIVE", f"no item class {perspective!r}")
    paths = enumerate_paths(schema, perspective, h)
    rvs = [RelationalVariable(p, a) for p in paths for a in schema.attributes_of(p.terminal)]

    g = DiGraph(AggNode.relvar(rv) for rv in rvs)
    _add_rve_edges(model, g, rvs, h)
    agg = AbstractGroundGraph(perspective, h, g)

    groups: dict[tuple[str, str], list[RelationalVariable]] = defaultdict(list)
    for rv in rvs:
        groups[(rv.path.terminal, rv.attribute)].append(rv)
    # snapshot RVE adjacency before intersection nodes are added
    parents = {n: tuple(ps) for n, ps in g.parents.items()}
    children = {n: tuple(cs) for n, cs in g.children.items()}
    for members in groups.values():
        for a, b in combinations(members, 2):
            if not positionally_differ(a.path, b.path):
                continue
            iv = AggNode.intersection(a, b)
            g.add_node(iv)
            agg.intersections_of[a].append(iv)
            agg.intersections_of[b].append(iv)
            for c in (AggNode.relvar(a), AggNode.relvar(b)):
                for p in parents[c]:
                    g.add_edge(p, iv)
                for ch in children[c]:
                    g.add_edge(iv, ch)
    return agg


def is_simple_schema(schema) -> bool:
    """At most one simple path between any two item classes, i.e. the
    entity-relationship diagram is a forest."""
    n_nodes = len(schema.item_classes)
    n_edges = sum(r.arity for r in schema.relationships)
    parent = {c: c for c in schema.item_classes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n_nodes
    for r in schema.relationships:
        for e in r.entities:
            ra, rb = find(r.name), find(e)
            if ra == rb:
                return False
            parent[ra] = rb
            components -= 1
    return n_edges == n_nodes - components


def build_simple_agg(model: RelationalModel, perspective: str) -> AbstractGroundGraph:
    schema = model.schema
    if not schema.has_class(perspective):
        raise RelDSepError("UNKNOWN_PERSPECTIVE", f"no item class {perspective!r}")
    if not is_simple_schema(schema):
        raise RelDSepError("NOT_SIMPLE", "schema has more than one path between some item classes")
    for dep in model.dependencies:
        if not dep.cause.path.is_simple():
            raise RelDSepError("NOT_SIMPLE", f"dependency {dep} has a non-simple path")
    h = len(schema.item_classes) - 1
    paths = [p for p in enumerate_paths(schema, perspective, h) if p.is_simple()]
    rvs = [RelationalVariable(p, a) for p in paths for a in schema.attributes_of(p.terminal)]
    g = DiGraph(AggNode.relvar(rv) for rv in rvs)
    _add_rve_edges(model, g, rvs, h, keep=lambda rv: rv.path.is_simple())
    return AbstractGroundGraph(perspective, h, g)


def relvars_of(paths: list[RelationalPath], schema) -> list[RelationalVariable]:
    return [RelationalVariable(p, a) for p in paths for a in schema.attributes_of(p.terminal)]
