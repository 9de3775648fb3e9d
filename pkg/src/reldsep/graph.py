"""Small directed-graph container with both adjacency directions."""

from __future__ import annotations

from collections import deque
from graphlib import CycleError, TopologicalSorter
from typing import Hashable, Iterable


class DiGraph:
    def __init__(self, nodes: Iterable[Hashable] = (), edges: Iterable[tuple] = ()):
        self.parents: dict = {}
        self.children: dict = {}
        for n in nodes:
            self.add_node(n)
        for u, v in edges:
            self.add_edge(u, v)

    def add_node(self, n) -> None:
        if n not in self.parents:
            self.parents[n] = set()
            self.children[n] = set()

    def add_edge(self, u, v) -> None:
        self.add_node(u)
        self.add_node(v)
        self.parents[v].add(u)
        self.children[u].add(v)

    @property
    def nodes(self):
        return self.parents.keys()

    def edges(self) -> list[tuple]:
        return [(u, v) for v, ps in self.parents.items() for u in ps]

    def num_nodes(self) -> int:
        return len(self.parents)

    def num_edges(self) -> int:
        return sum(len(ps) for ps in self.parents.values())

    def __contains__(self, n) -> bool:
        return n in self.parents

    def has_edge(self, u, v) -> bool:
        return u in self.parents.get(v, ())

    def ancestors(self, sources: Iterable) -> set:
        """Nodes with a directed path into ``sources``, sources included."""
        return _closure(sources, self.parents)

    def descendants(self, sources: Iterable) -> set:
        return _closure(sources, self.children)

    def topological_order(self) -> list:
        return list(TopologicalSorter(self.parents).static_order())

    def is_acyclic(self) -> bool:
        try:
            TopologicalSorter(self.parents).prepare()
        except CycleError:
            return False
        return True


def _closure(sources: Iterable, adj: dict) -> set:
    seen = set(sources)
    queue = deque(seen)
    while queue:
        n = queue.popleft()
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen
