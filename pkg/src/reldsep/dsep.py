"""Traditional and relational d-separation, plus minimal separating sets."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import chain
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .agg import AbstractGroundGraph, AggNode, build_agg, required_hop_threshold
from .errors import RelDSepError
from .graph import DiGraph
from .model import RelationalModel, RelationalVariable, parse_rv
from .schema import _loads

_UP, _DOWN = 0, 1  # arrived from a child / arrived from a parent

BRUTE_FORCE_LIMIT = 25


def _check_sets(dag: DiGraph, x: set, y: set, z: set) -> None:
    for n in chain(x, y, z):
        if n not in dag:
            raise RelDSepError("UNKNOWN_NODE", f"{n!r} is not in the graph")
    if x & y or x & z or y & z:
        raise RelDSepError("OVERLAPPING_SETS", "x, y and z must be pairwise disjoint")


def _reachable(dag: DiGraph, x: set, z: set, *, track: bool = False):
    """Bayes-ball sweep from ``x``; returns the active-reachable nodes, and
    optionally the predecessor map over (node, direction) states."""
    z_anc = dag.ancestors(z)
    start = [(n, _UP) for n in x]
    seen = set(start)
    prev = {s: None for s in start} if track else None
    queue = deque(start)
    reached = set()
    while queue:
        state = queue.popleft()
        node, d = state
        if node not in z:
            reached.add(node)
        nxt = []
        if d == _UP and node not in z:
            nxt += [(p, _UP) for p in dag.parents[node]]
            nxt += [(c, _DOWN) for c in dag.children[node]]
        elif d == _DOWN:
            if node not in z:
                nxt += [(c, _DOWN) for c in dag.children[node]]
            if node in z_anc:
                nxt += [(p, _UP) for p in dag.parents[node]]
        for s in nxt:
            if s not in seen:
                seen.add(s)
                if track:
                    prev[s] = state
                queue.append(s)
    return reached, prev


def d_separated(dag: DiGraph, x: Iterable, y: Iterable, z: Iterable = ()) -> bool:
    x, y, z = set(x), set(y), set(z)
    _check_sets(dag, x, y, z)
    if not x or not y:
        return True
    reached, _ = _reachable(dag, x, z)
    return not (reached & y)


def d_connecting_path(dag: DiGraph, x: Iterable, y: Iterable, z: Iterable = ()) -> list | None:
    """A shortest active trail from ``x`` to ``y`` given ``z``, or None."""
    x, y, z = set(x), set(y), set(z)
    _check_sets(dag, x, y, z)
    _, prev = _reachable(dag, x, z, track=True)
    ends = [s for s in prev if s[0] in y]
    if not ends:
        return None
    state = ends[0]
    trail = []
    while state is not None:
        trail.append(state[0])
        state = prev[state]
    return trail[::-1]


def brute_force_d_separated(dag: DiGraph, x: Iterable, y: Iterable, z: Iterable = ()) -> bool:
    """Enumerate every simple undirected path and test it node by node."""
    x, y, z = set(x), set(y), set(z)
    _check_sets(dag, x, y, z)
    if dag.num_nodes() > BRUTE_FORCE_LIMIT:
        raise RelDSepError(
            "SIZE_LIMIT_EXCEEDED", f"{dag.num_nodes()} nodes > {BRUTE_FORCE_LIMIT}"
        )
    nbrs = {n: dag.parents[n] | dag.children[n] for n in dag.nodes}
    desc = {n: dag.descendants([n]) for n in dag.nodes}

    def active(path):
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = dag.has_edge(a, b) and dag.has_edge(c, b)
            if collider:
                if not (desc[b] & z):
                    return False
            elif b in z:
                return False
        return True

    def search(path, on_path):
        last = path[-1]
        if last in y and len(path) > 1:
            return active(path)
        for m in nbrs[last]:
            if m in on_path:
                continue
            path.append(m)
            on_path.add(m)
            found = search(path, on_path)
            path.pop()
            on_path.discard(m)
            if found:
                return True
        return False

    return not any(search([s], {s}) for s in x)


# ---------------------------------------------------------------------------
# relational queries


@dataclass(frozen=True)
class DSepQuery:
    perspective: str
    x: tuple[RelationalVariable, ...]
    y: tuple[RelationalVariable, ...]
    z: tuple[RelationalVariable, ...] = ()
    hops: int | None = None

    @property
    def query_hops(self) -> int:
        if self.hops is not None:
            return self.hops
        return max(rv.hops for rv in chain(self.x, self.y, self.z))

    @classmethod
    def from_dict(cls, data: Mapping, schema=None) -> "DSepQuery":
        unknown = set(data) - {"perspective", "hops", "x", "y", "z"}
        if unknown:
            raise RelDSepError("PARSE_ERROR", f"unknown query keys {sorted(unknown)}")
        try:
            rvs = {k: tuple(parse_rv(s, schema) for s in data.get(k, [])) for k in "xyz"}
            return cls(data["perspective"], rvs["x"], rvs["y"], rvs["z"], data.get("hops"))
        except KeyError as exc:
            raise RelDSepError("PARSE_ERROR", f"query lacks {exc}") from None

    @classmethod
    def from_json(cls, text: str, schema=None) -> "DSepQuery":
        return cls.from_dict(_loads(text), schema)


@lru_cache(maxsize=128)
def cached_agg(model: RelationalModel, perspective: str, h: int) -> AbstractGroundGraph:
    """Shared AGG per (model, perspective, h); treat the result as read-only."""
    return build_agg(model, perspective, h)


def augment_with_intersections(agg: AbstractGroundGraph, rvs: Iterable[RelationalVariable]) -> set[AggNode]:
    out = set()
    for rv in rvs:
        out.add(agg.node(rv))
        out.update(agg.intersections_of.get(rv, ()))
    return out


def _separated_augmented(agg: AbstractGroundGraph, x, y, z) -> bool:
    """Overlap handling: nodes conditioned on leave x and y; a node shared
    by x and y means the two sets can share a random variable."""
    zs = augment_with_intersections(agg, z)
    xs = augment_with_intersections(agg, x) - zs
    ys = augment_with_intersections(agg, y) - zs
    if xs & ys:
        return False
    return d_separated(agg.graph, xs, ys, zs)


def check_query(model: RelationalModel, q: DSepQuery) -> None:
    model.schema.require_class(q.perspective)
    if not q.x or not q.y:
        raise RelDSepError("EMPTY_SET", "x and y must be non-empty")
    sx, sy, sz = set(q.x), set(q.y), set(q.z)
    if sx & sy or sx & sz or sy & sz:
        raise RelDSepError("SET_OVERLAP", "x, y and z must be pairwise disjoint")
    for rv in chain(q.x, q.y, q.z):
        if rv.path.base != q.perspective:
            raise RelDSepError("PERSPECTIVE_MISMATCH", f"{rv} is not rooted at {q.perspective}")
        if q.hops is not None and rv.hops > q.hops:
            raise RelDSepError("HOPS_EXCEEDED", f"{rv} has {rv.hops} hops > {q.hops}")


def relational_d_separated(
    model: RelationalModel, query: DSepQuery, agg: AbstractGroundGraph | None = None
) -> bool:
    check_query(model, query)
    if agg is None:
        h_a = required_hop_threshold(query.query_hops, model.max_hops)
        agg = cached_agg(model, query.perspective, h_a)
    return _separated_augmented(agg, query.x, query.y, query.z)


def relational_d_connecting_path(
    model: RelationalModel, query: DSepQuery, agg: AbstractGroundGraph | None = None
) -> list[AggNode] | None:
    check_query(model, query)
    if agg is None:
        h_a = required_hop_threshold(query.query_hops, model.max_hops)
        agg = cached_agg(model, query.perspective, h_a)
    zs = augment_with_intersections(agg, query.z)
    xs = augment_with_intersections(agg, query.x) - zs
    ys = augment_with_intersections(agg, query.y) - zs
    shared = xs & ys
    if shared:
        return [min(shared, key=AggNode.sort_key)]
    return d_connecting_path(agg.graph, xs, ys, zs)


def _greedy_minimize(agg, x, y, z: list[RelationalVariable]) -> list[RelationalVariable]:
    z = sorted(z, key=RelationalVariable.sort_key)
    changed = True
    while changed:
        changed = False
        for rv in reversed(list(z)):
            trial = [v for v in z if v != rv]
            if _separated_augmented(agg, [x], [y], trial):
                z = trial
                changed = True
    return z


def _moral_adjacency(parents: dict, anc: set) -> dict:
    adj = {n: set() for n in anc}
    for n in anc:
        ps = [p for p in parents[n] if p in anc]
        for p in ps:
            adj[n].add(p)
            adj[p].add(n)
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def _moral_touch(parents: dict, anc: set, start: set, blockers: set) -> set:
    """Members of ``blockers`` adjacent, in the moral graph of ``anc``, to a
    node reachable from ``start`` without passing through ``blockers``."""
    adj = _moral_adjacency(parents, anc)
    seen = set(start)
    queue = deque(start)
    touched = set()
    while queue:
        n = queue.popleft()
        for m in adj.get(n, ()):
            if m in blockers:
                touched.add(m)
            elif m not in seen:
                seen.add(m)
                queue.append(m)
    return touched


def _min_cut_seed(g: DiGraph, xs: set, ys: set, ok, extra: set = frozenset()) -> list[RelationalVariable]:
    """Relational variables from a minimum vertex cut between ``xs`` and
    ``ys`` in the moral graph of the ancestors of ``xs | ys | extra``.

    Conditioning on a variable also blocks its intersection nodes, so an
    intersection node is cuttable when one of its constituents passes
    ``ok``; a cut intersection is mapped back to such a constituent,
    preferring one already in the cut.  Empty when no finite cut exists.
    """
    anc = g.ancestors(xs | ys | extra)
    adj = _moral_adjacency(g.parents, anc)
    order = sorted(anc, key=AggNode.sort_key)
    index = {n: i for i, n in enumerate(order)}
    src, dst = 2 * len(order), 2 * len(order) + 1
    big = len(order) + 1
    rows, cols, caps = [], [], []

    def arc(u, v, c):
        rows.append(u)
        cols.append(v)
        caps.append(c)

    for n, i in index.items():
        arc(2 * i, 2 * i + 1, 1 if any(ok(rv) for rv in n.rvs) else big)
        for m in adj[n]:
            arc(2 * i + 1, 2 * index[m], big)
        if n in xs:
            arc(src, 2 * i, big)
        if n in ys:
            arc(2 * i + 1, dst, big)
    size = 2 * len(order) + 2
    cap = csr_matrix((np.array(caps, dtype=np.int32), (rows, cols)), shape=(size, size))
    cap.sum_duplicates()
    res = maximum_flow(cap, src, dst)
    if res.flow_value >= big:
        return []
    resid = (cap - res.flow).tocsr()
    resid.eliminate_zeros()
    reach = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        row = resid.getrow(u)
        for v, c in zip(row.indices, row.data):
            if c > 0 and v not in reach:
                reach.add(int(v))
                queue.append(int(v))
    cut = [n for n, i in index.items() if 2 * i in reach and 2 * i + 1 not in reach]
    out = {n.rv for n in cut if n.is_relvar}
    for n in sorted(cut, key=AggNode.sort_key):
        if n.is_relvar:
            continue
        choices = [rv for rv in n.rvs if ok(rv)]
        if not out.intersection(choices):
            out.add(max(choices, key=RelationalVariable.sort_key))
    return sorted(out, key=RelationalVariable.sort_key)


def minimal_separating_set(
    agg: AbstractGroundGraph,
    x: RelationalVariable,
    y: RelationalVariable,
    candidates: Iterable[RelationalVariable] | None = None,
) -> list[RelationalVariable] | None:
    """A minimal set of relational variables separating ``x`` and ``y``, or
    None when no candidate set separates them.

    Four seeds are tried: the relational-variable ancestors of the
    augmented endpoints, their parents (intersection parents contribute
    their constituents), every variable involved in an ancestor, and a
    minimum vertex cut of the ancestral moral graph.  Each
    separating seed is pruned by moral-graph reachability from either side;
    if the pruned set stops separating once its own intersection nodes are
    added, the full seed is used instead.  Members are then dropped greedily,
    longest paths first.  The smallest result wins, earlier seeds on ties.
    ``candidates`` restricts the variables allowed in the answer.
    """
    if x == y:
        raise RelDSepError("SET_OVERLAP", "x and y must differ")
    xs = augment_with_intersections(agg, [x])
    ys = augment_with_intersections(agg, [y])
    if xs & ys:
        return None
    if _separated_augmented(agg, [x], [y], []):
        return []
    allowed = None if candidates is None else set(candidates)

    def ok(rv):
        return rv != x and rv != y and (allowed is None or rv in allowed)

    g = agg.graph
    anc = g.ancestors(xs | ys)
    parent_seed = {
        rv for n in xs | ys for p in g.parents[n] for rv in p.rvs if ok(rv)
    }
    anc_seed = {rv for n in anc if n.is_relvar for rv in n.rvs if ok(rv)}
    # intersection ancestors can involve constituents outside the ancestor set
    wide_seed = {rv for n in anc for rv in n.rvs if ok(rv)}
    cut_seed: set = set()
    extra: set = set()
    for _ in range(4):
        cut_seed = set(_min_cut_seed(g, xs, ys, ok, extra))
        if not cut_seed or _separated_augmented(agg, [x], [y], cut_seed):
            break
        # conditioning pulls more nodes into the ancestral region
        grown = extra | augment_with_intersections(agg, cut_seed)
        if grown == extra:
            break
        extra = grown
    best = None
    for seed in (anc_seed, parent_seed, wide_seed, cut_seed):
        if not seed or not _separated_augmented(agg, [x], [y], seed):
            continue
        nodes = {AggNode.relvar(rv) for rv in seed}
        region = g.ancestors(xs | ys | nodes)
        pruned = _moral_touch(g.parents, region, xs, nodes)
        pruned = _moral_touch(g.parents, region, ys, pruned)
        z = [n.rv for n in pruned]
        if not _separated_augmented(agg, [x], [y], z):
            z = list(seed)
        z = _greedy_minimize(agg, x, y, z)
        if best is None or len(z) < len(best):
            best = z
    return best


def is_minimal_separator(agg, x, y, z: list[RelationalVariable]) -> bool:
    if not _separated_augmented(agg, [x], [y], z):
        return False
    return all(not _separated_augmented(agg, [x], [y], [v for v in z if v != rv]) for rv in z)


def query_to_json(q: DSepQuery) -> str:
    return json.dumps(
        {
            "perspective": q.perspective,
            "hops": q.hops,
            "x": [str(v) for v in q.x],
            "y": [str(v) for v in q.y],
            "z": [str(v) for v in q.z],
        },
        indent=2,
    )
