"""Ground-level checks of AGG answers on sampled skeletons.

``separation_violations`` replays relational d-separation answers on ground
graphs; ``completeness_violations`` checks that every ground edge between
instances reachable within the query hop threshold is represented in the AGG.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..agg import AbstractGroundGraph, AggNode, required_hop_threshold
from ..dsep import _separated_augmented, cached_agg, d_separated, minimal_separating_set
from ..graph import DiGraph
from ..model import RelationalModel, RelationalVariable, rv_instance
from ..paths import terminal_sets_by_prefix
from ..grounding import ground_graph
from ..schema import Skeleton
from .generators import (
    GenParams,
    generate_random_model,
    generate_random_schema,
    generate_random_skeleton,
    trial_rng,
)


@dataclass(frozen=True)
class SampledQuery:
    perspective: str
    x: RelationalVariable
    y: RelationalVariable
    z: tuple[RelationalVariable, ...]
    separated: bool


def sample_queries(model: RelationalModel, h_r: int, rng, n: int = 20) -> list[SampledQuery]:
    """Random singleton queries; half condition on a minimal separating set."""
    schema = model.schema
    h_a = required_hop_threshold(h_r, model.max_hops)
    perspectives = [c for c in schema.item_classes]
    out = []
    for i in range(4 * n):
        if len(out) >= n:
            break
        persp = perspectives[int(rng.integers(len(perspectives)))]
        agg = cached_agg(model, persp, h_a)
        rvs = [nd.rv for nd in agg.relvar_nodes() if nd.rv.hops <= h_r]
        if len(rvs) < 2:
            continue
        a, b = rng.choice(len(rvs), size=2, replace=False)
        x, y = rvs[int(a)], rvs[int(b)]
        if i % 2:
            z = minimal_separating_set(agg, x, y)
            if z is None:
                continue
        else:
            others = [rv for rv in rvs if rv not in (x, y)]
            k = min(int(rng.integers(3)), len(others))
            z = [others[int(j)] for j in rng.choice(len(others), size=k, replace=False)] if k else []
        z = tuple(sorted(z, key=RelationalVariable.sort_key))
        out.append(SampledQuery(persp, x, y, z, _separated_augmented(agg, [x], [y], list(z))))
    return out


def ground_separated(ground: DiGraph, skeleton: Skeleton, q: SampledQuery, base: str) -> bool:
    xs = rv_instance(skeleton, q.x, base)
    ys = rv_instance(skeleton, q.y, base)
    zs = set().union(*(rv_instance(skeleton, v, base) for v in q.z)) if q.z else set()
    xs, ys = set(xs) - zs, set(ys) - zs
    if xs & ys:
        return False
    return d_separated(ground, xs, ys, zs)


def separation_violations(
    ground: DiGraph, skeleton: Skeleton, queries: list[SampledQuery]
) -> list[tuple[SampledQuery, str]]:
    """(query, base) pairs where the AGG says separated but the ground graph
    has an active path."""
    out = []
    for q in queries:
        if not q.separated:
            continue
        for b in skeleton.of_class(q.perspective):
            if not ground_separated(ground, skeleton, q, b):
                out.append((q, b))
    return out


def _covers(node: AggNode, inst: str, cover: dict) -> bool:
    paths = cover.get(inst, ())
    return all(rv.path in paths for rv in node.rvs)


def completeness_violations(
    model: RelationalModel,
    agg: AbstractGroundGraph,
    skeleton: Skeleton,
    ground: DiGraph,
    h_r: int,
) -> list[tuple]:
    """Ground edges i_k.Y -> i_j.X with both ends within ``h_r`` hops of a base
    instance that no AGG edge accounts for.

    For covering paths P_k (of i_k) and P_j (of i_j) an AGG edge u -> v must
    exist where u covers i_k, v covers i_j, and u involves P_k.Y or v
    involves P_j.X; "involves" means the node is that relational variable or
    an intersection containing it.
    """
    schema = model.schema
    g = agg.graph
    out = []
    for b in skeleton.of_class(agg.perspective):
        tsets = terminal_sets_by_prefix(schema, skeleton, b, agg.hop_threshold)
        cover: dict[str, set] = defaultdict(set)
        for path, members in tsets.items():
            for m in members:
                cover[m].add(path)
        near = {i: [p for p in ps if p.hops <= h_r] for i, ps in cover.items()}
        for (ij, x) in ground.nodes:
            if not near.get(ij):
                continue
            for (ik, y) in ground.parents[(ij, x)]:
                if not near.get(ik):
                    continue
                for pk in near[ik]:
                    for pj in near[ij]:
                        if not _edge_explained(g, agg, RelationalVariable(pk, y),
                                               RelationalVariable(pj, x), ik, ij, cover):
                            out.append((b, (ik, y), (ij, x), pk, pj))
    return out


def _edge_explained(g: DiGraph, agg, rk, rj, ik, ij, cover) -> bool:
    uk, uj = AggNode.relvar(rk), AggNode.relvar(rj)
    if uk not in g or uj not in g:
        return False
    if g.has_edge(uk, uj):
        return True
    srcs = [uk] + [iv for iv in agg.intersections_of.get(rk, ()) if _covers(iv, ik, cover)]
    for u in srcs:
        for v in g.children[u]:
            if _covers(v, ij, cover) and (u.involves(rk) or v.involves(rj)):
                return True
    for v in agg.intersections_of.get(rj, ()):
        if not _covers(v, ij, cover):
            continue
        for u in g.parents[v]:
            if _covers(u, ik, cover):
                return True
    return False


@dataclass
class SweepResult:
    models: int = 0
    skeletons: int = 0
    separated_queries: int = 0
    separation_violations: int = 0
    completeness_violations: int = 0
    models_with_violations: int = 0
    examples: list = field(default_factory=list)


def run_soundness_sweep(
    seed: int = 0,
    models: int = 50,
    skeletons: int = 20,
    max_entities: int = 3,
    max_dependencies: int = 6,
    max_instances: int = 8,
    h_r: int = 3,
    queries: int = 20,
) -> SweepResult:
    """Random (schema, model) pairs checked against random small skeletons.

    Dependency paths are capped at ``h_r`` hops.  Both the separation and the
    completeness check run on every skeleton; up to five offending
    examples are kept for reporting.
    """
    res = SweepResult()
    for m in range(models):
        rng = trial_rng(seed, 6, m)
        ne = int(rng.integers(1, max_entities + 1))
        nd = int(rng.integers(1, max_dependencies + 1))
        params = GenParams(num_entities=ne, num_dependencies=nd, dependency_hops=h_r)
        schema = generate_random_schema(params, rng)
        model, _ = generate_random_model(schema, params, rng)
        qs = sample_queries(model, h_r, rng, queries)
        h_a = required_hop_threshold(h_r, model.max_hops)
        bad = False
        for _ in range(skeletons):
            skel = generate_random_skeleton(schema, rng, max_instances=max_instances)
            ground = ground_graph(model, skel)
            sep = separation_violations(ground, skel, qs)
            res.separated_queries += sum(len(skel.of_class(q.perspective)) for q in qs if q.separated)
            res.separation_violations += len(sep)
            found = len(sep)
            for persp in schema.item_classes:
                comp = completeness_violations(model, cached_agg(model, persp, h_a), skel, ground, h_r)
                res.completeness_violations += len(comp)
                found += len(comp)
                if comp and len(res.examples) < 5:
                    res.examples.append((m, str(comp[0][3]), str(comp[0][4]), comp[0][1], comp[0][2]))
            bad = bad or found > 0
            res.skeletons += 1
        cached_agg.cache_clear()
        res.models += 1
        res.models_with_violations += bad
    return res
