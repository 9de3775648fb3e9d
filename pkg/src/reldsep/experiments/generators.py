"""Random schemas, models, skeletons and linear-Gaussian data."""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import TopologicalSorter
from itertools import combinations

import numpy as np

from ..model import RelationalDependency, RelationalModel, RelationalVariable, is_acyclic
from ..paths import RelationalPath, enumerate_paths, terminal_set
from ..schema import Cardinality, RelationshipClass, Schema, Skeleton


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream per (run seed, setting..., trial)."""
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


@dataclass(frozen=True)
class GenParams:
    num_entities: int = 2
    num_relationships: int | None = None  # None -> num_entities - 1
    attr_lambda: float = 1.0
    total_attributes: int | None = None  # fixed total spread over classes
    num_dependencies: int = 5
    max_parents: int = 3
    dependency_hops: int = 4
    simple_dependencies: bool = False
    query_hops: int = 4
    agg_hops: int = 8
    trials: int = 20
    seed: int = 0

    @property
    def relationships(self) -> int:
        if self.num_relationships is None:
            return max(self.num_entities - 1, 0)
        return self.num_relationships


@dataclass(frozen=True)
class LinearParams:
    noise_scale: float = 0.1
    beta_total: float = 0.9
    latent_decay: float = 10.0
    expected_degree: float = 5.0
    entities_per_class: int = 200
    alpha: float = 0.01


def generate_random_schema(params: GenParams, rng: np.random.Generator) -> Schema:
    """Connected schema with binary relationships, one per entity pair at most."""
    n, k = params.num_entities, params.relationships
    max_pairs = n * (n - 1) // 2
    if not (max(n - 1, 0) <= k <= max_pairs):
        raise ValueError(f"{k} relationships cannot connect {n} entities with distinct pairs")
    entities = [f"E{i}" for i in range(n)]
    order = rng.permutation(n)
    pairs = []
    for pos in range(1, n):
        other = order[rng.integers(pos)]
        pairs.append(tuple(sorted((int(order[pos]), int(other)))))
    rest = [p for p in combinations(range(n), 2) if p not in pairs]
    if k > len(pairs):
        pick = rng.choice(len(rest), size=k - len(pairs), replace=False)
        pairs += [rest[i] for i in sorted(pick)]
    rels = []
    for r, (a, b) in enumerate(pairs):
        cards = rng.integers(2, size=2)
        parts = tuple(
            (entities[e], Cardinality.MANY if c else Cardinality.ONE) for e, c in zip((a, b), cards)
        )
        rels.append(RelationshipClass(f"R{r}", parts))
    classes = entities + [r.name for r in rels]
    if params.total_attributes is not None:
        owners = rng.integers(len(classes), size=params.total_attributes)
        counts = np.bincount(owners, minlength=len(classes))
    else:
        counts = rng.poisson(params.attr_lambda, size=len(classes)) + 1
    attrs = {}
    next_id = 1
    for cls, c in zip(classes, counts):
        attrs[cls] = tuple(f"A{next_id + i}" for i in range(int(c)))
        next_id += int(c)
    return Schema(tuple(entities), tuple(rels), tuple(attrs.items()))


def candidate_dependencies(
    schema: Schema, hops: int, simple_only: bool = False
) -> list[RelationalDependency]:
    out = []
    for base in schema.item_classes:
        effects = schema.attributes_of(base)
        if not effects:
            continue
        effect_path = RelationalPath((base,))
        for path in enumerate_paths(schema, base, hops):
            if simple_only and not path.is_simple():
                continue
            for y in schema.attributes_of(path.terminal):
                for x in effects:
                    if path.terminal == base and x == y:
                        continue
                    out.append(
                        RelationalDependency(
                            RelationalVariable(path, y), RelationalVariable(effect_path, x)
                        )
                    )
    return out


def generate_random_model(
    schema: Schema, params: GenParams, rng: np.random.Generator
) -> tuple[RelationalModel, bool]:
    """Greedy random dependencies; returns ``(model, underfull)`` where
    ``underfull`` flags that fewer than requested could be placed."""
    cands = candidate_dependencies(schema, params.dependency_hops, params.simple_dependencies)
    chosen: list[RelationalDependency] = []
    parents: dict[tuple[str, str], set] = {}
    n_parents: dict[tuple[str, str], int] = {}
    for idx in rng.permutation(len(cands)):
        if len(chosen) >= params.num_dependencies:
            break
        dep = cands[int(idx)]
        src, dst = dep.class_edge()
        if n_parents.get(dst, 0) >= params.max_parents:
            continue
        trial = {k: set(v) for k, v in parents.items()}
        trial.setdefault(dst, set()).add(src)
        if not is_acyclic(trial):
            continue
        parents = trial
        n_parents[dst] = n_parents.get(dst, 0) + 1
        chosen.append(dep)
    return RelationalModel(schema, tuple(chosen)), len(chosen) < params.num_dependencies


def generate_random_skeleton(
    schema: Schema, rng: np.random.Generator, max_instances: int = 6, link_prob: float = 0.5
) -> Skeleton:
    """Small uniform-random skeleton for property sweeps.

    Each entity class gets 1..max_instances instances; every tuple of
    participants becomes a relationship instance with ``link_prob``, subject
    to ONE cardinalities (tuples are considered in random order).
    """
    instances = {}
    for e in schema.entities:
        k = int(rng.integers(1, max_instances + 1))
        instances[e] = tuple(f"{e}#{i}" for i in range(k))
    links = {}
    for rel in schema.relationships:
        pools = [instances[e] for e in rel.entities]
        tuples = [()]
        for pool in pools:
            tuples = [t + (i,) for t in tuples for i in pool]
        used = set()
        ids = []
        for ti in rng.permutation(len(tuples)):
            tup = tuples[int(ti)]
            if rng.random() >= link_prob:
                continue
            blocked = any(
                c is Cardinality.ONE and (rel.name, eid) in used
                for (_, c), eid in zip(rel.participants, tup)
            )
            if blocked:
                continue
            for eid in tup:
                used.add((rel.name, eid))
            rid = f"{rel.name}#{len(ids)}"
            ids.append(rid)
            links[rid] = tup
        instances[rel.name] = tuple(ids)
    return Skeleton(instances, links)


def _link_scale(dist: np.ndarray, alpha: float, target_mean: float) -> float:
    """Constant c with mean(min(1, c * s(d))) == target_mean, s the inverse logistic."""
    s = np.exp(-alpha * dist) / (1.0 + np.exp(-alpha * dist))
    if target_mean >= 1.0:
        return float(1.0 / s.min())
    lo, hi = 0.0, 1.0
    while np.minimum(1.0, hi * s).mean() < target_mean:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.minimum(1.0, mid * s).mean() < target_mean:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_skeleton_homophily(
    schema: Schema, params: LinearParams, rng: np.random.Generator
) -> tuple[Skeleton, dict[str, float]]:
    """Latent-homophily skeleton for binary relationships.

    Each entity instance draws a latent value uniform on [0, 1].  A pair links
    with probability proportional to the inverse logistic of
    ``alpha * |L1 - L2|``, scaled so a MANY participant has the configured
    expected degree.  ONE cardinalities are enforced by visiting sampled links
    in random order and keeping those whose ONE endpoints are still free.
    """
    n = params.entities_per_class
    latent = {}
    instances = {}
    for e in schema.entities:
        ids = tuple(f"{e}#{i}" for i in range(n))
        instances[e] = ids
        vals = rng.random(n)
        latent.update(zip(ids, vals.tolist()))
    links = {}
    for rel in schema.relationships:
        if rel.arity != 2:
            raise ValueError("homophily skeletons support binary relationships only")
        (e1, c1), (e2, c2) = rel.participants
        l1 = np.array([latent[i] for i in instances[e1]])
        l2 = np.array([latent[i] for i in instances[e2]])
        dist = np.abs(l1[:, None] - l2[None, :])
        scale = _link_scale(dist, params.latent_decay, params.expected_degree / n)
        prob = np.minimum(1.0, scale * np.exp(-params.latent_decay * dist) / (1.0 + np.exp(-params.latent_decay * dist)))
        hits = np.argwhere(rng.random(prob.shape) < prob)
        hits = hits[rng.permutation(len(hits))]
        used1, used2 = set(), set()
        kept = []
        for a, b in hits.tolist():
            if c1 is Cardinality.ONE and a in used1:
                continue
            if c2 is Cardinality.ONE and b in used2:
                continue
            used1.add(a)
            used2.add(b)
            kept.append((a, b))
        kept.sort()
        ids = []
        for k, (a, b) in enumerate(kept):
            rid = f"{rel.name}#{k}"
            ids.append(rid)
            links[rid] = (instances[e1][a], instances[e2][b])
        instances[rel.name] = tuple(ids)
    return Skeleton(instances, links), latent


class TerminalCache:
    """Memoized terminal sets for one skeleton."""

    def __init__(self, skeleton: Skeleton):
        self.skeleton = skeleton
        self._cache: dict = {}

    def __call__(self, path, base: str) -> frozenset[str]:
        key = (path, base)
        hit = self._cache.get(key)
        if hit is None:
            hit = terminal_set(self.skeleton, path, base)
            self._cache[key] = hit
        return hit


def generate_data_linear(
    model: RelationalModel,
    skeleton: Skeleton,
    params: LinearParams,
    rng: np.random.Generator,
    terminals: TerminalCache | None = None,
) -> dict[tuple[str, str], float]:
    """Linear-Gaussian values for every attribute instance.

    A child is ``sum(beta * avg(parent instances)) + noise * eps`` with
    ``beta = beta_total / |parents|``; an empty parent instance set
    contributes 0.  Parentless attributes are standard normal.
    """
    schema = model.schema
    terminals = terminals or TerminalCache(skeleton)
    deps_into: dict[tuple[str, str], list[RelationalDependency]] = {}
    order_graph: dict[tuple[str, str], set] = {}
    for cls in schema.item_classes:
        for attr in schema.attributes_of(cls):
            order_graph[(cls, attr)] = set()
    for dep in model.dependencies:
        src, dst = dep.class_edge()
        order_graph[dst].add(src)
        deps_into.setdefault(dst, []).append(dep)
    order = [n for n in TopologicalSorter(order_graph).static_order()]
    values: dict[tuple[str, str], float] = {}
    for cls, attr in order:
        insts = skeleton.of_class(cls)
        eps = rng.standard_normal(len(insts))
        deps = deps_into.get((cls, attr), [])
        if not deps:
            for inst, e in zip(insts, eps):
                values[(inst, attr)] = float(e)
            continue
        beta = params.beta_total / len(deps)
        for inst, e in zip(insts, eps):
            total = 0.0
            for dep in deps:
                members = terminals(dep.cause.path, inst)
                if members:
                    y = dep.cause.attribute
                    total += beta * float(np.mean([values[(m, y)] for m in sorted(members)]))
            values[(inst, attr)] = total + params.noise_scale * float(e)
    return values
