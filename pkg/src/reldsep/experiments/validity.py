"""Checks relational d-separation answers against CI tests on synthetic data."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from ..dsep import _separated_augmented, cached_agg, minimal_separating_set
from ..errors import RelDSepError
from ..model import RelationalVariable
from ..paths import RelationalPath
from ..agg import required_hop_threshold
from .generators import (
    GenParams,
    LinearParams,
    TerminalCache,
    generate_data_linear,
    generate_random_model,
    generate_random_schema,
    generate_skeleton_homophily,
    trial_rng,
)

COLUMNS = (
    "entities", "trial", "query", "perspective", "x", "y", "z", "separated",
    "replicates", "tested", "significant", "prop_significant", "mean_partial_r2",
)


def _avg(values, terminals, rv: RelationalVariable, base: str):
    members = terminals(rv.path, base)
    if not members:
        return None
    return float(np.mean([values[(m, rv.attribute)] for m in sorted(members)]))


def ci_test_linear(
    values: dict,
    x: RelationalVariable,
    y: RelationalVariable,
    z,
    skeleton,
    terminals: TerminalCache | None = None,
) -> tuple[float, float]:
    """OLS t-test for avg(x) in ``y ~ 1 + avg(x) + sum avg(z_i)``.

    One row per instance of ``y``'s (singleton) base class; rows where any
    regressor has an empty instance set are dropped.  Returns the squared
    partial correlation of x and the two-sided p-value.
    """
    if len(y.path) != 1:
        raise RelDSepError("NONCANONICAL_EFFECT", f"{y} must have a singleton path")
    terminals = terminals or TerminalCache(skeleton)
    regressors = [x, *z]
    rows = []
    for b in skeleton.of_class(y.path.base):
        row = [_avg(values, terminals, rv, b) for rv in regressors]
        if any(v is None for v in row):
            continue
        rows.append([values[(b, y.attribute)], *row])
    k = len(regressors) + 1
    if len(rows) < k + 2:
        raise RelDSepError("INSUFFICIENT_ROWS", f"{len(rows)} usable rows for {k} coefficients")
    arr = np.asarray(rows)
    yv = arr[:, 0]
    design = np.column_stack([np.ones(len(arr)), arr[:, 1:]])
    return ols_t_test(design, yv, column=1)


def ols_t_test(design: np.ndarray, yv: np.ndarray, column: int) -> tuple[float, float]:
    n, k = design.shape
    if np.linalg.matrix_rank(design) < k:
        raise RelDSepError("SINGULAR_DESIGN", "regressors are collinear")
    coef, _, _, _ = np.linalg.lstsq(design, yv, rcond=None)
    resid = yv - design @ coef
    df = n - k
    sigma2 = float(resid @ resid) / df
    xtx_inv = np.linalg.inv(design.T @ design)
    se = np.sqrt(sigma2 * xtx_inv[column, column])
    if se == 0.0:
        return 1.0, 0.0
    t = coef[column] / se
    partial_r2 = float(t * t / (t * t + df))
    p = float(2.0 * stats.t.sf(abs(t), df))
    return partial_r2, p


@dataclass(frozen=True)
class Query:
    perspective: str
    x: RelationalVariable
    y: RelationalVariable
    z: tuple[RelationalVariable, ...]
    separated: bool


def sample_queries(model, params: GenParams, rng, per_kind: int = 100, attempts: int = 4000) -> list[Query]:
    """Up to ``per_kind`` separated and ``per_kind`` connected queries with a
    singleton-path ``y``.

    Each attempt draws a perspective, a singleton ``y``, an ``x`` within the
    query hop threshold and a random conditioning set of 0..2 other variables.
    Every other attempt conditions on a minimal separating set instead, so
    separated queries with non-empty conditioning sets are well represented.
    """
    schema = model.schema
    h_a = required_hop_threshold(params.query_hops, model.max_hops)
    perspectives = [c for c in schema.item_classes if schema.attributes_of(c)]
    true_q, false_q, seen = [], [], set()
    for attempt in range(attempts):
        if len(true_q) >= per_kind and len(false_q) >= per_kind:
            break
        persp = perspectives[int(rng.integers(len(perspectives)))]
        agg = cached_agg(model, persp, h_a)
        rvs = [n.rv for n in agg.relvar_nodes() if n.rv.hops <= params.query_hops]
        ys = [rv for rv in rvs if len(rv.path) == 1]
        y = ys[int(rng.integers(len(ys)))]
        xs = [rv for rv in rvs if rv != y]
        if not xs:
            continue
        x = xs[int(rng.integers(len(xs)))]
        if attempt % 2:
            z = minimal_separating_set(agg, x, y)
            if z is None:
                continue
            z = tuple(z)
        else:
            others = [rv for rv in rvs if rv not in (x, y)]
            size = min(int(rng.integers(3)), len(others))
            pick = rng.choice(len(others), size=size, replace=False) if size else []
            z = tuple(sorted((others[int(i)] for i in pick), key=RelationalVariable.sort_key))
        key = (persp, x, y, z)
        if key in seen:
            continue
        seen.add(key)
        sep = _separated_augmented(agg, [x], [y], list(z))
        bucket = true_q if sep else false_q
        if len(bucket) < per_kind:
            bucket.append(Query(persp, x, y, z, sep))
    return true_q + false_q


def run_validity_trial(
    gen: GenParams, lin: LinearParams, trial: int, replicates: int, per_kind: int = 100
) -> list[dict]:
    rng = trial_rng(gen.seed, 4, gen.num_entities, gen.num_dependencies, trial)
    schema = generate_random_schema(gen, rng)
    model, _ = generate_random_model(schema, gen, rng)
    queries = sample_queries(model, gen, rng, per_kind)
    cached_agg.cache_clear()
    if not queries:
        return []
    alpha = lin.alpha / len(queries)
    sig = np.zeros(len(queries), dtype=int)
    tested = np.zeros(len(queries), dtype=int)
    r2 = [[] for _ in queries]
    for rep in range(replicates):
        rep_rng = trial_rng(gen.seed, 5, gen.num_entities, gen.num_dependencies, trial, rep)
        skeleton, _ = generate_skeleton_homophily(schema, lin, rep_rng)
        terminals = TerminalCache(skeleton)
        values = generate_data_linear(model, skeleton, lin, rep_rng, terminals)
        for i, q in enumerate(queries):
            try:
                pr2, p = ci_test_linear(values, q.x, q.y, q.z, skeleton, terminals)
            except RelDSepError:
                continue
            tested[i] += 1
            sig[i] += p < alpha
            r2[i].append(pr2)
    rows = []
    for i, q in enumerate(queries):
        rows.append({
            "entities": gen.num_entities,
            "trial": trial,
            "query": i,
            "perspective": q.perspective,
            "x": str(q.x),
            "y": str(q.y),
            "z": "; ".join(str(v) for v in q.z),
            "separated": q.separated,
            "replicates": replicates,
            "tested": int(tested[i]),
            "significant": int(sig[i]),
            "prop_significant": sig[i] / tested[i] if tested[i] else "",
            "mean_partial_r2": float(np.mean(r2[i])) if r2[i] else "",
        })
    return rows


def run_empirical_validity(
    gen: GenParams,
    lin: LinearParams = LinearParams(),
    entities=range(1, 5),
    replicates: int = 10,
    per_kind: int = 100,
) -> list[dict]:
    rows = []
    for ne in entities:
        p = replace(gen, num_entities=ne, num_relationships=None)
        for trial in range(gen.trials):
            rows.extend(run_validity_trial(p, lin, trial, replicates, per_kind))
    return rows
