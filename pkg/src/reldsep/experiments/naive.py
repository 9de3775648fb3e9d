"""How often d-separation on simple AGGs agrees with full AGGs."""

from __future__ import annotations

from collections import Counter
from dataclasses import replace

from ..dsep import _separated_augmented, cached_agg, minimal_separating_set
from .common import variable_pairs
from .generators import GenParams, generate_random_model, generate_random_schema, trial_rng

NON_SIMPLE = "NON_SIMPLE"
MARGINALLY_INDEPENDENT = "MARGINALLY_INDEPENDENT"
EQUIVALENT = "EQUIVALENT"
NOT_SEPARABLE = "NOT_SEPARABLE"
NON_EQUIVALENT = "NON_EQUIVALENT"
CLASSES = (NON_SIMPLE, MARGINALLY_INDEPENDENT, EQUIVALENT, NOT_SEPARABLE, NON_EQUIVALENT)

COLUMNS = (
    "entities", "dependencies", "trial", "dependency_hops", "query_hops", "agg_hops",
    "placed_dependencies", "pairs", *(c.lower() for c in CLASSES), "equivalence",
)


def classify_pair(agg, x, y) -> str:
    if not (x.is_simple() and y.is_simple()):
        return NON_SIMPLE
    if _separated_augmented(agg, [x], [y], []):
        return MARGINALLY_INDEPENDENT
    simple = [n.rv for n in agg.relvar_nodes() if n.rv.is_simple()]
    if minimal_separating_set(agg, x, y, candidates=simple) is not None:
        return EQUIVALENT
    if minimal_separating_set(agg, x, y) is None:
        return NOT_SEPARABLE
    return NON_EQUIVALENT


def run_trial(params: GenParams, trial: int) -> dict:
    rng = trial_rng(params.seed, 1, params.num_entities, params.num_dependencies, trial)
    schema = generate_random_schema(params, rng)
    model, _ = generate_random_model(schema, params, rng)
    counts = Counter()
    for perspective in schema.item_classes:
        agg = cached_agg(model, perspective, params.agg_hops)
        for x, y in variable_pairs(agg, params.query_hops):
            counts[classify_pair(agg, x, y)] += 1
    cached_agg.cache_clear()
    separable = counts[EQUIVALENT] + counts[NON_EQUIVALENT]
    return {
        "entities": params.num_entities,
        "dependencies": params.num_dependencies,
        "trial": trial,
        "dependency_hops": params.dependency_hops,
        "query_hops": params.query_hops,
        "agg_hops": params.agg_hops,
        "placed_dependencies": len(model.dependencies),
        "pairs": sum(counts.values()),
        **{c.lower(): counts[c] for c in CLASSES},
        "equivalence": counts[EQUIVALENT] / separable if separable else "",
    }


def run_naive_equivalence(
    params: GenParams, entities=range(1, 5), dependencies=range(1, 11)
) -> list[dict]:
    rows = []
    for ne in entities:
        for nd in dependencies:
            p = replace(
                params, num_entities=ne, num_relationships=None, num_dependencies=nd,
                simple_dependencies=True,
            )
            rows.extend(run_trial(p, t) for t in range(params.trials))
    return rows


def summarize(rows: list[dict]) -> dict:
    """Pooled class fractions over all rows."""
    tot = Counter()
    for r in rows:
        for c in CLASSES:
            tot[c] += r[c.lower()]
    pairs = sum(tot.values())
    representable = pairs - tot[NON_SIMPLE]
    return {
        "pairs": pairs,
        "non_simple": tot[NON_SIMPLE] / pairs if pairs else 0.0,
        "marginal": tot[MARGINALLY_INDEPENDENT] / representable if representable else 0.0,
        "not_separable": tot[NOT_SEPARABLE] / representable if representable else 0.0,
        "counts": dict(tot),
    }
