"""Sizes of minimal separating sets for conditionally independent pairs."""

from __future__ import annotations

from collections import Counter
from dataclasses import replace

from ..dsep import cached_agg, is_minimal_separator, minimal_separating_set
from .common import variable_pairs
from .generators import GenParams, generate_random_model, generate_random_schema, trial_rng

MAX_SIZE_COLUMN = 8
COLUMNS = (
    "entities", "dependencies", "trial", "placed_dependencies", "independent_pairs",
    "minimality_failures", *(f"size_{k}" for k in range(MAX_SIZE_COLUMN)), f"size_{MAX_SIZE_COLUMN}_plus",
)


def run_trial(params: GenParams, trial: int, max_pairs: int = 100) -> dict:
    rng = trial_rng(params.seed, 3, params.num_entities, params.num_dependencies, trial)
    schema = generate_random_schema(params, rng)
    model, _ = generate_random_model(schema, params, rng)
    candidates = []
    for persp in schema.item_classes:
        agg = cached_agg(model, persp, params.agg_hops)
        candidates.extend((agg, x, y) for x, y in variable_pairs(agg, params.query_hops))
    sizes = Counter()
    found = failures = 0
    for idx in rng.permutation(len(candidates)):
        if found >= max_pairs:
            break
        agg, x, y = candidates[int(idx)]
        z = minimal_separating_set(agg, x, y)
        if z is None:
            continue
        found += 1
        if not is_minimal_separator(agg, x, y, z):
            failures += 1
        sizes[min(len(z), MAX_SIZE_COLUMN)] += 1
    cached_agg.cache_clear()
    row = {
        "entities": params.num_entities,
        "dependencies": params.num_dependencies,
        "trial": trial,
        "placed_dependencies": len(model.dependencies),
        "independent_pairs": found,
        "minimality_failures": failures,
    }
    for k in range(MAX_SIZE_COLUMN):
        row[f"size_{k}"] = sizes[k]
    row[f"size_{MAX_SIZE_COLUMN}_plus"] = sizes[MAX_SIZE_COLUMN]
    return row


def run_sepset_size(
    params: GenParams, entities=range(1, 5), dependencies=range(1, 11), max_pairs: int = 100
) -> list[dict]:
    rows = []
    for ne in entities:
        for nd in dependencies:
            p = replace(
                params, num_entities=ne, num_relationships=None, num_dependencies=nd,
                total_attributes=10,
            )
            rows.extend(run_trial(p, t, max_pairs) for t in range(params.trials))
    return rows


def size_histogram(rows: list[dict]) -> dict:
    hist = Counter()
    for r in rows:
        for k in range(MAX_SIZE_COLUMN):
            hist[k] += r[f"size_{k}"]
        hist[MAX_SIZE_COLUMN] += r[f"size_{MAX_SIZE_COLUMN}_plus"]
    return dict(sorted(hist.items()))
