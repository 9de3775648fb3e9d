"""AGG node and edge counts across random schemas and models."""

from __future__ import annotations

from dataclasses import replace

from ..agg import build_agg
from .common import many_count
from .generators import GenParams, generate_random_model, generate_random_schema, trial_rng

COLUMNS = (
    "entities", "relationships", "many_count", "dependencies", "placed_dependencies",
    "trial", "agg_hops", "perspective", "perspective_kind", "nodes", "edges",
    "intersection_nodes", "intersection_edges",
)


def feasible_settings(entities, relationships):
    for ne in entities:
        for nr in relationships:
            if max(ne - 1, 0) <= nr <= ne * (ne - 1) // 2:
                yield ne, nr


def run_agg_size(
    params: GenParams, entities=range(1, 5), relationships=range(0, 5), dependencies=range(1, 16)
) -> list[dict]:
    rows = []
    for ne, nr in feasible_settings(entities, relationships):
        for nd in dependencies:
            p = replace(params, num_entities=ne, num_relationships=nr, num_dependencies=nd)
            for trial in range(params.trials):
                rng = trial_rng(params.seed, 2, ne, nr, nd, trial)
                schema = generate_random_schema(p, rng)
                model, _ = generate_random_model(schema, p, rng)
                for persp in schema.item_classes:
                    agg = build_agg(model, persp, params.agg_hops)
                    n_iv = len(agg.intersection_nodes())
                    rows.append({
                        "entities": ne,
                        "relationships": nr,
                        "many_count": many_count(schema),
                        "dependencies": nd,
                        "placed_dependencies": len(model.dependencies),
                        "trial": trial,
                        "agg_hops": params.agg_hops,
                        "perspective": persp,
                        "perspective_kind": "entity" if schema.is_entity(persp) else "relationship",
                        "nodes": agg.num_nodes(),
                        "edges": agg.num_edges(),
                        "intersection_nodes": n_iv,
                        "intersection_edges": agg.intersection_edge_count(),
                    })
    return rows
