"""Helpers shared by the experiment runners."""

from __future__ import annotations

from itertools import combinations

from ..agg import AbstractGroundGraph
from ..model import RelationalVariable


def query_variables(agg: AbstractGroundGraph, hops: int) -> list[RelationalVariable]:
    return [n.rv for n in agg.relvar_nodes() if n.rv.hops <= hops]


def variable_pairs(agg: AbstractGroundGraph, hops: int) -> list[tuple[RelationalVariable, RelationalVariable]]:
    return list(combinations(query_variables(agg, hops), 2))


def many_count(schema) -> int:
    return sum(1 for r in schema.relationships for _, c in r.participants if c.value == "MANY")
