from dataclasses import replace

import numpy as np
import pytest

from reldsep.agg import is_simple_schema
from reldsep.errors import RelDSepError
from reldsep.experiments import naive, sepset, sizes, validity
from reldsep.experiments.generators import (
    GenParams,
    LinearParams,
    TerminalCache,
    candidate_dependencies,
    generate_data_linear,
    generate_random_model,
    generate_random_schema,
    generate_random_skeleton,
    generate_skeleton_homophily,
    trial_rng,
)
from reldsep.experiments.output import rows_to_csv
from reldsep.model import RelationalModel, parse_rv, validate_model
from reldsep.schema import Schema, validate_schema, validate_skeleton


# schemas and models

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_random_schema_is_tree(n):
    for seed in range(10):
        schema = generate_random_schema(GenParams(num_entities=n), np.random.default_rng(seed))
        assert validate_schema(schema) == []
        assert len(schema.entities) == n and len(schema.relationships) == n - 1
        assert is_simple_schema(schema)
        assert all(schema.attributes_of(c) for c in schema.item_classes)


def test_random_schema_extra_relationships():
    schema = generate_random_schema(GenParams(num_entities=3, num_relationships=3), np.random.default_rng(0))
    assert len(schema.relationships) == 3 and not is_simple_schema(schema)
    with pytest.raises(ValueError):
        generate_random_schema(GenParams(num_entities=3, num_relationships=4), np.random.default_rng(0))


def test_total_attributes_fixed():
    params = GenParams(num_entities=3, total_attributes=10)
    for seed in range(5):
        schema = generate_random_schema(params, np.random.default_rng(seed))
        assert sum(len(a) for _, a in schema.attributes) == 10


@pytest.mark.parametrize("seed", range(10))
def test_random_model_valid(seed):
    params = GenParams(num_entities=1 + seed % 4, num_dependencies=8)
    rng = np.random.default_rng(seed)
    schema = generate_random_schema(params, rng)
    model, underfull = generate_random_model(schema, params, rng)
    assert validate_model(model) == []
    assert underfull == (len(model.dependencies) < 8)
    assert all(d.hops <= params.dependency_hops for d in model.dependencies)
    per_effect = {}
    for d in model.dependencies:
        per_effect[d.class_edge()[1]] = per_effect.get(d.class_edge()[1], 0) + 1
    assert max(per_effect.values(), default=0) <= params.max_parents


def test_underfull_flag():
    schema = Schema.build(["E"], [], {"E": ["a", "b"]})
    params = GenParams(num_entities=1, num_dependencies=5)
    # one acyclic dependency at most: a -> b or b -> a
    assert len(candidate_dependencies(schema, 4)) == 2
    model, underfull = generate_random_model(schema, params, np.random.default_rng(0))
    assert underfull and len(model.dependencies) == 1


def test_simple_dependencies_flag():
    params = GenParams(num_entities=3, num_dependencies=10, simple_dependencies=True)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        schema = generate_random_schema(params, rng)
        model, _ = generate_random_model(schema, params, rng)
        assert all(d.cause.path.is_simple() for d in model.dependencies)


def test_trial_rng_streams_independent():
    a = trial_rng(0, 1, 2, 3).random(5)
    assert np.array_equal(a, trial_rng(0, 1, 2, 3).random(5))
    assert not np.array_equal(a, trial_rng(0, 1, 2, 4).random(5))


# skeletons

def test_random_skeleton_valid():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        schema = generate_random_schema(GenParams(num_entities=3, num_relationships=3), rng)
        skel = generate_random_skeleton(schema, rng)
        assert validate_skeleton(schema, skel) == []


def _mean_many_degree(schema, skel):
    degs = []
    for rel in schema.relationships:
        for pos, (ent, card) in enumerate(rel.participants):
            if card.value != "MANY":
                continue
            other = 1 - pos
            if rel.participants[other][1].value != "MANY":
                continue
            counts = {i: 0 for i in skel.of_class(ent)}
            for rid in skel.of_class(rel.name):
                counts[skel.links[rid][pos]] += 1
            degs.append(np.mean(list(counts.values())))
    return degs


def test_homophily_expected_degree():
    schema = Schema.build(["A", "B"], [("R", [("A", "MANY"), ("B", "MANY")])], {"A": ["x"], "B": ["y"]})
    lin = LinearParams(entities_per_class=1000)
    means = []
    for seed in range(20):
        skel, _ = generate_skeleton_homophily(schema, lin, np.random.default_rng(seed))
        means.extend(_mean_many_degree(schema, skel))
    assert abs(np.mean(means) - 5.0) <= 0.5


def test_homophily_respects_one_and_latent():
    schema = Schema.build(["A", "B"], [("R", [("A", "ONE"), ("B", "MANY")])], {"A": ["x"], "B": ["y"]})
    skel, latent = generate_skeleton_homophily(schema, LinearParams(entities_per_class=300), np.random.default_rng(3))
    assert validate_skeleton(schema, skel) == []
    gaps = [abs(latent[a] - latent[b]) for a, b in skel.links.values()]
    assert np.mean(gaps) < 0.2  # links favour similar latent values
    assert all(0.0 <= v <= 1.0 for v in latent.values())


# data and CI tests

def test_linear_chain_slope():
    schema = Schema.build(["E"], [], {"E": ["a", "b"]})
    model = RelationalModel.from_strings(schema, ["[E].a -> [E].b"])
    lin = LinearParams(entities_per_class=2000)
    skel, _ = generate_skeleton_homophily(schema, lin, np.random.default_rng(0))
    vals = generate_data_linear(model, skel, lin, np.random.default_rng(1))
    ids = skel.of_class("E")
    a = np.array([vals[(i, "a")] for i in ids])
    b = np.array([vals[(i, "b")] for i in ids])
    slope = np.polyfit(a, b, 1)[0]
    assert abs(slope - 0.9) <= 0.05


def test_empty_parent_set_contributes_zero():
    schema = Schema.build(["A", "B"], [("R", [("A", "MANY"), ("B", "MANY")])], {"A": ["x"], "B": ["y"]})
    model = RelationalModel.from_strings(schema, ["[B, R, A].x -> [B].y"])
    from reldsep.schema import Skeleton

    skel = Skeleton({"A": ("a1",), "B": ("b1", "b2"), "R": ("r1",)}, {"r1": ("a1", "b1")})
    lin = LinearParams(noise_scale=0.0)
    vals = generate_data_linear(model, skel, lin, np.random.default_rng(0))
    assert vals[("b2", "y")] == 0.0
    assert vals[("b1", "y")] == pytest.approx(0.9 * vals[("a1", "x")])


def test_ols_matches_normal_equations():
    design = np.array([[1, 0.5, 2.0], [1, 1.5, -1.0], [1, 2.0, 0.3], [1, -0.7, 1.1], [1, 3.1, 0.0]])
    yv = np.array([1.0, 2.5, 0.2, -1.3, 4.4])
    beta = np.linalg.solve(design.T @ design, design.T @ yv)
    resid = yv - design @ beta
    df = 5 - 3
    se = np.sqrt(resid @ resid / df * np.linalg.inv(design.T @ design)[1, 1])
    t = beta[1] / se
    r2, p = validity.ols_t_test(design, yv, 1)
    assert r2 == pytest.approx(t * t / (t * t + df), abs=1e-9)
    from scipy import stats

    assert p == pytest.approx(2 * stats.t.sf(abs(t), df), abs=1e-9)


def test_ols_errors():
    design = np.array([[1, 1.0, 2.0], [1, 2.0, 4.0], [1, 3.0, 6.0], [1, 4.0, 8.0], [1, 0.0, 0.0]])
    with pytest.raises(RelDSepError) as exc:
        validity.ols_t_test(design, np.arange(5.0), 1)
    assert exc.value.code == "SINGULAR_DESIGN"


def test_ci_test_linear_insufficient_rows():
    schema = Schema.build(["E"], [], {"E": ["a", "b"]})
    from reldsep.schema import Skeleton

    skel = Skeleton({"E": ("e1", "e2", "e3")})
    vals = {(e, a): float(i) for i, e in enumerate(("e1", "e2", "e3")) for a in ("a", "b")}
    with pytest.raises(RelDSepError) as exc:
        validity.ci_test_linear(vals, parse_rv("[E].a"), parse_rv("[E].b"), (), skel)
    assert exc.value.code == "INSUFFICIENT_ROWS"


def test_ci_test_detects_dependence():
    schema = Schema.build(["E"], [], {"E": ["a", "b", "c"]})
    model = RelationalModel.from_strings(schema, ["[E].a -> [E].b", "[E].b -> [E].c"])
    lin = LinearParams(entities_per_class=300)
    skel, _ = generate_skeleton_homophily(schema, lin, np.random.default_rng(0))
    vals = generate_data_linear(model, skel, lin, np.random.default_rng(1))
    a, b, c = (parse_rv(f"[E].{v}") for v in "abc")
    r2, p = validity.ci_test_linear(vals, a, c, (), skel)
    assert p < 1e-6 and r2 > 0.5
    r2, p = validity.ci_test_linear(vals, a, c, (b,), skel)
    assert r2 < 0.05


# experiment runners

def test_naive_one_entity_always_equivalent():
    rows = naive.run_naive_equivalence(GenParams(trials=3, seed=4), [1], range(1, 6))
    for r in rows:
        assert r["non_simple"] == 0 and r["non_equivalent"] == 0
        assert r["equivalence"] in ("", 1.0)


def test_naive_classes_sum_to_pairs():
    rows = naive.run_naive_equivalence(GenParams(trials=1, seed=2), [2], [3, 6])
    for r in rows:
        assert sum(r[c.lower()] for c in naive.CLASSES) == r["pairs"]


def test_agg_size_rows():
    params = GenParams(trials=2, seed=0, agg_hops=4)
    rows = sizes.run_agg_size(params, [1, 2, 3], [0, 1, 2, 3], [2])
    settings = {(r["entities"], r["relationships"]) for r in rows}
    assert settings == {(1, 0), (2, 1), (3, 2), (3, 3)}
    for r in rows:
        assert r["nodes"] >= r["intersection_nodes"] and r["edges"] >= r["intersection_edges"]
        assert r["perspective_kind"] in ("entity", "relationship")


def test_agg_nodes_invariant_to_dependencies():
    rng = np.random.default_rng(5)
    params = GenParams(num_entities=2, num_dependencies=1)
    schema = generate_random_schema(params, rng)
    from reldsep.agg import build_agg

    counts = []
    for nd in (1, 4, 8):
        model, _ = generate_random_model(schema, replace(params, num_dependencies=nd), np.random.default_rng(nd))
        agg = build_agg(model, schema.entities[0], 4)
        counts.append((len(agg.relvar_nodes()), agg.num_edges()))
    assert len({c[0] for c in counts}) == 1


def test_sepset_single_entity_small_sets():
    rows = sepset.run_sepset_size(GenParams(trials=3, seed=1), [1], [1])
    hist = sepset.size_histogram(rows)
    assert sum(v for k, v in hist.items() if k > 1) == 0
    assert all(r["minimality_failures"] == 0 for r in rows)


def test_validity_trial_small():
    gen = GenParams(num_entities=2, num_dependencies=3, trials=1, seed=3)
    lin = LinearParams(entities_per_class=150)
    rows = validity.run_validity_trial(gen, lin, 0, replicates=2, per_kind=5)
    assert rows and all(r["replicates"] == 2 for r in rows)
    assert {r["separated"] for r in rows} <= {True, False}


def test_runs_are_deterministic():
    params = GenParams(trials=1, seed=9)
    a = rows_to_csv(naive.run_naive_equivalence(params, [2], [4]), naive.COLUMNS)
    b = rows_to_csv(naive.run_naive_equivalence(params, [2], [4]), naive.COLUMNS)
    assert a == b


def test_csv_formatting():
    text = rows_to_csv([{"a": 0.1 + 0.2, "b": True, "c": "x"}], ["a", "b", "c"])
    assert text == "a,b,c\n0.3,1,x\n"
