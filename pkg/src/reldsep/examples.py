"""The organization example: employees develop products funded by business units."""

from __future__ import annotations

from .model import RelationalModel
from .schema import Schema, Skeleton

ORG_DEPENDENCIES = (
    "[Product, Develops, Employee].Competence -> [Product].Success",
    "[Employee].Competence -> [Employee].Salary",
    "[Business-Unit, Funds, Product].Success -> [Business-Unit].Revenue",
    "[Employee, Develops, Product, Funds, Business-Unit].Budget -> [Employee].Salary",
    "[Business-Unit].Revenue -> [Business-Unit].Budget",
)

# dependencies among Competence, Success and Revenue only
ORG_CSR_DEPENDENCIES = (ORG_DEPENDENCIES[0], ORG_DEPENDENCIES[2])

_DEVELOPS = [
    ("Paul", "Case"),
    ("Quinn", "Case"),
    ("Quinn", "Adapter"),
    ("Quinn", "Laptop"),
    ("Roger", "Laptop"),
    ("Sally", "Laptop"),
    ("Sally", "Tablet"),
    ("Thomas", "Tablet"),
    ("Thomas", "Smartphone"),
]
_FUNDS = [
    ("Case", "Accessories"),
    ("Adapter", "Accessories"),
    ("Laptop", "Devices"),
    ("Tablet", "Devices"),
    ("Smartphone", "Devices"),
]


def organization_schema(attributes: str = "full") -> Schema:
    """``attributes='csr'`` keeps only Competence, Success and Revenue."""
    if attributes == "csr":
        attrs = {"Employee": ["Competence"], "Product": ["Success"], "Business-Unit": ["Revenue"]}
    else:
        attrs = {
            "Employee": ["Salary", "Competence"],
            "Product": ["Success"],
            "Business-Unit": ["Budget", "Revenue"],
        }
    return Schema.build(
        ["Employee", "Product", "Business-Unit"],
        [
            ("Develops", [("Employee", "MANY"), ("Product", "MANY")]),
            ("Funds", [("Product", "ONE"), ("Business-Unit", "MANY")]),
        ],
        attrs,
    )


def organization_model(attributes: str = "full") -> RelationalModel:
    schema = organization_schema(attributes)
    deps = ORG_CSR_DEPENDENCIES if attributes == "csr" else ORG_DEPENDENCIES
    return RelationalModel.from_strings(schema, deps)


def organization_skeleton() -> Skeleton:
    links = {}
    for i, (e, p) in enumerate(_DEVELOPS, 1):
        links[f"D{i}"] = (e, p)
    for i, (p, b) in enumerate(_FUNDS, 1):
        links[f"F{i}"] = (p, b)
    return Skeleton(
        {
            "Employee": ("Paul", "Quinn", "Roger", "Sally", "Thomas"),
            "Product": ("Case", "Adapter", "Laptop", "Tablet", "Smartphone"),
            "Business-Unit": ("Accessories", "Devices"),
            "Develops": tuple(f"D{i}" for i in range(1, len(_DEVELOPS) + 1)),
            "Funds": tuple(f"F{i}" for i in range(1, len(_FUNDS) + 1)),
        },
        links,
    )


# Two dependencies whose ground graphs differ only under bridge burning: the
# 3-hop one reaches every other A around a 6-cycle without burning, but only
# the opposite A with it.
CYCLE_DEPENDENCIES = (
    "[B, R, A].X -> [B].Y",
    "[B, R, A, R, B, R, A].X -> [B].Y",
)


def cycle_schema() -> Schema:
    return Schema.build(
        ["A", "B"], [("R", [("A", "MANY"), ("B", "MANY")])], {"A": ["X"], "B": ["Y"]}
    )


def cycle_skeleton() -> Skeleton:
    """b1-a1, b1-a2, b2-a2, b2-a3, b3-a3, b3-a1: a single 6-cycle."""
    pairs = [("a1", "b1"), ("a2", "b1"), ("a2", "b2"), ("a3", "b2"), ("a3", "b3"), ("a1", "b3")]
    links = {f"r{i}": pr for i, pr in enumerate(pairs, 1)}
    return Skeleton(
        {"A": ("a1", "a2", "a3"), "B": ("b1", "b2", "b3"), "R": tuple(links)}, links
    )


def cycle_models() -> list[RelationalModel]:
    """Models for the dependency subsets {1}, {2} and {1, 2}."""
    schema = cycle_schema()
    subsets = ([0], [1], [0, 1])
    return [
        RelationalModel.from_strings(schema, [CYCLE_DEPENDENCIES[i] for i in s]) for s in subsets
    ]
