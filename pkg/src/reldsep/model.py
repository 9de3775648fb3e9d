"""Relational variables, dependencies and model structures."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

from .errors import RelDSepError
from .paths import RelationalPath, is_valid_path, parse_path, terminal_set
from .schema import Schema, Skeleton, Violation, _loads, validate_schema

_RV_RE = re.compile(r"^\s*(\[[^\]]*\])\s*\.\s*([A-Za-z][A-Za-z0-9_-]*)\s*$")


@dataclass(frozen=True, order=True)
class RelationalVariable:
    path: RelationalPath
    attribute: str

    @property
    def hops(self) -> int:
        return self.path.hops

    def is_simple(self) -> bool:
        return self.path.is_simple()

    def sort_key(self) -> tuple:
        return (self.path.sort_key(), self.attribute)

    def __str__(self) -> str:
        return f"{self.path}.{self.attribute}"

    def __repr__(self) -> str:
        return f"RV({self})"


def parse_rv(text: str, schema: Schema | None = None) -> RelationalVariable:
    m = _RV_RE.match(text)
    if not m:
        raise RelDSepError("PARSE_ERROR", f"cannot parse relational variable {text!r}")
    rv = RelationalVariable(parse_path(m.group(1)), m.group(2))
    if schema is not None:
        for cls in rv.path:
            schema.require_class(cls)
        if rv.attribute not in schema.attributes_of(rv.path.terminal):
            raise RelDSepError(
                "UNKNOWN_ATTRIBUTE", f"{rv.path.terminal} has no attribute {rv.attribute!r}"
            )
    return rv


@dataclass(frozen=True, order=True)
class RelationalDependency:
    """``cause -> effect`` with the effect on the singleton base path."""

    cause: RelationalVariable
    effect: RelationalVariable

    def __post_init__(self):
        if len(self.effect.path) != 1 or self.effect.path.base != self.cause.path.base:
            raise RelDSepError(
                "NONCANONICAL_EFFECT",
                f"effect {self.effect} must be the singleton path [{self.cause.path.base}]",
            )

    @property
    def hops(self) -> int:
        return self.cause.hops

    @property
    def base(self) -> str:
        return self.cause.path.base

    def class_edge(self) -> tuple[tuple[str, str], tuple[str, str]]:
        return (
            (self.cause.path.terminal, self.cause.attribute),
            (self.effect.path.base, self.effect.attribute),
        )

    def __str__(self) -> str:
        return f"{self.cause} -> {self.effect}"


def parse_dependency(text: str, schema: Schema) -> RelationalDependency:
    parts = text.split("->")
    if len(parts) != 2:
        raise RelDSepError("PARSE_ERROR", f"expected 'cause -> effect' in {text!r}")
    cause = parse_rv(parts[0], schema)
    effect = parse_rv(parts[1], schema)
    return RelationalDependency(cause, effect)


def rv_instance(
    skeleton: Skeleton, rv: RelationalVariable, base: str
) -> frozenset[tuple[str, str]]:
    return frozenset((i, rv.attribute) for i in terminal_set(skeleton, rv.path, base))


@dataclass(frozen=True)
class RelationalModel:
    schema: Schema
    dependencies: tuple[RelationalDependency, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dependencies", tuple(self.dependencies))

    @classmethod
    def from_strings(cls, schema: Schema, deps: Iterable[str]) -> "RelationalModel":
        return cls(schema, tuple(parse_dependency(d, schema) for d in deps))

    @cached_property
    def max_hops(self) -> int:
        """h_m: the longest dependency cause path, in hops (0 with no dependencies)."""
        return max((d.hops for d in self.dependencies), default=0)

    def dependencies_into(self, item_class: str, attribute: str) -> tuple[RelationalDependency, ...]:
        return tuple(
            d for d in self.dependencies
            if d.effect.path.base == item_class and d.effect.attribute == attribute
        )

    def with_dependencies(self, deps: Iterable[RelationalDependency]) -> "RelationalModel":
        return RelationalModel(self.schema, tuple(deps))

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "dependencies": [str(d) for d in self.dependencies],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping, schema: Schema | None = None) -> "RelationalModel":
        unknown = set(data) - {"schema", "dependencies"}
        if unknown:
            raise RelDSepError("PARSE_ERROR", f"unknown model keys {sorted(unknown)}")
        if "schema" in data:
            schema = Schema.from_dict(data["schema"])
        if schema is None:
            raise RelDSepError("PARSE_ERROR", "model has no schema")
        return cls.from_strings(schema, data.get("dependencies", []))

    @classmethod
    def from_json(cls, text: str, schema: Schema | None = None) -> "RelationalModel":
        return cls.from_dict(_loads(text), schema)


def class_dependency_graph(model: RelationalModel) -> dict[tuple[str, str], set[tuple[str, str]]]:
    """Map each (item class, attribute) node to its set of parent nodes."""
    graph: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for cls in model.schema.item_classes:
        for attr in model.schema.attributes_of(cls):
            graph[(cls, attr)] = set()
    for dep in model.dependencies:
        src, dst = dep.class_edge()
        graph.setdefault(dst, set()).add(src)
        graph.setdefault(src, set())
    return graph


def is_acyclic(parents: Mapping) -> bool:
    try:
        TopologicalSorter(parents).prepare()
    except CycleError:
        return False
    return True


def validate_model(model: RelationalModel) -> list[Violation]:
    out = list(validate_schema(model.schema))
    if out:
        return out
    schema = model.schema
    seen = set()
    for dep in model.dependencies:
        if dep in seen:
            out.append(Violation("DUPLICATE_DEPENDENCY", str(dep)))
        seen.add(dep)
        try:
            valid = is_valid_path(schema, dep.cause.path)
        except RelDSepError as exc:
            out.append(Violation(exc.code, f"{dep}: {exc.message}"))
            continue
        if not valid:
            out.append(Violation("INVALID_PATH", f"{dep}: {dep.cause.path} is not a valid path"))
        for rv in (dep.cause, dep.effect):
            if rv.attribute not in schema.attributes_of(rv.path.terminal):
                out.append(
                    Violation("UNKNOWN_ATTRIBUTE", f"{dep}: {rv.path.terminal} has no {rv.attribute}")
                )
        src, dst = dep.class_edge()
        if src == dst:
            out.append(Violation("SELF_DEPENDENCY", f"{dep}: cause and effect share {src[0]}.{src[1]}"))
    if not out and not is_acyclic(class_dependency_graph(model)):
        out.append(Violation("CYCLIC_MODEL", "class dependency graph has a cycle"))
    return out
