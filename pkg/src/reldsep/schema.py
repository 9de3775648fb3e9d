"""Relational schemas and skeletons.

A :class:`Schema` is the type universe: entity classes, relationship classes
with per-participant cardinalities, and attribute classes on every item
class.  A :class:`Skeleton` is one concrete database structure over a schema.
Both are immutable once built; ``validate_*`` return violations as data.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import RelDSepError


class Cardinality(str, Enum):
    ONE = "ONE"
    MANY = "MANY"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class RelationshipClass:
    name: str
    participants: tuple[tuple[str, Cardinality], ...]

    def __post_init__(self):
        parts = tuple((e, Cardinality(c)) for e, c in self.participants)
        object.__setattr__(self, "participants", parts)

    @property
    def arity(self) -> int:
        return len(self.participants)

    @property
    def entities(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.participants)

    def cardinality(self, entity: str) -> Cardinality:
        for e, c in self.participants:
            if e == entity:
                return c
        raise RelDSepError("UNKNOWN_CLASS", f"{entity} does not participate in {self.name}")


@dataclass(frozen=True)
class Schema:
    """Entity classes, relationship classes and attribute classes.

    ``attributes`` is stored as a tuple of ``(item class, attribute names)``
    pairs so the schema stays hashable; use :meth:`attributes_of` to look up.
    """

    entities: tuple[str, ...]
    relationships: tuple[RelationshipClass, ...] = ()
    attributes: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        attrs = self.attributes
        if isinstance(attrs, Mapping):
            attrs = attrs.items()
        object.__setattr__(
            self, "attributes", tuple((cls, tuple(names)) for cls, names in attrs)
        )

    @classmethod
    def build(
        cls,
        entities: Iterable[str],
        relationships: Iterable[tuple[str, Sequence[tuple[str, str | Cardinality]]]] = (),
        attributes: Mapping[str, Iterable[str]] | None = None,
    ) -> "Schema":
        rels = tuple(RelationshipClass(name, tuple(parts)) for name, parts in relationships)
        attributes = attributes or {}
        return cls(tuple(entities), rels, tuple((k, tuple(v)) for k, v in attributes.items()))

    @cached_property
    def _attr_index(self) -> dict[str, tuple[str, ...]]:
        index: dict[str, tuple[str, ...]] = {}
        for cls, names in self.attributes:
            index[cls] = index.get(cls, ()) + names
        return index

    @cached_property
    def _rel_index(self) -> dict[str, RelationshipClass]:
        return {r.name: r for r in self.relationships}

    @cached_property
    def item_classes(self) -> tuple[str, ...]:
        return self.entities + tuple(r.name for r in self.relationships)

    @cached_property
    def _neighbors(self) -> dict[str, tuple[str, ...]]:
        nbrs: dict[str, list[str]] = defaultdict(list)
        for r in self.relationships:
            for e in r.entities:
                nbrs[e].append(r.name)
                nbrs[r.name].append(e)
        return {k: tuple(sorted(set(v))) for k, v in nbrs.items()}

    def is_entity(self, name: str) -> bool:
        return name in self.entities

    def is_relationship(self, name: str) -> bool:
        return name in self._rel_index

    def has_class(self, name: str) -> bool:
        return self.is_entity(name) or self.is_relationship(name)

    def relationship(self, name: str) -> RelationshipClass:
        try:
            return self._rel_index[name]
        except KeyError:
            raise RelDSepError("UNKNOWN_CLASS", f"no relationship class {name!r}") from None

    def attributes_of(self, item_class: str) -> tuple[str, ...]:
        return self._attr_index.get(item_class, ())

    def neighbors(self, item_class: str) -> tuple[str, ...]:
        """Item classes adjacent to ``item_class`` in the ER diagram."""
        return self._neighbors.get(item_class, ())

    def cardinality(self, relationship: str, entity: str) -> Cardinality:
        return self.relationship(relationship).cardinality(entity)

    def require_class(self, name: str) -> None:
        if not self.has_class(name):
            raise RelDSepError("UNKNOWN_CLASS", f"no item class {name!r}")

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "entities": [
                {"name": e, "attributes": list(self.attributes_of(e))} for e in self.entities
            ],
            "relationships": [
                {
                    "name": r.name,
                    "participants": [
                        {"entity": e, "cardinality": c.value} for e, c in r.participants
                    ],
                    "attributes": list(self.attributes_of(r.name)),
                }
                for r in self.relationships
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Schema":
        _reject_unknown(data, {"entities", "relationships"}, "schema")
        entities, rels, attrs = [], [], []
        for ent in data.get("entities", []):
            _reject_unknown(ent, {"name", "attributes"}, "entity")
            entities.append(ent["name"])
            if ent.get("attributes"):
                attrs.append((ent["name"], tuple(ent["attributes"])))
        for rel in data.get("relationships", []):
            _reject_unknown(rel, {"name", "participants", "attributes"}, "relationship")
            parts = []
            for p in rel["participants"]:
                _reject_unknown(p, {"entity", "cardinality"}, "participant")
                try:
                    parts.append((p["entity"], Cardinality(p["cardinality"])))
                except ValueError:
                    raise RelDSepError(
                        "PARSE_ERROR", f"bad cardinality {p['cardinality']!r}"
                    ) from None
            rels.append(RelationshipClass(rel["name"], tuple(parts)))
            if rel.get("attributes"):
                attrs.append((rel["name"], tuple(rel["attributes"])))
        return cls(tuple(entities), tuple(rels), tuple(attrs))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Schema":
        return cls.from_dict(_loads(text))


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise RelDSepError("PARSE_ERROR", str(exc)) from None


def _reject_unknown(obj: Mapping, allowed: set[str], what: str) -> None:
    if not isinstance(obj, Mapping):
        raise RelDSepError("PARSE_ERROR", f"{what} must be a JSON object")
    extra = set(obj) - allowed
    if extra:
        raise RelDSepError("PARSE_ERROR", f"unknown {what} keys: {sorted(extra)}")


def validate_schema(schema: Schema) -> list[Violation]:
    out: list[Violation] = []
    names = list(schema.entities) + [r.name for r in schema.relationships]
    for name, count in sorted(Counter(names).items()):
        if count > 1:
            out.append(Violation("DUPLICATE_ITEM_CLASS", f"{name} declared {count} times"))
    entities = set(schema.entities)
    for rel in schema.relationships:
        if rel.arity < 2:
            out.append(Violation("ARITY", f"{rel.name} has {rel.arity} participant(s)"))
        for ent, card in rel.participants:
            if ent not in entities:
                out.append(Violation("UNKNOWN_PARTICIPANT", f"{rel.name} names unknown entity {ent}"))
        for ent, count in sorted(Counter(rel.entities).items()):
            if count > 1:
                out.append(Violation("SELF_RELATIONSHIP", f"{rel.name} lists {ent} {count} times"))
    declared = set(names)
    seen_attr_classes = Counter(cls for cls, _ in schema.attributes)
    for cls, count in sorted(seen_attr_classes.items()):
        if cls not in declared:
            out.append(Violation("UNKNOWN_CLASS", f"attributes declared for unknown class {cls}"))
    for cls in sorted(declared):
        for attr, count in sorted(Counter(schema.attributes_of(cls)).items()):
            if count > 1:
                out.append(Violation("DUPLICATE_ATTRIBUTE", f"{cls}.{attr} declared {count} times"))
    return out


@dataclass(frozen=True)
class Skeleton:
    """Item instances per class plus relationship participation links.

    ``links`` maps each relationship instance id to the entity instance ids
    that participate in it, positionally matching the relationship's
    participants in the schema.
    """

    instances: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    links: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "instances", {k: tuple(v) for k, v in self.instances.items()}
        )
        object.__setattr__(self, "links", {k: tuple(v) for k, v in self.links.items()})

    @cached_property
    def class_of(self) -> dict[str, str]:
        return {i: cls for cls, ids in self.instances.items() for i in ids}

    @cached_property
    def _adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = defaultdict(list)
        for rid, ents in self.links.items():
            for e in ents:
                adj[rid].append(e)
                adj[e].append(rid)
        return adj

    def neighbors(self, instance: str) -> list[str]:
        return self._adjacency.get(instance, [])

    def of_class(self, item_class: str) -> tuple[str, ...]:
        return self.instances.get(item_class, ())

    def num_instances(self) -> int:
        return sum(len(v) for v in self.instances.values())

    def num_links(self) -> int:
        return sum(len(v) for v in self.links.values())

    def to_dict(self) -> dict:
        return {
            "instances": {k: list(v) for k, v in sorted(self.instances.items())},
            "links": {k: list(v) for k, v in sorted(self.links.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Skeleton":
        _reject_unknown(data, {"instances", "links"}, "skeleton")
        return cls(dict(data.get("instances", {})), dict(data.get("links", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Skeleton":
        return cls.from_dict(_loads(text))


def validate_skeleton(schema: Schema, skeleton: Skeleton) -> list[Violation]:
    """Check a skeleton against the constraints of its schema.

    Raises ``UNKNOWN_CLASS`` if the skeleton uses a class the schema lacks;
    every other problem is reported as a :class:`Violation`.
    """
    for cls in skeleton.instances:
        if not schema.has_class(cls):
            raise RelDSepError("UNKNOWN_CLASS", f"skeleton uses unknown class {cls!r}")
    out: list[Violation] = []
    counts = Counter(i for ids in skeleton.instances.values() for i in ids)
    for iid, n in sorted(counts.items()):
        if n > 1:
            out.append(Violation("DUPLICATE_INSTANCE", f"instance id {iid} used {n} times"))
    class_of = skeleton.class_of
    for rid in sorted(skeleton.links):
        if class_of.get(rid) is None or not schema.is_relationship(class_of[rid]):
            out.append(Violation("UNKNOWN_INSTANCE", f"links given for non-relationship {rid}"))
    # per (entity instance, relationship class) participation counts
    participation: Counter = Counter()
    for rel in schema.relationships:
        for rid in skeleton.of_class(rel.name):
            ents = skeleton.links.get(rid)
            if ents is None:
                out.append(Violation("MISSING_LINKS", f"{rid} has no participants"))
                continue
            if len(ents) != rel.arity:
                out.append(
                    Violation("ARITY", f"{rid} links {len(ents)} entities, {rel.name} needs {rel.arity}")
                )
                continue
            for (ent_cls, _), eid in zip(rel.participants, ents):
                if class_of.get(eid) != ent_cls:
                    out.append(
                        Violation("DANGLING_REFERENCE", f"{rid} references {eid}, not an instance of {ent_cls}")
                    )
                else:
                    participation[(eid, rel.name)] += 1
    for (eid, rname), n in sorted(participation.items()):
        if n > 1 and schema.cardinality(rname, class_of[eid]) is Cardinality.ONE:
            out.append(
                Violation(
                    "CARDINALITY_VIOLATION",
                    f"{eid} participates in {n} instances of {rname} (cardinality ONE)",
                )
            )
    return out
