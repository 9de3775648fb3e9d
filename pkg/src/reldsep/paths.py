"""Relational paths, terminal sets and the ``extend`` operation.

Terminal sets use bridge-burning semantics: while walking a path from a base
instance, an instance reached at any earlier level is never reached again.
The witness builders mint small skeletons in which given paths are realized.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import RelDSepError
from .schema import Cardinality, Schema, Skeleton

_NAME = r"[A-Za-z][A-Za-z0-9_-]*"
_PATH_RE = re.compile(rf"^\s*\[\s*({_NAME}(?:\s*,\s*{_NAME})*)\s*\]\s*$")


@dataclass(frozen=True, order=True)
class RelationalPath:
    items: tuple[str, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise RelDSepError("PARSE_ERROR", "relational path must be non-empty")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, *items: str) -> "RelationalPath":
        return cls(tuple(items))

    @property
    def base(self) -> str:
        return self.items[0]

    @property
    def terminal(self) -> str:
        return self.items[-1]

    @property
    def hops(self) -> int:
        return len(self.items) - 1

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, idx):
        return self.items[idx]

    def is_simple(self) -> bool:
        return len(set(self.items)) == len(self.items)

    def reverse(self) -> "RelationalPath":
        return RelationalPath(self.items[::-1])

    def sort_key(self) -> tuple:
        return (len(self.items), self.items)

    def __str__(self) -> str:
        return "[" + ", ".join(self.items) + "]"

    def __repr__(self) -> str:
        return f"RelationalPath({str(self)})"


def parse_path(text: str) -> RelationalPath:
    m = _PATH_RE.match(text)
    if not m:
        raise RelDSepError("PARSE_ERROR", f"cannot parse relational path {text!r}")
    return RelationalPath(tuple(s.strip() for s in m.group(1).split(",")))


def _as_items(path: RelationalPath | Sequence[str]) -> tuple[str, ...]:
    return path.items if isinstance(path, RelationalPath) else tuple(path)


def is_valid_path(schema: Schema, path: RelationalPath | Sequence[str]) -> bool:
    """True iff the sequence alternates entity/relationship classes with
    participation, has no [E, R, E] triple, and every [R, E, R] triple has
    card(R, E) = MANY."""
    items = _as_items(path)
    if not items:
        return False
    for name in items:
        schema.require_class(name)
    for a, b in zip(items, items[1:]):
        if schema.is_entity(a) == schema.is_entity(b):
            return False
        ent, rel = (a, b) if schema.is_entity(a) else (b, a)
        if ent not in schema.relationship(rel).entities:
            return False
    for a, b, c in zip(items, items[1:], items[2:]):
        if schema.is_entity(a):
            if a == c:
                return False
        elif a == c and schema.cardinality(a, b) is not Cardinality.MANY:
            return False
    return True


def _extends_validly(schema: Schema, items: tuple[str, ...], nxt: str) -> bool:
    """Incremental validity check for appending ``nxt`` to a valid path."""
    if len(items) >= 2 and items[-2] == nxt:
        if schema.is_entity(nxt):
            return False
        return schema.cardinality(nxt, items[-1]) is Cardinality.MANY
    return True


def terminal_set(
    skeleton: Skeleton,
    path: RelationalPath,
    base: str,
    *,
    bridge_burning: bool = True,
) -> frozenset[str]:
    """Instances of ``path.terminal`` reached from ``base`` along ``path``.

    With ``bridge_burning=False`` the exclusion of previously reached
    instances is skipped; that variant exists only to compare semantics.
    """
    if skeleton.class_of.get(base) != path.base:
        raise RelDSepError(
            "BASE_CLASS_MISMATCH", f"{base!r} is not an instance of {path.base}"
        )
    current = {base}
    seen = {base}
    class_of = skeleton.class_of
    for cls in path.items[1:]:
        nxt = set()
        for inst in current:
            for nb in skeleton.neighbors(inst):
                if class_of.get(nb) == cls:
                    nxt.add(nb)
        if bridge_burning:
            nxt -= seen
            seen |= nxt
        current = nxt
        if not current:
            break
    return frozenset(current)


def terminal_sets_by_prefix(
    schema: Schema,
    skeleton: Skeleton,
    base: str,
    max_hops: int,
) -> dict[RelationalPath, frozenset[str]]:
    """Terminal sets of every valid path from ``base``'s class up to ``max_hops``.

    Walks the path trie once so prefixes are shared; paths with empty
    terminal sets are included with an empty set.
    """
    out: dict[RelationalPath, frozenset[str]] = {}
    class_of = skeleton.class_of
    start = class_of[base]

    def walk(items: tuple[str, ...], current: frozenset[str], seen: frozenset[str]):
        out[RelationalPath(items)] = current
        if len(items) - 1 >= max_hops:
            return
        for nxt_cls in schema.neighbors(items[-1]):
            if not _extends_validly(schema, items, nxt_cls):
                continue
            nxt = set()
            for inst in current:
                for nb in skeleton.neighbors(inst):
                    if class_of.get(nb) == nxt_cls and nb not in seen:
                        nxt.add(nb)
            frozen = frozenset(nxt)
            walk(items + (nxt_cls,), frozen, seen | frozen)

    walk((start,), frozenset([base]), frozenset([base]))
    return out


def extend(p_orig: RelationalPath, p_ext: RelationalPath, schema: Schema) -> list[RelationalPath]:
    """Translate ``p_ext`` (rooted at the terminal of ``p_orig``) into paths
    rooted at the base of ``p_orig``.

    For every pivot ``i`` where ``reverse(p_orig)`` and ``p_ext`` share their
    first ``i`` items, the candidate is ``p_orig[1..n_o-i+1] + p_ext[i+1..n_e]``
    (1-based, inclusive); only valid candidates are kept, in pivot order.
    """
    if p_orig.terminal != p_ext.base:
        raise RelDSepError(
            "PATH_MISMATCH", f"{p_orig} ends at {p_orig.terminal}, {p_ext} starts at {p_ext.base}"
        )
    rev = p_orig.items[::-1]
    n_o, n_e = len(p_orig), len(p_ext)
    out: list[RelationalPath] = []
    for i in range(1, min(n_o, n_e) + 1):
        if rev[i - 1] != p_ext.items[i - 1]:
            break
        cand = p_orig.items[: n_o - i + 1] + p_ext.items[i:]
        if is_valid_path(schema, cand):
            path = RelationalPath(cand)
            if path not in out:
                out.append(path)
    return out


def enumerate_paths(schema: Schema, perspective: str, h: int) -> list[RelationalPath]:
    """All valid paths from ``perspective`` with at most ``h`` hops,
    breadth-first and lexicographic within each hop count."""
    schema.require_class(perspective)
    if h < 0:
        raise RelDSepError("BAD_HOPS", f"hop threshold must be >= 0, got {h}")
    level = [(perspective,)]
    out = [RelationalPath(level[0])]
    for _ in range(h):
        nxt = []
        for items in level:
            for cls in schema.neighbors(items[-1]):
                if _extends_validly(schema, items, cls):
                    nxt.append(items + (cls,))
        nxt.sort()
        out.extend(RelationalPath(p) for p in nxt)
        level = nxt
        if not level:
            break
    return out


def positionally_differ(p1: RelationalPath, p2: RelationalPath) -> bool:
    """True iff some index inside both paths holds different item classes.

    Pairs where one path is a prefix of the other never qualify: bridge
    burning makes their terminal sets disjoint in every skeleton.
    """
    return any(a != b for a, b in zip(p1.items, p2.items))


# ---------------------------------------------------------------------------
# witness construction


class _SkeletonBuilder:
    """Mints instances ``Class#k`` and assembles relationship participation."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.counters: dict[str, int] = defaultdict(int)
        self.instances: dict[str, list[str]] = defaultdict(list)
        # relationship instance -> {entity class: entity instance}
        self.parts: dict[str, dict[str, str]] = {}

    def mint(self, cls: str) -> str:
        self.counters[cls] += 1
        iid = f"{cls}#{self.counters[cls]}"
        self.instances[cls].append(iid)
        if self.schema.is_relationship(cls):
            self.parts[iid] = {}
        return iid

    def connect(self, rel_inst: str, ent_cls: str, ent_inst: str) -> None:
        slot = self.parts[rel_inst]
        prior = slot.get(ent_cls)
        if prior is not None and prior != ent_inst:
            raise RelDSepError(
                "WITNESS_CONFLICT", f"{rel_inst} already links {prior} for {ent_cls}"
            )
        slot[ent_cls] = ent_inst

    def add_chain(self, classes: Sequence[str], ids: Sequence[str]) -> None:
        for (c1, i1), (c2, i2) in zip(zip(classes, ids), zip(classes[1:], ids[1:])):
            if self.schema.is_relationship(c1):
                self.connect(i1, c2, i2)
            else:
                self.connect(i2, c1, i1)

    def build(self) -> Skeleton:
        links = {}
        # fillers are minted after all chain links are known
        for rid in list(self.parts):
            cls = rid.rsplit("#", 1)[0]
            rel = self.schema.relationship(cls)
            slot = self.parts[rid]
            for ent_cls in rel.entities:
                if ent_cls not in slot:
                    slot[ent_cls] = self.mint(ent_cls)
            links[rid] = tuple(slot[e] for e in rel.entities)
        return Skeleton({k: tuple(v) for k, v in self.instances.items()}, links)


def construct_nonempty_witness(schema: Schema, path: RelationalPath) -> tuple[Skeleton, str]:
    """One fresh instance per item-class occurrence on ``path``, plus filler
    entities for off-path participants.  The terminal set from the returned
    base is the single instance minted for the last position."""
    if not is_valid_path(schema, path):
        raise RelDSepError("INVALID_PATH", f"{path} is not a valid relational path")
    b = _SkeletonBuilder(schema)
    ids = [b.mint(c) for c in path.items]
    b.add_chain(path.items, ids)
    return b.build(), ids[0]


def _shared_chain_witness(
    schema: Schema, p1: RelationalPath, p2: RelationalPath, prefix: int, suffix: int
) -> tuple[Skeleton, str]:
    b = _SkeletonBuilder(schema)
    ids1 = [b.mint(c) for c in p1.items]
    n1, n2 = len(p1), len(p2)
    ids2 = []
    for t, cls in enumerate(p2.items):
        if t < prefix:
            ids2.append(ids1[t])
        elif t >= n2 - suffix:
            ids2.append(ids1[n1 - (n2 - t)])
        else:
            ids2.append(b.mint(cls))
    b.add_chain(p1.items, ids1)
    b.add_chain(p2.items, ids2)
    return b.build(), ids1[0]


def construct_overlap_witness(
    schema: Schema, p1: RelationalPath, p2: RelationalPath
) -> tuple[Skeleton, str]:
    """Skeleton and base where the terminal sets of ``p1`` and ``p2`` meet.

    The two paths share instances along their common prefix and common
    suffix; each divergent middle gets its own fresh instances.
    """
    from .schema import validate_skeleton

    if p1 == p2:
        raise RelDSepError("PATHS_IDENTICAL", str(p1))
    if p1.base != p2.base or p1.terminal != p2.terminal:
        raise RelDSepError("BASE_OR_TERMINAL_MISMATCH", f"{p1} vs {p2}")
    for p in (p1, p2):
        if not is_valid_path(schema, p):
            raise RelDSepError("INVALID_PATH", str(p))
    if not positionally_differ(p1, p2):
        raise RelDSepError(
            "NOT_INTERSECTABLE", f"{p1} and {p2} are prefix-related; their terminal sets never meet"
        )
    prefix = 0
    while p1.items[prefix] == p2.items[prefix]:
        prefix += 1
    max_suffix = 0
    while (
        max_suffix < min(len(p1), len(p2)) - prefix
        and p1.items[-1 - max_suffix] == p2.items[-1 - max_suffix]
    ):
        max_suffix += 1
    for suffix in range(max_suffix, 0, -1):
        try:
            skel, base = _shared_chain_witness(schema, p1, p2, prefix, suffix)
        except RelDSepError:
            continue
        if validate_skeleton(schema, skel):
            continue
        if terminal_set(skel, p1, base) & terminal_set(skel, p2, base):
            return skel, base
    raise RelDSepError("WITNESS_FAILED", f"no overlap witness built for {p1} and {p2}")


def construct_extend_witness(
    schema: Schema, p_orig: RelationalPath, p_ext: RelationalPath, target: RelationalPath
) -> tuple[Skeleton, str, str, str]:
    """Realize one ``extend`` result: returns ``(skeleton, i_1, i_j, i_k)`` with
    ``i_k`` in ``target|i_1``, ``i_j`` in ``p_orig|i_1`` and ``i_k`` in
    ``p_ext|i_j``.

    ``p_ext`` walks back over ``p_orig``'s own instances for the pivot
    overlap, then continues on fresh instances.
    """
    from .schema import validate_skeleton

    n_o = len(p_orig)
    for pivot in range(1, min(n_o, len(p_ext)) + 1):
        cand = p_orig.items[: n_o - pivot + 1] + p_ext.items[pivot:]
        if cand != target.items:
            continue
        b = _SkeletonBuilder(schema)
        ids_o = [b.mint(c) for c in p_orig.items]
        ids_e = [ids_o[n_o - 1 - t] for t in range(pivot)]
        ids_e += [b.mint(c) for c in p_ext.items[pivot:]]
        b.add_chain(p_orig.items, ids_o)
        b.add_chain(p_ext.items, ids_e)
        skel = b.build()
        i1, ij, ik = ids_o[0], ids_o[-1], ids_e[-1]
        if (
            not validate_skeleton(schema, skel)
            and ik in terminal_set(skel, target, i1)
            and ij in terminal_set(skel, p_orig, i1)
            and ik in terminal_set(skel, p_ext, ij)
        ):
            return skel, i1, ij, ik
    raise RelDSepError("WITNESS_FAILED", f"{target} not realized from extend({p_orig}, {p_ext})")


def merge_skeletons(skeletons: Iterable[Skeleton]) -> Skeleton:
    """Disjoint union; ids must already be distinct across inputs."""
    instances: dict[str, list[str]] = defaultdict(list)
    links: dict[str, tuple[str, ...]] = {}
    for sk in skeletons:
        for cls, ids in sk.instances.items():
            instances[cls].extend(ids)
        links.update(sk.links)
    return Skeleton({k: tuple(v) for k, v in instances.items()}, links)
