"""Datatypes signatures and ground constructor trees.

A signature partitions its sorts into element sorts (opaque value carriers)
and structure sorts (built by constructors).  Selectors and testers are
derived from the constructor table.  Ground trees over an element carrier
set form the intended universe of the structure sorts; bounded enumeration
of those trees backs the brute-force oracle, and the deterministic tree
generators here are shared by the model constructions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Mapping, Union


class SignatureError(Exception):
    """A raw signature violates a structural invariant."""


class DuplicateName(SignatureError):
    pass


class UnknownSort(SignatureError):
    pass


class EmptyConstructorSet(SignatureError):
    def __init__(self, sort: str):
        super().__init__(f"struct sort {sort!r} has no constructors")
        self.sort = sort


class NotWellFounded(SignatureError):
    def __init__(self, sort: str):
        super().__init__(f"struct sort {sort!r} has no ground trees")
        self.sort = sort


class SortKind(Enum):
    ELEM = "elem"
    STRUCT = "struct"


@dataclass(frozen=True)
class SortRef:
    name: str
    kind: SortKind

    def __repr__(self) -> str:
        return f"{self.name}:{self.kind.value}"


@dataclass(frozen=True)
class ConstructorDecl:
    """A constructor with its named selector/argument-sort pairs."""

    name: str
    selectors: tuple[tuple[str, str], ...]
    result: str

    @property
    def arity(self) -> int:
        return len(self.selectors)

    @property
    def arg_sorts(self) -> tuple[str, ...]:
        return tuple(sort for _, sort in self.selectors)

    @property
    def is_nullary(self) -> bool:
        return not self.selectors


@dataclass(frozen=True)
class DatatypesSignature:
    """Sorts split into element/structure plus the constructor table.

    Immutable; derived lookup tables are cached on first use.  Run
    :func:`validate_signature` on raw input before trusting the lookups.
    """

    elem_sorts: tuple[str, ...]
    struct_sorts: tuple[str, ...]
    constructors: tuple[ConstructorDecl, ...]

    @cached_property
    def constructor(self) -> dict[str, ConstructorDecl]:
        return {c.name: c for c in self.constructors}

    @cached_property
    def constructors_of(self) -> dict[str, tuple[ConstructorDecl, ...]]:
        table: dict[str, tuple[ConstructorDecl, ...]] = {s: () for s in self.struct_sorts}
        for c in self.constructors:
            table[c.result] = table.get(c.result, ()) + (c,)
        return table

    @cached_property
    def selector(self) -> dict[str, tuple[ConstructorDecl, int]]:
        """Selector name to (owning constructor, 0-based argument position)."""
        table: dict[str, tuple[ConstructorDecl, int]] = {}
        for c in self.constructors:
            for i, (sel, _) in enumerate(c.selectors):
                table[sel] = (c, i)
        return table

    @cached_property
    def sort_kinds(self) -> dict[str, SortKind]:
        kinds = {s: SortKind.ELEM for s in self.elem_sorts}
        kinds.update({s: SortKind.STRUCT for s in self.struct_sorts})
        return kinds

    def has_sort(self, name: str) -> bool:
        return name in self.sort_kinds

    def sort_ref(self, name: str) -> SortRef:
        kind = self.sort_kinds.get(name)
        if kind is None:
            raise UnknownSort(f"sort {name!r} is not declared")
        return SortRef(name, kind)

    def is_elem(self, name: str) -> bool:
        return self.sort_kinds.get(name) is SortKind.ELEM

    def is_struct(self, name: str) -> bool:
        return self.sort_kinds.get(name) is SortKind.STRUCT

    def selector_target(self, selector: str) -> SortRef:
        ctor, i = self.selector[selector]
        return self.sort_ref(ctor.arg_sorts[i])


def validate_signature(sig: DatatypesSignature) -> DatatypesSignature:
    """Check all signature invariants; return the signature unchanged.

    Well-foundedness is decided by the least fixpoint of "inhabited":
    element sorts start inhabited, and a struct sort becomes inhabited once
    some constructor of it has all argument sorts inhabited.
    """
    seen: set[str] = set()
    for s in (*sig.elem_sorts, *sig.struct_sorts):
        if s in seen:
            raise DuplicateName(f"sort {s!r} declared twice")
        seen.add(s)

    fn_names: set[str] = set()
    for c in sig.constructors:
        if c.name in fn_names:
            raise DuplicateName(f"function symbol {c.name!r} declared twice")
        fn_names.add(c.name)
        for sel, arg_sort in c.selectors:
            if sel in fn_names:
                raise DuplicateName(f"function symbol {sel!r} declared twice")
            fn_names.add(sel)
            if arg_sort not in sig.sort_kinds:
                raise UnknownSort(
                    f"constructor {c.name!r}: argument sort {arg_sort!r} is not declared"
                )
        if c.result not in sig.struct_sorts:
            raise UnknownSort(
                f"constructor {c.name!r}: result sort {c.result!r} is not a declared struct sort"
            )

    for s in sig.struct_sorts:
        if not sig.constructors_of.get(s):
            raise EmptyConstructorSet(s)

    inhabited: set[str] = set(sig.elem_sorts)
    changed = True
    while changed:
        changed = False
        for c in sig.constructors:
            if c.result not in inhabited and all(a in inhabited for a in c.arg_sorts):
                inhabited.add(c.result)
                changed = True
    for s in sig.struct_sorts:
        if s not in inhabited:
            raise NotWellFounded(s)
    return sig


class SortClass(Enum):
    FINITE = "finite"
    INDUCTIVE = "inductive"


def classify_sorts(sig: DatatypesSignature) -> dict[str, SortClass]:
    """Split struct sorts into finite and inductive.

    A struct sort has finitely many ground trees over the canonical
    one-element carriers iff every constructor of it has all struct-sorted
    arguments already known finite; computed as a least fixpoint.
    """
    finite: set[str] = set()
    changed = True
    while changed:
        changed = False
        for s in sig.struct_sorts:
            if s in finite:
                continue
            if all(
                all(a in finite or sig.is_elem(a) for a in c.arg_sorts)
                for c in sig.constructors_of[s]
            ):
                finite.add(s)
                changed = True
    return {
        s: SortClass.FINITE if s in finite else SortClass.INDUCTIVE
        for s in sig.struct_sorts
    }


# ---------------------------------------------------------------------------
# Ground trees


@dataclass(frozen=True)
class ElemValue:
    """The k-th element of an element sort's carrier."""

    sort: str
    index: int

    def __repr__(self) -> str:
        return f"@{self.sort}!{self.index}"


@dataclass(frozen=True)
class Node:
    constructor: str
    children: tuple["Tree", ...] = ()

    def __repr__(self) -> str:
        if not self.children:
            return self.constructor
        return f"{self.constructor}({', '.join(map(repr, self.children))})"


Tree = Union[ElemValue, Node]


def tree_depth(t: Tree) -> int:
    if isinstance(t, ElemValue):
        return 0
    return 1 + max((tree_depth(c) for c in t.children), default=0)


def tree_sort(sig: DatatypesSignature, t: Tree) -> str:
    if isinstance(t, ElemValue):
        return t.sort
    return sig.constructor[t.constructor].result


def tree_elems(t: Tree) -> Iterator[ElemValue]:
    if isinstance(t, ElemValue):
        yield t
    else:
        for c in t.children:
            yield from tree_elems(c)


def check_tree(sig: DatatypesSignature, t: Tree) -> str:
    """Verify sort-correctness recursively; return the tree's sort name."""
    if isinstance(t, ElemValue):
        if not sig.is_elem(t.sort):
            raise UnknownSort(f"{t!r}: {t.sort!r} is not an element sort")
        return t.sort
    decl = sig.constructor.get(t.constructor)
    if decl is None:
        raise UnknownSort(f"unknown constructor {t.constructor!r}")
    if len(t.children) != decl.arity:
        raise SignatureError(f"{t!r}: expected {decl.arity} children")
    for child, expected in zip(t.children, decl.arg_sorts):
        if check_tree(sig, child) != expected:
            raise SignatureError(f"{t!r}: child {child!r} is not of sort {expected!r}")
    return decl.result


def tree_key(t: Tree):
    """Total deterministic order on trees: by depth, then size, then shape."""
    if isinstance(t, ElemValue):
        return (0, 0, (0, t.sort, t.index))
    depth = tree_depth(t)
    size = sum(1 for _ in _walk(t))
    return (depth, size, _shape_key(t))


def _walk(t: Tree) -> Iterator[Tree]:
    yield t
    if isinstance(t, Node):
        for c in t.children:
            yield from _walk(c)


def _shape_key(t: Tree):
    if isinstance(t, ElemValue):
        return (0, t.sort, t.index)
    return (1, t.constructor, tuple(_shape_key(c) for c in t.children))


def canonical_elem_domain(sig: DatatypesSignature) -> dict[str, tuple[ElemValue, ...]]:
    """One canonical element per element sort (the minimal carrier set)."""
    return {s: (ElemValue(s, 0),) for s in sig.elem_sorts}


def enumerate_trees(
    sig: DatatypesSignature,
    sort: str,
    depth_bound: int,
    elem_domain: Mapping[str, Iterable[ElemValue]],
) -> frozenset[Tree]:
    """All trees of the given sort in the depth_bound-th stratum.

    Stratum 0 is the element carrier for element sorts and empty for struct
    sorts; each later stratum adds every constructor application whose
    children come from the previous one.
    """
    current: dict[str, set[Tree]] = {
        s: set(elem_domain.get(s, ())) for s in sig.elem_sorts
    }
    current.update({s: set() for s in sig.struct_sorts})
    for _ in range(depth_bound):
        nxt = {s: set(ts) for s, ts in current.items()}
        for c in sig.constructors:
            pools = [current[a] for a in c.arg_sorts]
            for combo in product(*pools):
                nxt[c.result].add(Node(c.name, tuple(combo)))
        current = nxt
    if sort not in current:
        raise UnknownSort(f"sort {sort!r} is not declared")
    return frozenset(current[sort])


def sorted_trees(trees: Iterable[Tree]) -> list[Tree]:
    return sorted(trees, key=tree_key)


def least_tree(
    sig: DatatypesSignature,
    sort: str,
    elem_domain: Mapping[str, Iterable[ElemValue]],
) -> Tree:
    """The canonical least ground tree of a sort over the given carriers.

    Deterministic: minimal depth wins, declaration order breaks ties, and
    element positions take the least-index carrier value.
    """
    rep: dict[str, Tree] = {}
    for s in sig.elem_sorts:
        values = sorted(elem_domain.get(s, ()), key=lambda v: v.index)
        if values:
            rep[s] = values[0]
    changed = True
    while changed:
        changed = False
        for c in sig.constructors:
            if any(a not in rep for a in c.arg_sorts):
                continue
            cand = Node(c.name, tuple(rep[a] for a in c.arg_sorts))
            if c.result not in rep or tree_depth(cand) < tree_depth(rep[c.result]):
                rep[c.result] = cand
                changed = True
    if sort not in rep:
        raise NotWellFounded(sort) if sig.is_struct(sort) else UnknownSort(sort)
    return rep[sort]


def deep_tree(
    sig: DatatypesSignature,
    sort: str,
    above: int,
    elem_domain: Mapping[str, Iterable[ElemValue]],
) -> Tree:
    """A deterministic ground tree of the sort with depth strictly above `above`.

    Grows a per-sort representative through the deepening constructor spine;
    requires the sort to admit unboundedly deep trees (an inductive sort).
    """
    rep: dict[str, Tree] = {}
    for s in sig.elem_sorts:
        values = sorted(elem_domain.get(s, ()), key=lambda v: v.index)
        if values:
            rep[s] = values[0]
    for s in sig.struct_sorts:
        try:
            rep[s] = least_tree(sig, s, elem_domain)
        except SignatureError:
            pass
    for _ in range(above + len(sig.struct_sorts) + 2):
        if sort in rep and tree_depth(rep[sort]) > above:
            return rep[sort]
        depths = {s: tree_depth(t) for s, t in rep.items()}
        grown = dict(rep)
        progressed = False
        for c in sig.constructors:
            if any(a not in rep for a in c.arg_sorts):
                continue
            cand_depth = 1 + max((depths[a] for a in c.arg_sorts), default=0)
            if c.result not in grown or cand_depth > tree_depth(grown[c.result]):
                grown[c.result] = Node(c.name, tuple(rep[a] for a in c.arg_sorts))
                progressed = True
        if not progressed:
            break
        rep = grown
    if sort in rep and tree_depth(rep[sort]) > above:
        return rep[sort]
    raise ValueError(f"sort {sort!r} has no tree of depth above {above}")
