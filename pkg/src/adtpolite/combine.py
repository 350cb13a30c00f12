"""Polite combination with a non-stably-infinite element-sort theory.

The datatype side is witnessed first (so its fresh element variables
participate in the shared guessing), then every arrangement of the shared
element variables is tried: the datatype side must accept the arrangement
through the reduction procedure and the partner theory through its own
decision callback.  Backends are synchronous, stateless and only ever see
conjunctions of flat (dis)equality literals over their sorts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Protocol, Sequence, runtime_checkable

from .formulas import (
    And,
    Apply,
    Eq,
    FlatLiteral,
    Formula,
    NameSource,
    Not,
    Or,
    ResourceOut,
    SortMismatch,
    TesterAtom,
    Term,
    Var,
    VarDiseq,
    VarEq,
    enumerate_arrangements,
    formula_vars,
    is_flat_literal,
    term_vars,
    to_flat_dnf,
)
from .reduction import Sat, solve_with_arrangements
from .signature import DatatypesSignature, SortKind
from .witness import wtn_combined, wtn_lift


@runtime_checkable
class TheoryBackend(Protocol):
    """Decision callback for conjunctions of flat literals over its sorts."""

    sorts: frozenset[str]

    def decide(self, literals: Sequence[FlatLiteral]) -> bool: ...


@dataclass(frozen=True)
class MixedProblem:
    datatype_part: Formula
    other_part: Formula
    shared_sorts: frozenset[str]


def merge_classes(literals: Iterable[FlatLiteral]) -> Optional[dict[Var, Var]]:
    """Union-find over equality literals; None if a disequality collapses.

    Returns the representative map when the literals are consistent.
    """
    parent: dict[Var, Var] = {}

    def find(v: Var) -> Var:
        parent.setdefault(v, v)
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    diseqs = []
    for lit in literals:
        if isinstance(lit, VarEq):
            a, b = find(lit.lhs), find(lit.rhs)
            if a != b:
                parent[a] = b
        elif isinstance(lit, VarDiseq):
            diseqs.append(lit)
        else:
            raise SortMismatch(f"backend literal is not a (dis)equality: {lit!r}")
    for lit in diseqs:
        if find(lit.lhs) == find(lit.rhs):
            return None
    return {v: find(v) for v in parent}


@dataclass(frozen=True)
class CardinalityBackend:
    """Satisfiable iff the merged classes are colorable within each bound."""

    bounds: Mapping[str, int]

    @property
    def sorts(self) -> frozenset[str]:
        return frozenset(self.bounds)

    def decide(self, literals: Sequence[FlatLiteral]) -> bool:
        reps = merge_classes(literals)
        if reps is None:
            return False
        classes: dict[str, list[Var]] = {}
        for rep in dict.fromkeys(reps.values()):
            classes.setdefault(rep.sort.name, []).append(rep)
        edges: dict[str, set[tuple[int, int]]] = {}
        for lit in literals:
            if isinstance(lit, VarDiseq):
                sort = lit.lhs.sort.name
                group = classes.get(sort, [])
                a = group.index(reps[lit.lhs])
                b = group.index(reps[lit.rhs])
                edges.setdefault(sort, set()).add((min(a, b), max(a, b)))
        for sort, bound in self.bounds.items():
            group = classes.get(sort, [])
            if not _colorable(len(group), edges.get(sort, set()), bound):
                return False
        return True


def _colorable(n: int, edges: set[tuple[int, int]], k: int) -> bool:
    if n <= k:
        return True
    adjacency: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b in edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    colors: dict[int, int] = {}

    def rec(i: int) -> bool:
        if i == n:
            return True
        used = {colors[j] for j in adjacency[i] if j in colors}
        top = min(k, max(colors.values(), default=-1) + 2)
        for c in range(top):
            if c in used:
                continue
            colors[i] = c
            if rec(i + 1):
                return True
            del colors[i]
        return False

    return rec(0)


def cardinality_backend(bounds: Mapping[str, int]) -> CardinalityBackend:
    return CardinalityBackend(dict(bounds))


def purify(
    phi: Formula,
    sig: DatatypesSignature,
    names: NameSource,
    foreign: Mapping[str, tuple[tuple[str, ...], str]] | None = None,
    backend_sorts: Iterable[str] | None = None,
) -> MixedProblem:
    """Split a mixed conjunction into single-signature parts.

    Cross-signature subterms are replaced by fresh shared element variables
    with defining equations on the owning side.  Foreign function symbols
    are given by name with (argument sorts, result sort); both theories may
    refer to shared element-sort variables freely.
    """
    foreign = dict(foreign or {})
    extra_dt: list[Formula] = []
    extra_other: list[Formula] = []

    def fn_owner(fn: str) -> str:
        if fn in sig.constructor or fn in sig.selector:
            return "dt"
        if fn in foreign:
            return "other"
        raise SortMismatch(f"unknown function symbol {fn!r}")

    def term_sort_name(t: Term) -> str:
        if isinstance(t, Var):
            return t.sort.name
        owner = fn_owner(t.fn)
        if owner == "dt":
            if t.fn in sig.constructor:
                return sig.constructor[t.fn].result
            return sig.selector_target(t.fn).name
        return foreign[t.fn][1]

    def cleanse(t: Term, owner: str) -> Term:
        if isinstance(t, Var):
            return t
        t_owner = fn_owner(t.fn)
        inner = Apply(t.fn, tuple(cleanse(a, t_owner) for a in t.args))
        if t_owner == owner:
            return inner
        sort_name = term_sort_name(t)
        if not sig.is_elem(sort_name):
            raise SortMismatch(
                f"cross-signature subterm {t!r} is not of a shared element sort"
            )
        u = names.fresh(sig.sort_ref(sort_name))
        (extra_dt if t_owner == "dt" else extra_other).append(Eq(u, inner))
        return u

    def atom_owner(f: Formula) -> str:
        fns: set[str] = set()
        non_sig_sort = False

        def scan_term(t: Term) -> None:
            nonlocal non_sig_sort
            if isinstance(t, Var):
                if not sig.has_sort(t.sort.name):
                    non_sig_sort = True
                return
            fns.add(t.fn)
            for a in t.args:
                scan_term(a)

        if isinstance(f, Eq):
            scan_term(f.lhs)
            scan_term(f.rhs)
        elif isinstance(f, TesterAtom):
            fns.add("")  # testers are datatype-only
            scan_term(f.arg)
            return "dt"
        elif is_flat_literal(f):
            return "dt"
        if any(fn in foreign for fn in fns):
            return "other"
        if non_sig_sort:
            return "other"
        return "dt"

    def conjuncts_of(f: Formula) -> list[Formula]:
        if isinstance(f, And):
            out: list[Formula] = []
            for i in f.items:
                out.extend(conjuncts_of(i))
            return out
        return [f]

    def rebuild(f: Formula, owner: str) -> Formula:
        if isinstance(f, Not):
            return Not(rebuild(f.item, owner))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(rebuild(i, owner) for i in f.items))
        if isinstance(f, Eq):
            return Eq(cleanse(f.lhs, owner), cleanse(f.rhs, owner))
        if isinstance(f, TesterAtom):
            return TesterAtom(f.constructor, cleanse(f.arg, owner))
        return f

    dt_parts: list[Formula] = []
    other_parts: list[Formula] = []

    def atoms_of(f: Formula) -> Iterable[Formula]:
        if isinstance(f, (And, Or)):
            for i in f.items:
                yield from atoms_of(i)
        elif isinstance(f, Not):
            yield from atoms_of(f.item)
        else:
            yield f

    for conjunct in conjuncts_of(phi):
        owners = {atom_owner(a) for a in atoms_of(conjunct)}
        if len(owners) > 1:
            raise SortMismatch(
                f"conjunct mixes both signatures inside one boolean context: {conjunct!r}"
            )
        owner = owners.pop() if owners else "dt"
        rebuilt = rebuild(conjunct, owner)
        (dt_parts if owner == "dt" else other_parts).append(rebuilt)

    dt_parts.extend(extra_dt)
    other_parts.extend(extra_other)
    if backend_sorts is None:
        shared = frozenset(sig.elem_sorts)
    else:
        shared = frozenset(backend_sorts) & frozenset(sig.elem_sorts)
    return MixedProblem(And(tuple(dt_parts)), And(tuple(other_parts)), shared)


def _other_literals(phi: Formula) -> tuple[FlatLiteral, ...]:
    out: list[FlatLiteral] = []

    def walk(f: Formula, positive: bool) -> None:
        if isinstance(f, And) and positive:
            for i in f.items:
                walk(i, positive)
        elif isinstance(f, Not):
            walk(f.item, not positive)
        elif isinstance(f, Eq) and isinstance(f.lhs, Var) and isinstance(f.rhs, Var):
            out.append(VarEq(f.lhs, f.rhs) if positive else VarDiseq(f.lhs, f.rhs))
        elif isinstance(f, VarEq):
            out.append(f if positive else VarDiseq(f.lhs, f.rhs))
        elif isinstance(f, VarDiseq):
            out.append(f if positive else VarEq(f.lhs, f.rhs))
        else:
            raise SortMismatch(
                f"backend part must be a conjunction of variable (dis)equalities: {f!r}"
            )

    walk(phi, True)
    return tuple(out)


def combine_check(
    problem: MixedProblem,
    backend: TheoryBackend,
    sig: DatatypesSignature,
    names: NameSource,
    max_arrangements: int | None = None,
    max_guesses: int | None = None,
) -> bool:
    """Joint satisfiability of the datatype side and the backend theory.

    The witness runs before arranging, so its fresh element variables are
    part of the shared set; the backend is consulted first on each
    arrangement since its check is the cheaper one.
    """
    gamma = wtn_lift(problem.datatype_part, sig, names, base=wtn_combined)
    other_lits = _other_literals(problem.other_part)
    shared_vars: dict[Var, None] = {}
    for v in (*formula_vars(gamma), *formula_vars(problem.other_part)):
        if v.sort.name in problem.shared_sorts and v.sort.kind is SortKind.ELEM:
            shared_vars.setdefault(v)
    cubes = list(to_flat_dnf(gamma, sig, names))
    count = 0
    for arrangement in enumerate_arrangements(tuple(shared_vars)):
        count += 1
        if max_arrangements is not None and count > max_arrangements:
            raise ResourceOut(f"arrangement space exceeded {max_arrangements}")
        delta = arrangement.literals()
        if not backend.decide(other_lits + delta):
            continue
        for cube in cubes:
            combined = tuple(dict.fromkeys(cube + delta))
            result, _ = solve_with_arrangements(combined, sig, names, max_guesses)
            if isinstance(result, Sat):
                return True
    return False
