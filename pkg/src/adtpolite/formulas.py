"""Terms, flat literals, quantifier-free formulas, and their evaluation.

Flattening names every nested subterm with exactly one fresh variable
(hash-consed) so that all function applications occur positively at the
top level; flat DNF conversion then distributes lazily.  Arrangements
enumerate one equivalence relation per sort over a variable set, in
restricted-growth-string order.  Interpretations carry explicit finite
element domains and a completion table for selectors applied off their
constructor; evaluation implements the standard semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .signature import (
    DatatypesSignature,
    ElemValue,
    Node,
    SortKind,
    SortRef,
    Tree,
    least_tree,
)


class SortMismatch(Exception):
    pass


class NotACube(Exception):
    pass


class MissingAssignment(Exception):
    def __init__(self, var: "Var"):
        super().__init__(f"no value assigned to {var.name}")
        self.var = var


class MissingSelectorEntry(Exception):
    def __init__(self, selector: str, value: Tree, target_sort: str):
        super().__init__(f"no table entry for {selector} at {value!r}")
        self.selector = selector
        self.value = value
        self.target_sort = target_sort


class ResourceOut(Exception):
    """A configured search or output cap was exceeded."""


# ---------------------------------------------------------------------------
# Terms and formulas


@dataclass(frozen=True)
class Var:
    name: str
    sort: SortRef

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["Term", ...] = ()

    def __repr__(self) -> str:
        if not self.args:
            return self.fn
        return f"{self.fn}({', '.join(map(repr, self.args))})"


Term = Union[Var, Apply]


@dataclass(frozen=True)
class VarEq:
    lhs: Var
    rhs: Var


@dataclass(frozen=True)
class VarDiseq:
    lhs: Var
    rhs: Var


@dataclass(frozen=True)
class ConsEq:
    """x = c(y1, ..., yn) with variable arguments."""

    lhs: Var
    constructor: str
    args: tuple[Var, ...] = ()


@dataclass(frozen=True)
class SelEq:
    """y = s(x) for a selector s."""

    lhs: Var
    selector: str
    arg: Var


@dataclass(frozen=True)
class TesterLit:
    positive: bool
    constructor: str
    arg: Var


FlatLiteral = Union[VarEq, VarDiseq, ConsEq, SelEq, TesterLit]
FlatCube = tuple[FlatLiteral, ...]


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class TesterAtom:
    constructor: str
    arg: Term


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    item: "Formula"


Formula = Union[VarEq, VarDiseq, ConsEq, SelEq, TesterLit, Eq, TesterAtom, And, Or, Not]

_FLAT_TYPES = (VarEq, VarDiseq, ConsEq, SelEq, TesterLit)


def is_flat_literal(f: object) -> bool:
    return isinstance(f, _FLAT_TYPES)


def cube_formula(cube: Sequence[FlatLiteral]) -> Formula:
    return And(tuple(cube))


def literal_vars(lit: FlatLiteral) -> tuple[Var, ...]:
    if isinstance(lit, (VarEq, VarDiseq)):
        return (lit.lhs, lit.rhs)
    if isinstance(lit, ConsEq):
        return (lit.lhs, *lit.args)
    if isinstance(lit, SelEq):
        return (lit.lhs, lit.arg)
    if isinstance(lit, TesterLit):
        return (lit.arg,)
    raise TypeError(f"not a flat literal: {lit!r}")


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from term_vars(a)


def term_depth(t: Term) -> int:
    """Depth of a term, counting variables and element values as 0."""
    if isinstance(t, (Var, ElemValue)):
        return 0
    if isinstance(t, Node):
        return 1 + max((term_depth(c) for c in t.children), default=0)
    return 1 + max((term_depth(a) for a in t.args), default=0)


def formula_vars(phi: Formula | Sequence[FlatLiteral]) -> tuple[Var, ...]:
    """Free variables in first-occurrence order."""
    seen: dict[Var, None] = {}

    def visit_term(t: Term) -> None:
        for v in term_vars(t):
            seen.setdefault(v)

    def visit(f) -> None:
        if is_flat_literal(f):
            for v in literal_vars(f):
                seen.setdefault(v)
        elif isinstance(f, Eq):
            visit_term(f.lhs)
            visit_term(f.rhs)
        elif isinstance(f, TesterAtom):
            visit_term(f.arg)
        elif isinstance(f, (And, Or)):
            for i in f.items:
                visit(i)
        elif isinstance(f, Not):
            visit(f.item)
        else:
            raise TypeError(f"not a formula: {f!r}")

    if isinstance(phi, (tuple, list)):
        for lit in phi:
            visit(lit)
    else:
        visit(phi)
    return tuple(seen)


def vars_of_sort(phi, sort_name: str) -> tuple[Var, ...]:
    return tuple(v for v in formula_vars(phi) if v.sort.name == sort_name)


def check_flat_literal(lit: FlatLiteral, sig: DatatypesSignature) -> None:
    if isinstance(lit, (VarEq, VarDiseq)):
        if lit.lhs.sort != lit.rhs.sort:
            raise SortMismatch(f"{lit!r}: sides have different sorts")
    elif isinstance(lit, ConsEq):
        decl = sig.constructor.get(lit.constructor)
        if decl is None:
            raise SortMismatch(f"unknown constructor {lit.constructor!r}")
        if len(lit.args) != decl.arity:
            raise SortMismatch(f"{lit!r}: {lit.constructor} takes {decl.arity} arguments")
        if lit.lhs.sort.name != decl.result:
            raise SortMismatch(f"{lit!r}: lhs is not of sort {decl.result!r}")
        for a, expected in zip(lit.args, decl.arg_sorts):
            if a.sort.name != expected:
                raise SortMismatch(f"{lit!r}: argument {a!r} is not of sort {expected!r}")
    elif isinstance(lit, SelEq):
        info = sig.selector.get(lit.selector)
        if info is None:
            raise SortMismatch(f"unknown selector {lit.selector!r}")
        ctor, i = info
        if lit.arg.sort.name != ctor.result:
            raise SortMismatch(f"{lit!r}: argument is not of sort {ctor.result!r}")
        if lit.lhs.sort.name != ctor.arg_sorts[i]:
            raise SortMismatch(f"{lit!r}: lhs is not of sort {ctor.arg_sorts[i]!r}")
    elif isinstance(lit, TesterLit):
        decl = sig.constructor.get(lit.constructor)
        if decl is None:
            raise SortMismatch(f"unknown constructor {lit.constructor!r}")
        if lit.arg.sort.name != decl.result:
            raise SortMismatch(f"{lit!r}: argument is not of sort {decl.result!r}")
    else:
        raise NotACube(f"not a flat literal: {lit!r}")


def require_cube(cube: Sequence[FlatLiteral], sig: DatatypesSignature) -> FlatCube:
    out = []
    for lit in cube:
        if not is_flat_literal(lit):
            raise NotACube(f"not a flat literal: {lit!r}")
        check_flat_literal(lit, sig)
        out.append(lit)
    return tuple(out)


def negate_literal(lit: FlatLiteral) -> FlatLiteral:
    if isinstance(lit, VarEq):
        return VarDiseq(lit.lhs, lit.rhs)
    if isinstance(lit, VarDiseq):
        return VarEq(lit.lhs, lit.rhs)
    if isinstance(lit, TesterLit):
        return TesterLit(not lit.positive, lit.constructor, lit.arg)
    raise NotACube(f"cannot negate a function-application literal: {lit!r}")


# ---------------------------------------------------------------------------
# Fresh names


class NameSource:
    """Monotone fresh-variable supply; create one per solving context."""

    prefix = "_k!"

    def __init__(self, avoid: Iterable[str] = ()):
        self._next = 0
        for name in avoid:
            if name.startswith(self.prefix):
                tail = name[len(self.prefix):]
                if tail.isdigit():
                    self._next = max(self._next, int(tail) + 1)

    def fresh(self, sort: SortRef) -> Var:
        v = Var(f"{self.prefix}{self._next}", sort)
        self._next += 1
        return v


# ---------------------------------------------------------------------------
# Flattening and DNF


def flatten(
    phi: Formula, sig: DatatypesSignature, names: NameSource
) -> tuple[Formula, tuple[Var, ...]]:
    """Rewrite phi so every literal is flat; equisatisfiable over fresh vars.

    Each distinct nested application is named by one fresh variable whose
    defining equation is conjoined positively at the top level, so negations
    only ever apply to variable equalities and testers afterwards.
    """
    defs: list[FlatLiteral] = []
    cache: dict[Apply, Var] = {}
    fresh: list[Var] = []

    def app_sort(t: Apply) -> SortRef:
        if t.fn in sig.constructor:
            return sig.sort_ref(sig.constructor[t.fn].result)
        if t.fn in sig.selector:
            return sig.selector_target(t.fn)
        raise SortMismatch(f"unknown function symbol {t.fn!r}")

    def term_sort(t: Term) -> SortRef:
        return t.sort if isinstance(t, Var) else app_sort(t)

    def app_literal(x: Var, t: Apply) -> FlatLiteral:
        arg_vars = tuple(as_var(a) for a in t.args)
        if t.fn in sig.constructor:
            lit: FlatLiteral = ConsEq(x, t.fn, arg_vars)
        elif t.fn in sig.selector:
            if len(arg_vars) != 1:
                raise SortMismatch(f"selector {t.fn!r} takes one argument")
            lit = SelEq(x, t.fn, arg_vars[0])
        else:
            raise SortMismatch(f"unknown function symbol {t.fn!r}")
        check_flat_literal(lit, sig)
        return lit

    def name_app(t: Apply) -> Var:
        if t in cache:
            return cache[t]
        x = names.fresh(app_sort(t))
        cache[t] = x
        fresh.append(x)
        defs.append(app_literal(x, t))
        return x

    def as_var(t: Term) -> Var:
        return t if isinstance(t, Var) else name_app(t)

    def flat_eq(lhs: Term, rhs: Term, positive: bool) -> Formula:
        if term_sort(lhs) != term_sort(rhs):
            raise SortMismatch(f"equality between different sorts: {lhs!r} = {rhs!r}")
        if isinstance(lhs, Apply) and isinstance(rhs, Var):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, Var) and isinstance(rhs, Var):
            return VarEq(lhs, rhs)
        if isinstance(lhs, Apply):
            lhs = name_app(lhs)
        assert isinstance(rhs, Apply)
        if positive:
            return app_literal(lhs, rhs)
        return VarEq(lhs, name_app(rhs))

    def walk(f: Formula, positive: bool) -> Formula:
        if isinstance(f, And):
            return And(tuple(walk(i, positive) for i in f.items))
        if isinstance(f, Or):
            return Or(tuple(walk(i, positive) for i in f.items))
        if isinstance(f, Not):
            return Not(walk(f.item, not positive))
        if isinstance(f, Eq):
            return flat_eq(f.lhs, f.rhs, positive)
        if isinstance(f, TesterAtom):
            lit = TesterLit(True, f.constructor, as_var(f.arg))
            check_flat_literal(lit, sig)
            return lit
        if isinstance(f, (ConsEq, SelEq)):
            check_flat_literal(f, sig)
            if positive:
                return f
            # rebuild as a named application so the negation stays flat
            if isinstance(f, ConsEq):
                z = name_app(Apply(f.constructor, f.args))
            else:
                z = name_app(Apply(f.selector, (f.arg,)))
            return VarEq(f.lhs, z)
        if is_flat_literal(f):
            check_flat_literal(f, sig)
            return f
        raise TypeError(f"not a formula: {f!r}")

    body = walk(phi, True)
    if not defs:
        return body, ()
    return And((*defs, body)), tuple(fresh)


def to_flat_dnf(
    phi: Formula,
    sig: DatatypesSignature,
    names: NameSource,
    max_cubes: int | None = None,
) -> Iterator[FlatCube]:
    """Yield flat cubes whose disjunction is equivalent to flatten(phi)."""
    flat, _ = flatten(phi, sig, names)
    count = 0
    for cube in _dnf(flat, True):
        count += 1
        if max_cubes is not None and count > max_cubes:
            raise ResourceOut(f"flat DNF exceeded {max_cubes} cubes")
        yield tuple(dict.fromkeys(cube))


def _dnf(f: Formula, positive: bool) -> Iterator[tuple[FlatLiteral, ...]]:
    if isinstance(f, Not):
        yield from _dnf(f.item, not positive)
        return
    if isinstance(f, (And, Or)):
        conjunctive = isinstance(f, And) == positive
        if conjunctive:
            yield from _cross(f.items, positive)
        else:
            for item in f.items:
                yield from _dnf(item, positive)
        return
    if is_flat_literal(f):
        yield (f if positive else negate_literal(f),)
        return
    raise NotACube(f"formula was not flattened: {f!r}")


def _cross(items: tuple[Formula, ...], positive: bool) -> Iterator[tuple[FlatLiteral, ...]]:
    if not items:
        yield ()
        return
    for head in _dnf(items[0], positive):
        for rest in _cross(items[1:], positive):
            yield head + rest


# ---------------------------------------------------------------------------
# Arrangements


@dataclass(frozen=True)
class Arrangement:
    """One equivalence relation per sort over a variable set."""

    vars: tuple[Var, ...]
    blocks: tuple[tuple[Var, ...], ...]

    def literals(self) -> tuple[FlatLiteral, ...]:
        block_of = {v: i for i, b in enumerate(self.blocks) for v in b}
        groups: dict[str, list[Var]] = {}
        for v in self.vars:
            groups.setdefault(v.sort.name, []).append(v)
        out: list[FlatLiteral] = []
        for group in groups.values():
            for i, x in enumerate(group):
                for y in group[i + 1:]:
                    if block_of[x] == block_of[y]:
                        out.append(VarEq(x, y))
                    else:
                        out.append(VarDiseq(x, y))
        return tuple(out)

    def block_count(self) -> int:
        return len(self.blocks)


def set_partitions(items: Sequence) -> Iterator[tuple[tuple, ...]]:
    """All partitions of items, in restricted-growth-string order."""
    n = len(items)
    if n == 0:
        yield ()
        return

    def rec(i: int, top: int, code: list[int]) -> Iterator[tuple[tuple, ...]]:
        if i == n:
            blocks: list[list] = [[] for _ in range(top + 1)]
            for item, b in zip(items, code):
                blocks[b].append(item)
            yield tuple(tuple(b) for b in blocks)
            return
        for b in range(top + 2):
            code.append(b)
            yield from rec(i + 1, max(top, b), code)
            code.pop()

    yield from rec(1, 0, [0])


def enumerate_arrangements(variables: Sequence[Var]) -> Iterator[Arrangement]:
    """Every arrangement of the variable set exactly once.

    Sorts are grouped by first occurrence; per sort the partitions come in
    restricted-growth order, and cross-sort equalities are never produced.
    """
    vs = tuple(dict.fromkeys(variables))
    groups: dict[str, list[Var]] = {}
    for v in vs:
        groups.setdefault(v.sort.name, []).append(v)
    per_sort = [list(set_partitions(group)) for group in groups.values()]
    for combo in product(*per_sort):
        blocks = tuple(block for part in combo for block in part)
        yield Arrangement(vs, blocks)


# ---------------------------------------------------------------------------
# Interpretations and evaluation


@dataclass
class Interpretation:
    """Finite element domains, a variable assignment, and selector tables.

    Struct domains are implicit (all sort-correct trees over the element
    domains); the completion table is the only non-standard freedom.  With
    default_selectors set, missing table entries are filled on demand with
    the least value of the target sort and materialized in the table.
    """

    sig: DatatypesSignature
    elem_domains: dict[str, tuple[ElemValue, ...]]
    assignment: dict[Var, Tree]
    selector_table: dict[tuple[str, Tree], Tree] = field(default_factory=dict)
    default_selectors: bool = False

    def value(self, var: Var) -> Tree:
        try:
            return self.assignment[var]
        except KeyError:
            raise MissingAssignment(var) from None

    def copy(self) -> "Interpretation":
        return Interpretation(
            self.sig,
            dict(self.elem_domains),
            dict(self.assignment),
            dict(self.selector_table),
            self.default_selectors,
        )


def default_selector_value(interp: Interpretation, selector: str) -> Tree:
    target = interp.sig.selector_target(selector)
    if target.kind is SortKind.ELEM:
        domain = interp.elem_domains.get(target.name, ())
        if not domain:
            raise MissingSelectorEntry(selector, Node("?"), target.name)
        return min(domain, key=lambda v: v.index)
    return least_tree(interp.sig, target.name, interp.elem_domains)


def eval_term(interp: Interpretation, t: Term) -> Tree:
    if isinstance(t, Var):
        return interp.value(t)
    sig = interp.sig
    if t.fn in sig.constructor:
        return Node(t.fn, tuple(eval_term(interp, a) for a in t.args))
    if t.fn in sig.selector:
        ctor, i = sig.selector[t.fn]
        value = eval_term(interp, t.args[0])
        if isinstance(value, Node) and value.constructor == ctor.name:
            return value.children[i]
        key = (t.fn, value)
        if key in interp.selector_table:
            return interp.selector_table[key]
        if interp.default_selectors:
            result = default_selector_value(interp, t.fn)
            interp.selector_table[key] = result
            return result
        raise MissingSelectorEntry(t.fn, value, sig.selector_target(t.fn).name)
    raise SortMismatch(f"unknown function symbol {t.fn!r}")


def eval_formula(interp: Interpretation, phi: Formula) -> bool:
    if isinstance(phi, And):
        return all(eval_formula(interp, i) for i in phi.items)
    if isinstance(phi, Or):
        return any(eval_formula(interp, i) for i in phi.items)
    if isinstance(phi, Not):
        return not eval_formula(interp, phi.item)
    if isinstance(phi, VarEq):
        return interp.value(phi.lhs) == interp.value(phi.rhs)
    if isinstance(phi, VarDiseq):
        return interp.value(phi.lhs) != interp.value(phi.rhs)
    if isinstance(phi, ConsEq):
        expected = Node(phi.constructor, tuple(interp.value(a) for a in phi.args))
        return interp.value(phi.lhs) == expected
    if isinstance(phi, SelEq):
        return interp.value(phi.lhs) == eval_term(interp, Apply(phi.selector, (phi.arg,)))
    if isinstance(phi, TesterLit):
        value = interp.value(phi.arg)
        holds = isinstance(value, Node) and value.constructor == phi.constructor
        return holds == phi.positive
    if isinstance(phi, Eq):
        return eval_term(interp, phi.lhs) == eval_term(interp, phi.rhs)
    if isinstance(phi, TesterAtom):
        value = eval_term(interp, phi.arg)
        return isinstance(value, Node) and value.constructor == phi.constructor
    raise TypeError(f"not a formula: {phi!r}")


def alpha_equivalent(f1: Formula, f2: Formula, fixed: Iterable[Var]) -> bool:
    """Structural equality up to a bijective renaming of non-fixed variables."""
    anchored = set(fixed)
    fwd: dict[Var, Var] = {}
    bwd: dict[Var, Var] = {}

    def match_var(a: Var, b: Var) -> bool:
        if a in anchored or b in anchored:
            return a == b
        if a.sort != b.sort:
            return False
        if a in fwd:
            return fwd[a] == b
        if b in bwd:
            return False
        fwd[a] = b
        bwd[b] = a
        return True

    def match_term(a: Term, b: Term) -> bool:
        if isinstance(a, Var) and isinstance(b, Var):
            return match_var(a, b)
        if isinstance(a, Apply) and isinstance(b, Apply):
            return (
                a.fn == b.fn
                and len(a.args) == len(b.args)
                and all(match_term(x, y) for x, y in zip(a.args, b.args))
            )
        return False

    def match(a: Formula, b: Formula) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, (And, Or)):
            return len(a.items) == len(b.items) and all(
                match(x, y) for x, y in zip(a.items, b.items)
            )
        if isinstance(a, Not):
            return match(a.item, b.item)
        if isinstance(a, (VarEq, VarDiseq)):
            return match_var(a.lhs, b.lhs) and match_var(a.rhs, b.rhs)
        if isinstance(a, ConsEq):
            return (
                a.constructor == b.constructor
                and match_var(a.lhs, b.lhs)
                and len(a.args) == len(b.args)
                and all(match_var(x, y) for x, y in zip(a.args, b.args))
            )
        if isinstance(a, SelEq):
            return (
                a.selector == b.selector
                and match_var(a.lhs, b.lhs)
                and match_var(a.arg, b.arg)
            )
        if isinstance(a, TesterLit):
            return (
                a.positive == b.positive
                and a.constructor == b.constructor
                and match_var(a.arg, b.arg)
            )
        if isinstance(a, Eq):
            return match_term(a.lhs, b.lhs) and match_term(a.rhs, b.rhs)
        if isinstance(a, TesterAtom):
            return a.constructor == b.constructor and match_term(a.arg, b.arg)
        raise TypeError(f"not a formula: {a!r}")

    return match(f1, f2)
