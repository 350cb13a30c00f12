"""Witness transformations for cubes of flat literals.

The inductive transformation guesses constructors for variables whose
construction is not explicit: one case split per selector literal, a forced
construction per positive tester, the complementary split per negative
tester, and a trivial identity for every element sort missing from the
input.  The finite transformation instead constructs every finite-sorted
struct variable down to element variables, to a fixpoint.  The combined
transformation runs the inductive pass treating finite sorts like element
sorts, then the finite pass.

All guess conditions are evaluated against the original input cube, rules
fire per literal in input order, and constructor alternatives appear in
declaration order, so outputs are deterministic up to the fresh-name
counter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, Union

from .formulas import (
    And,
    ConsEq,
    FlatCube,
    FlatLiteral,
    Formula,
    NameSource,
    Or,
    SelEq,
    TesterLit,
    Var,
    VarEq,
    formula_vars,
    is_flat_literal,
    literal_vars,
    require_cube,
    to_flat_dnf,
)
from .signature import DatatypesSignature, SortClass, classify_sorts

ORIGIN_INPUT = "input"
ORIGIN_SELECTOR = "selector-guess"
ORIGIN_TESTER_POS = "tester-pos"
ORIGIN_TESTER_NEG = "tester-neg"
ORIGIN_ELEM = "elem-identity"
ORIGIN_FINITE = "finite-guess"

WitnessConjunct = Union[FlatLiteral, Or]


class NonFiniteSort(Exception):
    def __init__(self, sort: str):
        super().__init__(f"struct sort {sort!r} is inductive")
        self.sort = sort


@dataclass(frozen=True)
class WitnessOutput:
    conjuncts: tuple[WitnessConjunct, ...]
    origins: tuple[str, ...]
    fresh_vars: tuple[Var, ...]

    @property
    def formula(self) -> Formula:
        return And(self.conjuncts)

    def added(self) -> Iterator[tuple[WitnessConjunct, str]]:
        for conjunct, origin in zip(self.conjuncts, self.origins):
            if origin != ORIGIN_INPUT:
                yield conjunct, origin


def _conjunct_vars(c: WitnessConjunct) -> Iterator[Var]:
    if isinstance(c, Or):
        for option in c.items:
            yield from literal_vars(option)
    else:
        yield from literal_vars(c)


def _guess(
    x: Var,
    decl,
    sig: DatatypesSignature,
    names: NameSource,
    pinned: tuple[int, Var] | None = None,
) -> ConsEq:
    args = []
    for k, sort_name in enumerate(decl.arg_sorts):
        if pinned is not None and k == pinned[0]:
            args.append(pinned[1])
        else:
            args.append(names.fresh(sig.sort_ref(sort_name)))
    return ConsEq(x, decl.name, tuple(args))


def _witness(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    names: NameSource,
    pass1_sorts: frozenset[str],
    identity_sorts: tuple[str, ...],
    pass2_sorts: tuple[str, ...],
) -> WitnessOutput:
    cube = require_cube(cube, sig)
    conjuncts: list[WitnessConjunct] = list(cube)
    origins: list[str] = [ORIGIN_INPUT] * len(cube)

    constructed = {lit.lhs for lit in cube if isinstance(lit, ConsEq)}
    by_ctor = {(lit.lhs, lit.constructor) for lit in cube if isinstance(lit, ConsEq)}

    def add(options: list[ConsEq], origin: str) -> None:
        conjuncts.append(options[0] if len(options) == 1 else Or(tuple(options)))
        origins.append(origin)

    for lit in cube:
        if isinstance(lit, SelEq):
            ctor, i = sig.selector[lit.selector]
            if ctor.result not in pass1_sorts:
                continue
            if lit.arg in constructed:
                continue
            options = [
                _guess(lit.arg, d, sig, names, pinned=(i, lit.lhs) if d.name == ctor.name else None)
                for d in sig.constructors_of[ctor.result]
            ]
            add(options, ORIGIN_SELECTOR)
        elif isinstance(lit, TesterLit) and lit.positive:
            decl = sig.constructor[lit.constructor]
            if decl.result not in pass1_sorts:
                continue
            if (lit.arg, decl.name) in by_ctor:
                continue
            add([_guess(lit.arg, decl, sig, names)], ORIGIN_TESTER_POS)
        elif isinstance(lit, TesterLit):
            decl = sig.constructor[lit.constructor]
            if decl.result not in pass1_sorts:
                continue
            others = [d for d in sig.constructors_of[decl.result] if d.name != decl.name]
            if any((lit.arg, d.name) in by_ctor for d in others):
                continue
            options = [_guess(lit.arg, d, sig, names) for d in others]
            if not options:
                conjuncts.append(Or(()))
                origins.append(ORIGIN_TESTER_NEG)
            else:
                add(options, ORIGIN_TESTER_NEG)

    present = {v.sort.name for lit in cube for v in literal_vars(lit)}
    for sort_name in identity_sorts:
        if sort_name in present:
            continue
        v = names.fresh(sig.sort_ref(sort_name))
        conjuncts.append(VarEq(v, v))
        origins.append(ORIGIN_ELEM)

    if pass2_sorts:
        finite = set(pass2_sorts)
        top_level_constructed = {
            c.lhs for c in conjuncts if isinstance(c, ConsEq)
        }
        queue: list[Var] = []
        enqueued: set[Var] = set()
        for c in conjuncts:
            for v in _conjunct_vars(c):
                if v.sort.name in finite and v not in enqueued:
                    enqueued.add(v)
                    queue.append(v)
        guessed: set[Var] = set()
        k = 0
        while k < len(queue):
            x = queue[k]
            k += 1
            if x in top_level_constructed or x in guessed:
                continue
            options = [_guess(x, d, sig, names) for d in sig.constructors_of[x.sort.name]]
            guessed.add(x)
            add(options, ORIGIN_FINITE)
            for opt in options:
                for a in opt.args:
                    if a.sort.name in finite and a not in enqueued:
                        enqueued.add(a)
                        queue.append(a)

    input_vars = set()
    for lit in cube:
        input_vars.update(literal_vars(lit))
    fresh: dict[Var, None] = {}
    for c in conjuncts:
        for v in _conjunct_vars(c):
            if v not in input_vars:
                fresh.setdefault(v)
    return WitnessOutput(tuple(conjuncts), tuple(origins), tuple(fresh))


def wtn_inductive(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature, names: NameSource
) -> WitnessOutput:
    """Constructor guessing for signatures whose struct sorts are inductive."""
    return _witness(
        cube,
        sig,
        names,
        pass1_sorts=frozenset(sig.struct_sorts),
        identity_sorts=sig.elem_sorts,
        pass2_sorts=(),
    )


def wtn_finite(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature, names: NameSource
) -> WitnessOutput:
    """Construct every struct variable down to elements; all sorts finite."""
    classes = classify_sorts(sig)
    for sort_name in sig.struct_sorts:
        if classes[sort_name] is SortClass.INDUCTIVE:
            raise NonFiniteSort(sort_name)
    return _witness(
        cube,
        sig,
        names,
        pass1_sorts=frozenset(),
        identity_sorts=(),
        pass2_sorts=sig.struct_sorts,
    )


def wtn_combined(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature, names: NameSource
) -> WitnessOutput:
    """Inductive pass with finite sorts treated as elements, then finite pass."""
    classes = classify_sorts(sig)
    inductive = tuple(s for s in sig.struct_sorts if classes[s] is SortClass.INDUCTIVE)
    finite = tuple(s for s in sig.struct_sorts if classes[s] is SortClass.FINITE)
    return _witness(
        cube,
        sig,
        names,
        pass1_sorts=frozenset(inductive),
        identity_sorts=(*sig.elem_sorts, *finite),
        pass2_sorts=finite,
    )


def wtn_lift(
    phi: Formula,
    sig: DatatypesSignature,
    names: NameSource,
    base: Callable[[Sequence[FlatLiteral], DatatypesSignature, NameSource], WitnessOutput]
    | None = None,
) -> Formula:
    """Apply a cube-level witness across the flat DNF of a formula.

    Fresh variables are distinct across disjuncts because all draws come
    from the shared name source.
    """
    base = base or wtn_combined
    disjuncts = [base(cube, sig, names).formula for cube in to_flat_dnf(phi, sig, names)]
    if len(disjuncts) == 1:
        return disjuncts[0]
    return Or(tuple(disjuncts))
