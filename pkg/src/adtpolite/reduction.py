"""Satisfiability of flat cubes by reduction to syntactic unification.

Testers and most selectors are eliminated by guessing a root constructor
for every involved variable and rewriting; finite-sorted variables are then
saturated with explicit constructions; the resulting cubes contain only
constructor equations, variable (dis)equalities, and residual selector
applications on arguments rooted by some other constructor.  Each such cube
is decided by unification plus a disequality check, and a satisfying
datatypes interpretation is read back off the most general unifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping, Optional, Sequence, Union

from .formulas import (
    And,
    Apply,
    ConsEq,
    FlatCube,
    FlatLiteral,
    Formula,
    Interpretation,
    NameSource,
    Or,
    ResourceOut,
    SelEq,
    TesterLit,
    Var,
    VarDiseq,
    VarEq,
    enumerate_arrangements,
    eval_formula,
    formula_vars,
    require_cube,
    term_depth,
)
from .signature import (
    DatatypesSignature,
    ElemValue,
    Node,
    SortClass,
    SortKind,
    Tree,
    classify_sorts,
    deep_tree,
    tree_depth,
)
from .unify import (
    SolvedForm,
    apply_subst,
    check_disequalities,
    unify,
)


class MalformedResidual(Exception):
    """A reduced cube violated the residual-selector shape guarantees."""


@dataclass(frozen=True)
class Sat:
    model: Interpretation


@dataclass(frozen=True)
class Unsat:
    pass


DecisionResult = Union[Sat, Unsat]
UNSAT = Unsat()


def compute_gv(cube: Sequence[FlatLiteral], sig: DatatypesSignature) -> tuple[Var, ...]:
    """Variables whose root constructor must be guessed.

    Tester arguments always qualify; selector arguments qualify unless the
    cube already constructs them with a constructor other than the
    selector's own, in which case the literal stays residual.
    """
    constructed_by = {}
    for lit in cube:
        if isinstance(lit, ConsEq):
            constructed_by.setdefault(lit.lhs, set()).add(lit.constructor)
    out: dict[Var, None] = {}
    excluded: set[Var] = set()
    for lit in cube:
        if isinstance(lit, SelEq):
            ctor, _ = sig.selector[lit.selector]
            if any(d != ctor.name for d in constructed_by.get(lit.arg, ())):
                excluded.add(lit.arg)
    for lit in cube:
        if isinstance(lit, TesterLit):
            out.setdefault(lit.arg)
        elif isinstance(lit, SelEq) and lit.arg not in excluded:
            out.setdefault(lit.arg)
    return tuple(out)


IsConstraint = dict[Var, str]
RhoEq = tuple[ConsEq, ...]


def guess_is_constraints(
    variables: Sequence[Var], sig: DatatypesSignature, names: NameSource
) -> Iterator[tuple[IsConstraint, RhoEq]]:
    """All total root-constructor guesses, with fresh construction literals.

    Guesses enumerate odometer-style: the first variable is the most
    significant position, constructors run in declaration order.
    """
    vs = tuple(dict.fromkeys(variables))
    pools = [sig.constructors_of[v.sort.name] for v in vs]
    for combo in product(*pools):
        rho: IsConstraint = {}
        rho_eq = []
        for v, decl in zip(vs, combo):
            rho[v] = decl.name
            args = tuple(names.fresh(sig.sort_ref(s)) for s in decl.arg_sorts)
            rho_eq.append(ConsEq(v, decl.name, args))
        yield rho, tuple(rho_eq)


def rewrite_w(
    cube: Sequence[FlatLiteral],
    rho_eq: Mapping[Var, ConsEq],
    sig: DatatypesSignature,
) -> Optional[FlatCube]:
    """Eliminate testers and guessed selectors under a constructor guess.

    Returns None when the guess contradicts a tester literal.
    """
    out: list[FlatLiteral] = []
    for lit in cube:
        if isinstance(lit, TesterLit):
            guess = rho_eq.get(lit.arg)
            if guess is None:
                out.append(lit)
            elif (guess.constructor == lit.constructor) != lit.positive:
                return None
            # matching positive / mismatching negative testers are dropped
        elif isinstance(lit, SelEq):
            guess = rho_eq.get(lit.arg)
            if guess is not None:
                ctor, i = sig.selector[lit.selector]
                if guess.constructor == ctor.name:
                    out.append(VarEq(lit.lhs, guess.args[i]))
                    continue
            out.append(lit)
        else:
            out.append(lit)
    return tuple(out)


def _unconstructed_finite(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    classes: Mapping[str, SortClass],
) -> tuple[Var, ...]:
    constructed = {lit.lhs for lit in cube if isinstance(lit, ConsEq)}
    out: dict[Var, None] = {}
    for v in formula_vars(tuple(cube)):
        if (
            v.sort.kind is SortKind.STRUCT
            and classes[v.sort.name] is SortClass.FINITE
            and v not in constructed
        ):
            out.setdefault(v)
    return tuple(out)


def saturate_finite(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature, names: NameSource
) -> Iterator[FlatCube]:
    """Guess root constructors for minimal finite-sorted variables, to a fixpoint.

    Yields the saturated cubes; each level guesses all currently minimal
    finite variables at once.  Terminates because the constructor
    dependency graph of finite sorts is acyclic.
    """
    classes = classify_sorts(sig)

    def rec(current: FlatCube) -> Iterator[FlatCube]:
        minimal = _unconstructed_finite(current, sig, classes)
        if not minimal:
            yield current
            return
        for _, rho_eq in guess_is_constraints(minimal, sig, names):
            yield from rec(current + rho_eq)

    yield from rec(tuple(cube))


def check_cube_tree_sat(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature
) -> Optional[SolvedForm]:
    """Decide a reduced cube by unification; None means unsatisfiable.

    Residual selector literals are closed under their functional
    consequences before the disequality check: a selector applied to the
    matching constructor forces the projected child, and equal arguments
    force equal results.
    """
    equations: list[tuple] = []
    diseqs: list[VarDiseq] = []
    residuals: list[SelEq] = []
    for lit in cube:
        if isinstance(lit, VarEq):
            equations.append((lit.lhs, lit.rhs))
        elif isinstance(lit, VarDiseq):
            diseqs.append(lit)
        elif isinstance(lit, ConsEq):
            equations.append((lit.lhs, Apply(lit.constructor, lit.args)))
        elif isinstance(lit, SelEq):
            residuals.append(lit)
        else:
            raise MalformedResidual(f"tester literal survived the rewrite: {lit!r}")

    while True:
        solved = unify(equations)
        if not isinstance(solved, SolvedForm):
            return None
        subst = solved.substitution
        added = False
        groups: dict[tuple, list[SelEq]] = {}
        for res in residuals:
            ctor, i = sig.selector[res.selector]
            arg_image = apply_subst(subst, res.arg)
            if isinstance(arg_image, Apply) and arg_image.fn == ctor.name:
                forced = arg_image.args[i]
                if apply_subst(subst, res.lhs) != forced:
                    equations.append((res.lhs, forced))
                    added = True
            else:
                groups.setdefault((res.selector, arg_image), []).append(res)
        for members in groups.values():
            first = members[0]
            for other in members[1:]:
                if apply_subst(subst, first.lhs) != apply_subst(subst, other.lhs):
                    equations.append((first.lhs, other.lhs))
                    added = True
        if not added:
            break

    for res in residuals:
        arg_image = apply_subst(subst, res.arg)
        if not isinstance(arg_image, Apply):
            raise MalformedResidual(
                f"residual selector argument is unconstructed: {res!r}"
            )
    if not check_disequalities(solved, diseqs):
        return None
    return solved


def build_model_from_mgu(
    cube: Sequence[FlatLiteral], solved: SolvedForm, sig: DatatypesSignature
) -> Interpretation:
    """Read a satisfying datatypes interpretation off the unifier.

    Element variables get one canonical value per unification class in
    first-occurrence order; struct variables left unfixed by the unifier
    get ground trees whose pairwise depth gaps strictly exceed the maximal
    binding depth, which keeps all distinctions of the unifier intact.
    """
    subst = solved.substitution
    variables = formula_vars(tuple(cube))

    counters: dict[str, int] = {}
    rep_value: dict[Var, ElemValue] = {}
    assignment: dict[Var, Tree] = {}
    for v in variables:
        if v.sort.kind is not SortKind.ELEM:
            continue
        rep = apply_subst(subst, v)
        assert isinstance(rep, Var)
        if rep not in rep_value:
            k = counters.get(v.sort.name, 0)
            rep_value[rep] = ElemValue(v.sort.name, k)
            counters[v.sort.name] = k + 1
    elem_domains = {
        s: tuple(ElemValue(s, i) for i in range(counters.get(s, 0)))
        for s in sig.elem_sorts
    }

    max_binding_depth = max(
        (term_depth(t) for _, t in solved.bindings), default=0
    )
    alpha: dict[Var, Tree] = {}
    previous_depth: Optional[int] = None
    for v in variables:
        if v.sort.kind is not SortKind.STRUCT or v in subst:
            continue
        above = max_binding_depth if previous_depth is None else previous_depth + max_binding_depth
        tree = deep_tree(sig, v.sort.name, above, elem_domains)
        alpha[v] = tree
        previous_depth = tree_depth(tree)

    def ground(term) -> Tree:
        if isinstance(term, Var):
            if term.sort.kind is SortKind.ELEM:
                return rep_value[term]
            return alpha[term]
        return Node(term.fn, tuple(ground(a) for a in term.args))

    for v in variables:
        if v.sort.kind is SortKind.ELEM:
            rep = apply_subst(subst, v)
            assignment[v] = rep_value[rep]
        else:
            assignment[v] = ground(apply_subst(subst, v))

    table: dict[tuple[str, Tree], Tree] = {}
    for lit in cube:
        if not isinstance(lit, SelEq):
            continue
        ctor, i = sig.selector[lit.selector]
        arg_value = assignment[lit.arg]
        if isinstance(arg_value, Node) and arg_value.constructor == ctor.name:
            assert arg_value.children[i] == assignment[lit.lhs]
            continue
        key = (lit.selector, arg_value)
        assert table.get(key, assignment[lit.lhs]) == assignment[lit.lhs]
        table[key] = assignment[lit.lhs]

    return Interpretation(sig, elem_domains, assignment, table)


def _trivial_elem_equalities(
    cube: Sequence[FlatLiteral], sig: DatatypesSignature, names: NameSource
) -> tuple[FlatLiteral, ...]:
    present = {v.sort.name for v in formula_vars(tuple(cube))}
    out = []
    for s in sig.elem_sorts:
        if s not in present:
            v = names.fresh(sig.sort_ref(s))
            out.append(VarEq(v, v))
    return tuple(out)


def reduced_cubes(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    names: NameSource,
    max_guesses: int | None = None,
) -> Iterator[FlatCube]:
    """The disjuncts of the full reduction of a cube, in decision order."""
    cube = require_cube(cube, sig)
    padded = cube + _trivial_elem_equalities(cube, sig, names)
    gv = compute_gv(padded, sig)
    count = 0
    for _, rho_eq in guess_is_constraints(gv, sig, names):
        count += 1
        if max_guesses is not None and count > max_guesses:
            raise ResourceOut(f"constructor guess space exceeded {max_guesses}")
        rewritten = rewrite_w(padded, {e.lhs: e for e in rho_eq}, sig)
        if rewritten is None:
            continue
        for saturated in saturate_finite(rewritten + rho_eq, sig, names):
            count += 1
            if max_guesses is not None and count > max_guesses:
                raise ResourceOut(f"constructor guess space exceeded {max_guesses}")
            yield saturated


def reduction_formula(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    names: NameSource,
    max_guesses: int | None = None,
) -> Formula:
    """The reduction as one disjunction, for inspection output."""
    disjuncts = [And(c) for c in reduced_cubes(cube, sig, names, max_guesses)]
    if len(disjuncts) == 1:
        return disjuncts[0]
    return Or(tuple(disjuncts))


def decide(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    names: NameSource,
    max_guesses: int | None = None,
) -> DecisionResult:
    """Decide a flat cube that includes an arrangement over its variables.

    The first satisfiable disjunct in guess order wins, so results and
    models are deterministic.
    """
    cube = require_cube(cube, sig)
    for candidate in reduced_cubes(cube, sig, names, max_guesses):
        solved = check_cube_tree_sat(candidate, sig)
        if solved is None:
            continue
        model = build_model_from_mgu(candidate, solved, sig)
        assert eval_formula(model, And(cube))
        return Sat(model)
    return UNSAT


def solve_with_arrangements(
    cube: Sequence[FlatLiteral],
    sig: DatatypesSignature,
    names: NameSource,
    max_guesses: int | None = None,
) -> tuple[DecisionResult, Optional[FlatCube]]:
    """Enumerate arrangements over the cube's variables and decide each.

    Returns the first satisfiable (result, arranged cube) pair, or unsat.
    """
    variables = formula_vars(tuple(cube))
    for arrangement in enumerate_arrangements(variables):
        arranged = tuple(dict.fromkeys(tuple(cube) + arrangement.literals()))
        result = decide(arranged, sig, names, max_guesses)
        if isinstance(result, Sat):
            return result, arranged
    return UNSAT, None
