"""Finite-witness model constructions and smoothing.

Given a witness output and a satisfying interpretation, these routines
shrink the element domains to exactly the values of the formula's element
variables while preserving satisfaction: for inductive signatures via the
equivalence-class construction (simplify, order, assign, complete the
selectors), for finite signatures by restriction, and in the other
direction a model's element domains can be inflated to any larger finite
cardinality without disturbing satisfaction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .formulas import (
    And,
    ConsEq,
    FlatCube,
    FlatLiteral,
    Interpretation,
    Or,
    SelEq,
    TesterLit,
    Var,
    VarEq,
    eval_formula,
    formula_vars,
    literal_vars,
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
from .witness import ORIGIN_ELEM, WitnessOutput


class NotSatisfying(Exception):
    pass


class ConflictingSelectorEntries(Exception):
    pass


class CardinalityTooSmall(Exception):
    pass


def extend_to_witness(
    interp: Interpretation, witness: WitnessOutput, sig: DatatypesSignature
) -> Interpretation:
    """Extend a model of the input cube with values for the witness's fresh vars.

    Every fresh variable occurs in exactly one added conjunct, so each added
    conjunct can be solved independently against the existing values: guessed
    constructions decompose the guessed variable's value, and element
    identities take the least domain value.
    """
    out = interp.copy()

    def satisfy_option(option: ConsEq) -> bool:
        value = out.assignment.get(option.lhs)
        if not isinstance(value, Node) or value.constructor != option.constructor:
            return False
        pending = {}
        for arg, child in zip(option.args, value.children):
            if arg in out.assignment:
                if out.assignment[arg] != child:
                    return False
            elif arg in pending:
                if pending[arg] != child:
                    return False
            else:
                pending[arg] = child
        out.assignment.update(pending)
        return True

    for conjunct, origin in witness.added():
        if origin == ORIGIN_ELEM:
            assert isinstance(conjunct, VarEq)
            v = conjunct.lhs
            if v not in out.assignment:
                domain = out.elem_domains.get(v.sort.name, ())
                if not domain:
                    raise NotSatisfying(f"empty domain for element sort {v.sort.name!r}")
                out.assignment[v] = min(domain, key=lambda e: e.index)
            continue
        options = conjunct.items if isinstance(conjunct, Or) else (conjunct,)
        if not any(satisfy_option(o) for o in options):
            raise NotSatisfying(f"no satisfiable disjunct in {conjunct!r}")
    if not eval_formula(out, witness.formula):
        raise NotSatisfying("extended interpretation does not satisfy the witness output")
    return out


def simplify_gamma(
    witness: WitnessOutput, interp: Interpretation, sig: DatatypesSignature
) -> tuple[FlatCube, FlatCube]:
    """Resolve disjunctions by the model and strip testers, then selectors.

    Returns (gamma_prime, gamma_two): gamma_two keeps selector literals,
    gamma_prime is selector- and tester-free.  The first disjunct the model
    satisfies is kept when several qualify.
    """
    if not eval_formula(interp, witness.formula):
        raise NotSatisfying("interpretation does not satisfy the witness output")
    resolved: list[FlatLiteral] = []
    for conjunct in witness.conjuncts:
        if isinstance(conjunct, Or):
            for option in conjunct.items:
                if eval_formula(interp, option):
                    resolved.append(option)
                    break
            else:
                raise NotSatisfying(f"no satisfied disjunct in {conjunct!r}")
        else:
            resolved.append(conjunct)
    gamma_two = tuple(l for l in resolved if not isinstance(l, TesterLit))
    gamma_prime = tuple(l for l in gamma_two if not isinstance(l, SelEq))
    return gamma_prime, gamma_two


@dataclass(frozen=True)
class ClassDag:
    """Equivalence classes of variables by model value, ordered for assignment.

    An edge (i, j) means class i's value is a direct child of class j's in
    some constructor literal; the topological order lists nullary classes,
    then the other minimal classes, then the rest.
    """

    classes: tuple[tuple[Var, ...], ...]
    values: tuple[Tree, ...]
    edges: frozenset[tuple[int, int]]
    nullary: tuple[bool, ...]
    minimal: tuple[bool, ...]
    topo_order: tuple[int, ...]
    longest_path: int
    defining: tuple[Optional[tuple[str, tuple[int, ...]]], ...]

    def class_of(self, v: Var) -> int:
        for i, c in enumerate(self.classes):
            if v in c:
                return i
        raise KeyError(v)


def build_class_dag(
    gamma_prime: Sequence[FlatLiteral],
    interp: Interpretation,
    sig: DatatypesSignature,
    variables: Sequence[Var] | None = None,
) -> ClassDag:
    if variables is None:
        variables = formula_vars(tuple(gamma_prime))
    variables = tuple(dict.fromkeys(variables))
    index_of: dict[Tree, int] = {}
    members: list[list[Var]] = []
    values: list[Tree] = []
    for v in variables:
        value = interp.value(v)
        if value not in index_of:
            index_of[value] = len(members)
            members.append([])
            values.append(value)
        members[index_of[value]].append(v)

    var_class = {v: index_of[interp.value(v)] for v in variables}
    edges: set[tuple[int, int]] = set()
    defining: list[Optional[tuple[str, tuple[int, ...]]]] = [None] * len(members)
    for lit in gamma_prime:
        if not isinstance(lit, ConsEq):
            continue
        target = var_class[lit.lhs]
        arg_classes = tuple(var_class[a] for a in lit.args)
        for a in arg_classes:
            edges.add((a, target))
        if defining[target] is None:
            defining[target] = (lit.constructor, arg_classes)

    nullary = tuple(
        isinstance(val, Node) and sig.constructor[val.constructor].is_nullary
        for val in values
    )
    has_pred = {j for _, j in edges}
    minimal = tuple(i not in has_pred for i in range(len(members)))

    order: list[int] = [i for i in range(len(members)) if nullary[i]]
    order += [i for i in range(len(members)) if minimal[i] and not nullary[i]]
    placed = set(order)
    remaining = [i for i in range(len(members)) if i not in placed]
    preds: dict[int, set[int]] = {i: set() for i in range(len(members))}
    for a, b in edges:
        preds[b].add(a)
    while remaining:
        for i in remaining:
            if preds[i] <= placed:
                order.append(i)
                placed.add(i)
                remaining.remove(i)
                break
        else:
            raise NotSatisfying("class graph is cyclic")

    depth_in: dict[int, int] = {}

    def lp(i: int) -> int:
        if i not in depth_in:
            depth_in[i] = 1 + max((lp(a) for a in preds[i]), default=-1)
        return depth_in[i]

    longest = max((lp(i) for i in range(len(members))), default=0)

    return ClassDag(
        classes=tuple(tuple(m) for m in members),
        values=tuple(values),
        edges=frozenset(edges),
        nullary=nullary,
        minimal=minimal,
        topo_order=tuple(order),
        longest_path=longest,
        defining=tuple(defining),
    )


@dataclass(frozen=True)
class ClassAssignment:
    values: dict[Var, Tree]
    spine_depths: tuple[int, ...]
    longest_path: int


def assign_classes(
    dag: ClassDag,
    sig: DatatypesSignature,
    elem_domains: Mapping[str, tuple[ElemValue, ...]],
) -> ClassAssignment:
    """Assign a value to every class, in topological order.

    Element and nullary classes copy the source model; minimal non-nullary
    struct classes take a spine tree whose depth exceeds the running
    maximum by more than the longest dependency path; the rest are forced
    by their defining constructor literal.
    """
    class_value: dict[int, Tree] = {}
    out: dict[Var, Tree] = {}
    spine_depths: list[int] = []
    running_max = 0
    for ci in dag.topo_order:
        old = dag.values[ci]
        if isinstance(old, ElemValue) or dag.nullary[ci]:
            value: Tree = old
        elif dag.minimal[ci]:
            sort = dag.classes[ci][0].sort.name
            value = deep_tree(sig, sort, running_max + dag.longest_path, elem_domains)
            spine_depths.append(tree_depth(value))
        else:
            assert dag.defining[ci] is not None
            ctor, arg_classes = dag.defining[ci]
            value = Node(ctor, tuple(class_value[a] for a in arg_classes))
        class_value[ci] = value
        running_max = max(running_max, tree_depth(value))
        for v in dag.classes[ci]:
            out[v] = value
    return ClassAssignment(out, tuple(spine_depths), dag.longest_path)


def complete_selectors(
    gamma_two: Sequence[FlatLiteral],
    values: Mapping[Var, Tree],
    sig: DatatypesSignature,
    elem_domains: Mapping[str, tuple[ElemValue, ...]],
) -> Interpretation:
    """Fill the selector completion table from the retained selector literals.

    Applications on the matching constructor are already forced to the
    projected child; off-constructor applications named by the formula get
    the literal's left-hand value; everything else defaults lazily.
    """
    table: dict[tuple[str, Tree], Tree] = {}
    for lit in gamma_two:
        if not isinstance(lit, SelEq):
            continue
        ctor, i = sig.selector[lit.selector]
        arg_value = values[lit.arg]
        wanted = values[lit.lhs]
        if isinstance(arg_value, Node) and arg_value.constructor == ctor.name:
            if arg_value.children[i] != wanted:
                raise ConflictingSelectorEntries(
                    f"{lit!r}: projection forces {arg_value.children[i]!r}"
                )
            continue
        key = (lit.selector, arg_value)
        if key in table and table[key] != wanted:
            raise ConflictingSelectorEntries(f"{lit!r}: table already holds {table[key]!r}")
        table[key] = wanted
    return Interpretation(
        sig,
        {s: tuple(d) for s, d in elem_domains.items()},
        dict(values),
        table,
        default_selectors=True,
    )


def _witness_elem_domains(
    witness: WitnessOutput, interp: Interpretation, sig: DatatypesSignature
) -> dict[str, tuple[ElemValue, ...]]:
    domains: dict[str, dict[ElemValue, None]] = {s: {} for s in sig.elem_sorts}
    for v in formula_vars(witness.formula):
        if v.sort.kind is SortKind.ELEM:
            value = interp.value(v)
            assert isinstance(value, ElemValue)
            domains[v.sort.name].setdefault(value)
    return {s: tuple(d) for s, d in domains.items()}


def finite_witness_inductive(
    witness: WitnessOutput, interp: Interpretation, sig: DatatypesSignature
) -> Interpretation:
    """Shrink a model of a witness output to its element-variable values.

    Requires every finite-sorted variable to be explicitly constructed,
    which holds for all-inductive signatures trivially and for mixed
    signatures by the combined witness; spine trees are then only ever
    requested for inductive sorts.
    """
    gamma_prime, gamma_two = simplify_gamma(witness, interp, sig)
    elem_domains = _witness_elem_domains(witness, interp, sig)
    dag = build_class_dag(
        gamma_prime, interp, sig, variables=formula_vars(witness.formula)
    )
    assigned = assign_classes(dag, sig, elem_domains)
    return complete_selectors(gamma_two, assigned.values, sig, elem_domains)


def finite_witness_finite(
    witness: WitnessOutput, interp: Interpretation, sig: DatatypesSignature
) -> Interpretation:
    """Restrict a model of a finite-signature witness output.

    Every struct variable is constructed down to element variables, so
    copying the assignment and the formula-relevant selector entries stays
    inside the shrunken domains.
    """
    if not eval_formula(interp, witness.formula):
        raise NotSatisfying("interpretation does not satisfy the witness output")
    elem_domains = _witness_elem_domains(witness, interp, sig)
    variables = formula_vars(witness.formula)
    assignment = {v: interp.value(v) for v in variables}
    table: dict[tuple[str, Tree], Tree] = {}
    for conjunct in witness.conjuncts:
        if not isinstance(conjunct, SelEq):
            continue
        ctor, _ = sig.selector[conjunct.selector]
        arg_value = assignment[conjunct.arg]
        if isinstance(arg_value, Node) and arg_value.constructor == ctor.name:
            continue
        table[(conjunct.selector, arg_value)] = assignment[conjunct.lhs]
    return Interpretation(sig, elem_domains, assignment, table, default_selectors=True)


def smooth_inflate(
    interp: Interpretation,
    kappa: Mapping[str, int],
    phi,
) -> Interpretation:
    """Grow element domains to the requested finite cardinalities.

    Satisfaction of quantifier-free formulas is untouched: evaluation only
    reads assigned values and the finitely many table entries, none of
    which change.
    """
    out = interp.copy()
    for sort_name, target in kappa.items():
        domain = list(out.elem_domains.get(sort_name, ()))
        if target < len(domain):
            raise CardinalityTooSmall(
                f"{sort_name}: requested {target}, model already has {len(domain)}"
            )
        next_index = max((v.index for v in domain), default=-1) + 1
        while len(domain) < target:
            domain.append(ElemValue(sort_name, next_index))
            next_index += 1
        out.elem_domains[sort_name] = tuple(domain)
    if phi is not None:
        assert eval_formula(out, phi if not isinstance(phi, tuple) else And(phi))
    return out
