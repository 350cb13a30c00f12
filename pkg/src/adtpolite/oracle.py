"""Independent brute-force ground truth for the property suites.

Satisfiability is decided by exhaustive search over bounded interpretation
space: element domains of configured sizes, struct variables ranging over
all ground trees up to a depth bound, and selector completion tables
enumerated lazily exactly at the application points the formula forces
(satisfaction only ever depends on finitely many table entries).  Forward
checking prunes the search but every reported answer is still established
by explicit evaluation.  An unsat answer only refutes models within the
configured bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .formulas import (
    And,
    ConsEq,
    Formula,
    Interpretation,
    MissingSelectorEntry,
    ResourceOut,
    SelEq,
    TesterLit,
    Var,
    VarDiseq,
    VarEq,
    eval_formula,
    formula_vars,
    is_flat_literal,
)
from .signature import (
    DatatypesSignature,
    ElemValue,
    Node,
    SortKind,
    SortRef,
    Tree,
    enumerate_trees,
    sorted_trees,
)


@dataclass(frozen=True)
class OracleConfig:
    elem_sizes: Mapping[str, int]
    depth_bound: int
    max_nodes: int = 2_000_000


@dataclass
class OracleOutcome:
    sat: bool
    model: Optional[Interpretation]


def _conjunction_items(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        out: list[Formula] = []
        for item in phi.items:
            out.extend(_conjunction_items(item))
        return out
    return [phi]


def brute_force_sat(
    phi: Formula, sig: DatatypesSignature, cfg: OracleConfig
) -> OracleOutcome:
    elem_domains = {
        s: tuple(ElemValue(s, i) for i in range(cfg.elem_sizes.get(s, 1)))
        for s in sig.elem_sorts
    }
    tree_universe: dict[str, list[Tree]] = {}

    def universe(sort: SortRef) -> tuple[Tree, ...]:
        if sort.kind is SortKind.ELEM:
            return elem_domains[sort.name]
        if sort.name not in tree_universe:
            tree_universe[sort.name] = sorted_trees(
                enumerate_trees(sig, sort.name, cfg.depth_bound, elem_domains)
            )
        return tuple(tree_universe[sort.name])

    conjuncts = _conjunction_items(phi)
    literals = [c for c in conjuncts if is_flat_literal(c)]
    variables = list(formula_vars(phi))
    budget = cfg.max_nodes

    def spend() -> None:
        nonlocal budget
        budget -= 1
        if budget < 0:
            raise ResourceOut("oracle search budget exceeded")

    def propagate(doms: dict[Var, tuple[Tree, ...]]) -> Optional[dict[Var, tuple[Tree, ...]]]:
        doms = dict(doms)
        changed = True
        while changed:
            changed = False

            def narrow(v: Var, allowed) -> bool:
                nonlocal changed
                old = doms[v]
                new = tuple(t for t in old if t in allowed)
                if len(new) != len(old):
                    doms[v] = new
                    changed = True
                return bool(new)

            for lit in literals:
                if isinstance(lit, VarEq):
                    both = set(doms[lit.lhs]) & set(doms[lit.rhs])
                    if not narrow(lit.lhs, both) or not narrow(lit.rhs, both):
                        return None
                elif isinstance(lit, VarDiseq):
                    if len(doms[lit.lhs]) == 1:
                        if not narrow(lit.rhs, set(doms[lit.rhs]) - {doms[lit.lhs][0]}):
                            return None
                    if len(doms[lit.rhs]) == 1:
                        if not narrow(lit.lhs, set(doms[lit.lhs]) - {doms[lit.rhs][0]}):
                            return None
                elif isinstance(lit, ConsEq):
                    arg_sets = [set(doms[a]) for a in lit.args]
                    feasible = [
                        t
                        for t in doms[lit.lhs]
                        if isinstance(t, Node)
                        and t.constructor == lit.constructor
                        and all(c in s for c, s in zip(t.children, arg_sets))
                    ]
                    if not narrow(lit.lhs, set(feasible)):
                        return None
                    for k, a in enumerate(lit.args):
                        allowed = {t.children[k] for t in doms[lit.lhs]}
                        if not narrow(a, allowed):
                            return None
                elif isinstance(lit, SelEq):
                    if len(doms[lit.arg]) == 1:
                        value = doms[lit.arg][0]
                        ctor, i = sig.selector[lit.selector]
                        if isinstance(value, Node) and value.constructor == ctor.name:
                            if not narrow(lit.lhs, {value.children[i]}):
                                return None
                elif isinstance(lit, TesterLit):
                    allowed = {
                        t
                        for t in doms[lit.arg]
                        if (isinstance(t, Node) and t.constructor == lit.constructor)
                        == lit.positive
                    }
                    if not narrow(lit.arg, allowed):
                        return None
        return doms

    def check_with_tables(interp: Interpretation) -> bool:
        try:
            return all(eval_formula(interp, c) for c in conjuncts)
        except MissingSelectorEntry as e:
            key = (e.selector, e.value)
            for cand in universe(sig.sort_ref(e.target_sort)):
                spend()
                interp.selector_table[key] = cand
                if check_with_tables(interp):
                    return True
            interp.selector_table.pop(key, None)
            return False

    def search(doms: dict[Var, tuple[Tree, ...]], idx: int) -> Optional[Interpretation]:
        spend()
        narrowed = propagate(doms)
        if narrowed is None:
            return None
        i = idx
        while i < len(variables) and len(narrowed[variables[i]]) == 1:
            i += 1
        if i == len(variables):
            assignment = {v: narrowed[v][0] for v in variables}
            interp = Interpretation(sig, dict(elem_domains), assignment)
            if check_with_tables(interp):
                return interp
            return None
        v = variables[i]
        for value in narrowed[v]:
            spend()
            child = dict(narrowed)
            child[v] = (value,)
            found = search(child, i)
            if found is not None:
                return found
        return None

    initial = {v: universe(v.sort) for v in variables}
    if any(not d for d in initial.values()):
        return OracleOutcome(False, None)
    model = search(initial, 0)
    return OracleOutcome(model is not None, model)
