"""Syntactic unification over constructor terms with eager occurs check.

Successful unification yields a solved form: an ordered list of bindings
in which every bound variable occurs exactly once, so the induced
substitution is idempotent and most general.  Failures are values, not
exceptions, carrying the clashing constructors or the offending cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .formulas import Apply, Term, Var, VarDiseq


@dataclass(frozen=True)
class Clash:
    """Two distinct constructors were equated."""

    left: str
    right: str


@dataclass(frozen=True)
class OccursViolation:
    """A variable was equated with a term properly containing it."""

    var: Var
    term: Term


@dataclass(frozen=True)
class SolvedForm:
    bindings: tuple[tuple[Var, Term], ...]

    @property
    def substitution(self) -> dict[Var, Term]:
        return dict(self.bindings)


UnifyFailure = Union[Clash, OccursViolation]


def _var_key(v: Var) -> tuple[str, str]:
    return (v.name, v.sort.name)


def occurs_in(v: Var, t: Term) -> bool:
    if isinstance(t, Var):
        return t == v
    return any(occurs_in(v, a) for a in t.args)


def apply_subst(subst: Mapping[Var, Term], t: Term) -> Term:
    """Homomorphic replacement, one pass.

    For substitutions induced by a solved form one pass is already a
    fixpoint (bound variables never occur in right-hand sides).
    """
    if isinstance(t, Var):
        return subst.get(t, t)
    return Apply(t.fn, tuple(apply_subst(subst, a) for a in t.args))


def unify(equations: Iterable[tuple[Term, Term]]) -> SolvedForm | UnifyFailure:
    """Most general unifier of variable/constructor-term equalities.

    Variable-variable equations bind the variable with the larger internal
    key to the smaller one, making the solved form deterministic up to the
    naming of the inputs.
    """
    subst: dict[Var, Term] = {}
    work = list(equations)
    while work:
        s, t = work.pop(0)
        s = apply_subst(subst, s)
        t = apply_subst(subst, t)
        if s == t:
            continue
        if isinstance(s, Apply) and isinstance(t, Apply):
            if s.fn != t.fn or len(s.args) != len(t.args):
                return Clash(s.fn, t.fn)
            work.extend(zip(s.args, t.args))
            continue
        if isinstance(s, Apply):
            s, t = t, s
        assert isinstance(s, Var)
        if isinstance(t, Var) and _var_key(s) < _var_key(t):
            s, t = t, s
        if occurs_in(s, t):
            return OccursViolation(s, t)
        step = {s: t}
        subst = {x: apply_subst(step, u) for x, u in subst.items()}
        subst[s] = t
    bindings = tuple(sorted(subst.items(), key=lambda kv: _var_key(kv[0])))
    return SolvedForm(bindings)


def check_disequalities(
    subst: SolvedForm | Mapping[Var, Term], diseqs: Iterable[VarDiseq]
) -> bool:
    """True iff the substitution keeps every disequality's sides distinct."""
    mapping = subst.substitution if isinstance(subst, SolvedForm) else dict(subst)
    return all(
        apply_subst(mapping, d.lhs) != apply_subst(mapping, d.rhs) for d in diseqs
    )
