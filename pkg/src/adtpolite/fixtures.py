"""Canonical signatures and regression assets.

The list/pair/list-of-pairs signatures are the running examples throughout
the test suite; "example1" is the minimal two-constructor tree signature
used by the enumeration tests, and "t0" is the function-free theory with
at-least-two-element models used by the combination regression tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .signature import ConstructorDecl, DatatypesSignature, validate_signature


class UnknownFixture(Exception):
    pass


@dataclass(frozen=True)
class T0Backend:
    """All structures over one sort with at least two elements.

    A conjunction of (dis)equality literals is satisfiable here iff it is
    consistent: any consistent constraint extends to a two-element model.
    """

    sort: str = "elem"

    @property
    def sorts(self) -> frozenset[str]:
        return frozenset({self.sort})

    def decide(self, literals) -> bool:
        from .combine import merge_classes

        return merge_classes(literals) is not None


@dataclass(frozen=True)
class Fixture:
    name: str
    signature: DatatypesSignature | None = None
    backend: T0Backend | None = None
    scripts: tuple[tuple[str, str], ...] = field(default=())


def _list_signature() -> DatatypesSignature:
    return validate_signature(
        DatatypesSignature(
            elem_sorts=("elem",),
            struct_sorts=("list",),
            constructors=(
                ConstructorDecl("nil", (), "list"),
                ConstructorDecl("cons", (("car", "elem"), ("cdr", "list")), "list"),
            ),
        )
    )


def _pair_signature() -> DatatypesSignature:
    return validate_signature(
        DatatypesSignature(
            elem_sorts=("elem",),
            struct_sorts=("pair",),
            constructors=(
                ConstructorDecl("pair", (("first", "elem"), ("second", "elem")), "pair"),
            ),
        )
    )


def _lp_signature() -> DatatypesSignature:
    return validate_signature(
        DatatypesSignature(
            elem_sorts=("elem",),
            struct_sorts=("pair", "list"),
            constructors=(
                ConstructorDecl("nil", (), "list"),
                ConstructorDecl("cons", (("car", "pair"), ("cdr", "list")), "list"),
                ConstructorDecl("pair", (("first", "elem"), ("second", "elem")), "pair"),
            ),
        )
    )


def _example1_signature() -> DatatypesSignature:
    return validate_signature(
        DatatypesSignature(
            elem_sorts=("elem",),
            struct_sorts=("struct",),
            constructors=(
                ConstructorDecl("b", (), "struct"),
                ConstructorDecl(
                    "c", (("c1", "elem"), ("c2", "struct"), ("c3", "struct")), "struct"
                ),
            ),
        )
    )


def fixtures_dir() -> Path:
    """The fixture script directory at the repository root."""
    return Path(__file__).resolve().parents[2] / "fixtures"


def _script_pairs(*stems: str) -> tuple[tuple[str, str], ...]:
    base = fixtures_dir()
    return tuple((str(base / f"{s}.smt2"), str(base / f"{s}.out")) for s in stems)


_BUILDERS = {
    "list": lambda: Fixture("list", _list_signature(), scripts=_script_pairs("list_chain_sat", "list_tester_conflict")),
    "pair": lambda: Fixture("pair", _pair_signature(), scripts=_script_pairs("pair_projections_sat",)),
    "lp": lambda: Fixture("lp", _lp_signature(), scripts=_script_pairs("lp_mixed_sat",)),
    "example1": lambda: Fixture("example1", _example1_signature()),
    "t0": lambda: Fixture("t0", backend=T0Backend()),
}


def load_fixture(name: str) -> Fixture:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownFixture(f"no fixture named {name!r}") from None
    return builder()


def fixture_names() -> tuple[str, ...]:
    return tuple(_BUILDERS)
