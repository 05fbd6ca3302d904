"""Finite categories given by explicit composition tables.

Objects and arrows are identified by strings and kept in sorted order; all
algorithms work on the integer positions in that order.  ``compose`` tables
are written diagrammatically: ``(f, g) -> h`` means ``h = g . f`` (first
``f``, then ``g``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, NamedTuple

from . import caps
from .errors import (
    AssociativityViolation,
    EndpointMismatch,
    FunctorialityViolation,
    IdentityViolation,
    MissingComposite,
    UnknownArrow,
    UnknownObject,
    ValidationError,
)


class Arrow(NamedTuple):
    name: str
    src: str
    tgt: str


class FinCat:
    """A validated finite category.

    Instances are immutable; build them with :func:`validate_category` or one
    of the site constructors at the bottom of this module.
    """

    __slots__ = (
        "objects", "arrows", "_obj_idx", "_arr_idx", "src", "tgt", "ident",
        "_then", "into", "_homs", "_hash",
    )

    def __init__(self, objects, arrows, identity, then):
        # trusted constructor: tables are already index based and checked
        self.objects: tuple[str, ...] = objects
        self.arrows: tuple[Arrow, ...] = arrows
        self._obj_idx = {o: i for i, o in enumerate(objects)}
        self._arr_idx = {a.name: i for i, a in enumerate(arrows)}
        self.src = tuple(self._obj_idx[a.src] for a in arrows)
        self.tgt = tuple(self._obj_idx[a.tgt] for a in arrows)
        self.ident: tuple[int, ...] = identity
        self._then: dict[tuple[int, int], int] = then
        self.into = tuple(
            tuple(i for i in range(len(arrows)) if self.tgt[i] == c)
            for c in range(len(objects))
        )
        homs: dict[tuple[int, int], list[int]] = {}
        for i in range(len(arrows)):
            homs.setdefault((self.src[i], self.tgt[i]), []).append(i)
        self._homs = {k: tuple(v) for k, v in homs.items()}
        self._hash = hash((objects, arrows))

    # -- lookup ---------------------------------------------------------

    def obj(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self.objects):
                raise UnknownObject(f"unknown object index {name}")
            return name
        try:
            return self._obj_idx[name]
        except KeyError:
            raise UnknownObject(f"unknown object {name!r}") from None

    def arrow(self, name: str | int) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self.arrows):
                raise UnknownArrow(f"unknown arrow index {name}")
            return name
        try:
            return self._arr_idx[name]
        except KeyError:
            raise UnknownArrow(f"unknown arrow {name!r}") from None

    def has_object(self, name: str) -> bool:
        return name in self._obj_idx

    def has_arrow(self, name: str) -> bool:
        return name in self._arr_idx

    def identity(self, obj: str | int) -> int:
        return self.ident[self.obj(obj)]

    def is_identity(self, f: int) -> bool:
        return self.ident[self.src[f]] == f

    def hom_idx(self, a: int, b: int) -> tuple[int, ...]:
        return self._homs.get((a, b), ())

    # -- composition ----------------------------------------------------

    def then(self, f: int, g: int) -> int:
        """Index of ``g . f`` for composable ``f: a -> b``, ``g: b -> c``."""
        return self._then[(f, g)]

    def circ(self, g: int, f: int) -> int:
        """Index of ``g . f`` in the usual right-to-left notation."""
        return self._then[(f, g)]

    def composable(self, f: int, g: int) -> bool:
        return self.tgt[f] == self.src[g]

    @property
    def compose_table(self) -> dict[tuple[str, str], str]:
        names = [a.name for a in self.arrows]
        return {(names[f], names[g]): names[h] for (f, g), h in self._then.items()}

    def __len__(self) -> int:
        return len(self.arrows)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, FinCat):
            return NotImplemented
        return (
            self.objects == other.objects
            and self.arrows == other.arrows
            and self.ident == other.ident
            and self._then == other._then
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"FinCat(objects={list(self.objects)}, arrows={len(self.arrows)})"


def validate_category(
    objects: Iterable[str],
    arrows: Iterable[tuple[str, str, str] | Arrow],
    compose: Mapping[tuple[str, str], str],
    identity: Mapping[str, str] | None = None,
) -> FinCat:
    """Build a :class:`FinCat` from raw tables, checking every law exhaustively.

    ``identity`` maps each object to its identity arrow.  When omitted, an
    arrow ``id_<obj>`` is used.  Identity arrows missing from ``arrows`` are
    created.  Composites involving an identity may be left out of
    ``compose``; they are filled in and any entry that is given is checked
    against the identity laws.
    """
    objects = list(objects)
    if len(set(objects)) != len(objects):
        raise ValidationError("duplicate object identifiers")
    arrows = [Arrow(*a) for a in arrows]
    identity = dict(identity or {})
    for o in objects:
        name = identity.setdefault(o, f"id_{o}")
        if not any(a.name == name for a in arrows):
            arrows.append(Arrow(name, o, o))
    names = [a.name for a in arrows]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate arrow identifiers")
    caps.check("arrows", len(arrows), "category")
    obj_set = set(objects)
    by_name = {a.name: a for a in arrows}
    for a in arrows:
        for end in (a.src, a.tgt):
            if end not in obj_set:
                raise ValidationError(f"arrow {a.name} has unknown endpoint {end!r}")
    for o, i in identity.items():
        if o not in obj_set:
            raise ValidationError(f"identity given for unknown object {o!r}")
        if i not in by_name or by_name[i].src != o or by_name[i].tgt != o:
            raise IdentityViolation(f"identity {i!r} of {o!r} is not an endo-arrow of {o!r}")

    table = {}
    for (f, g), h in compose.items():
        for name in (f, g, h):
            if name not in by_name:
                raise ValidationError(f"compose table mentions unknown arrow {name!r}")
        af, ag, ah = by_name[f], by_name[g], by_name[h]
        if af.tgt != ag.src:
            raise EndpointMismatch(f"compose({f}, {g}) given for non-composable pair")
        if ah.src != af.src or ah.tgt != ag.tgt:
            raise EndpointMismatch(
                f"compose({f}, {g}) = {h} has wrong endpoints: "
                f"{h}: {ah.src} -> {ah.tgt}, expected {af.src} -> {ag.tgt}"
            )
        table[(f, g)] = h
    for a in arrows:
        for key, want in (((identity[a.src], a.name), a.name), ((a.name, identity[a.tgt]), a.name)):
            got = table.setdefault(key, want)
            if got != want:
                raise IdentityViolation(
                    f"compose({key[0]}, {key[1]}) = {got}, identity law requires {want}"
                )
    for f, g in product(arrows, arrows):
        if f.tgt == g.src and (f.name, g.name) not in table:
            raise MissingComposite(f"missing composite of {f.name} then {g.name}")
    for f, g, h in product(arrows, arrows, arrows):
        if f.tgt == g.src and g.tgt == h.src:
            left = table[(table[(f.name, g.name)], h.name)]
            right = table[(f.name, table[(g.name, h.name)])]
            if left != right:
                raise AssociativityViolation(
                    f"({f.name};{g.name});{h.name} = {left} but "
                    f"{f.name};({g.name};{h.name}) = {right}"
                )

    objs = tuple(sorted(objects))
    arrs = tuple(sorted(arrows, key=lambda a: a.name))
    aidx = {a.name: i for i, a in enumerate(arrs)}
    ident = tuple(aidx[identity[o]] for o in objs)
    then = {(aidx[f], aidx[g]): aidx[h] for (f, g), h in table.items()}
    return FinCat(objs, arrs, ident, then)


def opposite(C: FinCat) -> FinCat:
    arrows = tuple(Arrow(a.name, a.tgt, a.src) for a in C.arrows)
    then = {(g, f): h for (f, g), h in C._then.items()}
    return FinCat(C.objects, arrows, C.ident, then)


def hom(C: FinCat, a: str, b: str) -> list[str]:
    """Arrows ``a -> b`` in the fixed arrow order."""
    return [C.arrows[i].name for i in C.hom_idx(C.obj(a), C.obj(b))]


def revalidate(C: FinCat) -> FinCat:
    """Run the full validation again on an existing category."""
    identity = {o: C.arrows[C.ident[i]].name for i, o in enumerate(C.objects)}
    return validate_category(C.objects, C.arrows, C.compose_table, identity)


@dataclass(frozen=True)
class FinFunctor:
    domain: FinCat
    codomain: FinCat
    on_objects: Mapping[str, str]
    on_arrows: Mapping[str, str]

    def __post_init__(self):
        D, E = self.domain, self.codomain
        for o in D.objects:
            if o not in self.on_objects or not E.has_object(self.on_objects[o]):
                raise FunctorialityViolation(f"object {o!r} has no valid image")
        for a in D.arrows:
            image = self.on_arrows.get(a.name)
            if image is None or not E.has_arrow(image):
                raise FunctorialityViolation(f"arrow {a.name!r} has no valid image")
            b = E.arrows[E.arrow(image)]
            if (b.src, b.tgt) != (self.on_objects[a.src], self.on_objects[a.tgt]):
                raise FunctorialityViolation(f"image of {a.name!r} has wrong endpoints")
        for o in D.objects:
            want = E.arrows[E.identity(self.on_objects[o])].name
            if self.on_arrows[D.arrows[D.identity(o)].name] != want:
                raise FunctorialityViolation(f"identity of {o!r} not preserved")
        for (f, g), h in D._then.items():
            fa, ga, ha = (self.on_arrows[D.arrows[i].name] for i in (f, g, h))
            if E.then(E.arrow(fa), E.arrow(ga)) != E.arrow(ha):
                raise FunctorialityViolation(
                    f"composite {D.arrows[f].name};{D.arrows[g].name} not preserved"
                )


# -- standard sites -------------------------------------------------------

def terminal() -> FinCat:
    return validate_category(["*"], [], {})


def interval() -> FinCat:
    """The walking arrow ``f: a -> b``."""
    return validate_category(["a", "b"], [("f", "a", "b")], {})


def parallel_pair() -> FinCat:
    return validate_category(["a", "b"], [("f", "a", "b"), ("g", "a", "b")], {})


def commutative_square() -> FinCat:
    """The poset ``00 <= 01, 10 <= 11`` with its diagonal ``d``."""
    arrows = [
        ("x0", "00", "01"), ("y0", "00", "10"),
        ("x1", "10", "11"), ("y1", "01", "11"),
        ("d", "00", "11"),
    ]
    compose = {("x0", "y1"): "d", ("y0", "x1"): "d"}
    return validate_category(["00", "01", "10", "11"], arrows, compose)


def monoid(elements: Iterable[str], unit: str, mult: Mapping[tuple[str, str], str]) -> FinCat:
    """One-object category of a finite monoid; ``mult[(x, y)]`` is ``x . y``.

    Composition follows the usual convention ``g . f = mult[(g, f)]``.
    """
    elements = list(elements)
    arrows = [(e, "*", "*") for e in elements]
    compose = {(f, g): mult[(g, f)] for f in elements for g in elements}
    return validate_category(["*"], arrows, compose, identity={"*": unit})


def idempotent_monoid() -> FinCat:
    """The monoid ``{1, e}`` with ``e . e = e``."""
    mult = {("1", "1"): "1", ("1", "e"): "e", ("e", "1"): "e", ("e", "e"): "e"}
    return monoid(["1", "e"], "1", mult)


def monoid3() -> FinCat:
    """The monoid ``{1, x, xx}`` with ``x^3 = x^2``."""
    power = {"1": 0, "x": 1, "xx": 2}
    name = {0: "1", 1: "x", 2: "xx"}
    mult = {(p, q): name[min(power[p] + power[q], 2)] for p in power for q in power}
    return monoid(["1", "x", "xx"], "1", mult)
