"""Finite-set-valued presheaves, their maps, limits and colimits.

A presheaf stores, for each object ``c`` (by position), an ordered tuple of
element values, and for each arrow ``f: a -> b`` a tuple sending the index of
an element of ``X(b)`` to the index of its restriction in ``X(a)``.  Maps store
one index table per object.  Everything is computed on indices; element values
only matter for display and for the canonical naming of limit and colimit
elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Iterator, Mapping, Sequence

from . import caps
from .errors import (
    FunctorialityViolation,
    NaturalityViolation,
    ShapeMismatch,
    StabilizationFailure,
    ValidationError,
)
from .fincat import FinCat

INF = math.inf


def render(e: Any) -> str:
    """Stable human readable name of an element value."""
    if e == ():
        return "*"
    if isinstance(e, tuple):
        return "(" + ",".join(render(x) for x in e) + ")"
    return str(e)


class Presheaf:
    __slots__ = ("base", "carriers", "actions", "_index", "_hash")

    def __init__(self, base: FinCat, carriers, actions):
        self.base = base
        self.carriers: tuple[tuple[Hashable, ...], ...] = carriers
        self.actions: tuple[tuple[int, ...], ...] = actions
        self._index = None
        self._hash = None
        limit = caps.current().carrier
        for c, carrier in enumerate(carriers):
            if len(carrier) > limit:
                caps.check("carrier", len(carrier), f"object {base.objects[c]}")

    @classmethod
    def build(
        cls,
        base: FinCat,
        carriers: Mapping[str, Sequence[Hashable]],
        actions: Mapping[str, Mapping[Hashable, Hashable]] | None = None,
    ) -> "Presheaf":
        """Validated constructor from name-keyed tables.

        ``actions[f]`` maps elements of ``X(tgt f)`` to elements of ``X(src f)``.
        Identity arrows may be omitted.
        """
        actions = dict(actions or {})
        cars = []
        for o in base.objects:
            elems = tuple(carriers.get(o, ()))
            if len(set(elems)) != len(elems):
                raise ValidationError(f"duplicate elements in carrier of {o!r}")
            cars.append(elems)
        for o in carriers:
            base.obj(o)
        index = [{e: i for i, e in enumerate(car)} for car in cars]
        acts = []
        for f, arrow in enumerate(base.arrows):
            a, b = base.src[f], base.tgt[f]
            table = actions.get(arrow.name)
            if table is None:
                if base.is_identity(f):
                    acts.append(tuple(range(len(cars[a]))))
                    continue
                raise ValidationError(f"missing action of arrow {arrow.name!r}")
            row = []
            for e in cars[b]:
                if e not in table:
                    raise ValidationError(f"action of {arrow.name!r} undefined on {render(e)}")
                image = table[e]
                if image not in index[a]:
                    raise ValidationError(
                        f"action of {arrow.name!r} sends {render(e)} outside the carrier of {arrow.src!r}"
                    )
                row.append(index[a][image])
            acts.append(tuple(row))
        X = cls(base, tuple(cars), tuple(acts))
        X.check()
        return X

    def check(self) -> None:
        """Exhaustive functoriality check; raises on the first violation."""
        C = self.base
        for c in range(len(C.objects)):
            if self.actions[C.ident[c]] != tuple(range(len(self.carriers[c]))):
                raise FunctorialityViolation(f"identity of {C.objects[c]!r} acts non-trivially")
        for (f, g), h in C._then.items():
            af, ag, ah = self.actions[f], self.actions[g], self.actions[h]
            if any(ah[i] != af[ag[i]] for i in range(len(ah))):
                raise FunctorialityViolation(
                    f"action of {C.arrows[h].name} differs from the composite of "
                    f"{C.arrows[f].name} and {C.arrows[g].name}"
                )

    # -- access -----------------------------------------------------------

    def size(self, c: int) -> int:
        return len(self.carriers[c])

    def elements(self, obj: str | int) -> tuple:
        return self.carriers[self.base.obj(obj)]

    def index(self, c: int, e: Hashable) -> int:
        if self._index is None:
            self._index = [{x: i for i, x in enumerate(car)} for car in self.carriers]
        return self._index[c][e]

    def act(self, f: int, i: int) -> int:
        return self.actions[f][i]

    def restrict(self, arrow: str, e: Hashable) -> Hashable:
        """Value-level action ``X(f)(e)``."""
        C = self.base
        f = C.arrow(arrow)
        return self.carriers[C.src[f]][self.actions[f][self.index(C.tgt[f], e)]]

    def total_size(self) -> int:
        return sum(len(c) for c in self.carriers)

    def elements_of(self) -> Iterator[tuple[int, int]]:
        for c, car in enumerate(self.carriers):
            for i in range(len(car)):
                yield c, i

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Presheaf):
            return NotImplemented
        return (
            self.carriers == other.carriers
            and self.actions == other.actions
            and self.base == other.base
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.carriers, self.actions))
        return self._hash

    def __repr__(self) -> str:
        sizes = ", ".join(f"{o}:{len(c)}" for o, c in zip(self.base.objects, self.carriers))
        return f"Presheaf({sizes})"

    def to_dict(self) -> dict:
        C = self.base
        return {
            "carriers": {o: [render(e) for e in self.carriers[c]] for c, o in enumerate(C.objects)},
            "actions": {
                a.name: {
                    render(self.carriers[C.tgt[f]][i]): render(self.carriers[C.src[f]][j])
                    for i, j in enumerate(self.actions[f])
                }
                for f, a in enumerate(C.arrows)
                if not C.is_identity(f)
            },
        }


class PresheafMap:
    __slots__ = ("source", "target", "components", "_hash")

    def __init__(self, source: Presheaf, target: Presheaf, components):
        self.source = source
        self.target = target
        self.components: tuple[tuple[int, ...], ...] = components
        self._hash = None

    @classmethod
    def build(
        cls, source: Presheaf, target: Presheaf, components: Mapping[str, Mapping[Hashable, Hashable]]
    ) -> "PresheafMap":
        """Validated constructor from value-level component tables."""
        if source.base != target.base:
            raise ShapeMismatch("source and target live over different sites")
        C = source.base
        comps = []
        for c, o in enumerate(C.objects):
            table = components.get(o, {})
            row = []
            for e in source.carriers[c]:
                if e not in table:
                    raise ValidationError(f"component at {o!r} undefined on {render(e)}")
                try:
                    row.append(target.index(c, table[e]))
                except KeyError:
                    raise ValidationError(
                        f"component at {o!r} sends {render(e)} outside the target carrier"
                    ) from None
            comps.append(tuple(row))
        u = cls(source, target, tuple(comps))
        u.check()
        return u

    def check(self) -> None:
        """Exhaustive naturality check."""
        X, Y, C = self.source, self.target, self.source.base
        for f in range(len(C.arrows)):
            a, b = C.src[f], C.tgt[f]
            ca, cb, xf, yf = self.components[a], self.components[b], X.actions[f], Y.actions[f]
            for i in range(len(cb)):
                if ca[xf[i]] != yf[cb[i]]:
                    raise NaturalityViolation(
                        f"naturality square for {C.arrows[f].name} fails at {render(X.carriers[b][i])}"
                    )

    @property
    def base(self) -> FinCat:
        return self.source.base

    def apply(self, obj: str | int, e: Hashable) -> Hashable:
        c = self.base.obj(obj)
        return self.target.carriers[c][self.components[c][self.source.index(c, e)]]

    def then(self, other: "PresheafMap") -> "PresheafMap":
        """Diagrammatic composite: first ``self``, then ``other``."""
        if self.target != other.source:
            raise ShapeMismatch("maps are not composable")
        comps = tuple(
            tuple(g[i] for i in f) for f, g in zip(self.components, other.components)
        )
        return PresheafMap(self.source, other.target, comps)

    def __matmul__(self, other: "PresheafMap") -> "PresheafMap":
        # g @ f is g after f
        return other.then(self)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, PresheafMap):
            return NotImplemented
        return (
            self.components == other.components
            and self.source == other.source
            and self.target == other.target
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.components, hash(self.source), hash(self.target)))
        return self._hash

    def __repr__(self) -> str:
        return f"PresheafMap({self.source!r} -> {self.target!r})"

    def to_dict(self) -> dict:
        X, Y, C = self.source, self.target, self.base
        return {
            o: {render(X.carriers[c][i]): render(Y.carriers[c][j]) for i, j in enumerate(self.components[c])}
            for c, o in enumerate(C.objects)
        }


# -- basic objects ------------------------------------------------------------

def yoneda(C: FinCat, c: str | int) -> Presheaf:
    """The representable ``C(-, c)``; elements are arrow names."""
    k = C.obj(c)
    carriers = []
    index = []
    for b in range(len(C.objects)):
        arrows = C.hom_idx(b, k)
        carriers.append(tuple(C.arrows[f].name for f in arrows))
        index.append({f: i for i, f in enumerate(arrows)})
    actions = []
    for f in range(len(C.arrows)):
        a, b = C.src[f], C.tgt[f]
        # g: b -> k restricts to g . f
        actions.append(tuple(index[a][C.then(f, g)] for g in C.hom_idx(b, k)))
    return Presheaf(C, tuple(carriers), tuple(actions))


def constant(C: FinCat, elements: Sequence[Hashable]) -> Presheaf:
    elements = tuple(elements)
    ident = tuple(range(len(elements)))
    return Presheaf(C, tuple(elements for _ in C.objects), tuple(ident for _ in C.arrows))


def terminal(C: FinCat) -> Presheaf:
    return constant(C, [()])


def initial(C: FinCat) -> Presheaf:
    return constant(C, [])


def identity(X: Presheaf) -> PresheafMap:
    return PresheafMap(X, X, tuple(tuple(range(len(car))) for car in X.carriers))


def to_terminal(X: Presheaf) -> PresheafMap:
    return PresheafMap(X, terminal(X.base), tuple((0,) * len(car) for car in X.carriers))


def from_initial(X: Presheaf) -> PresheafMap:
    return PresheafMap(initial(X.base), X, tuple(() for _ in X.carriers))


def compose(*maps: PresheafMap) -> PresheafMap:
    """``compose(g, f)`` is ``g`` after ``f``."""
    out = maps[-1]
    for g in reversed(maps[:-1]):
        out = out.then(g)
    return out


def element_map(X: Presheaf, c: int, i: int) -> PresheafMap:
    """The map ``y(c) -> X`` classifying the element ``i`` of ``X(c)``."""
    C = X.base
    Y = yoneda(C, c)
    comps = tuple(tuple(X.actions[g][i] for g in C.hom_idx(b, c)) for b in range(len(C.objects)))
    return PresheafMap(Y, X, comps)


# -- finite limits --------------------------------------------------------------

@dataclass(frozen=True)
class Pullback:
    """Pullback of a cospan ``f: A -> B <- C: g``; elements are pairs."""

    obj: Presheaf
    p1: PresheafMap
    p2: PresheafMap
    f: PresheafMap
    g: PresheafMap

    def lift(self, h1: PresheafMap, h2: PresheafMap) -> PresheafMap:
        """The gap map ``T -> A x_B C`` induced by a commuting pair."""
        P = self.obj
        comps = []
        for c in range(len(P.carriers)):
            A, Cc = self.f.source.carriers[c], self.g.source.carriers[c]
            row = []
            for x, y in zip(h1.components[c], h2.components[c]):
                try:
                    row.append(P.index(c, (A[x], Cc[y])))
                except KeyError:
                    raise ShapeMismatch("the pair of maps does not form a cone") from None
            comps.append(tuple(row))
        return PresheafMap(h1.source, P, tuple(comps))


def pullback(f: PresheafMap, g: PresheafMap) -> Pullback:
    if f.target != g.target:
        raise ShapeMismatch("pullback of maps with different codomains")
    A, Cc, base = f.source, g.source, f.base
    carriers, pairs = [], []
    for c in range(len(base.objects)):
        fc, gc = f.components[c], g.components[c]
        by_value: dict[int, list[int]] = {}
        for j, v in enumerate(gc):
            by_value.setdefault(v, []).append(j)
        pc = [(i, j) for i, v in enumerate(fc) for j in by_value.get(v, ())]
        pairs.append(pc)
        carriers.append(tuple((A.carriers[c][i], Cc.carriers[c][j]) for i, j in pc))
    index = [{p: k for k, p in enumerate(pc)} for pc in pairs]
    actions = []
    for h in range(len(base.arrows)):
        a, b = base.src[h], base.tgt[h]
        xa, ya = A.actions[h], Cc.actions[h]
        actions.append(tuple(index[a][(xa[i], ya[j])] for i, j in pairs[b]))
    P = Presheaf(base, tuple(carriers), tuple(actions))
    p1 = PresheafMap(P, A, tuple(tuple(i for i, _ in pc) for pc in pairs))
    p2 = PresheafMap(P, Cc, tuple(tuple(j for _, j in pc) for pc in pairs))
    return Pullback(P, p1, p2, f, g)


def product(X: Presheaf, Y: Presheaf) -> Pullback:
    return pullback(to_terminal(X), to_terminal(Y))


def base_change(u: PresheafMap, g: PresheafMap) -> PresheafMap:
    """Pullback of ``u: A -> B`` along ``g: B' -> B``, as a map into ``B'``."""
    return pullback(u, g).p2


def equalizer(f: PresheafMap, g: PresheafMap) -> PresheafMap:
    if f.source != g.source or f.target != g.target:
        raise ShapeMismatch("equalizer of non-parallel maps")
    X = f.source
    keep = [frozenset(i for i in range(len(fc)) if fc[i] == gc[i]) for fc, gc in zip(f.components, g.components)]
    return _sub_inclusion(X, keep)


def _sub_inclusion(X: Presheaf, keep: Sequence[frozenset[int]]) -> PresheafMap:
    """Inclusion of an action-closed selection, in ambient order."""
    kept = [sorted(k) for k in keep]
    pos = [{i: n for n, i in enumerate(k)} for k in kept]
    C = X.base
    carriers = tuple(tuple(X.carriers[c][i] for i in kept[c]) for c in range(len(C.objects)))
    actions = tuple(
        tuple(pos[C.src[f]][X.actions[f][i]] for i in kept[C.tgt[f]]) for f in range(len(C.arrows))
    )
    S = Presheaf(C, carriers, actions)
    return PresheafMap(S, X, tuple(tuple(k) for k in kept))


@dataclass(frozen=True)
class Diagram:
    """A functor from a finite shape category into presheaves on ``base``."""

    shape: FinCat
    base: FinCat
    objects: tuple[Presheaf, ...]
    arrows: tuple[PresheafMap, ...]

    @classmethod
    def build(
        cls,
        shape: FinCat,
        base: FinCat,
        objects: Mapping[str, Presheaf],
        arrows: Mapping[str, PresheafMap] | None = None,
    ) -> "Diagram":
        arrows = dict(arrows or {})
        objs = []
        for o in shape.objects:
            if o not in objects:
                raise ShapeMismatch(f"diagram has no presheaf at shape object {o!r}")
            if objects[o].base != base:
                raise ShapeMismatch(f"presheaf at {o!r} lives over another site")
            objs.append(objects[o])
        maps = []
        for f, a in enumerate(shape.arrows):
            m = arrows.get(a.name)
            if m is None:
                if shape.is_identity(f):
                    m = identity(objs[shape.src[f]])
                else:
                    raise ShapeMismatch(f"diagram has no map at shape arrow {a.name!r}")
            if m.source != objs[shape.src[f]] or m.target != objs[shape.tgt[f]]:
                raise ShapeMismatch(f"map at {a.name!r} has the wrong endpoints")
            maps.append(m)
        D = cls(shape, base, tuple(objs), tuple(maps))
        D.check()
        return D

    def check(self) -> None:
        S = self.shape
        for i in range(len(S.objects)):
            if self.arrows[S.ident[i]] != identity(self.objects[i]):
                raise FunctorialityViolation(f"diagram moves identity of {S.objects[i]!r}")
        for (f, g), h in S._then.items():
            if self.arrows[f].then(self.arrows[g]) != self.arrows[h]:
                raise FunctorialityViolation(
                    f"diagram does not preserve {S.arrows[f].name};{S.arrows[g].name}"
                )


def limit(D: Diagram) -> tuple[Presheaf, tuple[PresheafMap, ...]]:
    """Pointwise limit; elements are tuples indexed by shape objects."""
    S, C = D.shape, D.base
    n = len(S.objects)
    non_id = [f for f in range(len(S.arrows)) if not S.is_identity(f)]
    # constraints checked once both ends are chosen
    checks: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for f in non_id:
        i, j = S.src[f], S.tgt[f]
        checks[max(i, j)].append((f, i, j))
    tuples_at = []
    for c in range(len(C.objects)):
        found: list[tuple[int, ...]] = []
        chosen = [0] * n

        def extend(k: int) -> None:
            if k == n:
                found.append(tuple(chosen))
                return
            for x in range(len(D.objects[k].carriers[c])):
                chosen[k] = x
                if all(D.arrows[f].components[c][chosen[i]] == chosen[j] for f, i, j in checks[k]):
                    extend(k + 1)

        extend(0)
        tuples_at.append(found)
    index = [{t: m for m, t in enumerate(ts)} for ts in tuples_at]
    carriers = tuple(
        tuple(tuple(D.objects[k].carriers[c][t[k]] for k in range(n)) for t in ts)
        for c, ts in enumerate(tuples_at)
    )
    actions = tuple(
        tuple(
            index[C.src[h]][tuple(D.objects[k].actions[h][t[k]] for k in range(n))]
            for t in tuples_at[C.tgt[h]]
        )
        for h in range(len(C.arrows))
    )
    L = Presheaf(C, carriers, actions)
    cone = tuple(
        PresheafMap(L, D.objects[k], tuple(tuple(t[k] for t in ts) for ts in tuples_at))
        for k in range(n)
    )
    return L, cone


def colimit(D: Diagram) -> tuple[Presheaf, tuple[PresheafMap, ...]]:
    """Pointwise colimit; each class is named by its least ``(k, element)``."""
    S, C = D.shape, D.base
    n = len(S.objects)
    reps_at, class_of = [], []
    for c in range(len(C.objects)):
        nodes = [(k, x) for k in range(n) for x in range(len(D.objects[k].carriers[c]))]
        parent = {v: v for v in nodes}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for f in range(len(S.arrows)):
            i, j = S.src[f], S.tgt[f]
            for x, y in enumerate(D.arrows[f].components[c]):
                ra, rb = find((i, x)), find((j, y))
                if ra != rb:
                    # keep the least node as root
                    if rb < ra:
                        ra, rb = rb, ra
                    parent[rb] = ra
        roots = sorted({find(v) for v in nodes})
        pos = {r: m for m, r in enumerate(roots)}
        reps_at.append(roots)
        class_of.append({v: pos[find(v)] for v in nodes})
    carriers = tuple(
        tuple((S.objects[k], D.objects[k].carriers[c][x]) for k, x in roots)
        for c, roots in enumerate(reps_at)
    )
    actions = tuple(
        tuple(
            class_of[C.src[h]][(k, D.objects[k].actions[h][x])]
            for k, x in reps_at[C.tgt[h]]
        )
        for h in range(len(C.arrows))
    )
    L = Presheaf(C, carriers, actions)
    cocone = tuple(
        PresheafMap(
            D.objects[k], L,
            tuple(
                tuple(class_of[c][(k, x)] for x in range(len(D.objects[k].carriers[c])))
                for c in range(len(C.objects))
            ),
        )
        for k in range(n)
    )
    return L, cocone


@dataclass(frozen=True)
class Coproduct:
    obj: Presheaf
    i1: PresheafMap
    i2: PresheafMap

    def copair(self, f: PresheafMap, g: PresheafMap) -> PresheafMap:
        comps = tuple(a + b for a, b in zip(f.components, g.components))
        return PresheafMap(self.obj, f.target, comps)


def coproduct(X: Presheaf, Y: Presheaf) -> Coproduct:
    """Disjoint union; elements are ``(0, x)`` then ``(1, y)``."""
    C = X.base
    carriers = tuple(
        tuple((0, e) for e in xc) + tuple((1, e) for e in yc)
        for xc, yc in zip(X.carriers, Y.carriers)
    )
    actions = tuple(
        xa + tuple(len(X.carriers[C.src[f]]) + j for j in ya)
        for f, (xa, ya) in enumerate(zip(X.actions, Y.actions))
    )
    Z = Presheaf(C, carriers, actions)
    i1 = PresheafMap(X, Z, tuple(tuple(range(len(xc))) for xc in X.carriers))
    i2 = PresheafMap(
        Y, Z, tuple(tuple(len(xc) + j for j in range(len(yc))) for xc, yc in zip(X.carriers, Y.carriers))
    )
    return Coproduct(Z, i1, i2)


def coproduct_map(f: PresheafMap, g: PresheafMap) -> PresheafMap:
    """``f + g`` between the two coproducts."""
    s, t = coproduct(f.source, g.source), coproduct(f.target, g.target)
    return s.copair(f.then(t.i1), g.then(t.i2))


# -- image, diagonal, connectivity ------------------------------------------------

def image_factorization(u: PresheafMap) -> tuple[PresheafMap, PresheafMap]:
    """Split ``u`` as ``im . coim`` with the image ordered by first preimage."""
    A, B, C = u.source, u.target, u.base
    hit = []
    for comp in u.components:
        seen: dict[int, int] = {}
        for y in comp:
            if y not in seen:
                seen[y] = len(seen)
        hit.append(seen)
    carriers = tuple(tuple(B.carriers[c][y] for y in hit[c]) for c in range(len(C.objects)))
    actions = tuple(
        tuple(hit[C.src[f]][B.actions[f][y]] for y in hit[C.tgt[f]]) for f in range(len(C.arrows))
    )
    I = Presheaf(C, carriers, actions)
    coim = PresheafMap(A, I, tuple(tuple(hit[c][y] for y in comp) for c, comp in enumerate(u.components)))
    im = PresheafMap(I, B, tuple(tuple(h) for h in hit))
    return coim, im


def image(u: PresheafMap) -> PresheafMap:
    return image_factorization(u)[1]


def coimage(u: PresheafMap) -> PresheafMap:
    return image_factorization(u)[0]


def diagonal(u: PresheafMap) -> PresheafMap:
    """The map ``A -> A x_B A`` pairing each element with itself."""
    return pullback(u, u).lift(identity(u.source), identity(u.source))


def iterated_diagonal(u: PresheafMap, n: int) -> PresheafMap:
    for _ in range(n):
        u = diagonal(u)
    return u


def diagonal_tower(u: PresheafMap, height: int) -> list[PresheafMap]:
    """``[u, Du, D^2 u, ..., D^height u]``."""
    tower = [u]
    for _ in range(height):
        tower.append(diagonal(tower[-1]))
    return tower


def is_mono(u: PresheafMap) -> bool:
    return all(len(set(comp)) == len(comp) for comp in u.components)


def is_surjection(u: PresheafMap) -> bool:
    return all(len(set(comp)) == len(car) for comp, car in zip(u.components, u.target.carriers))


def is_iso(u: PresheafMap) -> bool:
    return all(
        len(comp) == len(car) and len(set(comp)) == len(car)
        for comp, car in zip(u.components, u.target.carriers)
    )


def _parallel_shape() -> FinCat:
    from .fincat import parallel_pair

    return parallel_pair()


def nerve_surjection(u: PresheafMap) -> bool:
    """Surjectivity through the nerve: the coequalizer of the kernel pair maps
    isomorphically onto the codomain.
    """
    kp = pullback(u, u)
    D = Diagram.build(
        _parallel_shape(), u.base, {"a": kp.obj, "b": u.source}, {"f": kp.p1, "g": kp.p2}
    )
    Q, (_, q) = colimit(D)
    # induced map Q -> B
    comps = []
    for c, cls_map in enumerate(q.components):
        row = [None] * len(Q.carriers[c])
        for x, k in enumerate(cls_map):
            row[k] = u.components[c][x]
        comps.append(tuple(row))
    return is_iso(PresheafMap(Q, u.target, tuple(comps)))


def is_n_connected(u: PresheafMap, n: float) -> bool:
    """``D^k u`` surjective for ``0 <= k <= n + 1``; ``n`` may be ``INF``."""
    if n < -1:
        raise ValueError("connectivity index must be >= -1")
    if n == INF:
        tower = diagonal_tower(u, 2)
        if not is_mono(tower[2]):
            raise StabilizationFailure("second diagonal is not a mono")
        return all(is_surjection(v) for v in tower)
    v = u
    for _ in range(int(n) + 2):
        if not is_surjection(v):
            return False
        if is_iso(v):
            # every further diagonal of an iso is an iso
            return True
        v = diagonal(v)
    return True


# -- enumeration of maps --------------------------------------------------------

def enumerate_maps(
    X: Presheaf,
    Y: Presheaf,
    fixed: Mapping[tuple[int, int], int] | None = None,
    allowed: Sequence[Sequence[frozenset[int] | None]] | None = None,
) -> Iterator[PresheafMap]:
    """All natural transformations ``X -> Y`` in a deterministic order.

    ``fixed`` pins ``(object, element index)`` to a target index; ``allowed``
    optionally restricts each element's image to a set of target indices.
    Assigning an element forces all of its restrictions, so the search only
    branches on elements not already determined.
    """
    C = X.base
    nobj = len(C.objects)
    assign = [[-1] * len(X.carriers[c]) for c in range(nobj)]
    trail: list[tuple[int, int]] = []
    into = [tuple(f for f in C.into[c] if not C.is_identity(f)) for c in range(nobj)]

    def put(c: int, i: int, y: int) -> bool:
        stack = [(c, i, y)]
        while stack:
            c, i, y = stack.pop()
            cur = assign[c][i]
            if cur >= 0:
                if cur != y:
                    return False
                continue
            if allowed is not None and allowed[c][i] is not None and y not in allowed[c][i]:
                return False
            assign[c][i] = y
            trail.append((c, i))
            for f in into[c]:
                stack.append((C.src[f], X.actions[f][i], Y.actions[f][y]))
        return True

    def undo(mark: int) -> None:
        while len(trail) > mark:
            c, i = trail.pop()
            assign[c][i] = -1

    for c in range(nobj):
        if X.carriers[c] and not Y.carriers[c]:
            return
    for (c, i), y in (fixed or {}).items():
        if not put(c, i, y):
            return
    order = sorted(range(nobj), key=lambda c: (-len(C.into[c]), c))
    variables = [(c, i) for c in order for i in range(len(X.carriers[c]))]

    def candidates(c: int, i: int):
        if allowed is not None and allowed[c][i] is not None:
            return sorted(allowed[c][i])
        return range(len(Y.carriers[c]))

    def search(k: int) -> Iterator[PresheafMap]:
        while k < len(variables) and assign[variables[k][0]][variables[k][1]] >= 0:
            k += 1
        if k == len(variables):
            yield PresheafMap(X, Y, tuple(tuple(row) for row in assign))
            return
        c, i = variables[k]
        for y in candidates(c, i):
            mark = len(trail)
            if put(c, i, y):
                yield from search(k + 1)
            undo(mark)

    yield from search(0)


def count_maps(X: Presheaf, Y: Presheaf, limit: int | None = None, **kw) -> int:
    n = 0
    for _ in enumerate_maps(X, Y, **kw):
        n += 1
        if limit is not None and n >= limit:
            break
    return n


def find_isomorphism(X: Presheaf, Y: Presheaf) -> PresheafMap | None:
    """Exhaustive search for an isomorphism ``X -> Y``."""
    if X.base != Y.base or [len(c) for c in X.carriers] != [len(c) for c in Y.carriers]:
        return None
    for u in enumerate_maps(X, Y):
        if is_iso(u):
            return u
    return None


def inverse(u: PresheafMap) -> PresheafMap:
    if not is_iso(u):
        raise ValueError("map is not invertible")
    comps = []
    for comp in u.components:
        row = [0] * len(comp)
        for i, y in enumerate(comp):
            row[y] = i
        comps.append(tuple(row))
    return PresheafMap(u.target, u.source, tuple(comps))
