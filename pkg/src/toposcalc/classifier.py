"""Subobjects, sieves and the subobject classifier of a presheaf category."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from . import caps
from .errors import NotAMono, NotLocal, SizeCapExceeded, ValidationError
from .fincat import FinCat
from .presheaf import (
    Presheaf,
    PresheafMap,
    _sub_inclusion,
    coproduct,
    image_factorization,
    is_mono,
    pullback,
    render,
    terminal,
)


# -- sieves -------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Sieve:
    """A sieve on object ``obj``: a bitmask over arrow positions."""

    obj: int
    mask: int

    def __contains__(self, f: int) -> bool:
        return bool(self.mask >> f & 1)

    def arrows(self) -> list[int]:
        out, m, i = [], self.mask, 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out

    def issubset(self, other: "Sieve") -> bool:
        return self.obj == other.obj and self.mask & ~other.mask == 0

    def __and__(self, other: "Sieve") -> "Sieve":
        return Sieve(self.obj, self.mask & other.mask)

    def __or__(self, other: "Sieve") -> "Sieve":
        return Sieve(self.obj, self.mask | other.mask)

    def names(self, C: FinCat) -> list[str]:
        return [C.arrows[f].name for f in self.arrows()]

    def __str__(self) -> str:
        return f"<{self.obj}:{self.mask:b}>"


def sieve_label(C: FinCat, S: Sieve) -> str:
    return "{" + ",".join(S.names(C)) + "}"


def sieve_from_arrows(C: FinCat, obj: str | int, arrows: Iterable[str | int]) -> Sieve:
    """Sieve given by an explicit, already closed, arrow set."""
    c = C.obj(obj)
    mask = 0
    for a in arrows:
        f = C.arrow(a)
        if C.tgt[f] != c:
            raise ValidationError(f"arrow {C.arrows[f].name} does not end at {C.objects[c]}")
        mask |= 1 << f
    S = Sieve(c, mask)
    if not is_sieve(C, S):
        raise ValidationError(f"{sieve_label(C, S)} is not closed under precomposition")
    return S


def generated_sieve(C: FinCat, obj: str | int, generators: Iterable[str | int]) -> Sieve:
    """Least sieve on ``obj`` containing ``generators``."""
    c = C.obj(obj)
    mask = 0
    for a in generators:
        f = C.arrow(a)
        if C.tgt[f] != c:
            raise ValidationError(f"arrow {C.arrows[f].name} does not end at {C.objects[c]}")
        for h in C.into[C.src[f]]:
            mask |= 1 << C.circ(f, h)
    return Sieve(c, mask)


def is_sieve(C: FinCat, S: Sieve) -> bool:
    for f in S.arrows():
        if C.tgt[f] != S.obj:
            return False
        for h in C.into[C.src[f]]:
            if C.circ(f, h) not in S:
                return False
    return True


def maximal_sieve(C: FinCat, c: int) -> Sieve:
    return Sieve(c, sum(1 << f for f in C.into[c]))


def empty_sieve(c: int) -> Sieve:
    return Sieve(c, 0)


def pullback_sieve(C: FinCat, f: int, S: Sieve) -> Sieve:
    """``f* S = {g | f . g in S}`` for ``f: d -> c``."""
    mask = 0
    for g in C.into[C.src[f]]:
        if C.circ(f, g) in S:
            mask |= 1 << g
    return Sieve(C.src[f], mask)


@lru_cache(maxsize=None)
def all_sieves(C: FinCat, c: int) -> tuple[Sieve, ...]:
    """Brute-force filter over all arrow sets into ``c``, ordered by mask."""
    into = C.into[c]
    caps.check("sieves", 2 ** len(into), f"sieves on {C.objects[c]}")
    out = []
    for bits in range(2 ** len(into)):
        mask = 0
        for k, f in enumerate(into):
            if bits >> k & 1:
                mask |= 1 << f
        S = Sieve(c, mask)
        if is_sieve(C, S):
            out.append(S)
    return tuple(sorted(out))


# -- subobjects ---------------------------------------------------------------

class Subobject:
    """An action-closed selection of elements of ``ambient``."""

    __slots__ = ("ambient", "selection", "_presheaf")

    def __init__(self, ambient: Presheaf, selection: Sequence[Iterable[int]], check: bool = True):
        self.ambient = ambient
        self.selection: tuple[frozenset[int], ...] = tuple(frozenset(s) for s in selection)
        self._presheaf = None
        if check:
            C = ambient.base
            for f in range(len(C.arrows)):
                sa = self.selection[C.src[f]]
                for i in self.selection[C.tgt[f]]:
                    if ambient.actions[f][i] not in sa:
                        raise ValidationError("selection is not closed under the presheaf action")

    @classmethod
    def of_mono(cls, m: PresheafMap) -> "Subobject":
        """Canonical subobject of the codomain determined by a mono."""
        if not is_mono(m):
            raise NotAMono("map is not a monomorphism")
        return cls(m.target, [frozenset(comp) for comp in m.components], check=False)

    @classmethod
    def total(cls, A: Presheaf) -> "Subobject":
        return cls(A, [range(len(c)) for c in A.carriers], check=False)

    @classmethod
    def empty(cls, A: Presheaf) -> "Subobject":
        return cls(A, [() for _ in A.carriers], check=False)

    def inclusion(self) -> PresheafMap:
        return _sub_inclusion(self.ambient, self.selection)

    @property
    def presheaf(self) -> Presheaf:
        if self._presheaf is None:
            self._presheaf = self.inclusion().source
        return self._presheaf

    def corestrict(self, f: PresheafMap) -> PresheafMap:
        """Factor ``f`` (landing inside this subobject) through its inclusion."""
        pos = [{i: k for k, i in enumerate(sorted(sel))} for sel in self.selection]
        try:
            comps = tuple(tuple(pos[c][y] for y in comp) for c, comp in enumerate(f.components))
        except KeyError:
            raise ValidationError("map does not factor through the subobject") from None
        return PresheafMap(f.source, self.presheaf, comps)

    def __le__(self, other: "Subobject") -> bool:
        return all(a <= b for a, b in zip(self.selection, other.selection))

    def __lt__(self, other: "Subobject") -> bool:
        return self <= other and self != other

    def meet(self, other: "Subobject") -> "Subobject":
        return Subobject(self.ambient, [a & b for a, b in zip(self.selection, other.selection)], check=False)

    def join(self, other: "Subobject") -> "Subobject":
        return Subobject(self.ambient, [a | b for a, b in zip(self.selection, other.selection)], check=False)

    __and__ = meet
    __or__ = join

    def is_total(self) -> bool:
        return all(len(s) == len(c) for s, c in zip(self.selection, self.ambient.carriers))

    def size(self) -> int:
        return sum(len(s) for s in self.selection)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subobject):
            return NotImplemented
        return self.selection == other.selection and self.ambient == other.ambient

    def __hash__(self) -> int:
        return hash(self.selection)

    def __repr__(self) -> str:
        C = self.ambient.base
        parts = [
            f"{o}:{{{','.join(render(self.ambient.carriers[c][i]) for i in sorted(self.selection[c]))}}}"
            for c, o in enumerate(C.objects)
        ]
        return "Subobject(" + " ".join(parts) + ")"


def _downsets(A: Presheaf) -> list[list[tuple[int, int]]]:
    C = A.base
    down = []
    for c in range(len(C.objects)):
        row = []
        for i in range(len(A.carriers[c])):
            row.append(sorted({(C.src[f], A.actions[f][i]) for f in C.into[c]}))
        down.append(row)
    return down


def subobjects(A: Presheaf) -> list[Subobject]:
    """All subobjects of ``A`` in lectic order (Ganter's NextClosure)."""
    elems = [(c, i) for c in range(len(A.carriers)) for i in range(len(A.carriers[c]))]
    pos = {e: k for k, e in enumerate(elems)}
    down = _downsets(A)
    gen = [frozenset(pos[d] for d in down[c][i]) for c, i in elems]
    n = len(elems)
    limit = caps.current().sieves

    def close(s: set[int]) -> set[int]:
        out = set(s)
        for k in s:
            out |= gen[k]
        return out

    found = []
    current: set[int] | None = close(set())
    while current is not None:
        found.append(current)
        if len(found) > limit:
            raise SizeCapExceeded(f"more than {limit} subobjects")
        nxt = None
        work = set(current)
        for k in range(n - 1, -1, -1):
            if k in work:
                work.discard(k)
                continue
            candidate = close(work | {k})
            if all(j >= k for j in candidate - work):
                nxt = candidate
                break
        current = nxt

    out = []
    for s in found:
        sel = [set() for _ in A.carriers]
        for k in s:
            c, i = elems[k]
            sel[c].add(i)
        out.append(Subobject(A, sel, check=False))
    return out


# -- the subobject classifier -----------------------------------------------------

@dataclass(frozen=True)
class OmegaObject:
    presheaf: Presheaf
    true: PresheafMap

    @property
    def base(self) -> FinCat:
        return self.presheaf.base

    def sieve_index(self, S: Sieve) -> int:
        return self.presheaf.index(S.obj, S)

    def maximal(self, c: int) -> int:
        return len(self.presheaf.carriers[c]) - 1


@lru_cache(maxsize=None)
def omega(C: FinCat) -> OmegaObject:
    carriers = tuple(all_sieves(C, c) for c in range(len(C.objects)))
    index = [{S: k for k, S in enumerate(car)} for car in carriers]
    actions = tuple(
        tuple(index[C.src[f]][pullback_sieve(C, f, S)] for S in carriers[C.tgt[f]])
        for f in range(len(C.arrows))
    )
    Om = Presheaf(C, carriers, actions)
    one = terminal(C)
    # maximal sieve has the largest mask, hence sits last
    true = PresheafMap(one, Om, tuple((len(car) - 1,) for car in carriers))
    return OmegaObject(Om, true)


def characteristic_sieve(S: Subobject, c: int, i: int) -> Sieve:
    A, C = S.ambient, S.ambient.base
    mask = 0
    for f in C.into[c]:
        if A.actions[f][i] in S.selection[C.src[f]]:
            mask |= 1 << f
    return Sieve(c, mask)


def classify(S: Subobject) -> PresheafMap:
    """The characteristic map ``A -> Omega`` of ``S``."""
    A, C = S.ambient, S.ambient.base
    Om = omega(C)
    comps = tuple(
        tuple(Om.sieve_index(characteristic_sieve(S, c, i)) for i in range(len(A.carriers[c])))
        for c in range(len(C.objects))
    )
    return PresheafMap(A, Om.presheaf, comps)


def classify_mono(m: PresheafMap) -> PresheafMap:
    return classify(Subobject.of_mono(m))


def pull_back_true(chi: PresheafMap) -> Subobject:
    """The subobject obtained by pulling ``true`` back along ``chi``."""
    Om = omega(chi.base)
    pb = pullback(Om.true, chi)
    return Subobject.of_mono(image_factorization(pb.p2)[1])


def is_univalent(m: PresheafMap) -> bool:
    if not is_mono(m):
        raise NotAMono("univalence is only defined for monomorphisms")
    return is_mono(classify_mono(m))


@dataclass(frozen=True)
class UnivalentGenerator:
    """A univalent mono ``T -> V`` together with ``V`` as a subobject of Omega."""

    mono: PresheafMap
    classes: Subobject

    def corestrict(self, m: PresheafMap) -> PresheafMap:
        """The map ``cod m -> V`` along which ``m`` is a base change of the generator."""
        chi = classify_mono(m)
        V = self.classes.presheaf
        Om = chi.target
        comps = []
        for c, comp in enumerate(chi.components):
            row = []
            for k in comp:
                try:
                    row.append(V.index(c, Om.carriers[c][k]))
                except KeyError:
                    raise NotLocal("mono is not a base change of the generator") from None
            comps.append(tuple(row))
        return PresheafMap(chi.source, V, tuple(comps))

    def is_base_change(self, m: PresheafMap) -> bool:
        try:
            g = self.corestrict(m)
        except NotLocal:
            return False
        pb = pullback(self.mono, g)
        return Subobject.of_mono(image_factorization(pb.p2)[1]) == Subobject.of_mono(m)


def univalent_generator(monos: Sequence[PresheafMap], base: FinCat | None = None) -> UnivalentGenerator:
    """Univalent mono generating the local class spanned by ``monos``.

    The coproduct of the monos is classified by the copairing of their
    characteristic maps; its image ``V`` in Omega carries the generator
    ``V ∩ true -> V``.
    """
    if not monos and base is None:
        raise ValueError("an empty generating set needs an explicit base site")
    C = base if base is not None else monos[0].base
    Om = omega(C)
    selection = [set() for _ in C.objects]
    if monos:
        chis = [classify_mono(m) for m in monos]
        chi = chis[0]
        total = chi
        for other in chis[1:]:
            s = coproduct(total.source, other.source)
            total = s.copair(total, other)
        _, im = image_factorization(total)
        for c, comp in enumerate(im.components):
            selection[c].update(comp)
    V = Subobject(Om.presheaf, selection)
    V_ps = V.presheaf
    top = [frozenset(i for i, S in enumerate(V_ps.carriers[c]) if S == maximal_sieve(C, c)) for c in range(len(C.objects))]
    v = Subobject(V_ps, top).inclusion()
    gen = UnivalentGenerator(v, V)
    if not is_univalent(v):
        raise NotLocal("generator is not univalent")
    for m in monos:
        if not gen.is_base_change(m):
            raise NotLocal("a member of the class is not a base change of the generator")
    return gen
