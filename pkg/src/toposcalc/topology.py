"""Grothendieck topologies, Lawvere-Tierney closure operators, covering classes.

Topologies live on the site: a :class:`GrothTopology` records the covering
sieves of every object.  Membership of an arbitrary mono of presheaves is
derived from it, which is lossless because the class of covering monos is
local.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

from . import caps
from .classifier import (
    Sieve,
    Subobject,
    all_sieves,
    characteristic_sieve,
    classify,
    maximal_sieve,
    omega,
    pullback_sieve,
    sieve_label,
    univalent_generator,
)
from .errors import (
    MissingMaximal,
    NotAClosureOperator,
    SizeCapExceeded,
    StabilityViolation,
    TransitivityViolation,
)
from .fincat import FinCat
from .presheaf import PresheafMap, image_factorization, is_mono, yoneda


class GrothTopology:
    """Assignment of covering sieves to each object of a finite site."""

    __slots__ = ("base", "covers", "_hash")

    def __init__(self, base: FinCat, covers: Sequence[Iterable[Sieve]]):
        self.base = base
        self.covers: tuple[frozenset[Sieve], ...] = tuple(frozenset(s) for s in covers)
        self._hash = hash(self.covers)

    def is_covering(self, S: Sieve) -> bool:
        return S in self.covers[S.obj]

    def covering_sieves(self) -> list[Sieve]:
        return sorted(S for cov in self.covers for S in cov)

    def contains_mono(self, m: PresheafMap) -> bool:
        """Whether the mono ``m`` belongs to the topology (all its
        characteristic sieves cover)."""
        return all(self.is_covering(S) for S in mono_sieves(m))

    def covering_monos(self) -> list[PresheafMap]:
        return [sieve_inclusion(self.base, S) for S in self.covering_sieves()]

    @property
    def code(self) -> int:
        """Bit-vector of covering sieves over the site's global sieve order."""
        out = 0
        for k, S in enumerate(site_sieves(self.base)):
            if S in self.covers[S.obj]:
                out |= 1 << k
        return out

    def __le__(self, other: "GrothTopology") -> bool:
        return all(a <= b for a, b in zip(self.covers, other.covers))

    def __lt__(self, other: "GrothTopology") -> bool:
        return self <= other and self != other

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrothTopology):
            return NotImplemented
        return self.covers == other.covers and self.base == other.base

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"GrothTopology({self.to_dict()})"

    def to_dict(self) -> dict[str, list[list[str]]]:
        C = self.base
        return {o: [S.names(C) for S in sorted(self.covers[c])] for c, o in enumerate(C.objects)}

    def label(self) -> str:
        C = self.base
        parts = []
        for c, o in enumerate(C.objects):
            extra = sorted(S for S in self.covers[c] if S != maximal_sieve(C, c))
            if extra:
                parts.append(f"{o}:" + "|".join(sieve_label(C, S) for S in extra))
        return "; ".join(parts) or "minimal"


@lru_cache(maxsize=None)
def site_sieves(C: FinCat) -> tuple[Sieve, ...]:
    return tuple(S for c in range(len(C.objects)) for S in all_sieves(C, c))


@lru_cache(maxsize=4096)
def sieve_inclusion(C: FinCat, S: Sieve) -> PresheafMap:
    """The mono ``S -> y(c)`` of a sieve viewed as a subfunctor."""
    Y = yoneda(C, S.obj)
    names = {C.arrows[f].name for f in S.arrows()}
    sel = [[i for i, g in enumerate(Y.carriers[b]) if g in names] for b in range(len(C.objects))]
    return Subobject(Y, sel).inclusion()


def mono_sieves(m: PresheafMap) -> list[Sieve]:
    """Characteristic sieves of a mono at every element of its codomain."""
    sub = Subobject.of_mono(m)
    B = m.target
    return [characteristic_sieve(sub, c, i) for c in range(len(B.carriers)) for i in range(len(B.carriers[c]))]


def minimal_topology(C: FinCat) -> GrothTopology:
    return GrothTopology(C, [{maximal_sieve(C, c)} for c in range(len(C.objects))])


def maximal_topology(C: FinCat) -> GrothTopology:
    return GrothTopology(C, [set(all_sieves(C, c)) for c in range(len(C.objects))])


# -- axioms ---------------------------------------------------------------------

def _axiom_failure(C: FinCat, covers: Sequence[frozenset[Sieve]]):
    for c in range(len(C.objects)):
        if maximal_sieve(C, c) not in covers[c]:
            return MissingMaximal(f"maximal sieve on {C.objects[c]} is not covering")
    for c in range(len(C.objects)):
        for S in sorted(covers[c]):
            for f in C.into[c]:
                T = pullback_sieve(C, f, S)
                if T not in covers[C.src[f]]:
                    return StabilityViolation(
                        f"pullback of covering {sieve_label(C, S)} along {C.arrows[f].name} "
                        f"is {sieve_label(C, T)}, not covering",
                        sieve=S, arrow=C.arrows[f].name,
                    )
    for c in range(len(C.objects)):
        for S in sorted(covers[c]):
            for R in all_sieves(C, c):
                if R in covers[c]:
                    continue
                if all(pullback_sieve(C, f, R) in covers[C.src[f]] for f in S.arrows()):
                    return TransitivityViolation(
                        f"{sieve_label(C, R)} is locally covering over {sieve_label(C, S)} "
                        f"on {C.objects[c]} but not covering",
                        sieve=S, other=R,
                    )
    return None


def check_axioms(C: FinCat, covers: Mapping[str | int, Iterable[Sieve]] | Sequence[Iterable[Sieve]]) -> GrothTopology:
    """Validate a raw sieve assignment; raises on the first failed axiom."""
    if isinstance(covers, Mapping):
        table = [set() for _ in C.objects]
        for o, sieves in covers.items():
            table[C.obj(o)] |= set(sieves)
    else:
        table = [set(s) for s in covers]
    frozen = [frozenset(s) for s in table]
    err = _axiom_failure(C, frozen)
    if err is not None:
        raise err
    return GrothTopology(C, frozen)


def satisfies_axioms(C: FinCat, covers: Sequence[frozenset[Sieve]]) -> bool:
    return _axiom_failure(C, covers) is None


# -- generation -------------------------------------------------------------------

def generate_from_sieves(C: FinCat, sieves: Iterable[Sieve]) -> GrothTopology:
    """Least topology whose covering sieves include ``sieves``."""
    covers = [{maximal_sieve(C, c)} for c in range(len(C.objects))]
    for S in sieves:
        covers[S.obj].add(S)
    changed = True
    while changed:
        changed = False
        for c in range(len(C.objects)):
            for S in list(covers[c]):
                for f in C.into[c]:
                    T = pullback_sieve(C, f, S)
                    if T not in covers[T.obj]:
                        covers[T.obj].add(T)
                        changed = True
        for c in range(len(C.objects)):
            for R in all_sieves(C, c):
                if R in covers[c]:
                    continue
                if any(all(pullback_sieve(C, f, R) in covers[C.src[f]] for f in S.arrows()) for S in covers[c]):
                    covers[c].add(R)
                    changed = True
    return GrothTopology(C, covers)


def generate(sigma: Iterable[PresheafMap], base: FinCat | None = None) -> GrothTopology:
    """Least topology containing a set of monos of presheaves."""
    sigma = list(sigma)
    if base is None:
        if not sigma:
            raise ValueError("generate() of an empty set needs the base site")
        base = sigma[0].base
    sieves = []
    for m in sigma:
        sieves.extend(mono_sieves(m))
    return generate_from_sieves(base, sieves)


def meet(G1: GrothTopology, G2: GrothTopology) -> GrothTopology:
    covers = [a & b for a, b in zip(G1.covers, G2.covers)]
    return check_axioms(G1.base, covers)


def join(G1: GrothTopology, G2: GrothTopology) -> GrothTopology:
    return generate_from_sieves(G1.base, G1.covering_sieves() + G2.covering_sieves())


def join_all(C: FinCat, topologies: Iterable[GrothTopology]) -> GrothTopology:
    sieves: list[Sieve] = []
    for G in topologies:
        sieves.extend(G.covering_sieves())
    return generate_from_sieves(C, sieves)


# -- enumeration -------------------------------------------------------------------

def enumerate_topologies(C: FinCat) -> list[GrothTopology]:
    """Every Grothendieck topology on ``C`` by filtered exhaustive search."""
    optional = []
    total = 1
    for c in range(len(C.objects)):
        top = maximal_sieve(C, c)
        opts = [S for S in all_sieves(C, c) if S != top]
        optional.append(opts)
        total *= 2 ** len(opts)
    caps.check("sieves", total, "candidate sieve assignments")
    found = []
    choices = [
        [frozenset({maximal_sieve(C, c)} | {S for k, S in enumerate(opts) if bits >> k & 1})
         for bits in range(2 ** len(opts))]
        for c, opts in enumerate(optional)
    ]
    for covers in product(*choices):
        if satisfies_axioms(C, covers):
            found.append(GrothTopology(C, covers))
    return sorted(found, key=lambda G: G.code)


# -- Lawvere-Tierney topologies -----------------------------------------------------

class LTTopology:
    """A closure operator ``j`` on the subobject classifier."""

    __slots__ = ("j",)

    def __init__(self, j: PresheafMap, check: bool = True):
        self.j = j
        if check:
            self.check()

    @property
    def base(self) -> FinCat:
        return self.j.base

    @classmethod
    def from_tables(cls, C: FinCat, tables: Sequence[Sequence[int]], check: bool = True) -> "LTTopology":
        Om = omega(C).presheaf
        return cls(PresheafMap(Om, Om, tuple(tuple(t) for t in tables)), check=check)

    def apply(self, S: Sieve) -> Sieve:
        Om = self.j.source
        return Om.carriers[S.obj][self.j.components[S.obj][Om.index(S.obj, S)]]

    def check(self) -> None:
        Om, C = self.j.source, self.base
        if self.j.target != Om or Om != omega(C).presheaf:
            raise NotAClosureOperator("j must be an endomorphism of Omega")
        try:
            self.j.check()
        except Exception as exc:
            raise NotAClosureOperator(f"j is not natural: {exc}") from None
        for c in range(len(C.objects)):
            car, comp = Om.carriers[c], self.j.components[c]
            for k, S in enumerate(car):
                if not S.issubset(car[comp[k]]):
                    raise NotAClosureOperator(f"j is not inflating at {sieve_label(C, S)}")
                if comp[comp[k]] != comp[k]:
                    raise NotAClosureOperator(f"j is not idempotent at {sieve_label(C, S)}")
                for m, T in enumerate(car):
                    if S.issubset(T) and not car[comp[k]].issubset(car[comp[m]]):
                        raise NotAClosureOperator(
                            f"j is not monotone on {sieve_label(C, S)} <= {sieve_label(C, T)}"
                        )

    def __le__(self, other: "LTTopology") -> bool:
        return all(self.apply(S).issubset(other.apply(S)) for S in site_sieves(self.base))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LTTopology):
            return NotImplemented
        return self.j == other.j

    def __hash__(self) -> int:
        return hash(self.j)

    def __repr__(self) -> str:
        C = self.base
        return "LTTopology(" + ", ".join(
            f"{sieve_label(C, S)}->{sieve_label(C, self.apply(S))}" for S in site_sieves(C)
        ) + ")"


def lt_to_groth(lt: LTTopology) -> GrothTopology:
    """The dense sieves of ``j``: those it sends to the maximal sieve."""
    C = lt.base
    covers = [
        {S for S in all_sieves(C, c) if lt.apply(S) == maximal_sieve(C, c)}
        for c in range(len(C.objects))
    ]
    return GrothTopology(C, covers)


def groth_to_lt(G: GrothTopology) -> LTTopology:
    """Closure operator classifying the image of the univalent generator of ``G``."""
    C = G.base
    gen = univalent_generator(G.covering_monos(), base=C)
    return LTTopology(classify(gen.classes), check=False)


def _closure_operators_on(C: FinCat, c: int) -> list[tuple[int, ...]]:
    car = omega(C).presheaf.carriers[c]
    n = len(car)
    ups = [[m for m in range(n) if car[k].issubset(car[m])] for k in range(n)]
    out = []
    for choice in product(*ups):
        if any(choice[choice[k]] != choice[k] for k in range(n)):
            continue
        if any(
            car[k].issubset(car[m]) and not car[choice[k]].issubset(car[choice[m]])
            for k in range(n) for m in range(n)
        ):
            continue
        out.append(choice)
    return out


def enumerate_closure_operators(C: FinCat) -> list[LTTopology]:
    """Every natural closure operator on Omega, by exhaustive search.

    Independent of the sieve-assignment enumeration: it ranges over
    pointwise closure operators and keeps the natural families.
    """
    Om = omega(C).presheaf
    per_object = [_closure_operators_on(C, c) for c in range(len(C.objects))]
    total = 1
    for ops in per_object:
        total *= len(ops)
    if total > caps.current().sieves:
        raise SizeCapExceeded(f"{total} candidate closure operators exceed the cap")
    arrows_at = [[] for _ in C.objects]
    for f in range(len(C.arrows)):
        arrows_at[max(C.src[f], C.tgt[f])].append(f)
    found: list[LTTopology] = []
    chosen: list[tuple[int, ...]] = []

    def natural_at(k: int) -> bool:
        for f in arrows_at[k]:
            d, c = C.src[f], C.tgt[f]
            act = Om.actions[f]
            jd, jc = chosen[d], chosen[c]
            if any(jd[act[s]] != act[jc[s]] for s in range(len(jc))):
                return False
        return True

    def extend(k: int) -> None:
        if k == len(per_object):
            found.append(LTTopology.from_tables(C, list(chosen), check=False))
            return
        for op in per_object[k]:
            chosen.append(op)
            if natural_at(k):
                extend(k + 1)
            chosen.pop()

    extend(0)
    return found


# -- covering classes -----------------------------------------------------------------

@dataclass(frozen=True)
class CoveringClass:
    """Maps whose image is a covering mono for ``topology``."""

    topology: GrothTopology

    def member(self, f: PresheafMap) -> bool:
        return self.topology.contains_mono(image_factorization(f)[1])

    __contains__ = member

    def restricted_to_monos(self, monos: Iterable[PresheafMap]) -> list[PresheafMap]:
        return [m for m in monos if is_mono(m) and self.member(m)]


def covering_class(G: GrothTopology) -> CoveringClass:
    return CoveringClass(G)


def topology_from_covering_class(cls: CoveringClass, C: FinCat) -> GrothTopology:
    """Recover a topology from a covering class via its monos on representables."""
    covers = [
        {S for S in all_sieves(C, c) if cls.member(sieve_inclusion(C, S))}
        for c in range(len(C.objects))
    ]
    return GrothTopology(C, covers)


def hasse_edges(topologies: Sequence[GrothTopology]) -> list[tuple[int, int]]:
    """Covering relations of the inclusion order, as index pairs."""
    edges = []
    n = len(topologies)
    for a in range(n):
        for b in range(n):
            if a != b and topologies[a] < topologies[b]:
                if not any(
                    topologies[a] < topologies[k] < topologies[b] for k in range(n) if k not in (a, b)
                ):
                    edges.append((a, b))
    return edges
