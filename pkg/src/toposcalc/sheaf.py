"""Sheaves on a finite site and sheafification by the double plus construction."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .classifier import Sieve, maximal_sieve, pullback_sieve
from .errors import ShapeMismatch
from .presheaf import (
    Presheaf,
    PresheafMap,
    enumerate_maps,
    is_iso,
    pullback,
    terminal,
)
from .topology import GrothTopology, sieve_inclusion


def matching_families(X: Presheaf, S: Sieve) -> list[tuple[int, ...]]:
    """Matching families for ``X`` on ``S``, as element indices along ``S.arrows()``.

    A family assigns ``x_g in X(dom g)`` to each ``g in S`` with
    ``X(h)(x_g) = x_{g.h}``; equivalently a map from the sieve to ``X``.
    """
    sub, where = _sieve_layout(X.base, S)
    return [tuple(m.components[b][k] for b, k in where) for m in enumerate_maps(sub, X)]


@lru_cache(maxsize=4096)
def _sieve_layout(C, S: Sieve) -> tuple[Presheaf, tuple[tuple[int, int], ...]]:
    """The sieve as a presheaf, and where each of its arrows sits in it."""
    inc = sieve_inclusion(C, S)
    sub = inc.source
    where = {}
    for b, comp in enumerate(inc.components):
        for k in range(len(comp)):
            where[C.arrow(sub.carriers[b][k])] = (b, k)
    return sub, tuple(where[g] for g in S.arrows())


def restriction_family(X: Presheaf, S: Sieve, i: int) -> tuple[int, ...]:
    """The family ``(X(g)(x))_{g in S}`` induced by ``x = X(c)[i]``."""
    return tuple(X.actions[g][i] for g in S.arrows())


def is_sheaf(X: Presheaf, G: GrothTopology) -> bool:
    for c in range(len(X.carriers)):
        for S in sorted(G.covers[c]):
            families = matching_families(X, S)
            induced = {restriction_family(X, S, i) for i in range(len(X.carriers[c]))}
            if len(induced) != len(X.carriers[c]) or induced != set(families):
                return False
    return True


def is_separated(X: Presheaf, G: GrothTopology) -> bool:
    for c in range(len(X.carriers)):
        for S in G.covers[c]:
            induced = {restriction_family(X, S, i) for i in range(len(X.carriers[c]))}
            if len(induced) != len(X.carriers[c]):
                return False
    return True


@dataclass
class PlusStage:
    """Result of one plus construction, with the lookup needed to map into it."""

    source: Presheaf
    topology: GrothTopology
    presheaf: Presheaf
    unit: PresheafMap
    classes: list[dict[tuple[Sieve, tuple[int, ...]], int]] = field(repr=False)

    def class_of(self, c: int, S: Sieve, family: tuple[int, ...]) -> int:
        return self.classes[c][(S, family)]


def plus(X: Presheaf, G: GrothTopology) -> PlusStage:
    """``X+(c)``: matching families on covering sieves of ``c`` modulo agreement
    on a covering sieve.  Each class is named by its least ``(sieve, family)``.
    """
    C = X.base
    fams: dict[Sieve, list[tuple[int, ...]]] = {}
    nodes_at, class_maps, reps_at = [], [], []
    for c in range(len(C.objects)):
        nodes = []
        for S in sorted(G.covers[c]):
            if S not in fams:
                fams[S] = matching_families(X, S)
            nodes.extend((S, fam) for fam in fams[S])
        parent = list(range(len(nodes)))

        def find(k: int) -> int:
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        for a in range(len(nodes)):
            Sa, xa = nodes[a]
            pos_a = {g: n for n, g in enumerate(Sa.arrows())}
            for b in range(a + 1, len(nodes)):
                if find(a) == find(b):
                    continue
                Sb, xb = nodes[b]
                pos_b = {g: n for n, g in enumerate(Sb.arrows())}
                agree = 0
                for g in (Sa & Sb).arrows():
                    if xa[pos_a[g]] == xb[pos_b[g]]:
                        agree |= 1 << g
                # the agreement set is itself a sieve
                if Sieve(c, agree) in G.covers[c]:
                    ra, rb = find(a), find(b)
                    parent[max(ra, rb)] = min(ra, rb)
        roots = sorted({find(k) for k in range(len(nodes))})
        pos = {r: n for n, r in enumerate(roots)}
        nodes_at.append(nodes)
        reps_at.append([nodes[r] for r in roots])
        class_maps.append({nodes[k]: pos[find(k)] for k in range(len(nodes))})

    def value(c: int, S: Sieve, fam: tuple[int, ...]):
        names = tuple(C.arrows[g].name for g in S.arrows())
        vals = tuple(X.carriers[C.src[g]][x] for g, x in zip(S.arrows(), fam))
        return (names, vals)

    carriers = tuple(tuple(value(c, S, fam) for S, fam in reps) for c, reps in enumerate(reps_at))
    actions = []
    for f in range(len(C.arrows)):
        d, c = C.src[f], C.tgt[f]
        row = []
        for S, fam in reps_at[c]:
            T = pullback_sieve(C, f, S)
            pos_s = {g: n for n, g in enumerate(S.arrows())}
            restricted = tuple(fam[pos_s[C.circ(f, g)]] for g in T.arrows())
            row.append(class_maps[d][(T, restricted)])
        actions.append(tuple(row))
    Xp = Presheaf(C, carriers, tuple(actions))
    unit = []
    for c in range(len(C.objects)):
        top = maximal_sieve(C, c)
        unit.append(tuple(class_maps[c][(top, restriction_family(X, top, i))] for i in range(len(X.carriers[c]))))
    return PlusStage(X, G, Xp, PresheafMap(X, Xp, tuple(unit)), class_maps)


def plus_map(f: PresheafMap, src: PlusStage, tgt: PlusStage) -> PresheafMap:
    """``f+ : X+ -> Y+`` acting on representatives."""
    if src.source != f.source or tgt.source != f.target:
        raise ShapeMismatch("plus stages do not match the map")
    C = f.base
    comps = []
    for c in range(len(C.objects)):
        reps = {}
        for (S, fam), k in src.classes[c].items():
            reps.setdefault(k, (S, fam))
        row = []
        for k in range(len(src.presheaf.carriers[c])):
            S, fam = reps[k]
            pushed = tuple(f.components[C.src[g]][x] for g, x in zip(S.arrows(), fam))
            row.append(tgt.class_of(c, S, pushed))
        comps.append(tuple(row))
    return PresheafMap(src.presheaf, tgt.presheaf, tuple(comps))


def minimal_cover_plus_sizes(X: Presheaf, G: GrothTopology) -> list[int]:
    """Sizes of ``X+`` computed from the least covering sieve of each object.

    On a finite site covering sieves are closed under intersection, so the
    colimit defining ``X+(c)`` is attained at their intersection.  Used only
    as a cross-check of :func:`plus`.
    """
    sizes = []
    for c in range(len(X.carriers)):
        least = maximal_sieve(X.base, c)
        for S in G.covers[c]:
            least = least & S
        sizes.append(len(matching_families(X, least)))
    return sizes


@dataclass
class Sheafification:
    presheaf: Presheaf
    sheaf: Presheaf
    unit: PresheafMap
    first: PlusStage
    second: PlusStage


class LocalizationHandle:
    """Sheafification at a Grothendieck topology.

    The congruence of maps inverted by the reflector is only ever queried
    through :meth:`inverts`.
    """

    def __init__(self, topology: GrothTopology):
        self.topology = topology
        self._cache: dict[Presheaf, Sheafification] = {}
        self._sheaf_cache: dict[Presheaf, bool] = {}

    @property
    def base(self):
        return self.topology.base

    def sheafification(self, X: Presheaf) -> Sheafification:
        hit = self._cache.get(X)
        if hit is None:
            first = plus(X, self.topology)
            second = plus(first.presheaf, self.topology)
            hit = Sheafification(X, second.presheaf, first.unit.then(second.unit), first, second)
            self._cache[X] = hit
        return hit

    def sheafify(self, X: Presheaf) -> tuple[Presheaf, PresheafMap]:
        s = self.sheafification(X)
        return s.sheaf, s.unit

    def sheafify_map(self, f: PresheafMap) -> PresheafMap:
        a, b = self.sheafification(f.source), self.sheafification(f.target)
        once = plus_map(f, a.first, b.first)
        return plus_map(once, a.second, b.second)

    def is_sheaf(self, X: Presheaf) -> bool:
        hit = self._sheaf_cache.get(X)
        if hit is None:
            hit = self._sheaf_cache[X] = is_sheaf(X, self.topology)
        return hit

    def inverts(self, f: PresheafMap) -> bool:
        return is_iso(self.sheafify_map(f))

    def __repr__(self) -> str:
        return f"LocalizationHandle({self.topology.label()})"


@lru_cache(maxsize=256)
def handle_for(G: GrothTopology) -> LocalizationHandle:
    """Shared handle (and sheafification cache) for a topology."""
    return LocalizationHandle(G)


def sheafify(X: Presheaf, G: GrothTopology) -> tuple[Presheaf, PresheafMap]:
    return handle_for(G).sheafify(X)


def inverts(handle: LocalizationHandle, f: PresheafMap) -> bool:
    return handle.inverts(f)


def check_reflection(handle: LocalizationHandle, X: Presheaf, Y: Presheaf) -> bool:
    """Precomposition with the unit is a bijection ``[LX, Y] -> [X, Y]`` for a sheaf ``Y``."""
    LX, unit = handle.sheafify(X)
    through = [unit.then(g) for g in enumerate_maps(LX, Y)]
    direct = list(enumerate_maps(X, Y))
    return len(set(through)) == len(through) and set(through) == set(direct)


@dataclass
class LexReport:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_left_exact(
    handle: LocalizationHandle, cospans: Iterable[tuple[PresheafMap, PresheafMap]]
) -> LexReport:
    """Compare the sheafified pullback with the pullback of the sheafified cospan."""
    report = LexReport()
    one = terminal(handle.base)
    L1, _ = handle.sheafify(one)
    report.checked += 1
    if any(len(c) != 1 for c in L1.carriers):
        report.failures.append("terminal object not preserved")
    for k, (f, g) in enumerate(cospans):
        report.checked += 1
        pb = pullback(f, g)
        Lpb = pullback(handle.sheafify_map(f), handle.sheafify_map(g))
        gap = Lpb.lift(handle.sheafify_map(pb.p1), handle.sheafify_map(pb.p2))
        if not is_iso(gap):
            report.failures.append(f"cospan {k}: comparison map is not invertible")
    return report


def sheaves_among(handle: LocalizationHandle, objects: Sequence[Presheaf]) -> list[int]:
    return [k for k, X in enumerate(objects) if handle.is_sheaf(X)]
