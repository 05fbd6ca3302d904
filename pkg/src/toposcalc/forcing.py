"""Forcing conditions compiled to Grothendieck topologies.

A forcing condition asks for the least localization under which every map of
``sigma`` acquires a property ``theta``.  Each condition is rewritten into a
set of monos (images of iterated diagonals) whose generated topology is the
answer; the result is then checked by sheafifying the generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .classifier import all_sieves
from .errors import (
    EnumerationUnavailable,
    ForcingVerificationFailed,
    IsoForcingIncomplete,
    NotNested,
    ResidualNotTrivial,
    SizeCapExceeded,
    StabilizationFailure,
)
from .fincat import FinCat
from .presheaf import (
    INF,
    PresheafMap,
    diagonal,
    diagonal_tower,
    image,
    is_iso,
    is_mono,
    is_surjection,
)
from .sheaf import LocalizationHandle, handle_for
from .topology import (
    GrothTopology,
    covering_class,
    enumerate_topologies,
    generate,
    generate_from_sieves,
    sieve_inclusion,
)

# diagonals of a map of sets are monos, so D^2 of anything is invertible
TOWER_HEIGHT = 2
CHECK_HEIGHT = 4


@dataclass(frozen=True)
class Theta:
    kind: str  # "iso" | "surj" | "mono" | "conn"
    n: float | None = None

    def __post_init__(self):
        if self.kind not in ("iso", "surj", "mono", "conn"):
            raise ValueError(f"unknown property {self.kind!r}")
        if self.kind == "conn" and (self.n is None or self.n < -1):
            raise ValueError("conn needs an index n >= -1")

    @classmethod
    def parse(cls, text: str) -> "Theta":
        text = text.strip().lower()
        if text.startswith("conn:"):
            raw = text[5:]
            n = INF if raw in ("inf", "oo", "infinity") else int(raw)
            return cls("conn", n)
        return cls(text)

    def __str__(self) -> str:
        if self.kind != "conn":
            return self.kind
        return "conn:inf" if self.n == INF else f"conn:{int(self.n)}"


ISO, SURJ, MONO = Theta("iso"), Theta("surj"), Theta("mono")


def conn(n: float) -> Theta:
    return Theta("conn", n)


@dataclass(frozen=True)
class ForcingCondition:
    sigma: tuple[PresheafMap, ...]
    theta: Theta
    base: FinCat

    def __post_init__(self):
        for f in self.sigma:
            if f.base != self.base:
                raise ValueError("all maps of a forcing condition must share the base site")


def forcing(sigma: Iterable[PresheafMap], theta: Theta | str, base: FinCat) -> ForcingCondition:
    if isinstance(theta, str):
        theta = Theta.parse(theta)
    return ForcingCondition(tuple(sigma), theta, base)


def _stable_tower(f: PresheafMap) -> list[PresheafMap]:
    tower = diagonal_tower(f, TOWER_HEIGHT)
    if not is_mono(tower[TOWER_HEIGHT]):
        raise StabilizationFailure("second diagonal is not a monomorphism")
    return tower


def diagonal_images(f: PresheafMap, height: float) -> list[PresheafMap]:
    """Images of ``D^k f`` for ``0 <= k <= height``, stopping at stabilization."""
    if height == INF:
        return [image(v) for v in _stable_tower(f)]
    out = []
    v = f
    for k in range(int(height) + 1):
        out.append(image(v))
        if is_iso(v):
            break
        if k < height:
            v = diagonal(v)
    return out


def generators(fc: ForcingCondition) -> list[PresheafMap]:
    """Monos whose generated topology answers the forcing condition."""
    th = fc.theta
    out: list[PresheafMap] = []
    for f in fc.sigma:
        if th.kind == "surj":
            out.append(image(f))
        elif th.kind == "mono":
            out.extend(diagonal_images(diagonal(f), INF))
        elif th.kind == "conn":
            out.extend(diagonal_images(f, th.n + 1))
        else:
            out.extend(diagonal_images(f, INF))
    return out


def has_property(handle: LocalizationHandle, f: PresheafMap, theta: Theta) -> bool:
    """Whether the sheafification of ``f`` has ``theta`` in the sheaf topos.

    Limits of sheaves are computed pointwise, but a surjection of sheaves is
    a map whose image is a covering mono, not a pointwise surjection.
    """
    Lf = handle.sheafify_map(f)
    if theta.kind == "iso":
        return is_iso(Lf)
    if theta.kind == "mono":
        return is_mono(Lf)
    cover = covering_class(handle.topology)
    if theta.kind == "surj":
        return cover.member(Lf)
    height = TOWER_HEIGHT if theta.n == INF else int(theta.n) + 1
    v = Lf
    for k in range(height + 1):
        if not cover.member(v):
            return False
        if is_iso(v):
            return True
        v = diagonal(v)
    return True


@dataclass
class CompiledForcing:
    condition: ForcingCondition
    handle: LocalizationHandle
    transcript: list[dict] = field(default_factory=list)


def compile_forcing(fc: ForcingCondition, verify: bool = True) -> CompiledForcing:
    """Compile to a localization and check each generator acquired ``theta``."""
    G = generate(generators(fc), base=fc.base)
    handle = handle_for(G)
    out = CompiledForcing(fc, handle)
    if not verify:
        return out
    for k, f in enumerate(fc.sigma):
        ok = has_property(handle, f, fc.theta)
        out.transcript.append({
            "generator": k,
            "property": str(fc.theta),
            "holds": ok,
            "pointwise_surjective": is_surjection(handle.sheafify_map(f)),
        })
        if not ok:
            if fc.theta.kind == "iso":
                raise IsoForcingIncomplete(f"generator {k} is not inverted by the compiled localization")
            raise ForcingVerificationFailed(f"generator {k} does not become {fc.theta}")
    return out


def compile(fc: ForcingCondition) -> LocalizationHandle:  # noqa: A001 - mirrors the operation name
    return compile_forcing(fc).handle


def forcing_topologies(
    fc: ForcingCondition, topologies: Sequence[GrothTopology]
) -> list[GrothTopology]:
    return [G for G in topologies if all(has_property(handle_for(G), f, fc.theta) for f in fc.sigma)]


def minimality_check(
    fc: ForcingCondition,
    handle: LocalizationHandle,
    topologies: Sequence[GrothTopology] | None = None,
) -> bool:
    """The compiled topology is the least enumerated topology forcing ``fc``."""
    if topologies is None:
        try:
            topologies = enumerate_topologies(fc.base)
        except SizeCapExceeded as exc:
            raise EnumerationUnavailable(str(exc)) from None
    candidates = forcing_topologies(fc, topologies)
    G = handle.topology
    return G in candidates and all(G <= H for H in candidates)


def topological_part(sigma: Iterable[PresheafMap], base: FinCat) -> GrothTopology:
    """Topology generated by the images of all iterated diagonals of ``sigma``."""
    monos: list[PresheafMap] = []
    for f in sigma:
        monos.extend(diagonal_images(f, INF))
    return generate(monos, base=base)


def is_hypercovering(f: PresheafMap, G: GrothTopology, height: int = TOWER_HEIGHT) -> bool:
    """All iterated diagonals of ``f`` are ``G``-coverings."""
    tower = diagonal_tower(f, max(height, TOWER_HEIGHT))
    if not is_mono(tower[TOWER_HEIGHT]):
        raise StabilizationFailure("second diagonal is not a monomorphism")
    cover = covering_class(G)
    return all(cover.member(v) for v in tower)


# -- factorizations of localizations ------------------------------------------------

@dataclass
class ResidualLeg:
    source: GrothTopology
    target: GrothTopology
    trivial: bool
    inverted_monos: list[str] = field(default_factory=list)


@dataclass
class FactorizationOfLocalization:
    topological: LocalizationHandle
    residual: ResidualLeg


def inverted_sieves(handle: LocalizationHandle) -> list:
    """Sieves whose inclusion into their representable is inverted."""
    C = handle.base
    return [
        S
        for c in range(len(C.objects))
        for S in all_sieves(C, c)
        if handle.inverts(sieve_inclusion(C, S))
    ]


def tc_factor(handle: LocalizationHandle) -> FactorizationOfLocalization:
    """Split a localization into its topological part and a cotopological residual.

    Every left exact localization of a presheaf topos is topological, so the
    residual must be trivial; anything else raises ``ResidualNotTrivial``.
    """
    C = handle.base
    G_top = generate_from_sieves(C, inverted_sieves(handle))
    top = handle_for(G_top)
    offending = []
    for c in range(len(C.objects)):
        for S in all_sieves(C, c):
            m = sieve_inclusion(C, S)
            if handle.inverts(m) and not top.inverts(m):
                offending.append(f"{C.objects[c]}:{S.names(C)}")
    trivial = G_top == handle.topology and not offending
    if not trivial:
        raise ResidualNotTrivial(
            f"residual localization inverts non-trivial monos: {offending or 'topologies differ'}"
        )
    return FactorizationOfLocalization(top, ResidualLeg(G_top, handle.topology, True, offending))


@dataclass
class LocConsFactorization:
    localization: LocalizationHandle
    source: GrothTopology
    checked: int
    failures: list[str]

    @property
    def conservative(self) -> bool:
        return not self.failures


def loc_cons_factor(
    G: GrothTopology, G2: GrothTopology, corpus: Iterable[PresheafMap] = ()
) -> LocConsFactorization:
    """Split ``Sh(G) -> Sh(G2)`` for ``G <= G2`` into a localization and a
    conservative comparison, which is checked on the corpus maps between
    ``G2``-sheaves."""
    if not G <= G2:
        raise NotNested("the first topology is not contained in the second")
    target = handle_for(G2)
    checked, failures = 0, []
    for k, g in enumerate(corpus):
        if not (target.is_sheaf(g.source) and target.is_sheaf(g.target)):
            continue
        checked += 1
        if target.inverts(g) and not is_iso(g):
            failures.append(f"map {k} is inverted but not invertible")
    return LocConsFactorization(target, G, checked, failures)


def is_equivalence_leg(fac: LocConsFactorization) -> bool:
    return fac.localization.topology == fac.source

