"""Standard test sites and exhaustive corpora of small objects and maps.

The verification suites (and the test-suite) quantify over these corpora;
they are deliberately small enough for exhaustive checks.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

from . import fincat
from .classifier import all_sieves
from .fincat import FinCat
from .presheaf import (
    Presheaf,
    PresheafMap,
    constant,
    coproduct,
    enumerate_maps,
    initial,
    terminal,
    yoneda,
)
from .topology import sieve_inclusion

SITE_BUILDERS = {
    "terminal": fincat.terminal,
    "interval": fincat.interval,
    "parallel_pair": fincat.parallel_pair,
    "square": fincat.commutative_square,
    "monoid3": fincat.monoid3,
}


@lru_cache(maxsize=None)
def site(name: str) -> FinCat:
    return SITE_BUILDERS[name]()


def standard_sites() -> dict[str, FinCat]:
    return {name: site(name) for name in SITE_BUILDERS}


@lru_cache(maxsize=None)
def sieve_monos(C: FinCat) -> tuple[PresheafMap, ...]:
    """Every sieve inclusion ``S -> y(c)``: the representable-sieve mono corpus."""
    return tuple(sieve_inclusion(C, S) for c in range(len(C.objects)) for S in all_sieves(C, c))


@lru_cache(maxsize=None)
def small_presheaves(C: FinCat) -> tuple[Presheaf, ...]:
    """``0``, ``1``, ``1 + 1`` and the representables."""
    one = terminal(C)
    objs = [initial(C), one, coproduct(one, one).obj]
    objs.extend(yoneda(C, c) for c in C.objects)
    return tuple(objs)


@lru_cache(maxsize=None)
def small_maps(C: FinCat, limit_per_pair: int = 12) -> tuple[PresheafMap, ...]:
    """Maps between small presheaves, plus all sieve inclusions, without repeats."""
    out: list[PresheafMap] = []
    seen = set()
    objs = small_presheaves(C)
    for X in objs:
        for Y in objs:
            for k, f in enumerate(enumerate_maps(X, Y)):
                if k >= limit_per_pair:
                    break
                if f not in seen:
                    seen.add(f)
                    out.append(f)
    for m in sieve_monos(C):
        if m not in seen:
            seen.add(m)
            out.append(m)
    return tuple(out)


def composable_pairs(maps) -> list[tuple[PresheafMap, PresheafMap]]:
    return [(f, g) for f in maps for g in maps if f.target == g.source]


def cospans(maps, limit: int | None = None) -> list[tuple[PresheafMap, PresheafMap]]:
    out = []
    for f, g in combinations(maps, 2):
        if f.target == g.target:
            out.append((f, g))
            if limit is not None and len(out) >= limit:
                break
    return out


def two(C: FinCat) -> Presheaf:
    return constant(C, [0, 1])
