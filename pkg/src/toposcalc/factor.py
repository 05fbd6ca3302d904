"""Orthogonality checks and the factorization systems of a topology."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from . import caps
from .classifier import Subobject, classify, pull_back_true
from .errors import NotAMono, SizeCapExceeded
from .presheaf import (
    PresheafMap,
    base_change,
    enumerate_maps,
    image_factorization,
    is_mono,
)
from .topology import GrothTopology, LTTopology, covering_class, groth_to_lt


@dataclass(frozen=True)
class Factorization:
    left: PresheafMap
    right: PresheafMap
    middle: Subobject

    def composite(self) -> PresheafMap:
        return self.left.then(self.right)


def closure(lt: LTTopology, S: Subobject) -> Subobject:
    """``j_A(S)``: pull ``true`` back along ``j . chi_S``."""
    return pull_back_true(classify(S).then(lt.j))


def is_dense(lt: LTTopology, m: PresheafMap) -> bool:
    return closure(lt, Subobject.of_mono(m)).is_total()


def is_closed(lt: LTTopology, m: PresheafMap) -> bool:
    S = Subobject.of_mono(m)
    return closure(lt, S) == S


def dense_closed_factor(m: PresheafMap, lt: LTTopology) -> Factorization:
    """Split a mono as a dense inclusion followed by a closed one."""
    if not is_mono(m):
        raise NotAMono("dense-closed factorization needs a monomorphism")
    closed = closure(lt, Subobject.of_mono(m))
    return Factorization(closed.corestrict(m), closed.inclusion(), closed)


def cover_closed_factor(f: PresheafMap, G: GrothTopology) -> Factorization:
    """Split any map as a ``G``-covering map followed by a closed mono.

    The middle object is the closure of the image of ``f``.
    """
    lt = groth_to_lt(G)
    _, im = image_factorization(f)
    closed = closure(lt, Subobject.of_mono(im))
    fac = Factorization(closed.corestrict(f), closed.inclusion(), closed)
    assert covering_class(G).member(fac.left)
    assert is_closed(lt, fac.right)
    return fac


# -- orthogonality ------------------------------------------------------------------

@dataclass(frozen=True)
class LiftingProblem:
    """A commuting square ``f . top = bottom . u``."""

    u: PresheafMap
    f: PresheafMap
    top: PresheafMap
    bottom: PresheafMap

    def commutes(self) -> bool:
        return self.top.then(self.f) == self.u.then(self.bottom)

    def fillers(self) -> Iterator[PresheafMap]:
        """Diagonals ``d: B -> X`` with ``d . u = top`` and ``f . d = bottom``."""
        u, f = self.u, self.f
        fixed = {}
        for c, comp in enumerate(u.components):
            for a, b in enumerate(comp):
                x = self.top.components[c][a]
                if fixed.setdefault((c, b), x) != x:
                    return
        X, B = f.source, u.target
        allowed = [
            [frozenset(x for x in range(len(X.carriers[c])) if f.components[c][x] == self.bottom.components[c][y])
             for y in range(len(B.carriers[c]))]
            for c in range(len(B.carriers))
        ]
        yield from enumerate_maps(B, X, fixed=fixed, allowed=allowed)


def lifting_problems(u: PresheafMap, f: PresheafMap) -> Iterator[LiftingProblem]:
    A, X = u.source, f.source
    budget = caps.current().sieves
    seen = 0
    for bottom in enumerate_maps(u.target, f.target):
        allowed = [
            [frozenset(x for x in range(len(X.carriers[c])) if f.components[c][x] == bottom.components[c][u.components[c][a]])
             for a in range(len(A.carriers[c]))]
            for c in range(len(A.carriers))
        ]
        for top in enumerate_maps(A, X, allowed=allowed):
            seen += 1
            if seen > budget:
                raise SizeCapExceeded(f"more than {budget} lifting problems")
            yield LiftingProblem(u, f, top, bottom)


def check_orthogonal(u: PresheafMap, f: PresheafMap) -> bool:
    """Every lifting problem of ``u`` against ``f`` has exactly one filler."""
    for problem in lifting_problems(u, f):
        count = 0
        for _ in problem.fillers():
            count += 1
            if count > 1:
                return False
        if count != 1:
            return False
    return True


def check_fiberwise_orthogonal(u: PresheafMap, f: PresheafMap, universe: Iterable[PresheafMap]) -> bool:
    """``u`` is orthogonal to ``f`` after every base change along ``universe``."""
    if not check_orthogonal(u, f):
        return False
    for g in universe:
        if g.target != u.target:
            continue
        if not check_orthogonal(base_change(u, g), f):
            return False
    return True


def is_orthogonal_to_itself(u: PresheafMap) -> bool:
    return check_orthogonal(u, u)

