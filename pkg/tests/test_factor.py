from __future__ import annotations

import pytest

from toposcalc import corpus as K
from toposcalc.classifier import Subobject, generated_sieve, subobjects
from toposcalc.errors import NotAMono
from toposcalc.factor import (
    LiftingProblem,
    check_fiberwise_orthogonal,
    check_orthogonal,
    closure,
    cover_closed_factor,
    dense_closed_factor,
    is_closed,
    is_dense,
    is_orthogonal_to_itself,
    lifting_problems,
)
from toposcalc.fincat import interval, terminal
from toposcalc.presheaf import (
    PresheafMap,
    base_change,
    constant,
    identity,
    initial,
    is_iso,
    is_mono,
    is_surjection,
    to_terminal,
    yoneda,
)
from toposcalc.presheaf import terminal as one
from toposcalc.topology import (
    covering_class,
    enumerate_topologies,
    generate_from_sieves,
    groth_to_lt,
    maximal_topology,
    minimal_topology,
)


@pytest.fixture
def dense():
    C = interval()
    G = generate_from_sieves(C, [generated_sieve(C, "b", ["f"])])
    m = PresheafMap(yoneda(C, "a"), yoneda(C, "b"), ((0,), ()))
    return C, G, groth_to_lt(G), m


def test_closure_under_extreme_topologies(site):
    j_min = groth_to_lt(minimal_topology(site))
    j_max = groth_to_lt(maximal_topology(site))
    for A in K.small_presheaves(site)[:5]:
        for S in subobjects(A):
            assert closure(j_min, S) == S
            assert closure(j_max, S).is_total()


def test_closure_of_the_dense_sieve(dense):
    C, G, j, m = dense
    assert closure(j, Subobject.of_mono(m)).is_total()
    fac = dense_closed_factor(m, j)
    assert fac.left == m.__class__(m.source, fac.middle.presheaf, fac.left.components)
    assert is_iso(fac.right)
    assert fac.composite() == m


def test_closure_is_a_closure_operator(site):
    for G in enumerate_topologies(site):
        j = groth_to_lt(G)
        for A in K.small_presheaves(site)[:5]:
            subs = subobjects(A)
            for S in subs:
                cS = closure(j, S)
                assert S <= cS and closure(j, cS) == cS
                for T in subs:
                    if S <= T:
                        assert cS <= closure(j, T)


def test_dense_closed_factor_of_dense_and_closed_monos(site):
    for G in enumerate_topologies(site):
        j = groth_to_lt(G)
        for m in K.sieve_monos(site):
            fac = dense_closed_factor(m, j)
            assert fac.composite() == m
            assert is_dense(j, fac.left) and is_closed(j, fac.right)
            if is_dense(j, m):
                assert is_iso(fac.right)
            if is_closed(j, m):
                assert is_iso(fac.left)


def test_dense_closed_factor_needs_a_mono():
    C = terminal()
    u = to_terminal(constant(C, [0, 1]))
    with pytest.raises(NotAMono):
        dense_closed_factor(u, groth_to_lt(minimal_topology(C)))


def test_cover_closed_factor_examples(site):
    G = maximal_topology(site)
    for f in K.small_maps(site):
        fac = cover_closed_factor(f, G)
        assert fac.composite() == f
        if is_surjection(f):
            assert is_iso(fac.right)
    lo = minimal_topology(site)
    for f in K.small_maps(site):
        fac = cover_closed_factor(f, lo)
        # every mono is closed for the minimal topology
        if is_mono(f):
            assert is_iso(fac.left)


def test_cover_closed_factor_of_dense_mono(dense):
    C, G, j, m = dense
    fac = cover_closed_factor(m, G)
    assert is_iso(fac.right)
    assert covering_class(G).member(fac.left)


def test_lifting_problems_commute(dense):
    C, G, j, m = dense
    problems = list(lifting_problems(m, m))
    assert problems
    assert all(isinstance(p, LiftingProblem) and p.commutes() for p in problems)


def test_isos_are_orthogonal_to_everything(site):
    for X in K.small_presheaves(site)[:4]:
        for f in K.small_maps(site)[:15]:
            assert check_orthogonal(identity(X), f)


def test_surjections_orthogonal_to_monos(site):
    maps = K.small_maps(site)
    surj = [u for u in maps if is_surjection(u)][:12]
    monos = [f for f in maps if is_mono(f)][:12]
    for u in surj:
        for f in monos:
            assert check_orthogonal(u, f)


def test_dense_orthogonal_to_closed(dense):
    C, G, j, m = dense
    dense_monos = [m] + [u for u in K.sieve_monos(C) if is_dense(j, u)]
    closed_monos = [f for f in K.sieve_monos(C) if is_closed(j, f)]
    assert is_dense(j, m) and len(dense_monos) > 2 and closed_monos
    for u in dense_monos:
        for f in closed_monos:
            assert check_orthogonal(u, f)


def test_closed_monos_are_exactly_those_orthogonal_to_dense(site):
    for G in enumerate_topologies(site):
        j = groth_to_lt(G)
        monos = K.sieve_monos(site)
        dense_monos = [u for u in monos if is_dense(j, u)]
        for f in monos:
            assert is_closed(j, f) == all(check_orthogonal(u, f) for u in dense_monos)


def test_fiberwise_orthogonality(site):
    maps = K.small_maps(site)
    for G in enumerate_topologies(site):
        j = groth_to_lt(G)
        cover = covering_class(G)
        closed_monos = [f for f in K.sieve_monos(site) if is_closed(j, f)][:4]
        for u in [u for u in maps if cover.member(u)][:6]:
            for f in closed_monos:
                assert check_fiberwise_orthogonal(u, f, maps)


def test_iso_is_fiberwise_orthogonal(site):
    X = yoneda(site, site.objects[0])
    for f in K.small_maps(site)[:10]:
        assert check_fiberwise_orthogonal(identity(X), f, K.small_maps(site))


def test_empty_into_point_against_a_non_mono():
    C = terminal()
    u = PresheafMap(initial(C), one(C), ((),))
    f = to_terminal(constant(C, [0, 1]))
    # two fillers for the only square
    assert not check_orthogonal(u, f)
    assert not check_fiberwise_orthogonal(u, f, [identity(one(C))])


def test_self_orthogonal_maps_are_isos(site):
    for f in K.small_maps(site):
        assert is_orthogonal_to_itself(f) == is_iso(f)


def test_covering_left_class_is_stable(site):
    maps = K.small_maps(site)
    for G in enumerate_topologies(site):
        cover = covering_class(G)
        for f, g in K.cospans(maps, limit=80):
            left = cover_closed_factor(f, G).left
            if cover.member(f):
                assert cover.member(base_change(f, g))
            assert cover.member(left)
