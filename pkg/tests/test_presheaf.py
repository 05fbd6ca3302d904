from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toposcalc import corpus as K
from toposcalc.errors import FunctorialityViolation, NaturalityViolation, ShapeMismatch, ValidationError
from toposcalc.fincat import interval, monoid3, parallel_pair, terminal, validate_category
from toposcalc.presheaf import (
    INF,
    Diagram,
    Presheaf,
    PresheafMap,
    colimit,
    constant,
    coproduct,
    diagonal,
    enumerate_maps,
    find_isomorphism,
    identity,
    image_factorization,
    initial,
    is_iso,
    is_mono,
    is_n_connected,
    is_surjection,
    iterated_diagonal,
    limit,
    nerve_surjection,
    product as prod,
    pullback,
    to_terminal,
    yoneda,
)
from toposcalc.presheaf import terminal as one


def brute_force_maps(X: Presheaf, Y: Presheaf) -> set[PresheafMap]:
    """All per-object functions, filtered by naturality."""
    C = X.base
    per_object = [list(product(range(len(Y.carriers[c])), repeat=len(X.carriers[c]))) for c in range(len(C.objects))]
    out = set()
    for comps in product(*per_object):
        u = PresheafMap(X, Y, tuple(comps))
        try:
            u.check()
        except NaturalityViolation:
            continue
        out.add(u)
    return out


# -- construction -----------------------------------------------------------------

def test_yoneda_on_terminal_site_is_terminal():
    C = terminal()
    Y = yoneda(C, "*")
    assert Y.elements("*") == ("id_*",)
    assert find_isomorphism(Y, one(C)) is not None


def test_yoneda_on_interval():
    C = interval()
    Y = yoneda(C, "b")
    assert Y.elements("a") == ("f",)
    assert Y.elements("b") == ("id_b",)
    assert Y.restrict("f", "id_b") == "f"


def test_yoneda_on_monoid_is_right_multiplication():
    C = monoid3()
    Y = yoneda(C, "*")
    assert len(Y.elements("*")) == 3
    # X(g)(h) = h . g: x acting on x gives xx, and xx is absorbing
    assert Y.restrict("x", "x") == "xx"
    assert Y.restrict("x", "xx") == "xx"
    assert Y.restrict("xx", "1") == "xx"


def test_build_rejects_bad_actions():
    C = interval()
    with pytest.raises(ValidationError):
        Presheaf.build(C, {"a": ["x"], "b": ["p"]}, {"f": {"p": "nope"}})
    with pytest.raises(ValidationError):
        Presheaf.build(C, {"a": ["x"], "b": ["p"]}, {})
    C = monoid3()
    with pytest.raises(FunctorialityViolation):
        # x acts as a swap, so x.x should be the identity, but xx is constant
        Presheaf.build(C, {"*": [0, 1]}, {"x": {0: 1, 1: 0}, "xx": {0: 0, 1: 0}})


def test_map_build_checks_naturality():
    C = interval()
    X = Presheaf.build(C, {"a": [0, 1], "b": [0]}, {"f": {0: 0}})
    Y = Presheaf.build(C, {"a": [0, 1], "b": [0]}, {"f": {0: 1}})
    with pytest.raises(NaturalityViolation):
        PresheafMap.build(X, Y, {"a": {0: 0, 1: 1}, "b": {0: 0}})
    u = PresheafMap.build(X, Y, {"a": {0: 1, 1: 0}, "b": {0: 0}})
    assert is_iso(u)


def test_enumerate_maps_matches_brute_force(site):
    objs = K.small_presheaves(site)
    for X in objs:
        for Y in objs:
            if X.total_size() > 6 or Y.total_size() > 6:
                continue
            assert set(enumerate_maps(X, Y)) == brute_force_maps(X, Y)


# -- limits and colimits ----------------------------------------------------------

def empty_shape():
    return validate_category([], [], {})


def test_limit_of_empty_diagram_is_terminal(site):
    L, cone = limit(Diagram.build(empty_shape(), site, {}))
    assert cone == ()
    assert all(len(c) == 1 for c in L.carriers)


def test_colimit_of_empty_diagram_is_initial(site):
    L, _ = colimit(Diagram.build(empty_shape(), site, {}))
    assert L.total_size() == 0


def test_pullback_of_identities():
    C = interval()
    X = yoneda(C, "b")
    pb = pullback(identity(X), identity(X))
    assert is_iso(pb.p1) and is_iso(pb.p2)
    assert pb.p1 == pb.p2


def test_product_of_two_sets_has_four_elements():
    C = terminal()
    two = constant(C, [0, 1])
    pb = pullback(to_terminal(two), to_terminal(two))
    assert pb.obj.elements("*") == ((0, 0), (0, 1), (1, 0), (1, 1))


def test_pushout_of_points_is_a_point():
    C = terminal()
    span = validate_category(["l", "m", "r"], [("i", "m", "l"), ("j", "m", "r")], {})
    pt = one(C)
    D = Diagram.build(span, C, {"l": pt, "m": pt, "r": pt}, {"i": identity(pt), "j": identity(pt)})
    L, _ = colimit(D)
    assert L.carriers == (((("l", ()),)),)


def test_coequalizer_of_distinct_points_is_a_point():
    C = terminal()
    two = constant(C, [0, 1])
    pt = one(C)
    f = PresheafMap(pt, two, ((0,),))
    g = PresheafMap(pt, two, ((1,),))
    D = Diagram.build(parallel_pair(), C, {"a": pt, "b": two}, {"f": f, "g": g})
    L, (_, q) = colimit(D)
    assert len(L.elements("*")) == 1
    # canonical representative is the least (shape object, element)
    assert L.elements("*") == (("a", ()),)
    # universal property: maps out of L correspond to maps coequalizing f, g
    for Z in K.small_presheaves(C):
        through = {q.then(h) for h in enumerate_maps(L, Z)}
        direct = {h for h in enumerate_maps(two, Z) if f.then(h) == g.then(h)}
        assert through == direct
        assert len(through) == sum(1 for _ in enumerate_maps(L, Z))


def test_diagram_checks_functoriality():
    C = terminal()
    two = constant(C, [0, 1])
    swap = PresheafMap(two, two, ((1, 0),))
    shape = validate_category(["*"], [("e", "*", "*")], {("e", "e"): "e"})
    with pytest.raises(FunctorialityViolation):
        Diagram.build(shape, C, {"*": two}, {"e": swap})
    with pytest.raises(ShapeMismatch):
        Diagram.build(shape, C, {"*": two}, {})


def test_pullback_universal_property(site):
    maps = K.small_maps(site)
    for f, g in K.cospans(maps, limit=25):
        pb = pullback(f, g)
        for T in K.small_presheaves(site)[:4]:
            cones = [
                (h1, h2)
                for h1 in enumerate_maps(T, f.source)
                for h2 in enumerate_maps(T, g.source)
                if h1.then(f) == h2.then(g)
            ]
            into = list(enumerate_maps(T, pb.obj))
            assert len(into) == len(cones)
            for h1, h2 in cones:
                k = pb.lift(h1, h2)
                assert k.then(pb.p1) == h1 and k.then(pb.p2) == h2


def test_limit_agrees_with_pullback(interval):
    cospan = validate_category(["l", "m", "r"], [("i", "l", "m"), ("j", "r", "m")], {})
    for f, g in K.cospans(K.small_maps(interval), limit=20):
        D = Diagram.build(cospan, interval, {"l": f.source, "m": f.target, "r": g.source}, {"i": f, "j": g})
        L, _ = limit(D)
        assert find_isomorphism(L, pullback(f, g).obj) is not None


def test_coproduct_copairing(site):
    X, Y = K.small_presheaves(site)[2:4]
    cp = coproduct(X, Y)
    assert cp.copair(cp.i1, cp.i2) == identity(cp.obj)


# -- image factorization, diagonals, connectivity -----------------------------------

def test_image_factorization_on_corpus(site):
    for u in K.small_maps(site):
        coim, im = image_factorization(u)
        assert coim.then(im) == u
        assert is_surjection(coim) and is_mono(im)
        if is_mono(u):
            assert is_iso(coim)
        if is_surjection(u):
            assert is_iso(im)


def test_image_of_collapse_map():
    C = terminal()
    u = to_terminal(constant(C, [0, 1]))
    coim, im = image_factorization(u)
    assert coim.components == u.components
    assert is_iso(im)


def test_diagonal_of_collapse_map_is_pairing():
    C = terminal()
    u = to_terminal(constant(C, [0, 1]))
    d = diagonal(u)
    assert len(d.target.elements("*")) == 4
    assert [d.apply("*", x) for x in (0, 1)] == [(0, 0), (1, 1)]
    assert is_mono(d) and not is_surjection(d)


def test_mono_has_invertible_diagonal(site):
    for u in K.small_maps(site):
        assert is_mono(u) == is_iso(diagonal(u))


def test_mono_and_surjection_is_iso(site):
    for u in K.small_maps(site):
        assert (is_mono(u) and is_surjection(u)) == is_iso(u)


def test_nerve_criterion_agrees(site):
    for u in K.small_maps(site):
        assert nerve_surjection(u) == is_surjection(u)


def test_surjection_and_mono_examples(interval):
    assert is_mono(identity(yoneda(interval, "a"))) and is_surjection(identity(yoneda(interval, "a")))
    e = PresheafMap(initial(interval), one(interval), ((), ()))
    assert is_mono(e) and not is_surjection(e)
    m = PresheafMap(yoneda(interval, "a"), yoneda(interval, "b"), ((0,), ()))
    m.check()
    assert is_mono(m) and not is_surjection(m)


def test_connectivity_examples():
    C = terminal()
    u = to_terminal(constant(C, [0, 1]))
    assert is_n_connected(u, -1)
    assert not is_n_connected(u, 0)
    for n in (-1, 0, 1, 5, INF):
        assert is_n_connected(identity(u.source), n)


def test_second_diagonal_is_mono(site):
    for u in K.small_maps(site):
        assert is_mono(iterated_diagonal(u, 2))


def test_infinite_connectivity_is_invertibility(site):
    for u in K.small_maps(site):
        assert is_n_connected(u, INF) == is_iso(u)


def test_connectivity_is_monotone_in_n(site):
    for u in K.small_maps(site):
        values = [is_n_connected(u, n) for n in (-1, 0, 1, 2)]
        assert values == sorted(values, reverse=True)


def test_degenerate_maps():
    C = interval()
    z = initial(C)
    assert is_iso(identity(z))
    for Y in K.small_presheaves(C):
        (u,) = list(enumerate_maps(z, Y))
        assert is_mono(u)


# -- property-based checks over random presheaves on the interval -------------------

@st.composite
def interval_presheaves(draw):
    C = interval()
    na = draw(st.integers(0, 3))
    nb = draw(st.integers(0 if na else 0, 3 if na else 0))
    act = [draw(st.integers(0, na - 1)) for _ in range(nb)] if na else []
    return Presheaf.build(C, {"a": list(range(na)), "b": list(range(nb))}, {"f": dict(enumerate(act))})


@settings(max_examples=40, deadline=None)
@given(interval_presheaves(), interval_presheaves())
def test_random_maps_satisfy_basic_laws(X, Y):
    maps = list(enumerate_maps(X, Y))
    assert set(maps) == brute_force_maps(X, Y)
    for u in maps:
        coim, im = image_factorization(u)
        assert coim.then(im) == u
        assert is_mono(iterated_diagonal(u, 2))
        assert nerve_surjection(u) == is_surjection(u)
        assert is_n_connected(u, INF) == is_iso(u)


@settings(max_examples=30, deadline=None)
@given(interval_presheaves(), interval_presheaves())
def test_random_products_have_product_sizes(X, Y):
    P = prod(X, Y).obj
    assert [len(c) for c in P.carriers] == [len(a) * len(b) for a, b in zip(X.carriers, Y.carriers)]
