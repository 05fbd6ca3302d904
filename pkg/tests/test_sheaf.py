from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from toposcalc import corpus as K
from toposcalc.classifier import generated_sieve, maximal_sieve, omega
from toposcalc.fincat import interval, terminal
from toposcalc.forcing import INF, ISO, SURJ, compile_forcing, conn, forcing
from toposcalc.presheaf import (
    Presheaf,
    PresheafMap,
    constant,
    enumerate_maps,
    identity,
    is_iso,
    yoneda,
)
from toposcalc.presheaf import terminal as one
from toposcalc.sheaf import (
    LocalizationHandle,
    check_left_exact,
    check_reflection,
    handle_for,
    inverts,
    is_separated,
    is_sheaf,
    matching_families,
    minimal_cover_plus_sizes,
    plus,
    sheafify,
    sheaves_among,
)
from toposcalc.topology import enumerate_topologies, generate_from_sieves, maximal_topology, minimal_topology


def dense_interval():
    C = interval()
    return C, generate_from_sieves(C, [generated_sieve(C, "b", ["f"])])


def interval_presheaf(na: int, act: list[int]) -> Presheaf:
    return Presheaf.build(interval(), {"a": list(range(na)), "b": list(range(len(act)))}, {"f": dict(enumerate(act))})


@st.composite
def interval_presheaves(draw):
    na = draw(st.integers(0, 3))
    nb = draw(st.integers(0, 3)) if na else 0
    return interval_presheaf(na, [draw(st.integers(0, na - 1)) for _ in range(nb)])


def test_matching_families_on_maximal_sieve_are_elements(site):
    for X in K.small_presheaves(site):
        for c in range(len(site.objects)):
            assert len(matching_families(X, maximal_sieve(site, c))) == len(X.carriers[c])


def test_everything_is_a_sheaf_for_the_minimal_topology(site):
    G = minimal_topology(site)
    for X in K.small_presheaves(site) + (omega(site).presheaf,):
        assert is_sheaf(X, G)
        assert is_iso(plus(X, G).unit)


def test_maximal_topology_on_a_point():
    C = terminal()
    G = maximal_topology(C)
    assert is_sheaf(one(C), G)
    assert not is_sheaf(constant(C, [0, 1]), G)
    assert not is_sheaf(constant(C, []), G)
    P = plus(constant(C, [0, 1]), G).presheaf
    assert [len(c) for c in P.carriers] == [1]


@settings(max_examples=40, deadline=None)
@given(interval_presheaves())
def test_dense_interval_sheaves_have_bijective_restriction(X):
    _, G = dense_interval()
    bijective = len(X.carriers[1]) == len(X.carriers[0]) and len(set(X.actions[X.base.arrow("f")])) == len(X.carriers[0])
    assert is_sheaf(X, G) == bijective


@settings(max_examples=40, deadline=None)
@given(interval_presheaves())
def test_dense_interval_sheafification_copies_a_to_b(X):
    C, G = dense_interval()
    LX, unit = sheafify(X, G)
    assert is_sheaf(LX, G)
    assert len(LX.carriers[1]) == len(LX.carriers[0]) == len(X.carriers[0])
    # the unit is the identity at a, up to naming
    assert len(set(unit.components[0])) == len(X.carriers[0])


def test_plus_matches_least_cover_count(site):
    for G in enumerate_topologies(site):
        for X in K.small_presheaves(site) + (K.two(site),):
            st1 = plus(X, G)
            assert [len(c) for c in st1.presheaf.carriers] == minimal_cover_plus_sizes(X, G)
            assert is_separated(st1.presheaf, G)
            st1.unit.check()


def test_plus_of_a_sheaf_is_trivial(site):
    for G in enumerate_topologies(site):
        for X in K.small_presheaves(site):
            if is_sheaf(X, G):
                assert is_iso(plus(X, G).unit)


def test_sheafification_is_a_sheaf_and_idempotent(site):
    for G in enumerate_topologies(site):
        h = LocalizationHandle(G)
        for X in K.small_presheaves(site) + (K.two(site),):
            LX, unit = h.sheafify(X)
            assert h.is_sheaf(LX)
            assert is_iso(h.sheafify(LX)[1])
            unit.check()


def test_terminal_is_preserved(site):
    for G in enumerate_topologies(site):
        L1, _ = sheafify(one(site), G)
        assert all(len(c) == 1 for c in L1.carriers)


def test_unit_is_universal(site):
    objs = K.small_presheaves(site) + (K.two(site),)
    for G in enumerate_topologies(site):
        h = handle_for(G)
        sheaves = [objs[k] for k in sheaves_among(h, objs)]
        for X in objs:
            for Y in sheaves:
                assert check_reflection(h, X, Y)


def test_sheafify_on_maps_is_functorial(site):
    pairs = K.composable_pairs(K.small_maps(site))[:60]
    for G in enumerate_topologies(site):
        h = handle_for(G)
        for f, g in pairs:
            assert h.sheafify_map(f.then(g)) == h.sheafify_map(f).then(h.sheafify_map(g))
        X = K.small_presheaves(site)[-1]
        assert is_iso(h.sheafify_map(identity(X)))


def test_inverts_examples(site):
    maps = K.small_maps(site)
    lo = handle_for(minimal_topology(site))
    for f in maps:
        assert inverts(lo, f) == is_iso(f)
    for G in enumerate_topologies(site):
        h = handle_for(G)
        for f in maps:
            if is_iso(f):
                assert inverts(h, f)


def test_dense_handle_inverts_representable_inclusion():
    C, G = dense_interval()
    m = PresheafMap(yoneda(C, "a"), yoneda(C, "b"), ((0,), ()))
    assert inverts(handle_for(G), m)


def test_left_exactness(site):
    cospans = K.cospans(K.small_maps(site), limit=60)
    for G in enumerate_topologies(site):
        report = check_left_exact(handle_for(G), cospans)
        assert report.ok, report.failures
        assert report.checked == len(cospans) + 1


def test_sheaves_for_a_topology_are_sheaves_for_its_forcing_forms(site):
    objs = K.small_presheaves(site) + (K.two(site), omega(site).presheaf)
    for G in enumerate_topologies(site):
        monos = G.covering_monos()
        h = handle_for(G)
        expected = [h.is_sheaf(X) for X in objs]
        for theta in (ISO, SURJ, conn(INF)):
            compiled = compile_forcing(forcing(monos, theta, site)).handle
            assert compiled.topology == G
            assert [compiled.is_sheaf(X) for X in objs] == expected


def test_empty_cover_forces_subterminal_sheaves(site):
    G = maximal_topology(site)
    for X in K.small_presheaves(site):
        LX, _ = sheafify(X, G)
        assert all(len(c) == 1 for c in LX.carriers)


def test_reflection_against_brute_force_on_a_point():
    # on the point with the maximal topology, every map into a sheaf is unique
    C = terminal()
    G = maximal_topology(C)
    X = constant(C, [0, 1, 2])
    LX, unit = sheafify(X, G)
    assert len(list(enumerate_maps(LX, one(C)))) == 1
    assert check_reflection(handle_for(G), X, one(C))
