from __future__ import annotations

import random

import pytest

from toposcalc import corpus as K
from toposcalc.classifier import generated_sieve
from toposcalc.errors import NotNested
from toposcalc.fincat import interval, terminal
from toposcalc.forcing import (
    INF,
    ISO,
    MONO,
    SURJ,
    Theta,
    compile,
    compile_forcing,
    conn,
    forcing,
    forcing_topologies,
    generators,
    has_property,
    is_hypercovering,
    loc_cons_factor,
    minimality_check,
    tc_factor,
    topological_part,
)
from toposcalc.presheaf import (
    PresheafMap,
    coproduct,
    diagonal,
    from_initial,
    identity,
    is_mono,
    to_terminal,
    yoneda,
)
from toposcalc.presheaf import terminal as one
from toposcalc.sheaf import handle_for
from toposcalc.topology import (
    enumerate_topologies,
    generate_from_sieves,
    join,
    maximal_topology,
    minimal_topology,
)

THETAS = (ISO, SURJ, MONO, conn(-1), conn(0), conn(1), conn(INF))


def sample_sigmas(C, count=12, seed=3):
    rng = random.Random(seed)
    maps = K.small_maps(C)
    return [rng.sample(maps, rng.randint(1, 2)) for _ in range(count)]


@pytest.mark.parametrize("text", ["iso", "surj", "mono", "conn:-1", "conn:0", "conn:3", "conn:inf"])
def test_theta_round_trip(text):
    assert str(Theta.parse(text)) == text
    assert Theta.parse(text.upper()) == Theta.parse(text)


@pytest.mark.parametrize("text", ["epi", "conn:-2", "conn"])
def test_theta_rejects_unknown(text):
    with pytest.raises(ValueError):
        Theta.parse(text)


def test_empty_condition_is_minimal(site):
    for theta in THETAS:
        assert compile(forcing([], theta, site)).topology == minimal_topology(site)


def test_forcing_the_empty_cover(site):
    f = from_initial(one(site))
    assert compile(forcing([f], SURJ, site)).topology == maximal_topology(site)
    assert compile(forcing([f], ISO, site)).topology == maximal_topology(site)


def test_isos_force_nothing(site):
    fs = [identity(X) for X in K.small_presheaves(site)]
    for theta in THETAS:
        assert compile(forcing(fs, theta, site)).topology == minimal_topology(site)


def test_inverting_representable_map_on_interval_is_dense():
    C = interval()
    m = PresheafMap(yoneda(C, "a"), yoneda(C, "b"), ((0,), ()))
    fc = forcing([m], ISO, C)
    h = compile(fc)
    assert h.topology == generate_from_sieves(C, [generated_sieve(C, "b", ["f"])])
    assert minimality_check(fc, h)


def test_inverting_a_summand_inclusion_on_a_point_is_maximal():
    C = terminal()
    i1 = coproduct(one(C), one(C)).i1
    assert compile(forcing([i1], ISO, C)).topology == maximal_topology(C)
    # the inclusion is already mono, so surjectivity asks for the same thing
    assert compile(forcing([i1], SURJ, C)).topology == maximal_topology(C)
    assert compile(forcing([i1], MONO, C)).topology == minimal_topology(C)


def test_compiled_topology_is_least_among_enumerated(site):
    tops = enumerate_topologies(site)
    for sigma in sample_sigmas(site):
        for theta in (ISO, SURJ, MONO, conn(0)):
            fc = forcing(sigma, theta, site)
            h = compile(fc)
            # brute-force oracle: scan every topology for the property
            brute = [G for G in tops if all(has_property(handle_for(G), f, theta) for f in sigma)]
            assert brute == forcing_topologies(fc, tops)
            assert h.topology in brute
            assert all(h.topology <= G for G in brute)
            assert minimality_check(fc, h, tops)


def test_generators_are_monos(site):
    for sigma in sample_sigmas(site, count=6):
        for theta in THETAS:
            assert all(is_mono(g) for g in generators(forcing(sigma, theta, site)))


def test_transcript_records_each_generator(site):
    sigma = sample_sigmas(site, count=1)[0]
    out = compile_forcing(forcing(sigma, SURJ, site))
    assert [t["generator"] for t in out.transcript] == list(range(len(sigma)))
    assert all(t["holds"] and t["property"] == "surj" for t in out.transcript)


def test_properties_get_stronger(site):
    order = (SURJ, conn(0), conn(1), ISO)
    for sigma in sample_sigmas(site, count=8):
        tops = [compile(forcing(sigma, th, site)).topology for th in order]
        assert all(a <= b for a, b in zip(tops, tops[1:]))
        assert compile(forcing(sigma, MONO, site)).topology <= tops[-1]


def test_low_connectivity_collapses(site):
    for sigma in sample_sigmas(site, count=8):
        top = lambda th: compile(forcing(sigma, th, site)).topology  # noqa: E731
        assert top(conn(-1)) == top(SURJ)
        assert top(conn(1)) == top(ISO)
        assert top(conn(INF)) == top(ISO)


def test_mono_is_iso_of_diagonal(site):
    for sigma in sample_sigmas(site, count=8):
        mono = compile(forcing(sigma, MONO, site)).topology
        iso_diag = compile(forcing([diagonal(f) for f in sigma], ISO, site)).topology
        assert mono == iso_diag


def test_union_of_conditions_joins_topologies(site):
    sigmas = sample_sigmas(site, count=8)
    for s1, s2 in zip(sigmas, sigmas[1:]):
        for theta in (ISO, SURJ):
            both = compile(forcing(s1 + s2, theta, site)).topology
            assert both == join(compile(forcing(s1, theta, site)).topology, compile(forcing(s2, theta, site)).topology)


def test_topological_part_matches_iso_forcing(site):
    for sigma in sample_sigmas(site, count=8):
        assert topological_part(sigma, site) == compile(forcing(sigma, ISO, site)).topology


def test_hypercovering_examples():
    C = terminal()
    f = from_initial(one(C))
    assert not is_hypercovering(f, minimal_topology(C))
    assert is_hypercovering(f, maximal_topology(C))
    fold = to_terminal(coproduct(one(C), one(C)).obj)
    # surjective with a non-surjective diagonal
    assert not is_hypercovering(fold, minimal_topology(C))
    assert is_hypercovering(identity(one(C)), minimal_topology(C))


def test_hypercoverings_are_inverted(site):
    for G in enumerate_topologies(site):
        h = handle_for(G)
        for f in K.small_maps(site):
            if is_hypercovering(f, G):
                assert h.inverts(f)


def test_tc_factor_residual_is_trivial(site):
    for G in enumerate_topologies(site):
        fac = tc_factor(handle_for(G))
        assert fac.topological.topology == G
        assert fac.residual.trivial and not fac.residual.inverted_monos


def test_tc_factor_on_named_topologies():
    C = interval()
    dense = generate_from_sieves(C, [generated_sieve(C, "b", ["f"])])
    for G in (minimal_topology(C), dense, maximal_topology(C)):
        assert tc_factor(handle_for(G)).residual.target == G


def test_loc_cons_factor(site):
    tops = enumerate_topologies(site)
    maps = K.small_maps(site)
    for G in tops:
        for G2 in tops:
            if G <= G2:
                fac = loc_cons_factor(G, G2, maps)
                assert fac.conservative, fac.failures
                assert fac.localization.topology == G2
            else:
                with pytest.raises(NotNested):
                    loc_cons_factor(G, G2)
