from __future__ import annotations

from itertools import product

import pytest

from toposcalc import corpus as K
from toposcalc.classifier import (
    Sieve,
    Subobject,
    all_sieves,
    classify,
    classify_mono,
    generated_sieve,
    is_sieve,
    is_univalent,
    maximal_sieve,
    omega,
    pull_back_true,
    pullback_sieve,
    sieve_from_arrows,
    subobjects,
    univalent_generator,
)
from toposcalc.errors import NotAMono, ValidationError
from toposcalc.fincat import interval, terminal
from toposcalc.presheaf import (
    PresheafMap,
    constant,
    coproduct,
    enumerate_maps,
    identity,
    initial,
    is_iso,
    is_mono,
    yoneda,
)
from toposcalc.presheaf import terminal as one
from toposcalc.topology import sieve_inclusion


def brute_force_subobjects(A) -> set[tuple[frozenset[int], ...]]:
    """Every pointwise subset that is closed under the action."""
    C = A.base
    per_object = [
        [frozenset(i for i in range(len(car)) if mask >> i & 1) for mask in range(1 << len(car))]
        for car in A.carriers
    ]
    out = set()
    for sel in product(*per_object):
        if all(A.actions[f][i] in sel[C.src[f]] for f in range(len(C.arrows)) for i in sel[C.tgt[f]]):
            out.add(tuple(sel))
    return out


def brute_force_sieves(C, c) -> set[int]:
    into = [f for f in range(len(C.arrows)) if C.tgt[f] == c]
    out = set()
    for bits in range(1 << len(into)):
        mask = 0
        for k, f in enumerate(into):
            if bits >> k & 1:
                mask |= 1 << f
        if is_sieve(C, Sieve(c, mask)):
            out.add(mask)
    return out


def test_subobjects_of_terminal_on_point():
    subs = subobjects(one(terminal()))
    assert [s.size() for s in subs] == [0, 1]
    assert subs[0] <= subs[1]


def test_subobjects_of_representable_on_interval():
    assert len(subobjects(yoneda(interval(), "b"))) == 3


def test_subobjects_of_empty():
    assert len(subobjects(initial(interval()))) == 1


def test_subobjects_match_brute_force(site):
    for A in K.small_presheaves(site) + (K.two(site),):
        if A.total_size() > 12:
            continue
        subs = subobjects(A)
        assert len(set(subs)) == len(subs)
        assert {s.selection for s in subs} == brute_force_subobjects(A)


def test_subobject_lattice_laws(site):
    A = yoneda(site, site.objects[-1])
    subs = subobjects(A)
    for S in subs:
        for T in subs:
            m, j = S & T, S | T
            assert m in subs and j in subs
            assert (S | (S & T)) == S and (S & (S | T)) == S
            assert m <= S and S <= j


def test_selection_must_be_closed():
    C = interval()
    with pytest.raises(ValidationError):
        # keep id_b but drop its restriction f
        Subobject(yoneda(C, "b"), [(), (0,)])


def test_sieves_match_brute_force(site):
    for c in range(len(site.objects)):
        assert {S.mask for S in all_sieves(site, c)} == brute_force_sieves(site, c)


def test_omega_sizes():
    assert [len(c) for c in omega(terminal()).presheaf.carriers] == [2]
    assert [len(c) for c in omega(interval()).presheaf.carriers] == [2, 3]


def test_omega_matches_subobjects_of_representables(site):
    Om = omega(site).presheaf
    for c, o in enumerate(site.objects):
        assert len(Om.carriers[c]) == len(subobjects(yoneda(site, o)))


def test_omega_action_is_pullback_of_sieves(site):
    Om = omega(site).presheaf
    for f in range(len(site.arrows)):
        for k, S in enumerate(Om.carriers[site.tgt[f]]):
            assert Om.carriers[site.src[f]][Om.actions[f][k]] == pullback_sieve(site, f, S)


def test_true_is_mono_and_picks_maximal(site):
    Om = omega(site)
    assert is_mono(Om.true)
    for c in range(len(site.objects)):
        assert Om.presheaf.carriers[c][Om.true.components[c][0]] == maximal_sieve(site, c)


def test_classify_total_and_empty(site):
    A = yoneda(site, site.objects[0])
    Om = omega(site)
    total = classify(Subobject.total(A))
    assert all(k == Om.maximal(c) for c, comp in enumerate(total.components) for k in comp)
    empty = classify(Subobject.empty(A))
    assert all(Om.presheaf.carriers[c][k].mask == 0 for c, comp in enumerate(empty.components) for k in comp)


def test_classify_representable_inclusion():
    C = interval()
    m = PresheafMap(yoneda(C, "a"), yoneda(C, "b"), ((0,), ()))
    chi = classify_mono(m)
    S = chi.target.carriers[1][chi.components[1][0]]
    assert S.names(C) == ["f"]


def test_classifier_soundness_on_sieve_monos(site):
    for m in K.sieve_monos(site):
        assert pull_back_true(classify_mono(m)) == Subobject.of_mono(m)


def test_characteristic_map_is_unique(site):
    Om = omega(site).presheaf
    for A in K.small_presheaves(site)[:4]:
        maps = list(enumerate_maps(A, Om))
        for S in subobjects(A):
            hits = [chi for chi in maps if pull_back_true(chi) == S]
            assert hits == [classify(S)]


def test_sieve_constructors(interval):
    assert sieve_from_arrows(interval, "b", ["f"]) == generated_sieve(interval, "b", ["f"])
    with pytest.raises(ValidationError):
        sieve_from_arrows(interval, "b", ["id_b"])
    with pytest.raises(ValidationError):
        generated_sieve(interval, "a", ["f"])


# -- univalence ---------------------------------------------------------------------

def test_true_is_univalent(site):
    assert is_univalent(omega(site).true)


def test_subterminal_inclusions_are_univalent(site):
    subs = subobjects(one(site))
    for U in subs:
        for V in subs:
            if U <= V:
                inc = V.corestrict(U.inclusion())
                assert is_univalent(inc)


def test_monos_into_two_points():
    C = terminal()
    cp = coproduct(one(C), one(C))
    # the two points classify to true and false, which separates them
    assert is_univalent(cp.i1)
    # here both points classify to the same sieve
    assert not is_univalent(identity(cp.obj))
    empty = PresheafMap(initial(C), cp.obj, ((),))
    assert not is_univalent(empty)


def test_univalence_needs_a_mono():
    C = terminal()
    two = constant(C, [0, 1])
    with pytest.raises(NotAMono):
        is_univalent(PresheafMap(two, one(C), ((0, 0),)))


def test_generator_of_isomorphisms(site):
    gen = univalent_generator([identity(one(site))])
    assert is_iso(gen.mono)
    assert all(len(c) == 1 for c in gen.mono.target.carriers)


def test_generator_of_all_monos_is_true(site):
    gen = univalent_generator(list(K.sieve_monos(site)))
    assert gen.classes.is_total()
    for m in K.sieve_monos(site):
        assert gen.is_base_change(m)


def test_generator_of_empty_into_point(site):
    e = PresheafMap(initial(site), one(site), tuple(() for _ in site.objects))
    gen = univalent_generator([e])
    assert gen.mono.source.total_size() == 0
    assert all(len(c) == 1 for c in gen.mono.target.carriers)


def test_generator_covers_each_member(site):
    monos = [sieve_inclusion(site, S) for S in all_sieves(site, 0)]
    gen = univalent_generator(monos)
    assert is_univalent(gen.mono)
    assert all(gen.is_base_change(m) for m in monos)
