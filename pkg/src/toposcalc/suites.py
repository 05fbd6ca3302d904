"""Exhaustive verification suites over a finite site.

Each suite quantifies over the small corpora of :mod:`toposcalc.corpus` and
the full enumerated topology poset, and returns a :class:`SuiteResult`
listing every failed instance.  The ``verify`` command and the acceptance
tests both run these.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from . import corpus as K
from .classifier import Subobject, classify, classify_mono, omega, pull_back_true, subobjects
from .factor import (
    check_orthogonal,
    closure,
    cover_closed_factor,
    dense_closed_factor,
    is_closed,
    is_dense,
)
from .fincat import FinCat
from .forcing import (
    CHECK_HEIGHT,
    INF,
    ISO,
    MONO,
    SURJ,
    compile_forcing,
    conn,
    forcing,
    is_hypercovering,
    minimality_check,
    tc_factor,
)
from .presheaf import (
    base_change,
    diagonal,
    diagonal_tower,
    image,
    image_factorization,
    is_iso,
    is_mono,
    is_n_connected,
    terminal,
    yoneda,
)
from .sheaf import check_left_exact, check_reflection, handle_for
from .topology import (
    covering_class,
    enumerate_closure_operators,
    enumerate_topologies,
    groth_to_lt,
    join,
    lt_to_groth,
    meet,
    minimal_topology,
    topology_from_covering_class,
)

THETAS = (ISO, SURJ, MONO, conn(-1), conn(0), conn(1), conn(INF))


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def expect(self, cond: bool, message: str) -> None:
        self.checked += 1
        if not cond:
            self.failures.append(message)


def classifier_suite(C: FinCat) -> SuiteResult:
    """Pulling ``true`` back along a characteristic map recovers the subobject,
    and distinct subobjects have distinct characteristic maps."""
    r = SuiteResult("classifier")
    Om = omega(C)
    r.expect(is_mono(Om.true), "true: 1 -> Omega is not mono")
    for m in K.sieve_monos(C):
        r.expect(pull_back_true(classify_mono(m)) == Subobject.of_mono(m), f"soundness fails for {m!r}")
    for A in K.small_presheaves(C) + (Om.presheaf,):
        if A.total_size() > 12:
            continue
        subs = subobjects(A)
        chis = [classify(S) for S in subs]
        r.expect(len(set(chis)) == len(subs), f"two subobjects of {A!r} share a characteristic map")
        for S, chi in zip(subs, chis):
            r.expect(pull_back_true(chi) == S, f"soundness fails on {S!r}")
    for c, o in enumerate(C.objects):
        r.expect(
            len(Om.presheaf.carriers[c]) == len(subobjects(yoneda(C, o))),
            f"|Omega({o})| differs from the subobject count of y({o})",
        )
    return r


def bijection_suite(C: FinCat) -> SuiteResult:
    """Sieve assignments and closure operators on Omega are in order-preserving
    bijection."""
    r = SuiteResult("bijections")
    tops = enumerate_topologies(C)
    lts = enumerate_closure_operators(C)
    r.details["topologies"] = len(tops)
    r.details["closure_operators"] = len(lts)
    r.expect(len(tops) == len(lts), f"{len(tops)} topologies but {len(lts)} closure operators")
    dense = [lt_to_groth(j) for j in lts]
    r.expect(sorted(t.code for t in dense) == [t.code for t in tops], "dense sieves do not match the topologies")
    for j, D in zip(lts, dense):
        r.expect(groth_to_lt(D) == j, f"closure operator does not round-trip: {j!r}")
    for G in tops:
        r.expect(lt_to_groth(groth_to_lt(G)) == G, f"topology does not round-trip: {G.label()}")
    for (j1, d1), (j2, d2) in ((a, b) for a in zip(lts, dense) for b in zip(lts, dense)):
        r.expect((j1 <= j2) == (d1 <= d2), "closure order and dense-sieve order disagree")
    return r


def covering_suite(C: FinCat) -> SuiteResult:
    """A covering class restricted to monos is exactly its topology."""
    r = SuiteResult("covering")
    monos = [m for m in K.small_maps(C) if is_mono(m)]
    for G in enumerate_topologies(C):
        cover = covering_class(G)
        for m in K.sieve_monos(C):
            r.expect(cover.member(m) == G.contains_mono(m), f"Cover({G.label()}) and G disagree on a sieve mono")
        for m in monos:
            r.expect(cover.member(m) == G.contains_mono(m), f"Cover({G.label()}) and G disagree on a corpus mono")
        r.expect(topology_from_covering_class(cover, C) == G, f"covering class of {G.label()} does not round-trip")
    return r


def frame_suite(C: FinCat, max_size: int = 16) -> SuiteResult:
    """Binary meets distribute over joins of every subset of the poset.

    Joins of subsets are folded from the binary join table, which is exact
    in a finite lattice.  Posets larger than ``max_size`` are sampled.
    """
    r = SuiteResult("frame")
    tops = enumerate_topologies(C)
    n = len(tops)
    pos = {G: k for k, G in enumerate(tops)}
    bottom = pos[minimal_topology(C)]
    meet_t = [[0] * n for _ in range(n)]
    join_t = [[0] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            m, j = meet(tops[a], tops[b]), join(tops[a], tops[b])
            r.expect(m in pos and j in pos, "meet or join escapes the enumerated poset")
            meet_t[a][b], join_t[a][b] = pos.get(m, -1), pos.get(j, -1)
            r.expect(tops[m_] <= tops[a] if (m_ := pos.get(m, -1)) >= 0 else False, "meet is not below")
            r.expect(tops[a] <= tops[j_] if (j_ := pos.get(j, -1)) >= 0 else False, "join is not above")
    if not r.ok:
        return r
    if n <= max_size:
        masks = range(1 << n)
        r.details["subsets"] = 1 << n
    else:
        rng = random.Random(0)
        masks = [rng.getrandbits(n) for _ in range(1 << max_size)]
        r.details["subsets"] = len(masks)
    for g in range(n):
        lhs_join = {0: bottom}
        rhs_join = {0: bottom}
        bad = 0
        for mask in sorted(masks):
            if mask in lhs_join:
                continue
            low = (mask & -mask).bit_length() - 1
            rest = mask & (mask - 1)
            if rest not in lhs_join:
                # sampled masks: fold the whole subset
                acc, acc2 = bottom, bottom
                for i in range(n):
                    if mask >> i & 1:
                        acc, acc2 = join_t[acc][i], join_t[acc2][meet_t[g][i]]
                lhs_join[mask], rhs_join[mask] = acc, acc2
            else:
                lhs_join[mask] = join_t[lhs_join[rest]][low]
                rhs_join[mask] = join_t[rhs_join[rest]][meet_t[g][low]]
            r.checked += 1
            if meet_t[g][lhs_join[mask]] != rhs_join[mask]:
                bad += 1
        if bad:
            r.failures.append(f"meet with {tops[g].label()} fails to distribute on {bad} subsets")
    r.details["poset_size"] = n
    return r


def modality_suite(C: FinCat, orthogonality: bool = True) -> SuiteResult:
    """Dense-closed factorizations of sieve monos, dense orthogonal to closed,
    and the cover-closed factorization of every corpus map."""
    r = SuiteResult("modality")
    maps = K.small_maps(C)
    cospans = K.cospans(maps)
    for G in enumerate_topologies(C):
        lt = groth_to_lt(G)
        cover = covering_class(G)
        dense, closed = [], []
        for m in K.sieve_monos(C):
            fac = dense_closed_factor(m, lt)
            r.expect(fac.composite() == m, "dense-closed factors do not compose back")
            r.expect(is_dense(lt, fac.left) and is_closed(lt, fac.right), "dense-closed factors have the wrong type")
            S = Subobject.of_mono(m)
            middles = [
                T for T in subobjects(m.target)
                if S <= T and is_closed(lt, T.inclusion()) and closure(lt, S) <= T and T <= closure(lt, S)
            ]
            others = [
                T for T in subobjects(m.target)
                if S <= T and is_closed(lt, T.inclusion()) and is_dense(lt, T.corestrict(m))
            ]
            r.expect(others == [fac.middle] and middles == [fac.middle], "dense-closed middle is not unique")
            (dense if is_dense(lt, m) else closed if is_closed(lt, m) else []).append(m)
        if orthogonality:
            for u in dense:
                for f in closed:
                    r.expect(check_orthogonal(u, f), f"dense mono not orthogonal to closed mono under {G.label()}")
        for f in maps:
            fac = cover_closed_factor(f, G)
            r.expect(fac.composite() == f, "cover-closed factors do not compose back")
            r.expect(cover.member(fac.left), "left factor is not a covering")
            r.expect(is_closed(lt, fac.right), "right factor is not closed")
        for f, g in cospans:
            if cover.member(f):
                r.expect(cover.member(base_change(f, g)), f"covering not stable under base change ({G.label()})")
            if cover.member(g):
                r.expect(cover.member(base_change(g, f)), f"covering not stable under base change ({G.label()})")
    return r


def sheafification_suite(C: FinCat) -> SuiteResult:
    """Double plus lands in sheaves, its unit is universal and idempotent, and
    it preserves the terminal object and corpus pullbacks."""
    r = SuiteResult("sheafification")
    objs = K.small_presheaves(C) + (K.two(C), omega(C).presheaf)
    maps = K.small_maps(C)
    cospans = K.cospans(maps)
    for G in enumerate_topologies(C):
        h = handle_for(G)
        targets = [X for X in objs if h.is_sheaf(X)]
        for X in objs:
            LX, unit = h.sheafify(X)
            r.expect(h.is_sheaf(LX), f"sheafification of {X!r} is not a sheaf for {G.label()}")
            if h.is_sheaf(X):
                r.expect(is_iso(unit), "unit at a sheaf is not invertible")
            r.expect(is_iso(h.sheafify(LX)[1]), "sheafification is not idempotent")
            for Y in targets + [LX]:
                r.expect(check_reflection(h, X, Y), f"unit of {X!r} is not universal for {G.label()}")
        L1, _ = h.sheafify(terminal(C))
        r.expect(all(len(c) == 1 for c in L1.carriers), "terminal object not preserved")
        lex = check_left_exact(h, cospans)
        r.checked += lex.checked
        r.failures.extend(f"{G.label()}: {f}" for f in lex.failures)
    return r


def _random_sigma(rng: random.Random, maps, size_max: int = 3):
    k = rng.randint(1, size_max)
    return [maps[rng.randrange(len(maps))] for _ in range(k)]


def forcing_suite(C: FinCat, samples: int = 20, seed: int = 0) -> SuiteResult:
    """Equivalences between forcing conditions, on seeded random finite sets."""
    r = SuiteResult("forcing-equivalences")
    rng = random.Random(seed)
    maps = list(K.small_maps(C))
    objs = K.small_presheaves(C) + (K.two(C), omega(C).presheaf)
    for _ in range(samples):
        sigma = _random_sigma(rng, maps)
        surj = compile_forcing(forcing(sigma, SURJ, C)).handle
        via_image = compile_forcing(forcing([image(f) for f in sigma], ISO, C)).handle
        r.expect(surj.topology == via_image.topology, "surjectivity forcing differs from forcing images invertible")
        r.expect(
            [surj.is_sheaf(X) for X in objs] == [via_image.is_sheaf(X) for X in objs],
            "local objects differ between surjectivity forcing and image inversion",
        )
        mono = compile_forcing(forcing(sigma, MONO, C)).handle
        diag = compile_forcing(forcing([diagonal(f) for f in sigma], ISO, C)).handle
        r.expect(mono.topology == diag.topology, "mono forcing differs from forcing diagonals invertible")
        for th in THETAS:
            # compile_forcing verifies each generator; a failure raises
            try:
                compile_forcing(forcing(sigma, th, C))
                r.checked += 1
            except Exception as exc:  # noqa: BLE001 - reported as a failure
                r.failures.append(f"{th}: {type(exc).__name__}: {exc}")
        half = len(sigma) // 2 or 1
        a, b = sigma[:half], sigma[half:]
        for th in (SURJ, ISO):
            whole = compile_forcing(forcing(sigma, th, C), verify=False).handle.topology
            parts = join(
                compile_forcing(forcing(a, th, C), verify=False).handle.topology,
                compile_forcing(forcing(b, th, C), verify=False).handle.topology,
            )
            r.expect(whole == parts, f"forcing a union is not the join ({th})")
    r.details["samples"] = samples
    return r


def minimality_suite(C: FinCat, samples: int = 20, seed: int = 1) -> SuiteResult:
    """Each compiled topology is the least enumerated one forcing its condition."""
    r = SuiteResult("minimality")
    tops = enumerate_topologies(C)
    maps = list(K.small_maps(C))
    rng = random.Random(seed)
    conditions = [[f] for f in maps] + [_random_sigma(rng, maps) for _ in range(samples)] + [[]]
    for sigma in conditions:
        for th in THETAS:
            fc = forcing(sigma, th, C)
            r.expect(minimality_check(fc, compile_forcing(fc).handle, tops), f"compiled {th} topology is not least")
    return r


def degeneracy_suite(C: FinCat) -> SuiteResult:
    """Facts that collapse in a 1-topos: the diagonal tower stabilizes, infinite
    connectivity is invertibility, every localization is topological, and
    hypercoverings among monos are coverings."""
    r = SuiteResult("degeneracy")
    maps = K.small_maps(C)
    for f in maps:
        tower = diagonal_tower(f, CHECK_HEIGHT)
        r.expect(is_mono(tower[2]), "second diagonal is not mono")
        r.expect(all(is_iso(v) for v in tower[3:]), "diagonal tower does not stabilize")
        r.expect(is_n_connected(f, INF) == is_iso(f), "infinite connectivity differs from invertibility")
    for G in enumerate_topologies(C):
        h = handle_for(G)
        try:
            fac = tc_factor(h)
            r.expect(fac.topological.topology == G and fac.residual.trivial, "topological part differs")
        except Exception as exc:  # noqa: BLE001
            r.failures.append(f"{G.label()}: {type(exc).__name__}: {exc}")
        for m in K.sieve_monos(C):
            r.expect(is_hypercovering(m, G) == G.contains_mono(m), "hypercovering mono is not a covering")
        for f in maps:
            r.expect(
                is_hypercovering(f, G) == is_hypercovering(f, G, CHECK_HEIGHT),
                "hypercovering test changes between heights 2 and 4",
            )
            if h.inverts(f):
                r.expect(is_hypercovering(f, G), "inverted map is not a hypercovering")
    return r


def congruence_suite(C: FinCat) -> SuiteResult:
    """The maps inverted by each sheafification are closed under composition,
    base change and 2-out-of-3, and detected by image and coimage."""
    r = SuiteResult("congruence")
    maps = K.small_maps(C)
    pairs = K.composable_pairs(maps)
    cospans = K.cospans(maps)
    for G in enumerate_topologies(C):
        h = handle_for(G)
        inv = {f: h.inverts(f) for f in maps}
        for f in maps:
            co, im = image_factorization(f)
            r.expect(inv[f] == (h.inverts(co) and h.inverts(im)), "inversion not detected by image and coimage")
        for f, g in pairs:
            fg = f.then(g)
            a, b, c = inv[f], inv[g], h.inverts(fg)
            r.expect(not (a and b) or c, "not closed under composition")
            r.expect(not (a and c) or b, "2-out-of-3 fails (first and composite)")
            r.expect(not (b and c) or a, "2-out-of-3 fails (second and composite)")
        for f, g in cospans:
            if inv[f]:
                r.expect(h.inverts(base_change(f, g)), "not closed under base change")
            if inv[g]:
                r.expect(h.inverts(base_change(g, f)), "not closed under base change")
    return r


SUITES: dict[str, Callable[[FinCat], SuiteResult]] = {
    "classifier": classifier_suite,
    "bijections": bijection_suite,
    "covering": covering_suite,
    "frame": frame_suite,
    "modality": modality_suite,
    "sheafification": sheafification_suite,
    "forcing-equivalences": forcing_suite,
    "minimality": minimality_suite,
    "degeneracy": degeneracy_suite,
    "congruence": congruence_suite,
}
