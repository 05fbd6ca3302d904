"""Text format for sites, coverages, presheaves and maps.

Grammar::

    document  := block*
    block     := "category" "{" cat_stmt* "}"
               | "coverage" "{" (OBJ ":" "[" names? "]" ";")* "}"
               | "presheaf" NAME "{" (OBJ ":" "[" elems? "]" ";" | ARROW ":" table ";")* "}"
               | "map" NAME ":" ref "->" ref "{" (OBJ ":" table ";")* "}"
    cat_stmt  := "objects" ":" names ";"
               | "arrows" ":" NAME ":" OBJ "->" OBJ ("," ...)* ";"
               | "compose" ":" "(" NAME "." NAME ")" "=" NAME ("," ...)* ";"
    table     := "{" (elem "->" elem ("," ...)*)? "}"
    ref       := NAME | "1" | "0" | "Omega" | "y" "(" OBJ ")"

``(g . f) = h`` reads "g after f is h".  Identity arrows are implicit and
named ``id_<obj>``.  Each coverage entry is one sieve, generated by the listed
arrows; ``[]`` is the empty sieve.  Actions of composite arrows may be left
out of a presheaf block when they follow from the given ones.  Elements are
bare words or double-quoted strings; ``#`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping

from .classifier import Sieve, generated_sieve, omega, sieve_label
from .errors import DSLSyntaxError, SemanticError, ToposError, UnknownArrow, UnknownObject, ValidationError
from .fincat import FinCat, validate_category
from .presheaf import Presheaf, PresheafMap, initial, render, terminal, yoneda
from .topology import GrothTopology, check_axioms, generate_from_sieves

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<word>[A-Za-z0-9_'*]+)
  | (?P<punct>[{}\[\]();:,.=])
    """,
    re.VERBOSE,
)

KEYWORDS = ("category", "coverage", "presheaf", "map")
BUILTINS = ("1", "0", "Omega")


@dataclass(frozen=True)
class Token:
    kind: str  # "word" | "string" | "punct" | "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "string":
            out.append(Token("string", json.loads(m.group()), line, pos - start + 1))
        elif kind == "arrow":
            out.append(Token("punct", "->", line, pos - start + 1))
        elif kind in ("word", "punct"):
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# -- document model -------------------------------------------------------------

@dataclass
class SiteDocument:
    category: FinCat
    topology: GrothTopology | None = None
    coverage_generators: list[Sieve] = field(default_factory=list)
    presheaves: dict[str, Presheaf] = field(default_factory=dict)
    maps: dict[str, PresheafMap] = field(default_factory=dict)
    map_refs: dict[str, tuple[str, str]] = field(default_factory=dict)
    spans: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False)
    coverage_generated: bool = field(default=False, compare=False)

    def structurally_equal(self, other: "SiteDocument") -> bool:
        return (
            self.category == other.category
            and self.topology == other.topology
            and self.presheaves == other.presheaves
            and self.maps == other.maps
        )


# -- parser ---------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, strict: bool, free_compose: bool, base: FinCat | None):
        self.toks = tokenize(text)
        self.k = 0
        self.strict = strict
        self.free_compose = free_compose
        self.base = base

    # token helpers
    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.k + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.k += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.kind != "punct" or t.text != text:
            raise DSLSyntaxError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return t

    def name(self, what: str = "a name") -> Token:
        t = self.next()
        if t.kind not in ("word", "string"):
            raise DSLSyntaxError(f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.col)
        return t

    def name_list(self, close: str) -> list[Token]:
        out = []
        while not self.at(close):
            out.append(self.name())
            if not self.at(close):
                self.expect(",")
        return out

    # top level
    def document(self) -> SiteDocument:
        blocks: list[tuple[str, Token, Any]] = []
        cat_tok = None
        while self.peek().kind != "eof":
            t = self.name("a block keyword")
            if t.text not in KEYWORDS:
                raise DSLSyntaxError(f"unknown block {t.text!r}", t.line, t.col)
            if t.text == "category":
                if cat_tok is not None:
                    raise SemanticError("second category block", t.line, t.col)
                cat_tok = t
                cat_raw = self.category_block()
            else:
                blocks.append((t.text, t, getattr(self, f"{t.text}_block")()))
        if cat_tok is not None:
            C = self.build_category(cat_raw)
        elif self.base is not None:
            C = self.base
        else:
            raise SemanticError("document has no category block")
        doc = SiteDocument(C)
        for kind, tok, raw in blocks:
            if kind == "coverage":
                self.build_coverage(doc, tok, raw)
        for kind, tok, raw in blocks:
            if kind == "presheaf":
                self.build_presheaf(doc, raw)
        for kind, tok, raw in blocks:
            if kind == "map":
                self.build_map(doc, raw)
        return doc

    def category_block(self):
        self.expect("{")
        objects, arrows, compose = [], [], []
        while not self.at("}"):
            key = self.name("objects, arrows or compose")
            self.expect(":")
            if key.text == "objects":
                while not self.at(";"):
                    objects.append(self.name("an object"))
                    if not self.at(";"):
                        self.expect(",")
            elif key.text == "arrows":
                while not self.at(";"):
                    f = self.name("an arrow name")
                    self.expect(":")
                    a = self.name("a source object")
                    self.expect("->")
                    b = self.name("a target object")
                    arrows.append((f, a, b))
                    if not self.at(";"):
                        self.expect(",")
            elif key.text == "compose":
                while not self.at(";"):
                    self.expect("(")
                    g = self.name("an arrow")
                    self.expect(".")
                    f = self.name("an arrow")
                    self.expect(")")
                    self.expect("=")
                    h = self.name("an arrow")
                    compose.append((g, f, h))
                    if not self.at(";"):
                        self.expect(",")
            else:
                raise DSLSyntaxError(f"unknown category field {key.text!r}", key.line, key.col)
            self.expect(";")
        self.expect("}")
        return objects, arrows, compose

    def coverage_block(self):
        self.expect("{")
        entries = []
        while not self.at("}"):
            o = self.name("an object")
            self.expect(":")
            self.expect("[")
            gens = self.name_list("]")
            self.expect("]")
            self.expect(";")
            entries.append((o, gens))
        self.expect("}")
        return entries

    def table(self) -> list[tuple[Token, Token]]:
        self.expect("{")
        pairs = []
        while not self.at("}"):
            x = self.name("an element")
            self.expect("->")
            y = self.name("an element")
            pairs.append((x, y))
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return pairs

    def presheaf_block(self):
        name = self.name("a presheaf name")
        self.expect("{")
        carriers, actions = [], []
        while not self.at("}"):
            key = self.name("an object or arrow")
            self.expect(":")
            if self.at("["):
                self.expect("[")
                carriers.append((key, self.name_list("]")))
                self.expect("]")
            else:
                actions.append((key, self.table()))
            self.expect(";")
        self.expect("}")
        return name, carriers, actions

    def ref(self) -> Token | tuple[Token, Token]:
        t = self.name("a presheaf")
        if t.text == "y" and self.at("("):
            self.expect("(")
            o = self.name("an object")
            self.expect(")")
            return (t, o)
        return t

    def map_block(self):
        name = self.name("a map name")
        self.expect(":")
        src = self.ref()
        self.expect("->")
        tgt = self.ref()
        self.expect("{")
        comps = []
        while not self.at("}"):
            o = self.name("an object")
            self.expect(":")
            comps.append((o, self.table()))
            self.expect(";")
        self.expect("}")
        return name, src, tgt, comps

    # semantic passes
    def build_category(self, raw) -> FinCat:
        objects, arrows, compose = raw
        names = [o.text for o in objects]
        obj_set = set(names)
        for f, a, b in arrows:
            for end in (a, b):
                if end.text not in obj_set:
                    raise SemanticError(
                        f"arrow {f.text!r} has unknown endpoint {end.text!r}", end.line, end.col
                    )
        arrow_tab = [(f.text, a.text, b.text) for f, a, b in arrows]
        known = {f.text for f, _, _ in arrows} | {f"id_{o}" for o in names}
        table = {}
        for g, f, h in compose:
            for t in (g, f, h):
                if t.text not in known:
                    raise SemanticError(f"compose mentions unknown arrow {t.text!r}", t.line, t.col)
            table[(f.text, g.text)] = h.text
        if self.free_compose:
            table = _saturate(names, arrow_tab, table)
        try:
            return validate_category(names, arrow_tab, table)
        except ValidationError:
            raise
        except ToposError as exc:
            raise ValidationError(str(exc)) from exc

    def lookup_object(self, C: FinCat, t: Token) -> int:
        try:
            return C.obj(t.text)
        except UnknownObject:
            raise SemanticError(f"unknown object {t.text!r}", t.line, t.col) from None

    def build_coverage(self, doc: SiteDocument, tok: Token, entries) -> None:
        C = doc.category
        sieves = []
        for o, gens in entries:
            c = self.lookup_object(C, o)
            for g in gens:
                if not C.has_arrow(g.text):
                    raise SemanticError(f"unknown arrow {g.text!r}", g.line, g.col)
                if C.tgt[C.arrow(g.text)] != c:
                    raise SemanticError(f"arrow {g.text!r} does not end at {o.text!r}", g.line, g.col)
            sieves.append(generated_sieve(C, c, [g.text for g in gens]))
        doc.coverage_generators.extend(sieves)
        prior = list(doc.topology.covering_sieves()) if doc.topology else []
        if self.strict:
            table = [set() for _ in C.objects]
            for S in prior + sieves:
                table[S.obj].add(S)
            doc.topology = check_axioms(C, table)
        else:
            doc.topology = generate_from_sieves(C, prior + sieves)
            doc.coverage_generated = True
        doc.spans.setdefault("coverage", (tok.line, tok.col))

    def build_presheaf(self, doc: SiteDocument, raw) -> None:
        name, carriers, actions = raw
        C = doc.category
        if name.text in doc.presheaves or name.text in BUILTINS:
            raise SemanticError(f"presheaf {name.text!r} defined twice", name.line, name.col)
        cars: dict[str, list[str]] = {}
        for o, elems in carriers:
            self.lookup_object(C, o)
            cars[o.text] = [e.text for e in elems]
        acts: dict[str, dict[str, str]] = {}
        for a, pairs in actions:
            if not C.has_arrow(a.text):
                raise SemanticError(f"unknown arrow {a.text!r}", a.line, a.col)
            acts[a.text] = {x.text: y.text for x, y in pairs}
        _derive_actions(C, acts)
        doc.presheaves[name.text] = Presheaf.build(C, cars, acts)
        doc.spans[name.text] = (name.line, name.col)

    def resolve(self, doc: SiteDocument, ref) -> tuple[Presheaf, str]:
        C = doc.category
        if isinstance(ref, tuple):
            _, o = ref
            self.lookup_object(C, o)
            return yoneda(C, o.text), f"y({o.text})"
        if ref.text in doc.presheaves:
            return doc.presheaves[ref.text], ref.text
        if ref.text == "1":
            return terminal(C), "1"
        if ref.text == "0":
            return initial(C), "0"
        if ref.text == "Omega":
            return omega(C).presheaf, "Omega"
        raise SemanticError(f"unknown presheaf {ref.text!r}", ref.line, ref.col)

    def build_map(self, doc: SiteDocument, raw) -> None:
        name, src, tgt, comps = raw
        C = doc.category
        if name.text in doc.maps:
            raise SemanticError(f"map {name.text!r} defined twice", name.line, name.col)
        X, xs = self.resolve(doc, src)
        Y, ys = self.resolve(doc, tgt)
        table: dict[str, dict[Hashable, Hashable]] = {}
        for o, pairs in comps:
            c = self.lookup_object(C, o)
            xin, yin = element_names(X, c), element_names(Y, c)
            row = {}
            for x, y in pairs:
                if x.text not in xin:
                    raise SemanticError(f"{x.text!r} is not an element of {xs}({o.text})", x.line, x.col)
                if y.text not in yin:
                    raise SemanticError(f"{y.text!r} is not an element of {ys}({o.text})", y.line, y.col)
                row[X.carriers[c][xin[x.text]]] = Y.carriers[c][yin[y.text]]
            table[o.text] = row
        doc.maps[name.text] = PresheafMap.build(X, Y, table)
        doc.map_refs[name.text] = (xs, ys)
        doc.spans[name.text] = (name.line, name.col)


def element_name(e: Hashable, C: FinCat | None = None) -> str:
    if isinstance(e, Sieve) and C is not None:
        return sieve_label(C, e)
    return render(e)


def element_names(X: Presheaf, c: int) -> dict[str, int]:
    return {element_name(e, X.base): i for i, e in enumerate(X.carriers[c])}


def _saturate(objects, arrows, table: dict[tuple[str, str], str]) -> dict[tuple[str, str], str]:
    """Fill each missing composite whose hom-set leaves exactly one candidate."""
    table = dict(table)
    ends = {f: (a, b) for f, a, b in arrows}
    for o in objects:
        ends.setdefault(f"id_{o}", (o, o))
    ident = {f"id_{o}" for o in objects}
    homs: dict[tuple[str, str], list[str]] = {}
    for f, (a, b) in ends.items():
        homs.setdefault((a, b), []).append(f)
    for f, (a, b) in ends.items():
        for g, (b2, c) in ends.items():
            if b != b2 or (f, g) in table or f in ident or g in ident:
                continue
            candidates = homs.get((a, c), [])
            if len(candidates) == 1:
                table[(f, g)] = candidates[0]
    return table


def _derive_actions(C: FinCat, acts: dict[str, dict[str, str]]) -> None:
    """Fill actions of composite arrows from factorizations with known actions."""
    changed = True
    while changed:
        changed = False
        for (f, g), h in sorted(C._then.items()):
            name = C.arrows[h].name
            if name in acts or C.is_identity(h):
                continue
            fa, ga = C.arrows[f].name, C.arrows[g].name
            if fa in acts and ga in acts:
                af, ag = acts[fa], acts[ga]
                # X(g . f) = X(f) o X(g); leave gaps for Presheaf.build to report
                acts[name] = {e: af[x] for e, x in ag.items() if x in af}
                changed = True


def parse(
    text: str,
    strict: bool = False,
    free_compose: bool = False,
    base: FinCat | None = None,
) -> SiteDocument:
    """Parse and fully validate a site document.

    ``base`` supplies the category for documents without a category block.
    """
    try:
        return _Parser(text, strict, free_compose, base).document()
    except (DSLSyntaxError, SemanticError, ValidationError):
        raise
    except (UnknownObject, UnknownArrow) as exc:
        raise SemanticError(str(exc)) from None


# -- emitter -----------------------------------------------------------------------

_BARE = re.compile(r"[A-Za-z0-9_'*]+")


def _q(s: str) -> str:
    return s if _BARE.fullmatch(s) and s not in ("y",) else json.dumps(s)


def emit(doc: SiteDocument) -> str:
    """Render a document in the text format; ``parse(emit(doc))`` is equal to ``doc``."""
    C = doc.category
    lines = ["category {"]
    lines.append(f"  objects: {', '.join(_q(o) for o in C.objects)};")
    real = [a for f, a in enumerate(C.arrows) if not C.is_identity(f)]
    if real:
        lines.append("  arrows: " + ", ".join(f"{_q(a.name)}: {_q(a.src)} -> {_q(a.tgt)}" for a in real) + ";")
    comps = []
    for (f, g), h in sorted(C._then.items()):
        if C.is_identity(f) or C.is_identity(g):
            continue
        comps.append(f"({_q(C.arrows[g].name)} . {_q(C.arrows[f].name)}) = {_q(C.arrows[h].name)}")
    if comps:
        lines.append("  compose: " + ", ".join(comps) + ";")
    lines.append("}")
    if doc.topology is not None:
        lines.append("coverage {")
        for S in doc.topology.covering_sieves():
            names = [_arrow_text(C, n) for n in S.names(C)]
            lines.append(f"  {_q(C.objects[S.obj])}: [{', '.join(_q(n) for n in names)}];")
        lines.append("}")
    for name, X in doc.presheaves.items():
        lines.append(f"presheaf {_q(name)} {{")
        for c, o in enumerate(C.objects):
            lines.append(f"  {_q(o)}: [{', '.join(_q(element_name(e, C)) for e in X.carriers[c])}];")
        for f, a in enumerate(C.arrows):
            if C.is_identity(f):
                continue
            src, tgt = X.carriers[C.src[f]], X.carriers[C.tgt[f]]
            pairs = ", ".join(
                f"{_q(element_name(tgt[i], C))} -> {_q(element_name(src[j], C))}"
                for i, j in enumerate(X.actions[f])
            )
            lines.append(f"  {_q(a.name)}: {{{pairs}}};")
        lines.append("}")
    for name, u in doc.maps.items():
        xs, ys = doc.map_refs.get(name, ("?", "?"))
        lines.append(f"map {_q(name)}: {_ref(xs)} -> {_ref(ys)} {{")
        for c, o in enumerate(C.objects):
            X, Y = u.source.carriers[c], u.target.carriers[c]
            pairs = ", ".join(
                f"{_q(element_name(X[i], C))} -> {_q(element_name(Y[j], C))}"
                for i, j in enumerate(u.components[c])
            )
            lines.append(f"  {_q(o)}: {{{pairs}}};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def _arrow_text(C: FinCat, name: str) -> str:
    # identities are implicit in the text format and always read back as id_<obj>
    f = C.arrow(name)
    return f"id_{C.objects[C.src[f]]}" if C.is_identity(f) else name


def _ref(name: str) -> str:
    if name.startswith("y(") and name.endswith(")"):
        return f"y({_q(name[2:-1])})"
    return _q(name)


# -- JSON form -----------------------------------------------------------------------

def from_json(data: Mapping[str, Any] | str, base: FinCat) -> SiteDocument:
    """Presheaves and maps given as JSON over an existing site.

    Shape: ``{"presheaves": {name: {"carriers": {obj: [..]}, "actions": {arrow: {e: e}}}},
    "maps": {name: {"source": ref, "target": ref, "components": {obj: {e: e}}}}}``.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise DSLSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    doc = SiteDocument(base)
    p = _Parser("", False, False, base)
    tok = lambda s: Token("word", str(s), 0, 0)  # noqa: E731
    for name, entry in (data.get("presheaves") or {}).items():
        carriers = [(tok(o), [tok(e) for e in elems]) for o, elems in entry.get("carriers", {}).items()]
        actions = [
            (tok(a), [(tok(x), tok(y)) for x, y in table.items()])
            for a, table in entry.get("actions", {}).items()
        ]
        p.build_presheaf(doc, (tok(name), carriers, actions))
    for name, entry in (data.get("maps") or {}).items():
        refs = []
        for r in (entry["source"], entry["target"]):
            m = re.fullmatch(r"y\((.+)\)", str(r))
            refs.append((tok("y"), tok(m.group(1))) if m else tok(r))
        comps = [
            (tok(o), [(tok(x), tok(y)) for x, y in table.items()])
            for o, table in entry.get("components", {}).items()
        ]
        p.build_map(doc, (tok(name), refs[0], refs[1], comps))
    return doc
