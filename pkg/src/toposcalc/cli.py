"""Command-line interface.

Usage::

    toposcalc enumerate-topologies SITE [--format json|table|dot]
    toposcalc omega SITE
    toposcalc sheafify SITE [--presheaf NAME ...]
    toposcalc factor SITE --map NAME
    toposcalc force SITE --sigma FILE --theta iso|surj|mono|conn:<n>|conn:inf
    toposcalc verify SITE --suite bijections|frame|modality|forcing-equivalences|degeneracy

``SITE`` is a path to a site document or ``builtin:<name>`` for one of the
standard sites.  Exit status: 0 success, 1 a verdict failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from . import corpus as K
from .classifier import omega, sieve_label
from .dsl import SiteDocument, element_name, emit, from_json, parse
from .errors import EnumerationUnavailable, ForcingVerificationFailed, ToposError
from .factor import cover_closed_factor, dense_closed_factor
from .forcing import Theta, compile_forcing, forcing, generators, minimality_check
from .presheaf import Presheaf, PresheafMap, is_mono
from .sheaf import handle_for, matching_families, restriction_family
from .suites import SUITES
from .topology import (
    GrothTopology,
    enumerate_closure_operators,
    enumerate_topologies,
    groth_to_lt,
    hasse_edges,
    minimal_topology,
)

SCHEMA = "toposcalc.report/1"
EXIT_OK, EXIT_VERDICT, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# -- loading ------------------------------------------------------------------------

def load_site(source: str, strict: bool, free_compose: bool) -> tuple[SiteDocument, str]:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in K.SITE_BUILDERS:
            raise InputError(f"unknown builtin site {name!r}; choose from {', '.join(K.SITE_BUILDERS)}")
        doc = SiteDocument(K.site(name))
        return doc, emit(doc)
    text = _read(source)
    return parse(text, strict=strict, free_compose=free_compose), text


def load_sigma(path: str, doc: SiteDocument) -> tuple[list[PresheafMap], str]:
    text = _read(path)
    if path.endswith(".json") or text.lstrip().startswith("{") and '"maps"' in text:
        extra = from_json(text, doc.category)
    else:
        extra = parse(text, base=doc.category)
        if extra.category != doc.category:
            raise InputError("the sigma file describes a different category")
    return list(extra.maps.values()), text


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def doc_topology(doc: SiteDocument) -> GrothTopology:
    return doc.topology if doc.topology is not None else minimal_topology(doc.category)


# -- serialization helpers ---------------------------------------------------------

def topology_json(G: GrothTopology) -> dict:
    return {"label": G.label(), "code": G.code, "covers": G.to_dict()}


def presheaf_json(X: Presheaf) -> dict:
    C = X.base
    return {
        "carriers": {o: [element_name(e, C) for e in X.carriers[c]] for c, o in enumerate(C.objects)},
        "actions": {
            a.name: {
                element_name(X.carriers[C.tgt[f]][i], C): element_name(X.carriers[C.src[f]][j], C)
                for i, j in enumerate(X.actions[f])
            }
            for f, a in enumerate(C.arrows)
            if not C.is_identity(f)
        },
    }


def map_json(u: PresheafMap) -> dict:
    C = u.base
    return {
        o: {
            element_name(u.source.carriers[c][i], C): element_name(u.target.carriers[c][j], C)
            for i, j in enumerate(u.components[c])
        }
        for c, o in enumerate(C.objects)
    }


# -- commands ----------------------------------------------------------------------

def cmd_enumerate(doc: SiteDocument, args) -> tuple[dict, bool]:
    tops = enumerate_topologies(doc.category)
    oracle = len(enumerate_closure_operators(doc.category))
    return {
        "count": len(tops),
        "closure_operator_count": oracle,
        "topologies": [topology_json(G) for G in tops],
        "hasse": [list(e) for e in hasse_edges(tops)],
    }, oracle == len(tops)


def cmd_omega(doc: SiteDocument, args) -> tuple[dict, bool]:
    C = doc.category
    Om = omega(C)
    return {
        "sieves": {o: [sieve_label(C, S) for S in Om.presheaf.carriers[c]] for c, o in enumerate(C.objects)},
        "true": {o: sieve_label(C, Om.presheaf.carriers[c][Om.true.components[c][0]]) for c, o in enumerate(C.objects)},
        "omega": presheaf_json(Om.presheaf),
    }, True


def cmd_sheafify(doc: SiteDocument, args) -> tuple[dict, bool]:
    C = doc.category
    G = doc_topology(doc)
    h = handle_for(G)
    names = args.presheaf or list(doc.presheaves)
    if not names:
        raise InputError("the document defines no presheaf to sheafify")
    out = {"topology": topology_json(G), "presheaves": {}}
    for name in names:
        if name not in doc.presheaves:
            raise InputError(f"unknown presheaf {name!r}")
        X = doc.presheaves[name]
        LX, unit = h.sheafify(X)
        trace = {}
        for c, o in enumerate(C.objects):
            rows = []
            for S in sorted(G.covers[c]):
                arrows = S.names(C)
                fams = matching_families(X, S)
                induced = {restriction_family(X, S, i) for i in range(len(X.carriers[c]))}
                rows.append({
                    "sieve": arrows,
                    "families": [
                        [element_name(X.carriers[C.src[g]][x], C) for g, x in zip(S.arrows(), fam)]
                        for fam in fams
                    ],
                    "induced": sum(1 for fam in fams if fam in induced),
                })
            trace[o] = rows
        out["presheaves"][name] = {
            "is_sheaf": h.is_sheaf(X),
            "sheaf": presheaf_json(LX),
            "unit": map_json(unit),
            "trace": trace,
        }
    return out, True


def cmd_factor(doc: SiteDocument, args) -> tuple[dict, bool]:
    if args.map not in doc.maps:
        raise InputError(f"unknown map {args.map!r}")
    f = doc.maps[args.map]
    G = doc_topology(doc)
    fac = cover_closed_factor(f, G)
    out: dict[str, Any] = {
        "topology": topology_json(G),
        "cover_closed": {
            "middle": presheaf_json(fac.middle.presheaf),
            "covering_part": map_json(fac.left),
            "closed_part": map_json(fac.right),
        },
    }
    if is_mono(f):
        dc = dense_closed_factor(f, groth_to_lt(G))
        out["dense_closed"] = {
            "middle": presheaf_json(dc.middle.presheaf),
            "dense_part": map_json(dc.left),
            "closed_part": map_json(dc.right),
        }
    return out, fac.composite() == f


def cmd_force(doc: SiteDocument, args, sigma: list[PresheafMap]) -> tuple[dict, bool]:
    C = doc.category
    fc = forcing(sigma, Theta.parse(args.theta), C)
    out: dict[str, Any] = {"theta": str(fc.theta), "sigma": len(sigma), "generators": len(generators(fc))}
    try:
        compiled = compile_forcing(fc)
    except ForcingVerificationFailed as exc:
        compiled = compile_forcing(fc, verify=False)
        out["topology"] = topology_json(compiled.handle.topology)
        out["verification"] = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        return out, False
    out["topology"] = topology_json(compiled.handle.topology)
    out["verification"] = {"ok": True, "transcript": compiled.transcript}
    ok = True
    if args.minimality:
        try:
            least = minimality_check(fc, compiled.handle)
            out["minimality"] = least
            ok = least
        except EnumerationUnavailable as exc:
            out["minimality"] = f"unavailable: {exc}"
    return out, ok


def cmd_verify(doc: SiteDocument, args) -> tuple[dict, bool]:
    suite = SUITES[args.suite]
    kwargs = {}
    if args.suite in ("forcing-equivalences", "minimality"):
        kwargs = {"samples": args.samples, "seed": args.seed}
    r = suite(doc.category, **kwargs)
    return {
        "suite": r.name,
        "checked": r.checked,
        "failures": r.failures,
        "details": r.details,
    }, r.ok


# -- output ------------------------------------------------------------------------

def render_table(report: dict) -> str:
    lines = [f"# {report['command']}  ({report['schema']}, {report['inputs_digest'][:19]})"]

    def walk(value, indent: int, key: str | None):
        pad = "  " * indent
        head = f"{pad}{key}:" if key is not None else pad.rstrip()
        if isinstance(value, dict):
            if key is not None:
                lines.append(head)
            for k, v in value.items():
                walk(v, indent + (key is not None), str(k))
        elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
            lines.append(head)
            for k, v in enumerate(value):
                walk(v, indent + 1, f"[{k}]")
        else:
            shown = ", ".join(map(str, value)) if isinstance(value, list) else value
            lines.append(f"{head} {shown}")

    walk(report["results"], 0, None)
    lines.append(f"verdict: {report['verdict']}")
    if "timing_s" in report:
        lines.append(f"timing_s: {report['timing_s']}")
    return "\n".join(lines) + "\n"


def render_dot(report: dict) -> str:
    res = report["results"]
    cmd = report["command"]
    if cmd == "enumerate-topologies":
        out = ["digraph topologies {", "  rankdir=BT;"]
        for k, t in enumerate(res["topologies"]):
            out.append(f"  t{k} [label={json.dumps(t['label'])}];")
        for a, b in res["hasse"]:
            out.append(f"  t{a} -> t{b};")
        return "\n".join(out + ["}"]) + "\n"
    if cmd == "factor":
        out = ["digraph factorization {", "  rankdir=LR;", '  A -> M [label="covering"];', '  M -> B [label="closed"];']
        if "dense_closed" in res:
            out += ['  A -> D [label="dense", style=dashed];', '  D -> B [label="closed", style=dashed];']
        return "\n".join(out + ["}"]) + "\n"
    if cmd == "force":
        out = ["digraph forcing {"]
        for o, sieves in res["topology"]["covers"].items():
            for S in sieves:
                out.append(f"  {json.dumps(o)} -> {json.dumps('{' + ','.join(S) + '}')};")
        return "\n".join(out + ["}"]) + "\n"
    if cmd == "omega":
        out = ["digraph omega {"]
        for arrow, table in res["omega"]["actions"].items():
            for s, t in table.items():
                out.append(f"  {json.dumps(s)} -> {json.dumps(t)} [label={json.dumps(arrow)}];")
        return "\n".join(out + ["}"]) + "\n"
    raise InputError(f"dot output is not available for {cmd}")


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("site", help="site document path, or builtin:<name>")
    common.add_argument("--format", choices=("json", "table", "dot"), default="json")
    common.add_argument("--strict", action="store_true", help="coverage must already satisfy the axioms")
    common.add_argument("--free-compose", action="store_true", help="fill composites with a unique candidate")
    common.add_argument("--timing", action="store_true", help="include wall-clock time (non-deterministic)")

    p = argparse.ArgumentParser(prog="toposcalc", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"toposcalc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("enumerate-topologies", parents=[common], help="list every topology on the site")
    sub.add_parser("omega", parents=[common], help="the subobject classifier")
    s = sub.add_parser("sheafify", parents=[common], help="sheafify presheaves of the document")
    s.add_argument("--presheaf", action="append", help="presheaf name (repeatable; default all)")
    s = sub.add_parser("factor", parents=[common], help="factorizations of a map")
    s.add_argument("--map", required=True)
    s = sub.add_parser("force", parents=[common], help="compile a forcing condition")
    s.add_argument("--sigma", required=True, help="document (or JSON) with the maps of sigma")
    s.add_argument("--theta", required=True, help="iso|surj|mono|conn:<n>|conn:inf")
    s.add_argument("--no-minimality", dest="minimality", action="store_false")
    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("--suite", required=True, choices=sorted(SUITES))
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    return p


def run(args: argparse.Namespace) -> tuple[dict, int]:
    start = time.perf_counter()
    doc, text = load_site(args.site, args.strict, args.free_compose)
    digest = hashlib.sha256()
    digest.update(f"{args.command}\0{args.strict}\0{args.free_compose}\0".encode())
    digest.update(text.encode())
    if args.command == "force":
        sigma, sigma_text = load_sigma(args.sigma, doc)
        digest.update(b"\0" + sigma_text.encode() + f"\0{args.theta}".encode())
        results, ok = cmd_force(doc, args, sigma)
    else:
        handler = {
            "enumerate-topologies": cmd_enumerate,
            "omega": cmd_omega,
            "sheafify": cmd_sheafify,
            "factor": cmd_factor,
            "verify": cmd_verify,
        }[args.command]
        for extra in ("presheaf", "map", "suite", "samples", "seed"):
            if hasattr(args, extra):
                digest.update(f"\0{extra}={getattr(args, extra)}".encode())
        results, ok = handler(doc, args)
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "inputs_digest": "sha256:" + digest.hexdigest(),
        "results": results,
        "verdict": "pass" if ok else "fail",
    }
    if doc.coverage_generated:
        report["notes"] = ["coverage block was closed under the topology axioms"]
    if args.timing:
        report["timing_s"] = round(time.perf_counter() - start, 3)
    return report, EXIT_OK if ok else EXIT_VERDICT


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = run(args)
        if args.format == "json":
            text = json.dumps(report, indent=2) + "\n"
        elif args.format == "table":
            text = render_table(report)
        else:
            text = render_dot(report)
    except (InputError, ToposError, ValueError) as exc:
        print(f"toposcalc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
