"""Command-line front end: ``mahavier-lab {certify,orbit,render,witness}``.

Exit codes: 0 success / PASS, 1 FAIL (a witness is attached), 2 input error,
3 budget exhausted.  Thread count for sampled runs comes from
``MAHAVIER_LAB_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import chaos_diagnostics as cd
from . import fan_geometry as fg
from .mahavier_words import Cylinder, extension_tree, orbit_csv, validate_word
from .space_relation import BUILTINS, SPINES, DomainError, NCPair, builtin_relation, load_relation

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _relation(args):
    src = args.relation
    if src in BUILTINS:
        pair = (args.r, args.rho) if src.startswith("lelek") else None
        return builtin_relation(src, pair)
    path = Path(src)
    if not path.exists():
        raise InputError(f"--relation {src!r} is neither a builtin {BUILTINS} nor a file")
    return load_relation(path)


def _threads() -> int | None:
    raw = os.environ.get("MAHAVIER_LAB_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"MAHAVIER_LAB_THREADS={raw!r} is not an integer") from None
    if n < 1:
        raise InputError("MAHAVIER_LAB_THREADS must be >= 1")
    return n


def parse_cylinder(text: str) -> Cylinder:
    """``"1:0:1,2:0.2:0.4"``, a JSON list of ``[index, lo, hi]``, or a path to such JSON."""
    text = text.strip()
    if text.startswith(("[", "{")):
        return Cylinder.from_json(json.loads(text))
    if Path(text).is_file():
        return Cylinder.from_json(json.loads(Path(text).read_text()))
    cons = []
    for part in filter(None, text.split(",")):
        try:
            i, lo, hi = part.split(":")
            cons.append((int(i), float(lo), float(hi)))
        except ValueError:
            raise InputError(f"bad cylinder constraint {part!r}; expected index:lo:hi") from None
    return Cylinder(tuple(cons))


def _emit(payload, out: str | None, text: bool = False):
    body = payload if text else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)


def cmd_certify(args) -> int:
    rel = _relation(args)
    report = cd.certify_mixing(rel, args.samples, args.depth, args.delta, args.k_max,
                               args.pairs, args.seed, workers=_threads())
    mixing = [m for m in report.get("mixing", []) if m.get("found")]
    report["verified"] = all(m["verified"] and m["collapsed_base_valid_for_G"] for m in mixing)
    _emit(report, args.out)
    return {"PASS": EXIT_OK, "FAIL": EXIT_FAIL, "BUDGET": EXIT_BUDGET}[report["status"]]


def cmd_orbit(args) -> int:
    rel = _relation(args)
    if args.x is None:
        raise InputError("orbit needs --x")
    if not rel.space.contains(args.x, 1e-9):
        raise InputError(f"start {args.x} is outside the space")
    try:
        rows = extension_tree(rel, args.x, args.depth, args.max_nodes)
    except OverflowError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    _emit(orbit_csv(rows), args.out, text=True)
    return EXIT_OK


def cmd_render(args) -> int:
    if args.fan == "lelek":
        fan = fg.lelek_approximation(NCPair(args.r, args.rho), args.depth)
    else:
        rel = _relation(args)
        spine = _spine(args, rel)
        fan = fg.cantor_quotient_embed(rel, spine, args.depth, seed=args.seed)
    svg = fg.render_fan(fan)
    _emit(svg, args.out, text=True)
    if args.legs_json:
        Path(args.legs_json).write_text(fg.legs_json(fan) + "\n", encoding="utf-8")
    print(f"{len(fan.legs)} legs", file=sys.stderr)
    return EXIT_OK


def _spine(args, rel):
    if args.spine:
        return tuple(float(s) for s in args.spine.split(","))
    if rel.name in SPINES:
        return SPINES[rel.name]
    raise InputError("--spine is required for relations without a builtin spine")


def cmd_witness(args) -> int:
    rel = _relation(args)
    if args.kind == "periodic":
        if args.x is None or args.y is None:
            raise InputError("periodic witness needs --x and --y")
        if rel.name == "devaney_5":
            w = cd.periodic_witness_devaney5(args.x, args.y)
        else:
            w = cd.periodic_witness_search(rel, args.x, args.y, args.depth or 8)
        if w is None:
            print(f"no return path within {args.depth or 8} steps", file=sys.stderr)
            return EXIT_BUDGET
        payload = w.to_json()
    elif args.kind == "sensitivity":
        U = parse_cylinder(args.cylinder or "1:0:1,2:0:1")
        try:
            w = cd.sensitivity_witness(rel, U, _spine(args, rel), args.eps, max_steps=args.k_max)
        except cd.WitnessError as exc:
            print(f"budget exhausted: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        payload = w.to_json()
    else:
        U = parse_cylinder(args.cylinder or "1:0.30:0.31")
        V = parse_cylinder(args.target or "1:0.50:0.51")
        depth = args.depth or 24
        w = cd.connecting_word(rel, U, V, depth)
        if w is None:
            print(f"no connecting word within depth {depth}", file=sys.stderr)
            return EXIT_BUDGET
        payload = w.to_json()
        payload["kind"] = "transitive"
    # independent re-check of the emitted word(s) before writing
    words = [payload[k] for k in ("z", "x", "y", "base") if isinstance(payload.get(k), list)]
    payload["verified"] = bool(payload.get("verified")) and all(
        validate_word(cd.ForwardWord(tuple(c)), relation=rel) for c in words)
    _emit(payload, args.out)
    return EXIT_OK if payload["verified"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mahavier-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, depth):
        sp.add_argument("--relation", default="devaney_5", help=f"builtin {BUILTINS} or JSON path")
        sp.add_argument("--r", default="1/2", help="lelek slope r (rational)")
        sp.add_argument("--rho", default="3", help="lelek slope rho (rational)")
        sp.add_argument("--depth", type=int, default=depth,
                        help="search depth" + (f" (default {depth})" if depth else
                                               " (default 8 periodic, 24 transitive)"))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    c = sub.add_parser("certify", help="transitivity of G, then mixing of G + diagonal")
    common(c, 24)
    c.add_argument("--samples", type=int, default=50)
    c.add_argument("--delta", type=float, default=0.05)
    c.add_argument("--k-max", type=int, default=16)
    c.add_argument("--pairs", type=int, default=10)
    c.set_defaults(func=cmd_certify)

    o = sub.add_parser("orbit", help="CSV dump of the extension tree of a start point")
    common(o, 5)
    o.add_argument("--x", type=float)
    o.add_argument("--max-nodes", type=int, default=100_000)
    o.set_defaults(func=cmd_orbit)

    r = sub.add_parser("render", help="SVG of a Lelek fan or a Cantor-fan quotient")
    common(r, 8)
    r.add_argument("--fan", choices=("lelek", "cantor"), default="lelek")
    r.add_argument("--spine", default=None, help="comma-separated spine values")
    r.add_argument("--legs-json", default=None, help="also write the leg list as JSON")
    r.set_defaults(func=cmd_render)

    w = sub.add_parser("witness", help="periodic, sensitivity or transitivity witness")
    common(w, None)
    w.add_argument("--kind", choices=("periodic", "sensitivity", "transitive"), default="periodic")
    w.add_argument("--x", type=float)
    w.add_argument("--y", type=float)
    w.add_argument("--cylinder", default=None, help="U as index:lo:hi,... or JSON")
    w.add_argument("--target", default=None, help="V for --kind transitive")
    w.add_argument("--eps", type=float, default=cd.SENSITIVITY_EPS)
    w.add_argument("--k-max", type=int, default=cd.K0_BUDGET, help="step budget for k0")
    w.add_argument("--spine", default=None)
    w.set_defaults(func=cmd_witness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, DomainError, cd.PreconditionError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OverflowError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
