"""Command-line interface: analyze, orbit, verify-examples.

Exit codes: 0 success, 2 non-commuting generators, 3 unresolved numeric
ambiguity, 1 any other input or processing error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dynamics import ClosureConfig, classify_stabilized, enumerate_orbit
from .errors import ClusterAmbiguity, LindynError, NotAbelian
from .groups import GeneratorSet
from .invariants import invariant_family, invariant_tree, membership
from .linalg import Matrix, as_vector
from .numeric import NumericContext
from .report import (
    analysis_report,
    dumps_report,
    membership_dict,
    verdict_dict,
)
from .verify import verify_all

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_ABELIAN = 2
EXIT_AMBIGUOUS = 3


def load_input(path: str) -> tuple[GeneratorSet, dict]:
    doc = json.loads(Path(path).read_text())
    fieldname = doc["field"]
    n = int(doc["dimension"])
    gens = []
    names = []
    for gi, entry in enumerate(doc["generators"]):
        if isinstance(entry, dict):
            names.append(entry.get("name", f"g{gi}"))
            rows = entry["rows"]
        else:
            names.append(f"g{gi}")
            rows = entry
        gens.append(Matrix.from_rows(rows))
    G = GeneratorSet(fieldname, n, gens, names)
    points = doc.get("points", {})
    if isinstance(points, list):
        points = {f"p{i}": p for i, p in enumerate(points)}
    return G, points


def _contexts(args) -> tuple[NumericContext, ClosureConfig]:
    ctx = NumericContext(precision=args.precision, eps=args.tol)
    cfg = ClosureConfig(
        gap_threshold=args.gap_threshold,
        dedup_eps=min(args.tol, 1e-6),
    )
    return ctx, cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--precision", type=int, default=128,
                   help="working precision in bits for numeric fallbacks (default 128)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="relative tolerance for tolerant comparisons (default 1e-9)")
    p.add_argument("--gap-threshold", type=float, default=0.01,
                   help="max window gap for a dense verdict (default 0.01)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized property sampling (default 0)")


def cmd_analyze(args) -> int:
    G, points = load_input(args.input)
    ctx, cfg = _contexts(args)
    G.validate(ctx)
    residual = G.commutator_residual(ctx)
    family = invariant_family(G, ctx)
    tree = invariant_tree(G, ctx)
    point_sections = []
    for name, coords in points.items():
        vec = as_vector(coords)
        section = {
            "name": name,
            "point": [str(c) for c in vec],
            "membership": membership_dict(membership(family, vec, ctx)),
        }
        if args.classify_points:
            verdict, K = classify_stabilized(G, vec, cfg, max_exponent=args.max_exponent)
            section["closure"] = verdict_dict(verdict, K)
        point_sections.append(section)
    report = analysis_report(
        G, family, tree.root, tree.depth, ctx, cfg,
        args.seed, args.max_exponent, point_sections, residual,
    )
    text = dumps_report(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_orbit(args) -> int:
    G, _ = load_input(args.input)
    ctx, cfg = _contexts(args)
    G.validate(ctx)
    coords = [c for c in args.point.split(",") if c.strip()]
    if len(coords) != G.dimension:
        raise LindynError(
            f"point has {len(coords)} coordinates, expected {G.dimension}"
        )
    vec = as_vector(coords)
    family = invariant_family(G, ctx)
    mem = membership(family, vec, ctx)
    verdict, K = classify_stabilized(G, vec, cfg, max_exponent=args.max_exponent)
    out = {
        "point": [str(c) for c in vec],
        "membership": membership_dict(mem),
        "closure": verdict_dict(verdict, K),
    }
    if args.dump_points:
        cloud = enumerate_orbit(G, vec, K, cfg)
        _dump_points_csv(cloud.points, G.field, args.dump_points)
        out["dump"] = {"path": args.dump_points, "points": int(cloud.count)}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def _dump_points_csv(points: np.ndarray, fieldname: str, path: str) -> None:
    n = points.shape[1]
    with open(path, "w") as fh:
        if fieldname == "complex":
            header = ",".join(f"re{j},im{j}" for j in range(n))
            fh.write(header + "\n")
            for row in points:
                fh.write(",".join(f"{c.real:.17g},{c.imag:.17g}" for c in row) + "\n")
        else:
            fh.write(",".join(f"x{j}" for j in range(n)) + "\n")
            for row in points:
                fh.write(",".join(f"{c.real:.17g}" for c in row) + "\n")


def cmd_verify_examples(args) -> int:
    ctx, cfg = _contexts(args)
    results = verify_all(ctx, cfg, dense_K=args.dense_exponent)
    failures = 0
    for r in results:
        sys.stdout.write(r.line() + "\n")
        failures += 0 if r.ok else 1
    sys.stdout.write(
        f"{len(results) - failures}/{len(results)} claims passed\n"
    )
    return EXIT_OK if failures == 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindyn",
        description="Invariant-structure and orbit-closure analysis for "
        "abelian matrix groups over exact radical arithmetic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="compute invariant subspaces, basis changes and the invariant tree")
    pa.add_argument("input", help="JSON input file (field, dimension, generators, optional points)")
    pa.add_argument("--output", help="write the report here instead of stdout")
    pa.add_argument("--max-exponent", type=int, default=256,
                    help="orbit exponent bound for --classify-points (default 256)")
    pa.add_argument("--classify-points", action="store_true",
                    help="also classify orbit closures of the input points")
    _add_common(pa)
    pa.set_defaults(func=cmd_analyze)

    po = sub.add_parser("orbit", help="classify the orbit closure through one point")
    po.add_argument("input", help="JSON input file")
    po.add_argument("--point", required=True,
                    help="comma-separated scalar expressions, e.g. '1,sqrt(2),0'")
    po.add_argument("--max-exponent", type=int, default=256,
                    help="largest exponent box (default 256)")
    po.add_argument("--dump-points", help="write the sampled cloud to this CSV file")
    _add_common(po)
    po.set_defaults(func=cmd_orbit)

    pv = sub.add_parser("verify-examples", help="run every built-in fixture claim")
    pv.add_argument("--dense-exponent", type=int, default=None,
                    help="override the exponent bound of the dense-orbit claims")
    _add_common(pv)
    pv.set_defaults(func=cmd_verify_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotAbelian as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ABELIAN
    except ClusterAmbiguity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except (LindynError, OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
