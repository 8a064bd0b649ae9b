"""Analysis report assembly: a self-contained, deterministic JSON document.

Exact quantities are rendered as expression strings with a decimal value side
by side; every knob needed to re-run the analysis (precision, tolerances,
exponent bounds, seed) is echoed into the report.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from . import __version__
from .dynamics import ClosureConfig, ClosureVerdict
from .groups import GeneratorSet
from .invariants import InvariantFamily, InvariantTreeNode, Membership
from .linalg import Matrix
from .numeric import NumericContext, as_complex
from .scalars import Scalar


def _fmt_complex(z: complex) -> str:
    re, im = z.real, z.imag
    if im == 0:
        return f"{re:.12g}"
    sign = "+" if im >= 0 else "-"
    return f"{re:.12g}{sign}{abs(im):.12g}i"


def render_value(x) -> dict[str, Any]:
    """{"exact": expression-or-null, "approx": decimal string}."""
    if isinstance(x, Scalar):
        return {"exact": str(x), "approx": _fmt_complex(complex(x.evaluate(64)))}
    return {"exact": None, "approx": _fmt_complex(as_complex(x))}


def render_matrix(M) -> list[list[dict[str, Any]]]:
    if isinstance(M, Matrix):
        return [[render_value(e) for e in row] for row in M.entries()]
    arr = np.asarray(M)
    return [[render_value(arr[i, j]) for j in range(arr.shape[1])] for i in range(arr.shape[0])]


def render_tree(node: InvariantTreeNode) -> dict[str, Any]:
    return {
        "dimension": node.dimension,
        "case": node.case,
        "family_size": node.family_size,
        "children": [render_tree(c) for c in node.children],
    }


def membership_dict(m: Membership) -> dict[str, Any]:
    return {"in_U": m.in_U, "containing": m.containing}


def verdict_dict(v: ClosureVerdict, K: int | None = None) -> dict[str, Any]:
    out = {
        "kind": v.kind,
        "hull_dim": v.hull_dim,
        "gap": None if v.gap is None else f"{v.gap:.12g}",
        "min_distance": None if v.min_distance is None else f"{v.min_distance:.12g}",
        "notes": list(v.notes),
    }
    if K is not None:
        out["exponent_bound"] = K
    return out


def analysis_report(
    G: GeneratorSet,
    family: InvariantFamily,
    tree_root: InvariantTreeNode,
    tree_depth: int,
    ctx: NumericContext,
    cfg: ClosureConfig,
    seed: int,
    max_exponent: int,
    point_sections: list[dict[str, Any]],
    commutator_residual: float,
) -> dict[str, Any]:
    blocks = []
    for b in family.blocks:
        eigen = {}
        for gi, name in enumerate(G.names):
            ex = b.eigen_exact.get(gi)
            if ex is not None:
                eigen[name] = render_value(ex)
            else:
                eigen[name] = render_value(b.eigen_numeric[gi].as_complex())
        blocks.append(
            {
                "dimension": b.dim,
                "exact": b.exact,
                "eigenvalues": eigen,
                "conjugate_partner": b.conj_partner,
            }
        )
    subspaces = []
    for s in family.subspaces:
        subspaces.append(
            {
                "case": s.case,
                "dimension": s.dim,
                "block": s.block_index,
                "functionals": render_matrix(s.functionals),
                "basis": render_matrix(s.subspace.basis),
                "invariance_residual": f"{s.invariance_residual:.12g}",
            }
        )
    triangular_forms = []
    for tf in family.forms:
        triangular_forms.append(
            {
                "diagonal": {
                    name: render_value(mu)
                    for name, mu in zip(G.names, tf.diagonal)
                },
                "triangular": [render_matrix(T) for T in tf.triangular],
            }
        )
    return {
        "tool": {"name": "lindyn", "version": __version__},
        "config": {
            "precision": ctx.precision,
            "eps": f"{ctx.eps:.12g}",
            "cluster_delta": f"{ctx.cluster_delta:.12g}",
            "max_exponent": max_exponent,
            "window": f"{cfg.window:.12g}",
            "gap_threshold": f"{cfg.gap_threshold:.12g}",
            "seed": seed,
        },
        "input": {
            "field": G.field,
            "dimension": G.dimension,
            "generator_names": list(G.names),
            "generators": [
                [[str(e) for e in row] for row in g.entries()]
                if isinstance(g, Matrix)
                else render_matrix(g)
                for g in G.generators
            ],
        },
        "commutativity": {
            "abelian": True,
            "max_residual": f"{commutator_residual:.12g}",
        },
        "spectral_blocks": blocks,
        "triangular_forms": triangular_forms,
        "invariant_family": {
            "count": family.count,
            "subspaces": subspaces,
            "complement": "U = complement of the union of the subspaces above",
        },
        "basis_change": {
            "Q": render_matrix(family.block_change),
            "P": render_matrix(family.triangular_change),
        },
        "invariant_tree": {"depth": tree_depth, "root": render_tree(tree_root)},
        "points": point_sections,
    }


def dumps_report(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def loads_report(text: str) -> dict[str, Any]:
    return json.loads(text)
