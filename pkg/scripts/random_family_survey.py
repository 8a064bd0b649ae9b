#!/usr/bin/env python3
"""Survey invariant structure over random commuting families.

Samples invertible polynomial families in a random integer matrix, runs the
decomposition, and tabulates subspace counts, codimension mix and tree depths.
Useful for eyeballing how the structure bounds behave away from the built-in
fixtures.
"""

import argparse
import random
from collections import Counter
from fractions import Fraction

from lindyn.groups import GeneratorSet
from lindyn.invariants import invariant_family, invariant_tree
from lindyn.linalg import Matrix
from lindyn.numeric import NumericContext


def random_family(rng: random.Random, n: int) -> GeneratorSet:
    while True:
        R = Matrix.from_rows([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        gens = []
        ok = True
        for _ in range(2):
            for _attempt in range(8):
                c = [rng.randint(1, 3), rng.randint(-2, 2), rng.randint(-2, 2)]
                M = Matrix.identity(n).scale(c[0])
                P = R
                for coeff in c[1:]:
                    if coeff:
                        M = M + P.scale(coeff)
                    P = P * R
                if not M.det().is_zero():
                    gens.append(M)
                    break
            else:
                ok = False
                break
        if ok:
            return GeneratorSet("real", n, gens)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--families", type=int, default=50)
    parser.add_argument("--max-dim", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    ctx = NumericContext()
    counts = Counter()
    codims = Counter()
    depths = Counter()
    for i in range(args.families):
        n = rng.randint(2, args.max_dim)
        G = random_family(rng, n)
        fam = invariant_family(G, ctx)
        tree = invariant_tree(G, ctx)
        counts[(n, fam.count)] += 1
        for s in fam.subspaces:
            codims[n - s.dim] += 1
        depths[(n, tree.depth)] += 1

    print(f"surveyed {args.families} families (seed {args.seed})")
    print("\nsubspace count by dimension (n, r): families")
    for key in sorted(counts):
        print(f"  {key}: {counts[key]}")
    print("\ncodimension mix:", dict(sorted(codims.items())))
    print("\ntree depth by dimension (n, depth): families")
    for key in sorted(depths):
        print(f"  {key}: {depths[key]}")


if __name__ == "__main__":
    main()
