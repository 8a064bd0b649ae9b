"""Generator sets for abelian subgroups of GL(n, K)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotAbelian
from .linalg import Matrix, matrix_from_strings
from .numeric import NumericContext, max_abs, nrank, to_numeric

REAL = "real"
COMPLEX = "complex"


@dataclass
class GeneratorSet:
    """A finite generating family, exact by preference, verified abelian."""

    field: str
    dimension: int
    generators: list
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.field not in (REAL, COMPLEX):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if not self.names:
            self.names = [f"g{k}" for k in range(len(self.generators))]
        n = self.dimension
        for g in self.generators:
            shape = (g.rows, g.cols) if isinstance(g, Matrix) else g.shape
            if shape != (n, n):
                raise ValueError(f"generator has shape {shape}, expected {(n, n)}")

    @property
    def exact(self) -> bool:
        return all(isinstance(g, Matrix) for g in self.generators)

    @staticmethod
    def from_strings(field: str, rows_per_generator: Sequence[Sequence[Sequence[str]]],
                     names: Sequence[str] | None = None) -> "GeneratorSet":
        gens = [matrix_from_strings(rows) for rows in rows_per_generator]
        n = gens[0].rows if gens else 0
        return GeneratorSet(field, n, gens, list(names or []))

    def radicands(self) -> set[int]:
        rads: set[int] = set()
        for g in self.generators:
            if isinstance(g, Matrix):
                for row in g.entries():
                    for e in row:
                        rads |= e.radicands()
        return rads

    def validate(self, ctx: NumericContext) -> None:
        """Check realness, invertibility and commutativity; raise on failure."""
        if self.field == REAL and self.exact:
            for name, g in zip(self.names, self.generators):
                if not g.is_real():
                    raise ValueError(f"generator {name} has complex entries in a real group")
        for name, g in zip(self.names, self.generators):
            if isinstance(g, Matrix):
                if g.det().is_zero():
                    raise ValueError(f"generator {name} is singular")
            else:
                if nrank(g, ctx) < self.dimension:
                    raise ValueError(f"generator {name} is numerically singular")
        self.check_abelian(ctx)

    def check_abelian(self, ctx: NumericContext) -> None:
        gens = self.generators
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if isinstance(gens[i], Matrix) and isinstance(gens[j], Matrix):
                    comm = gens[i] * gens[j] - gens[j] * gens[i]
                    if not comm.is_zero():
                        raise NotAbelian(self.names[i], self.names[j], comm.max_abs())
                else:
                    a = to_numeric(gens[i], ctx)
                    b = to_numeric(gens[j], ctx)
                    resid = max_abs(a @ b - b @ a)
                    scale = max(max_abs(a) * max_abs(b), 1.0)
                    if resid > ctx.eps * scale:
                        raise NotAbelian(self.names[i], self.names[j], resid)

    def commutator_residual(self, ctx: NumericContext) -> float:
        """Largest commutator entry over all generator pairs (numeric view)."""
        worst = 0.0
        mats = [to_numeric(g, ctx) if not isinstance(g, np.ndarray) else g
                for g in self.generators]
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                worst = max(worst, max_abs(mats[i] @ mats[j] - mats[j] @ mats[i]))
        return worst

    def word(self, exponents: Sequence[int]):
        """Product of generators raised to the given exponents."""
        if len(exponents) != len(self.generators):
            raise ValueError("exponent tuple length mismatch")
        acc = None
        for g, k in zip(self.generators, exponents):
            if k == 0:
                continue
            term = g.power(k) if isinstance(g, Matrix) else _npow(g, k)
            acc = term if acc is None else acc * term if isinstance(term, Matrix) else acc @ term
        if acc is None:
            if self.exact:
                return Matrix.identity(self.dimension)
            return np.eye(self.dimension, dtype=complex)
        return acc


def _npow(a: np.ndarray, k: int) -> np.ndarray:
    from .numeric import npower

    return npower(a, k, NumericContext())
