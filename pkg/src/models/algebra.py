from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import sympy

from .symmetry import Generator

Vector = Tuple[sympy.Rational, ...]


@dataclass(frozen=True)
class SubspaceQ:
    """Subspace of Q^n stored as the nonzero rows of its reduced row-echelon form."""

    ambient: int
    rows: Tuple[Vector, ...] = ()

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient: int) -> "SubspaceQ":
        vectors = [list(v) for v in vectors]
        if not vectors:
            return cls(ambient)
        reduced, pivots = sympy.Matrix(vectors).rref()
        rows = tuple(tuple(sympy.Rational(v) for v in reduced.row(k)) for k in range(len(pivots)))
        return cls(ambient, rows)

    @classmethod
    def whole(cls, ambient: int) -> "SubspaceQ":
        return cls.span(sympy.eye(ambient).tolist(), ambient)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def is_zero(self) -> bool:
        return not self.rows

    def contains(self, vector: Sequence) -> bool:
        return SubspaceQ.span(list(self.rows) + [list(vector)], self.ambient).dim == self.dim

    def includes(self, other: "SubspaceQ") -> bool:
        return all(self.contains(row) for row in other.rows)

    def plus(self, other: "SubspaceQ") -> "SubspaceQ":
        return SubspaceQ.span(list(self.rows) + list(other.rows), self.ambient)

    def intersection_dim(self, other: "SubspaceQ") -> int:
        return self.dim + other.dim - self.plus(other).dim


@dataclass(frozen=True)
class LieAlgebra:
    """Basis fields and exact structure constants, constants[i][j][k] = c^k_ij (0-based)."""

    basis: Tuple[Generator, ...]
    constants: Tuple[Tuple[Vector, ...], ...]

    @property
    def n(self) -> int:
        return len(self.basis)

    def bracket(self, u: Sequence, v: Sequence) -> Vector:
        result = [sympy.S.Zero] * self.n
        for i, ui in enumerate(u):
            if ui == 0:
                continue
            for j, vj in enumerate(v):
                if vj == 0:
                    continue
                for k, c in enumerate(self.constants[i][j]):
                    if c != 0:
                        result[k] += ui * vj * c
        return tuple(sympy.Rational(r) for r in result)

    def ad(self, u: Sequence) -> sympy.Matrix:
        """Matrix of ad(u) on the basis: column j holds [u, e_j]."""
        columns = [self.bracket(u, unit(self.n, j)) for j in range(self.n)]
        return sympy.Matrix(self.n, self.n, lambda r, c: columns[c][r])

    @property
    def is_abelian(self) -> bool:
        return all(c == 0 for row in self.constants for vec in row for c in vec)


def unit(n: int, index: int) -> Vector:
    return tuple(sympy.S.One if k == index else sympy.S.Zero for k in range(n))


@dataclass(frozen=True)
class LeviVerdict:
    holds: bool
    failed_condition: Optional[str] = None
    h: Optional[Vector] = None
    e: Optional[Vector] = None
    f: Optional[Vector] = None
    radical_dim: Optional[int] = None
