"""Exact cohomology ranks of truncated DGAs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

from ._parallel import pmap
from .qdga import DGA, differentiate


class TruncationError(ValueError):
    """The DGA is not truncated high enough for the requested degrees."""


def rank_fraction_free(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by Bareiss fraction-free elimination.

    All intermediate entries stay integral (each is a minor of the input),
    so the result is exact.
    """
    A = [list(r) for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    rank = 0
    prev = 1
    for col in range(n):
        if rank == m:
            break
        pivot = next((r for r in range(rank, m) if A[r][col]), None)
        if pivot is None:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        p = A[rank][col]
        prow = A[rank]
        for r in range(rank + 1, m):
            row = A[r]
            a = row[col]
            for c in range(col + 1, n):
                row[c] = (row[c] * p - a * prow[c]) // prev
            row[col] = 0
        prev = p
        rank += 1
    return rank


def rank_rational(columns: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a rational matrix given column-wise.

    Sparse exact row echelon: each column becomes a sparse vector and is
    reduced against the pivots found so far.  Differential matrices have a
    handful of nonzeros per column, so fill-in stays small.
    """
    pivots: dict[int, dict[int, Fraction]] = {}
    rank = 0
    for col in columns:
        v = {i: Fraction(x) for i, x in enumerate(col) if x}
        while v:
            lead = min(v)
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = v
                rank += 1
                break
            f = v[lead] / p[lead]
            for i, x in p.items():
                y = v.get(i, 0) - f * x
                if y:
                    v[i] = y
                else:
                    v.pop(i, None)
    return rank


def rank_integer_columns(columns: Sequence[Sequence[Fraction]]) -> int:
    """Same rank via denominator clearing and Bareiss elimination (dense)."""
    if not columns:
        return 0
    int_cols = []
    for col in columns:
        den = lcm(*(Fraction(x).denominator for x in col)) if col else 1
        int_cols.append([int(Fraction(x) * den) for x in col])
    return rank_fraction_free([list(r) for r in zip(*int_cols)])


def differential_matrix(dga: DGA, k: int) -> list[list[Fraction]]:
    """Columns of d: C^k → C^{k+1} in the ``dga.basis`` ordering."""
    src = dga.basis(k)
    tgt = {m: i for i, m in enumerate(dga.basis(k + 1))}
    cols = []
    for mono in src:
        col = [Fraction(0)] * len(tgt)
        for m2, c in differentiate(dga.element({mono: 1})).terms.items():
            col[tgt[m2]] = c
        cols.append(col)
    return cols


@dataclass(frozen=True)
class BettiTable:
    values: tuple[int, ...]
    reliable_up_to: int
    dims: tuple[int, ...] = field(default=())
    ranks: tuple[int, ...] = field(default=())

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    def partial_sums(self, start: int = 1) -> list[int]:
        """S(k) = Σ_{i=start}^{k} b_i for k = 0..reliable_up_to."""
        out, acc = [], 0
        for i, b in enumerate(self.values):
            if i >= start:
                acc += b
            out.append(acc)
        return out

    def to_tsv(self) -> str:
        return "".join(f"{i}\t{b}\n" for i, b in enumerate(self.values))

    def to_dict(self, space: str | None = None) -> dict:
        return {"space": space, "betti": list(self.values), "reliable_up_to": self.reliable_up_to}

    def to_json(self, space: str | None = None) -> str:
        return json.dumps(self.to_dict(space), sort_keys=True)


def betti_numbers(dga: DGA, K: int, workers: int | None = None) -> BettiTable:
    """b_k = dim ker d_k − rank d_{k−1} for k = 0..K, exactly over Q."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    if dga.max_degree < K + 2:
        raise TruncationError(
            f"max_degree {dga.max_degree} too small for degree {K}; need at least {K + 2}"
        )
    dims = [len(dga.basis(k)) for k in range(K + 1)]
    ranks = pmap(lambda k: rank_rational(differential_matrix(dga, k)), range(K + 1), workers)
    values = []
    for k in range(K + 1):
        prev = ranks[k - 1] if k else 0
        values.append(dims[k] - ranks[k] - prev)
    return BettiTable(tuple(values), K, tuple(dims), tuple(ranks))


def sullivan_class_degrees(n: int, s_max: int) -> list[int]:
    """Degrees (1+2s)(n−1), s = 0..s_max, of the classes x̄ ȳ^s in ΛS^n, n even."""
    if n % 2 or n < 2:
        raise ValueError(f"Sullivan classes x̄ȳ^s are defined for even n >= 2, got {n}")
    return [(1 + 2 * s) * (n - 1) for s in range(s_max + 1)]


def odd_sphere_degree_pattern(n: int, K: int) -> BettiTable:
    """Closed form for ΛS^n, n odd: one class in each degree k(n−1) and k(n−1)+1, k ≥ 1."""
    if n % 2 == 0 or n < 3:
        raise ValueError(f"closed-form pattern needs odd n >= 3, got {n}")
    values = [0] * (K + 1)
    values[0] = 1
    k = 1
    while k * (n - 1) <= K:
        for i in (k * (n - 1), k * (n - 1) + 1):
            if i <= K:
                values[i] = 1
        k += 1
    return BettiTable(tuple(values), K)


def convolve(a: Sequence[int], b: Sequence[int], K: int) -> list[int]:
    """Künneth: c_i = Σ_{j+k=i} a_j b_k for i ≤ K."""
    return [sum(a[j] * b[i - j] for j in range(i + 1) if j < len(a) and i - j < len(b)) for i in range(K + 1)]


# Lower bounds on Σ_{i=1}^{k} b_i for sphere loop spaces.
def odd_sphere_partial_sum_bound(n: int, k: int) -> int:
    return 2 * (k // (n - 1))


def even_sphere_partial_sum_bound(n: int, k: int) -> Fraction:
    return Fraction(k, 2 * (n - 1))


def product_partial_sum_bound(l: int, n: int, k: int) -> Fraction:
    return Fraction(k * k, (l - 1) ** 2 * (n - 1) ** 2)
