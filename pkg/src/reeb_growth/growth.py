"""Growth-rate estimators and conjugacy-class counting in free groups.

The liminf rates E = liminf (1/a) log #C^a and e = liminf (1/log a) log #C^a
cannot be evaluated from finite data.  The estimators below return the
least-squares slope over the trailing half of the samples instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Word = tuple[int, ...]

MAX_ENUMERATED_WORDS = 5_000_000


class GrowthError(ValueError):
    pass


@dataclass(frozen=True)
class CountSequence:
    """Samples (scale a, #C^a) of a nested family of counting sets."""

    scales: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.scales) != len(self.counts):
            raise GrowthError("scales and counts differ in length")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise GrowthError("scales must be strictly increasing")
        if any(c < 0 for c in self.counts):
            raise GrowthError("counts must be nonnegative")
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise GrowthError("counts must be nondecreasing (counting sets are nested)")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int]]) -> CountSequence:
        pairs = list(pairs)
        return cls(tuple(float(a) for a, _ in pairs), tuple(int(c) for _, c in pairs))

    def __len__(self):
        return len(self.scales)

    def to_tsv(self) -> str:
        return "".join(f"{_fmt(a)}\t{c}\n" for a, c in zip(self.scales, self.counts))


def _fmt(a: float) -> str:
    return str(int(a)) if float(a).is_integer() else repr(a)


def read_counts_tsv(text: str) -> CountSequence:
    """Parse ``scale<TAB>count`` lines; blank lines and ``#`` comments are skipped."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GrowthError(f"line {lineno}: expected 'scale count', got {line!r}")
        pairs.append((float(parts[0]), int(parts[1])))
    return CountSequence.from_pairs(pairs)


def _trailing_fit(x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    start = n - math.ceil(n / 2)
    x, y = x[start:], y[start:]
    if len(x) < 2:
        raise GrowthError("need at least two samples in the regression window")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _prepare(seq: CountSequence) -> tuple[np.ndarray, np.ndarray]:
    if len(seq) < 3:
        raise GrowthError("need at least 3 samples")
    counts = np.asarray(seq.counts, dtype=float)
    if not counts.any():
        raise GrowthError("all counts are zero")
    n = len(counts)
    window = counts[n - math.ceil(n / 2):]
    if (window <= 0).any():
        raise GrowthError("counts in the regression window must be positive")
    return np.asarray(seq.scales, dtype=float), counts


def exp_growth_rate(seq: CountSequence) -> float:
    """Finite-scale estimate of liminf (1/a) log #C^a: slope of log(count) vs a."""
    a, c = _prepare(seq)
    # zeros outside the window are masked; _prepare rejects zeros inside it
    return _trailing_fit(a, np.log(np.where(c > 0, c, 1)))


def poly_growth_rate(seq: CountSequence) -> float:
    """Finite-scale estimate of liminf (1/log a) log #C^a: slope of log(count) vs log(a)."""
    a, c = _prepare(seq)
    if (a <= 0).any():
        raise GrowthError("scales must be positive for the polynomial rate")
    return _trailing_fit(np.log(a), np.log(np.where(c > 0, c, 1)))


def linear_growth_rate(seq: CountSequence) -> float:
    """Slope of count vs a; the finite-scale version of lim (1/t) Σ_{j≤t} b_j."""
    a, c = _prepare(seq)
    return _trailing_fit(a, c)


def partial_sum_sequence(betti: Sequence[int], start: int = 1) -> CountSequence:
    """(k, Σ_{i=start}^{k} b_i) for k = start..len(betti)-1."""
    pairs, acc = [], 0
    for k in range(start, len(betti)):
        acc += betti[k]
        pairs.append((k, acc))
    return CountSequence.from_pairs(pairs)


# ------------------------------------------------------------ free groups ----
def free_reduce(word: Sequence[int]) -> Word:
    out: list[int] = []
    for x in word:
        if x == 0:
            raise GrowthError("letter 0 is not a generator index")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(word: Sequence[int]) -> Word:
    w = free_reduce(word)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return w[i:j]


def _letter_rank(x: int) -> int:
    # a < a⁻¹ < b < b⁻¹ < ...
    return 2 * (abs(x) - 1) + (x < 0)


def conjugacy_class_key(word: Sequence[int]) -> Word:
    """Canonical representative of the conjugacy class of ``word`` in F_r.

    Cyclic reduction followed by the lexicographically least rotation; two
    words are conjugate iff their keys agree.
    """
    w = cyclic_reduce(word)
    if not w:
        return ()
    ranks = [_letter_rank(x) for x in w]
    best = min(range(len(w)), key=lambda i: ranks[i:] + ranks[:i])
    return w[best:] + w[:best]


def _cyclically_reduced_words(r: int, n: int) -> np.ndarray:
    """All cyclically reduced words of length n as rows of letter ranks 0..2r-1."""
    # rank k has inverse k ^ 1
    letters = np.arange(2 * r)
    words = letters[:, None]
    for _ in range(n - 1):
        last = words[:, -1]
        nxt = np.repeat(words, 2 * r, axis=0)
        cand = np.tile(letters, len(words))
        keep = cand != (np.repeat(last, 2 * r) ^ 1)
        words = np.column_stack([nxt[keep], cand[keep]])
    if n >= 2:
        words = words[words[:, 0] != (words[:, -1] ^ 1)]
    return words


def count_conjugacy_classes_free_group(r: int, max_len: int) -> CountSequence:
    """#{conjugacy classes of F_r with cyclically reduced length ≤ ℓ}, ℓ = 1..max_len.

    The identity class is included.  Conjugacy classes correspond to free
    homotopy classes of loops in a wedge of r circles.
    """
    if r < 1 or max_len < 1:
        raise GrowthError("need r >= 1 and max_len >= 1")
    if (2 * r) * (2 * r - 1) ** (max_len - 1) > MAX_ENUMERATED_WORDS:
        raise GrowthError(
            f"enumeration of words up to length {max_len} in F_{r} exceeds {MAX_ENUMERATED_WORDS} words"
        )
    base = 2 * r
    total = 1
    pairs = []
    for n in range(1, max_len + 1):
        words = _cyclically_reduced_words(r, n)
        # encode every rotation as an integer; keep words that are their own least rotation
        weights = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
        own = words @ weights
        least = own.copy()
        for s in range(1, n):
            least = np.minimum(least, np.roll(words, -s, axis=1) @ weights)
        total += int(np.count_nonzero(own == least))
        pairs.append((n, total))
    return CountSequence.from_pairs(pairs)


def margulis_bound(h_top: float, L: float) -> float:
    """e^{h_top·L} / (2L), the lower bound on closed geodesic counts of length ≤ L."""
    if L <= 0:
        raise GrowthError("L must be positive")
    if h_top < 0:
        raise GrowthError("topological entropy is nonnegative")
    return math.exp(h_top * L) / (2 * L)
