"""Free graded-commutative differential graded algebras over Q.

A :class:`DGA` is generated by a finite ordered list of :class:`Generator`
objects and carries a differential of degree +1 given on the generators.
Monomials are exponent vectors indexed by generator position; an element is
a sparse map ``monomial -> Fraction``.  Everything above ``max_degree`` is
silently dropped, so callers who want exact data in degree ``k`` need
``max_degree >= k + 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

Monomial = tuple[int, ...]


class DGAError(ValueError):
    """Raised for malformed algebras or operands from different algebras."""


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int

    def __post_init__(self):
        if not isinstance(self.degree, int) or self.degree < 1:
            raise DGAError(f"generator {self.name!r} needs a positive degree, got {self.degree!r}")

    @property
    def parity(self) -> int:
        return self.degree % 2


class Element:
    """Immutable finite Q-linear combination of monomials of one DGA."""

    __slots__ = ("dga", "terms")

    def __init__(self, dga: DGA, terms: Mapping[Monomial, Fraction] | None = None):
        self.dga = dga
        clean = {}
        for mono, coeff in (terms or {}).items():
            if coeff:
                clean[tuple(mono)] = Fraction(coeff)
        self.terms: dict[Monomial, Fraction] = clean

    # -- arithmetic -----------------------------------------------------
    def _check(self, other: Element) -> None:
        if not isinstance(other, Element):
            raise TypeError(f"expected Element, got {type(other).__name__}")
        if self.dga.signature != other.dga.signature:
            raise DGAError("operands belong to different DGAs")

    def __add__(self, other: Element) -> Element:
        self._check(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, 0) + c
        return Element(self.dga, out)

    def __neg__(self) -> Element:
        return Element(self.dga, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Element) -> Element:
        return self + (-other)

    def scale(self, c) -> Element:
        c = Fraction(c)
        return Element(self.dga, {m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> Element:
        out = self.dga.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self.terms
        if not isinstance(other, Element):
            return NotImplemented
        return self.dga.signature == other.dga.signature and self.terms == other.terms

    def __hash__(self):
        return hash((self.dga.signature, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- queries --------------------------------------------------------
    def homogeneous_part(self, degree: int) -> Element:
        deg = self.dga.monomial_degree
        return Element(self.dga, {m: c for m, c in self.terms.items() if deg(m) == degree})

    def degrees(self) -> set[int]:
        return {self.dga.monomial_degree(m) for m in self.terms}

    def degree(self) -> int:
        """Degree of a nonzero homogeneous element."""
        degs = self.degrees()
        if len(degs) != 1:
            raise DGAError(f"element is not homogeneous (degrees {sorted(degs)})")
        return degs.pop()

    def __repr__(self) -> str:
        return self.dga.format(self)


class DGA:
    """Free graded-commutative DGA over Q truncated at ``max_degree``.

    ``diff`` maps a generator name to its differential, given as a mapping
    ``exponent vector -> coefficient``.  Generators missing from ``diff`` are
    cocycles.  Construction validates the Sullivan conditions: ``d`` raises
    degree by one, ``d`` of a generator only involves generators listed
    before it (and of no larger degree), and ``d∘d`` vanishes on every
    generator.  Equal degrees occur for loop models of even spheres, where
    ``d(ybar) = -2 x xbar`` with ``|x| = |ybar|`` when n = 2.
    """

    def __init__(
        self,
        generators: Sequence[Generator],
        diff: Mapping[str, Mapping[Monomial, Fraction]] | None = None,
        max_degree: int = 20,
    ):
        self.generators: tuple[Generator, ...] = tuple(generators)
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise DGAError(f"duplicate generator names in {names}")
        if max_degree < 0:
            raise DGAError("max_degree must be nonnegative")
        self.max_degree = int(max_degree)
        self.index = {g.name: i for i, g in enumerate(self.generators)}
        self.degrees = tuple(g.degree for g in self.generators)
        self.signature = (tuple((g.name, g.degree) for g in self.generators), self.max_degree)
        self.bar_of: dict[str, str] = {}

        diff = dict(diff or {})
        for name in diff:
            if name not in self.index:
                raise DGAError(f"differential given for unknown generator {name!r}")
        self._gen_diff: list[Element] = []
        for g in self.generators:
            dx = Element(self, diff.get(g.name, {}))
            for mono in dx.terms:
                self._check_monomial(mono)
                if self.monomial_degree(mono) != g.degree + 1:
                    raise DGAError(f"d({g.name}) must have degree {g.degree + 1}")
                gi = self.index[g.name]
                if any(e and (i >= gi or self.degrees[i] > g.degree) for i, e in enumerate(mono)):
                    raise DGAError(f"d({g.name}) must involve only earlier generators of no larger degree")
            self._gen_diff.append(dx)
        self._mono_diff = lru_cache(maxsize=None)(self._differentiate_monomial)
        for g in self.generators:
            if g.degree + 2 <= self.max_degree and differentiate(differentiate(self.gen(g.name))):
                raise DGAError(f"d∘d({g.name}) != 0")

    # -- construction helpers -------------------------------------------
    @classmethod
    def build(
        cls,
        generators: Iterable[tuple[str, int] | Generator],
        max_degree: int,
        diff: Callable[[DGA], Mapping[str, Element]] | None = None,
    ) -> DGA:
        """Build a DGA whose differential is written with its own elements.

        ``diff`` receives a differential-free copy of the algebra and returns
        ``{name: Element}``.
        """
        gens = [g if isinstance(g, Generator) else Generator(*g) for g in generators]
        # generator differentials are stored untruncated
        top = max([max_degree] + [g.degree + 1 for g in gens])
        skeleton = cls(gens, {}, top)
        raw = {} if diff is None else {k: v.terms for k, v in diff(skeleton).items()}
        return cls(gens, raw, max_degree)

    def _check_monomial(self, mono: Monomial) -> None:
        if len(mono) != len(self.generators):
            raise DGAError("exponent vector has the wrong length")
        for e, d in zip(mono, self.degrees):
            if e < 0 or (d % 2 and e > 1):
                raise DGAError(f"invalid exponent vector {mono}")

    def one(self) -> Element:
        return Element(self, {(0,) * len(self.generators): Fraction(1)})

    def zero(self) -> Element:
        return Element(self, {})

    def gen(self, name: str) -> Element:
        if name not in self.index:
            raise DGAError(f"unknown generator {name!r}")
        mono = [0] * len(self.generators)
        mono[self.index[name]] = 1
        return Element(self, {tuple(mono): Fraction(1)})

    def element(self, terms: Mapping[Monomial, Fraction]) -> Element:
        for mono in terms:
            self._check_monomial(tuple(mono))
        return Element(self, terms)

    def __getattr__(self, name):
        # gens are reachable as attributes inside DGA.build callbacks
        index = self.__dict__.get("index")
        if index is not None and name in index:
            return self.gen(name)
        raise AttributeError(name)

    def monomial_degree(self, mono: Monomial) -> int:
        return sum(e * d for e, d in zip(mono, self.degrees))

    def generator_differential(self, name: str) -> Element:
        return self._gen_diff[self.index[name]]

    # -- structure ------------------------------------------------------
    def _differentiate_monomial(self, mono: Monomial) -> Element:
        # d(f1 f2 ... fk) = Σ_i (-1)^{|f1..f_{i-1}|} f1..f_{i-1} d(f_i) f_{i+1}..fk,
        # with f_i = g_i^{e_i} and d(g^e) = e g^{e-1} dg (dg commutes past even g).
        out = self.zero()
        n = len(mono)
        prefix_deg = 0
        for i, e in enumerate(mono):
            if not e:
                continue
            dg = self._gen_diff[i]
            if dg:
                pre = tuple(mono[j] if j < i else 0 for j in range(n))
                post = tuple(mono[j] if j > i else 0 for j in range(n))
                power = tuple(e - 1 if j == i else 0 for j in range(n))
                term = Element(self, {pre: 1}) * (Element(self, {power: e}) * dg) * Element(self, {post: 1})
                if prefix_deg % 2:
                    term = -term
                out = out + term
            prefix_deg += e * self.degrees[i]
        return out

    def basis(self, degree: int) -> list[Monomial]:
        """All monomials of total degree ``degree``.

        Ordered by descending lexicographic exponent vector, so monomials
        heavy in the earlier generators come first.
        """
        if degree > self.max_degree:
            raise DGAError(f"degree {degree} exceeds max_degree {self.max_degree}")
        if degree < 0:
            return []
        return list(_enumerate(self.degrees, degree))

    def format(self, e: Element) -> str:
        if not e.terms:
            return "0"
        parts = []
        for mono, c in sorted(e.terms.items(), reverse=True):
            word = "·".join(
                g.name if k == 1 else f"{g.name}^{k}" for g, k in zip(self.generators, mono) if k
            ) or "1"
            coeff = "" if c == 1 and word != "1" else ("-" if c == -1 and word != "1" else f"{c}·")
            if word == "1":
                coeff = str(c)
                word = ""
            parts.append(f"{coeff}{word}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        gens = ", ".join(f"{g.name}:{g.degree}" for g in self.generators)
        return f"DGA([{gens}], max_degree={self.max_degree})"

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        diff = {}
        for g, dx in zip(self.generators, self._gen_diff):
            if dx:
                diff[g.name] = [
                    [c.numerator, c.denominator, list(m)] for m, c in sorted(dx.terms.items())
                ]
        return {
            "generators": [{"name": g.name, "degree": g.degree} for g in self.generators],
            "diff": diff,
            "max_degree": self.max_degree,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> DGA:
        gens = [Generator(g["name"], int(g["degree"])) for g in data["generators"]]
        diff = {
            name: {tuple(vec): Fraction(int(num), int(den)) for num, den, vec in terms}
            for name, terms in data.get("diff", {}).items()
        }
        return cls(gens, diff, int(data["max_degree"]))

    @classmethod
    def from_json(cls, text: str) -> DGA:
        return cls.from_dict(json.loads(text))


def _enumerate(degrees: Sequence[int], target: int, start: int = 0) -> Iterator[Monomial]:
    if start == len(degrees):
        if target == 0:
            yield ()
        return
    d = degrees[start]
    top = target // d
    if d % 2:
        top = min(top, 1)
    for e in range(top, -1, -1):
        for rest in _enumerate(degrees, target - e * d, start + 1):
            yield (e,) + rest


def _monomial_product(dga: DGA, a: Monomial, b: Monomial) -> tuple[Monomial, int]:
    sign = 1
    odd_after = 0  # odd generators of `a` sitting at positions > current index
    # Moving each odd factor of b leftwards past the odd factors of a with a
    # larger index costs one sign per crossing.
    a_odd = [i for i, e in enumerate(a) if e and dga.degrees[i] % 2]
    for j, e in enumerate(b):
        if e and dga.degrees[j] % 2:
            if a[j]:
                return a, 0
            odd_after = sum(1 for i in a_odd if i > j)
            if odd_after % 2:
                sign = -sign
    return tuple(x + y for x, y in zip(a, b)), sign


def normalize_monomial(dga: DGA, raw: Sequence[str]) -> tuple[Monomial, int]:
    """Sort a word in generator names into canonical form.

    Returns the exponent vector and the Koszul sign of the sorting
    permutation; the sign is 0 when an odd generator occurs twice.
    """
    idx = []
    for name in raw:
        if name not in dga.index:
            raise DGAError(f"unknown generator {name!r}")
        idx.append(dga.index[name])
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j] and dga.degrees[idx[i]] % 2 and dga.degrees[idx[j]] % 2:
                sign = -sign
    mono = [0] * len(dga.generators)
    for i in idx:
        mono[i] += 1
    for i, e in enumerate(mono):
        if dga.degrees[i] % 2 and e > 1:
            return tuple(mono), 0
    return tuple(mono), sign


def multiply(a: Element, b: Element) -> Element:
    """Graded-commutative product, truncated above ``max_degree``."""
    a._check(b)
    dga = a.dga
    out: dict[Monomial, Fraction] = {}
    deg = dga.monomial_degree
    for ma, ca in a.terms.items():
        da = deg(ma)
        for mb, cb in b.terms.items():
            if da + deg(mb) > dga.max_degree:
                continue
            mono, sign = _monomial_product(dga, ma, mb)
            if sign:
                out[mono] = out.get(mono, 0) + sign * ca * cb
    return Element(dga, out)


def differentiate(e: Element) -> Element:
    """Apply the differential, extended by d(ab) = (da)b + (-1)^{|a|} a(db)."""
    dga = e.dga
    out: dict[Monomial, Fraction] = {}
    for mono, c in e.terms.items():
        for m2, c2 in dga._mono_diff(mono).terms.items():
            out[m2] = out.get(m2, 0) + c * c2
    return Element(dga, out)
