"""Minimal models of spheres, their free loop spaces, and tensor products.

Model specs are small expression trees parsed from strings such as
``"s5"``, ``"loop(s5)"`` or ``"loop(s5)*loop(s7)"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .qdga import DGA, DGAError, Element, Generator

BAR_SUFFIX = "bar"


class ModelSpecError(ValueError):
    pass


# ---------------------------------------------------------------- specs ----
@dataclass(frozen=True)
class Point:
    def __str__(self):
        return "pt"


@dataclass(frozen=True)
class Sphere:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ModelSpecError(f"S^{self.n} is not simply connected; need n >= 2")

    @property
    def odd(self) -> bool:
        return self.n % 2 == 1

    def __str__(self):
        return f"s{self.n}"


@dataclass(frozen=True)
class Product:
    left: ModelSpec
    right: ModelSpec

    def __str__(self):
        return f"{self.left}*{self.right}"


@dataclass(frozen=True)
class LoopOf:
    base: ModelSpec

    def __post_init__(self):
        if _contains_loop(self.base):
            raise ModelSpecError("loop(...) needs a simply connected sphere/product argument")

    def __str__(self):
        return f"loop({self.base})"


ModelSpec = Point | Sphere | Product | LoopOf


def _contains_loop(spec) -> bool:
    if isinstance(spec, LoopOf):
        return True
    if isinstance(spec, Product):
        return _contains_loop(spec.left) or _contains_loop(spec.right)
    return False


_TOKEN = re.compile(r"\s*(loop|pt|s\d+|\(|\)|\*)", re.IGNORECASE)


def parse_spec(text: str) -> ModelSpec:
    """Parse ``"loop(s5)*loop(s7)"``-style strings into a spec tree."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ModelSpecError(f"cannot parse space spec {text!r} at offset {pos}")
        tokens.append(m.group(1).lower())
        pos = m.end()

    def expr(i):
        node, i = term(i)
        while i < len(tokens) and tokens[i] == "*":
            rhs, i = term(i + 1)
            node = Product(node, rhs)
        return node, i

    def term(i):
        if i >= len(tokens):
            raise ModelSpecError(f"unexpected end of spec {text!r}")
        tok = tokens[i]
        if tok == "pt":
            return Point(), i + 1
        if tok.startswith("s"):
            return Sphere(int(tok[1:])), i + 1
        if tok in ("loop", "("):
            j = i + 1 if tok == "(" else i + 2
            if tok == "loop" and (i + 1 >= len(tokens) or tokens[i + 1] != "("):
                raise ModelSpecError("loop must be followed by '('")
            inner, j = expr(j)
            if j >= len(tokens) or tokens[j] != ")":
                raise ModelSpecError(f"unbalanced parentheses in {text!r}")
            return (LoopOf(inner) if tok == "loop" else inner), j + 1
        raise ModelSpecError(f"unexpected token {tok!r} in {text!r}")

    node, i = expr(0)
    if i != len(tokens):
        raise ModelSpecError(f"trailing tokens in {text!r}")
    return node


# ---------------------------------------------------------- constructors ----
def point_model(max_degree: int) -> DGA:
    return DGA([], {}, max_degree)


def sphere_model(n: int, max_degree: int) -> DGA:
    """(Λx, 0) for odd n; (Λ(x, y), dy = x²) with |y| = 2n-1 for even n."""
    if n <= 1:
        raise ModelSpecError(f"S^{n} is not simply connected; need n >= 2")
    if n % 2:
        return DGA([Generator("x", n)], {}, max_degree)
    return DGA.build([("x", n), ("y", 2 * n - 1)], max_degree, lambda A: {"y": A.x * A.x})


def bar(e: Element, loop: DGA | None = None) -> Element:
    """The degree -1 derivation x ↦ x̄, landing in the loop model ``loop``.

    ``e`` may live in the base model or already in ``loop``; it must not
    involve barred generators.  Sign rule: bar(ab) = bar(a)b + (-1)^{|a|} a bar(b).
    """
    if loop is None:
        loop = e.dga
    if not loop.bar_of:
        raise DGAError("target algebra has no barred generators")
    e = _embed(e, loop)
    barred = set(loop.bar_of.values())
    out = loop.zero()
    for mono, c in e.terms.items():
        if any(k and loop.generators[i].name in barred for i, k in enumerate(mono)):
            raise DGAError("bar is only defined on the unbarred subalgebra")
        out = out + _bar_monomial(loop, mono).scale(c)
    return out


def _bar_monomial(loop: DGA, mono) -> Element:
    n = len(mono)
    out = loop.zero()
    prefix_deg = 0
    for i, e in enumerate(mono):
        if not e:
            continue
        g = loop.generators[i]
        pre = tuple(mono[j] if j < i else 0 for j in range(n))
        post = tuple(mono[j] if j > i else 0 for j in range(n))
        power = tuple(e - 1 if j == i else 0 for j in range(n))
        # bar(g^e) = e g^{e-1} ḡ; for even g the odd ḡ commutes past g freely
        piece = Element(loop, {power: e}) * loop.gen(loop.bar_of[g.name])
        term = Element(loop, {pre: 1}) * piece * Element(loop, {post: 1})
        out = out - term if prefix_deg % 2 else out + term
        prefix_deg += e * g.degree
    return out


def _embed(e: Element, target: DGA) -> Element:
    if e.dga.signature == target.signature:
        return e
    terms = {}
    for mono, c in e.terms.items():
        vec = [0] * len(target.generators)
        for g, k in zip(e.dga.generators, mono):
            if k:
                if g.name not in target.index:
                    raise DGAError(f"generator {g.name!r} missing from target algebra")
                vec[target.index[g.name]] = k
        terms[tuple(vec)] = c
    return target.element(terms)


def loop_space_model(base: DGA, max_degree: int | None = None) -> DGA:
    """Adjoin x̄ (|x̄| = |x|-1) for each generator x, with d x̄ = -bar(dx)."""
    if base.bar_of:
        raise DGAError("base model already contains barred generators")
    N = base.max_degree if max_degree is None else max_degree
    names = {g.name for g in base.generators}
    gens = list(base.generators)
    bar_of = {}
    for g in base.generators:
        if g.degree < 2:
            raise DGAError("loop model needs a simply connected base (all degrees >= 2)")
        name = g.name + BAR_SUFFIX
        if name in names:
            raise DGAError(f"name clash while barring {g.name!r}")
        gens.append(Generator(name, g.degree - 1))
        bar_of[g.name] = name

    skeleton = DGA(gens, {}, max([N] + [g.degree + 1 for g in gens]))
    skeleton.bar_of = bar_of
    diff = {}
    for g in base.generators:
        # base differentials are stored untruncated, so dx̄ is exact too
        dx = _embed(base.generator_differential(g.name), skeleton)
        if dx:
            diff[g.name] = dx.terms
            dbar = -bar(dx, skeleton)
            if dbar:
                diff[bar_of[g.name]] = dbar.terms
    loop = DGA(gens, diff, N)
    loop.bar_of = bar_of
    return loop


def tensor(A: DGA, B: DGA, max_degree: int | None = None) -> DGA:
    """Tensor product; generators renamed with suffixes ``_1`` and ``_2``."""
    N = min(A.max_degree, B.max_degree) if max_degree is None else max_degree
    gens = [Generator(f"{g.name}_1", g.degree) for g in A.generators]
    gens += [Generator(f"{g.name}_2", g.degree) for g in B.generators]
    if len({g.name for g in gens}) != len(gens):
        raise DGAError("generator name collision after renaming")
    na, nb = len(A.generators), len(B.generators)
    diff = {}
    for g in A.generators:
        terms = {m + (0,) * nb: c for m, c in A.generator_differential(g.name).terms.items()}
        if terms:
            diff[f"{g.name}_1"] = terms
    for g in B.generators:
        terms = {(0,) * na + m: c for m, c in B.generator_differential(g.name).terms.items()}
        if terms:
            diff[f"{g.name}_2"] = terms
    out = DGA(gens, diff, N)
    out.bar_of = {f"{k}_1": f"{v}_1" for k, v in A.bar_of.items()}
    out.bar_of.update({f"{k}_2": f"{v}_2" for k, v in B.bar_of.items()})
    return out


def build_model(spec: ModelSpec | str, max_degree: int) -> DGA:
    """Construct the DGA for a spec; loop(A*B) is built as loop(A) ⊗ loop(B)."""
    if isinstance(spec, str):
        spec = parse_spec(spec)
    if isinstance(spec, Point):
        return point_model(max_degree)
    if isinstance(spec, Sphere):
        return sphere_model(spec.n, max_degree)
    if isinstance(spec, Product):
        return tensor(build_model(spec.left, max_degree), build_model(spec.right, max_degree))
    if isinstance(spec, LoopOf):
        base = spec.base
        if isinstance(base, Product):
            return tensor(build_model(LoopOf(base.left), max_degree), build_model(LoopOf(base.right), max_degree))
        return loop_space_model(build_model(base, max_degree))
    raise ModelSpecError(f"unsupported spec {spec!r}")


def sullivan_class(loop: DGA, s: int) -> Element:
    """w*(s) = x̄ ȳ^s in the loop model of an even sphere."""
    if "ybar" not in loop.index or "xbar" not in loop.index:
        raise DGAError("expected the loop model of an even sphere")
    return loop.gen("xbar") * loop.gen("ybar") ** s


__all__ = [
    "Point", "Sphere", "Product", "LoopOf", "ModelSpec", "ModelSpecError", "parse_spec",
    "point_model", "sphere_model", "bar", "loop_space_model", "tensor", "build_model",
    "sullivan_class",
]
