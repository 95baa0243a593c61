"""Finite broken-geodesic complexes B_k on triangulated spaces.

A cell of B_k is a cyclic sequence of faces (T(p_1), ..., T(p_{2^k})) such
that each consecutive pair O(p_{j−1}) ∪ O(p_j) lies in one cover set V_α.
Here O(F) is the set of maximal simplices containing the face F and V_α is
the closed star of the vertex α, seen as a set of maximal simplices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._parallel import pmap

MAX_LEGS = 8
MAX_CANDIDATES = 1_000_000

Face = tuple[int, ...]


class GromovError(ValueError):
    pass


class CoverageError(GromovError):
    pass


@dataclass
class Triangulation:
    vertices: np.ndarray
    simplices: list[Face]
    faces: list[Face] = field(init=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        nv = len(self.vertices)
        simp = []
        for s in self.simplices:
            s = tuple(sorted(int(v) for v in s))
            if len(set(s)) != len(s) or not s:
                raise GromovError(f"simplex {s} has repeated or no vertices")
            if s[0] < 0 or s[-1] >= nv:
                raise GromovError(f"simplex {s} references a missing vertex")
            simp.append(s)
        # keep only maximal simplices
        sset = set(simp)
        self.simplices = sorted(s for s in sset if not any(set(s) < set(t) for t in sset))
        faces = set()
        for s in self.simplices:
            for r in range(1, len(s) + 1):
                faces.update(itertools.combinations(s, r))
        self.faces = sorted(faces, key=lambda f: (len(f), f))
        self._owners = {f: frozenset(i for i, s in enumerate(self.simplices) if set(f) <= set(s)) for f in self.faces}

    def owners(self, face: Face) -> frozenset[int]:
        """O(F): indices of the maximal simplices containing F."""
        return self._owners[tuple(sorted(face))]

    @staticmethod
    def face_dim(face: Face) -> int:
        return len(face) - 1

    @classmethod
    def from_off(cls, text: str) -> Triangulation:
        """OFF-like text: optional 'OFF' line, 'nv nf [ne]', vertex rows, then 'k v1 .. vk' rows."""
        lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise GromovError("empty mesh file")
        if lines[0].upper() == "OFF":
            lines = lines[1:]
        try:
            counts = [int(x) for x in lines[0].split()]
            nv, nf = counts[0], counts[1]
            verts = [[float(x) for x in ln.split()] for ln in lines[1:1 + nv]]
            simplices = []
            for ln in lines[1 + nv:1 + nv + nf]:
                parts = [int(x) for x in ln.split()]
                if parts[0] != len(parts) - 1:
                    raise GromovError(f"face row {ln!r} has the wrong vertex count")
                simplices.append(tuple(parts[1:]))
        except (ValueError, IndexError) as e:
            raise GromovError(f"malformed mesh file: {e}") from None
        if len(verts) != nv or len(simplices) != nf:
            raise GromovError("mesh file is truncated")
        return cls(np.array(verts), simplices)

    def to_off(self) -> str:
        out = ["OFF", f"{len(self.vertices)} {len(self.simplices)} 0"]
        out += [" ".join(repr(float(x)) for x in v) for v in self.vertices]
        out += [" ".join(str(x) for x in (len(s),) + s) for s in self.simplices]
        return "\n".join(out) + "\n"


def octahedron(scale: float = 1.0) -> Triangulation:
    v = scale * np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    tris = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    return Triangulation(v, tris)


@dataclass(frozen=True)
class CoverSet:
    alpha: int
    simplices: frozenset[int]


def star_cover(tri: Triangulation) -> list[CoverSet]:
    """One cover set per vertex: the maximal simplices of its closed star."""
    cover = []
    for v in range(len(tri.vertices)):
        members = tri.owners((v,)) if (v,) in tri._owners else frozenset()
        if members:
            cover.append(CoverSet(v, members))
    covered = set().union(*(c.simplices for c in cover)) if cover else set()
    if len(covered) != len(tri.simplices):
        raise CoverageError("some maximal simplex lies in no cover set")
    return cover


def admissible_pair(tri: Triangulation, cover: Sequence[CoverSet], F: Face, G: Face) -> bool:
    need = tri.owners(F) | tri.owners(G)
    return any(need <= c.simplices for c in cover)


@dataclass(frozen=True)
class BrokenLoopCell:
    faces: tuple[Face, ...]

    @property
    def dimension(self) -> int:
        return sum(len(f) - 1 for f in self.faces)

    @property
    def legs(self) -> int:
        return len(self.faces)

    def legs_outside_1_skeleton(self) -> int:
        """Legs j (from p_{j−1} to p_j, cyclically) with a positive-dimensional end face."""
        n = len(self.faces)
        return sum(1 for j in range(n) if len(self.faces[j - 1]) > 1 or len(self.faces[j]) > 1)


@dataclass
class Enumeration:
    cells: list[BrokenLoopCell]
    k: int
    partial: bool = False


def _adjacency(tri: Triangulation, cover: Sequence[CoverSet]) -> dict[Face, list[Face]]:
    return {F: [G for G in tri.faces if admissible_pair(tri, cover, F, G)] for F in tri.faces}


def enumerate_Bk(
    tri: Triangulation,
    cover: Sequence[CoverSet],
    k: int,
    maximal_only: bool = False,
    max_candidates: int = MAX_CANDIDATES,
    workers: int | None = None,
) -> Enumeration:
    """All admissible cyclic face sequences of length 2^k.

    Sequences are closed walks in the admissibility graph on faces.  With
    ``maximal_only`` the result keeps only cells that are not a face of
    another admissible cell (replacing a face by a coface).
    """
    if k < 1:
        raise GromovError("k must be at least 1")
    n = 2**k
    if n > MAX_LEGS:
        raise GromovError(f"2^k = {n} exceeds the leg cap {MAX_LEGS}")
    adj = _adjacency(tri, cover)
    budget = max(1, max_candidates // max(1, len(tri.faces)))

    def walks_from(start: Face):
        out, partial, seen = [], False, 0
        stack = [(start,)]
        while stack:
            seq = stack.pop()
            seen += 1
            if seen > budget:
                partial = True
                break
            if len(seq) == n:
                if start in adj[seq[-1]]:
                    out.append(seq)
                continue
            for G in reversed(adj[seq[-1]]):
                stack.append(seq + (G,))
        return out, partial

    results = pmap(walks_from, tri.faces, workers)
    seqs, partial = [], False
    for out, p in results:
        seqs.extend(out)
        partial |= p
    cells = [BrokenLoopCell(s) for s in sorted(set(seqs), key=lambda s: (sum(map(len, s)), s))]
    if maximal_only:
        cells = _maximal(cells, set(seqs), tri)
    return Enumeration(cells, k, partial)


def _cofaces(tri: Triangulation, F: Face) -> list[Face]:
    s = set(F)
    return [G for G in tri.faces if len(G) == len(F) + 1 and s < set(G)]


def _maximal(cells: list[BrokenLoopCell], admissible: set, tri: Triangulation) -> list[BrokenLoopCell]:
    out = []
    for c in cells:
        bigger = False
        for j, F in enumerate(c.faces):
            for G in _cofaces(tri, F):
                if c.faces[:j] + (G,) + c.faces[j + 1:] in admissible:
                    bigger = True
                    break
            if bigger:
                break
        if not bigger:
            out.append(c)
    return out


def is_admissible(tri: Triangulation, cover: Sequence[CoverSet], faces: Sequence[Face]) -> bool:
    n = len(faces)
    return all(admissible_pair(tri, cover, faces[j - 1], faces[j]) for j in range(n))


def require_admissible(tri: Triangulation, cover: Sequence[CoverSet], faces: Sequence[Face]) -> None:
    """Raise CoverageError at the first consecutive pair no single V_α contains."""
    for j in range(len(faces)):
        if not admissible_pair(tri, cover, faces[j - 1], faces[j]):
            raise CoverageError(f"faces {faces[j - 1]} and {faces[j]} lie in no common cover set")


def extend_by_duplication(cell: BrokenLoopCell) -> BrokenLoopCell:
    """(F_1, ..., F_n) ↦ (F_1, F_1, ..., F_n, F_n): B_k ⊂ B_{k+1} by subdividing each leg."""
    return BrokenLoopCell(tuple(F for F in cell.faces for _ in range(2)))


@dataclass(frozen=True)
class LegReportRow:
    dimension: int
    max_legs: int
    bound: int
    cells: int

    @property
    def passed(self) -> bool:
        return self.max_legs <= self.bound


def leg_bound_report(cells: Iterable[BrokenLoopCell]) -> list[LegReportRow]:
    """Per cell dimension i: the most legs leaving the 1-skeleton versus the bound 2i."""
    worst: dict[int, list[int]] = {}
    for c in cells:
        row = worst.setdefault(c.dimension, [0, 0])
        row[0] = max(row[0], c.legs_outside_1_skeleton())
        row[1] += 1
    return [LegReportRow(i, m, 2 * i, n) for i, (m, n) in sorted(worst.items())]


def kappa_estimate(tri: Triangulation, cover: Sequence[CoverSet], K_lipschitz: float) -> float:
    """κ = 2K·max_α diam(V_α), diameters taken over the vertices of each star."""
    if not cover:
        raise GromovError("empty cover")
    if K_lipschitz < 0:
        raise GromovError("Lipschitz constant must be nonnegative")
    d = 0.0
    for c in cover:
        idx = sorted(set().union(*(tri.simplices[i] for i in c.simplices)))
        pts = tri.vertices[idx]
        diff = pts[:, None, :] - pts[None, :, :]
        d = max(d, float(np.sqrt((diff**2).sum(-1)).max()))
    return 2.0 * K_lipschitz * d


__all__ = [
    "Triangulation", "CoverSet", "BrokenLoopCell", "Enumeration", "LegReportRow", "GromovError",
    "CoverageError", "octahedron", "star_cover", "admissible_pair", "enumerate_Bk", "is_admissible",
    "extend_by_duplication", "require_admissible", "leg_bound_report", "kappa_estimate",
]
