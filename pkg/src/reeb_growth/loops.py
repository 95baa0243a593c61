"""Discrete loops with energy and length functionals.

A loop is N points sampled at the uniform parameters i/N, closed by a final
segment from point N−1 back to point 0.  Coordinates may be periodic
(flat tori, the parameter circle of M×S¹); segment vectors are then taken
to the nearest lattice image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class LoopError(ValueError):
    pass


@dataclass
class DiscreteLoop:
    points: np.ndarray
    periods: np.ndarray | None = None  # per coordinate; 0 means not periodic

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[0] < 3:
            raise LoopError("a loop needs at least 3 points")
        if not np.all(np.isfinite(self.points)):
            raise LoopError("loop points must be finite")
        if self.periods is not None:
            self.periods = np.asarray(self.periods, dtype=float)
            if self.periods.shape != (self.dim,):
                raise LoopError("periods must have one entry per coordinate")
            if (self.periods < 0).any():
                raise LoopError("periods must be nonnegative")

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def space(self) -> str:
        return "torus" if self.periods is not None and (self.periods > 0).any() else "euclidean"

    def _reduce(self, d: np.ndarray) -> np.ndarray:
        if self.periods is None:
            return d
        per = np.where(self.periods > 0, self.periods, 1.0)
        red = d - per * np.round(d / per)
        return np.where(self.periods > 0, red, d)

    def segments(self) -> np.ndarray:
        """Δq_i = q_{i+1} − q_i for i = 0..N−1, including the closing segment."""
        return self._reduce(np.roll(self.points, -1, axis=0) - self.points)

    def unwrapped(self) -> np.ndarray:
        """N+1 lifted points q_0, ..., q_N following the segments; q_N ≡ q_0."""
        return np.vstack([self.points[:1], self.points[0] + np.cumsum(self.segments(), axis=0)])

    def to_dict(self) -> dict:
        d = {"space": self.space, "points": self.points.tolist()}
        if self.periods is not None:
            d["periods"] = self.periods.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> DiscreteLoop:
        pts = np.asarray(data["points"], dtype=float)
        periods = data.get("periods")
        if periods is None and data.get("space", "euclidean") == "torus":
            periods = [1.0] * pts.shape[1]
        elif data.get("space", "euclidean") not in ("euclidean", "torus"):
            raise LoopError(f"unknown loop space {data.get('space')!r}")
        return cls(pts, periods)


def measure(loop: DiscreteLoop) -> tuple[float, float]:
    """(E, L) with E = ½ N Σ|Δq_i|² and L = Σ|Δq_i|."""
    seg = np.linalg.norm(loop.segments(), axis=1)
    return 0.5 * loop.N * float(seg @ seg), float(seg.sum())


def schwarz_gap(loop: DiscreteLoop) -> float:
    """E − ½L², nonnegative by Cauchy–Schwarz."""
    E, L = measure(loop)
    return E - 0.5 * L * L


def _polyline_eval(lifted: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    seglen = cum[idx + 1] - cum[idx]
    w = np.where(seglen > 0, (s - cum[idx]) / np.where(seglen > 0, seglen, 1.0), 0.0)
    return lifted[idx] + w[:, None] * (lifted[idx + 1] - lifted[idx])


def arclength_reparametrize(loop: DiscreteLoop, tol: float = 1e-12, max_iter: int = 5000) -> DiscreteLoop:
    """Resample the polyline so that all N chords have equal length.

    Points are placed on the original polyline.  The arc-length gaps are
    rescaled by sqrt(mean/actual chord) until the chords agree, so E = ½L²
    holds to ``tol`` while the image is unchanged.  The square root damps
    the oscillation the undamped update shows near sharp bends.
    """
    lifted = loop.unwrapped()
    seg = np.linalg.norm(np.diff(lifted, axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0:
        raise LoopError("cannot reparametrize a zero-length loop")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    N = loop.N
    gaps = np.full(N, total / N)
    for _ in range(max_iter):
        s = np.concatenate([[0.0], np.cumsum(gaps)])
        s[-1] = total
        pts = _polyline_eval(lifted, cum, s)
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if (chords <= 0).any():
            raise LoopError("degenerate chord during reparametrization")
        mean = chords.mean()
        if np.abs(chords - mean).max() <= tol * mean:
            break
        gaps = gaps * np.sqrt(mean / chords)
        gaps *= total / gaps.sum()
    else:
        raise LoopError("arc-length reparametrization did not converge")
    return DiscreteLoop(pts[:-1], loop.periods)


def resample(loop: DiscreteLoop, M: int) -> DiscreteLoop:
    """Linear interpolation in the parameter at j/M, j = 0..M−1."""
    if M < 3:
        raise LoopError("need at least 3 points")
    lifted = loop.unwrapped()
    t_old = np.arange(loop.N + 1) / loop.N
    t_new = np.arange(M) / M
    pts = np.column_stack([np.interp(t_new, t_old, lifted[:, j]) for j in range(loop.dim)])
    return DiscreteLoop(pts, loop.periods)


def lift_to_product_circle(loop: DiscreteLoop) -> DiscreteLoop:
    """ψ ↦ (ψ(t), t) in M × S¹, the S¹ factor having period 1."""
    N = loop.N
    t = np.arange(N) / N
    base = np.zeros(loop.dim) if loop.periods is None else loop.periods
    return DiscreteLoop(np.column_stack([loop.points, t]), np.concatenate([base, [1.0]]))


def lift_energy_identity(loop: DiscreteLoop) -> tuple[float, float]:
    """(E of the reparametrized lift, ½(L(projection)² + 1)).

    The two agree exactly when the base has constant speed; in general the
    first is the larger by Minkowski's inequality.
    """
    lift = arclength_reparametrize(lift_to_product_circle(loop))
    E, _ = measure(lift)
    proj = DiscreteLoop(lift.points[:, :-1], None if loop.periods is None else loop.periods)
    _, Lp = measure(proj)
    return E, 0.5 * (Lp * Lp + 1.0)


def concat_eps(g1: DiscreteLoop, g2: DiscreteLoop, eps: float, N: int | None = None) -> DiscreteLoop:
    """γ *_ε γ': the translate hγ on [0, ε] followed by γ' on [ε, 1].

    h is the translation with hγ(0) = γ'(0).  The result has N points,
    round(εN) of which come from γ.
    """
    if not 0 < eps < 1:
        raise LoopError(f"epsilon must lie in (0, 1), got {eps}")
    if g1.dim != g2.dim:
        raise LoopError("loops live in different dimensions")
    N = N or (g1.N + g2.N)
    N1 = int(round(eps * N))
    N2 = N - N1
    if N1 < 3 or N2 < 3:
        raise LoopError("epsilon too close to 0 or 1 for this N")
    a = resample(g1, N1).points
    b = resample(g2, N2).points
    a = a + (b[0] - a[0])
    periods = g1.periods if g1.periods is not None else g2.periods
    return DiscreteLoop(np.vstack([a, b]), periods)


def concat_energy_prediction(g1: DiscreteLoop, g2: DiscreteLoop, eps: float) -> float:
    """(1/ε)E(γ) + 1/(1−ε) E(γ')."""
    return measure(g1)[0] / eps + measure(g2)[0] / (1 - eps)


# ----------------------------------------------------------- generators ----
def circle_loop(N: int, radius: float = 1.0, phase: Sequence[float] | None = None) -> DiscreteLoop:
    """Round circle in R²; ``phase`` gives nonuniform parameter values in [0, 1)."""
    t = np.arange(N) / N if phase is None else np.asarray(phase, dtype=float)
    return DiscreteLoop(radius * np.column_stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)]))


def random_loop(rng: np.random.Generator, N: int = 200, D: int = 3, modes: int = 4, warp: float = 0.3) -> DiscreteLoop:
    """Random trigonometric loop with a random nonuniform parametrization."""
    k = np.arange(1, modes + 1)
    a = rng.normal(size=(modes, D)) / k[:, None]
    b = rng.normal(size=(modes, D)) / k[:, None]
    u = np.arange(N) / N
    c = rng.uniform(-1, 1)
    t = u + warp * c * np.sin(2 * np.pi * u) / (2 * np.pi)
    ang = 2 * np.pi * np.outer(t, k)
    return DiscreteLoop(np.cos(ang) @ a + np.sin(ang) @ b)


__all__ = [
    "DiscreteLoop", "LoopError", "measure", "schwarz_gap", "arclength_reparametrize", "resample",
    "lift_to_product_circle", "lift_energy_identity", "concat_eps", "concat_energy_prediction",
    "circle_loop", "random_loop",
]
