"""Maslov-type indices of Lagrangian and symplectic paths.

Conventions: on R^{2m} = {(q, p)} the complex structure is
``J0 = [[0, I], [-I, 0]]`` and the symplectic form is
``ω0(v, w) = <J0 v, w>``, i.e. ``ω0 = dp ∧ dq``.  A symmetric matrix S
generates the symplectic path ``exp(t J0 S)``; positive definite S rotates
positively and contributes positively to every index below.

Robbin–Salamon indices are computed from crossing forms: crossings of a
Lagrangian path Λ(t) with the train of V are located on a scan grid,
refined by bounded scalar minimisation of the smallest singular value of
the stacked frames, and weighted by the signature of the crossing form
(half weight at the endpoints).  The result is an exact half-integer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm, polar
from scipy.optimize import minimize_scalar


class MaslovError(ValueError):
    pass


class NonRegularCrossingError(MaslovError):
    """A crossing form is singular; the index is not defined without perturbation."""


class SamplingError(MaslovError):
    pass


class RankAmbiguityError(MaslovError):
    pass


def J0(m: int) -> np.ndarray:
    I = np.eye(m)
    Z = np.zeros((m, m))
    return np.block([[Z, I], [-I, Z]])


def omega0(m: int) -> np.ndarray:
    """Matrix Ω with ω0(a, b) = aᵀ Ω b."""
    return J0(m).T


def is_symplectic(A: np.ndarray, tol: float = 1e-9) -> bool:
    m = A.shape[0] // 2
    J = J0(m)
    return bool(np.linalg.norm(A.T @ J @ A - J) <= tol * max(1.0, np.linalg.norm(A) ** 2))


def _orth(frame: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(frame)
    return q


# --------------------------------------------------------------- frames ----
@dataclass
class LagrangianFrame:
    """A 2n×n frame spanning a Lagrangian subspace of (R^{2n}, Ω)."""

    frame: np.ndarray
    omega: np.ndarray | None = None
    tol: float = 1e-8

    def __post_init__(self):
        self.frame = np.asarray(self.frame, dtype=float)
        two_n, n = self.frame.shape
        if two_n != 2 * n:
            raise MaslovError(f"frame must be 2n×n, got {self.frame.shape}")
        if self.omega is None:
            self.omega = omega0(n)
        s = np.linalg.svd(self.frame, compute_uv=False)
        if s[-1] <= self.tol * max(1.0, s[0]):
            raise MaslovError("frame is not of full column rank")
        q = _orth(self.frame)
        if np.linalg.norm(q.T @ self.omega @ q) > 1e3 * self.tol:
            raise MaslovError("frame does not span an isotropic subspace")

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    @classmethod
    def horizontal(cls, m: int) -> LagrangianFrame:
        return cls(np.vstack([np.eye(m), np.zeros((m, m))]))

    @classmethod
    def vertical(cls, m: int) -> LagrangianFrame:
        return cls(np.vstack([np.zeros((m, m)), np.eye(m)]))

    @classmethod
    def graph(cls, A: np.ndarray) -> LagrangianFrame:
        """gr(A) ⊂ (R^{2m} ⊕ R^{2m}, (−ω0) ⊕ ω0) for symplectic A."""
        k = A.shape[0]
        return cls(np.vstack([np.eye(k), A]), graph_omega(k // 2))

    @classmethod
    def diagonal(cls, m: int) -> LagrangianFrame:
        return cls.graph(np.eye(2 * m))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "frame": self.frame.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> LagrangianFrame:
        frame = np.asarray(data["frame"], dtype=float)
        if "dim" in data and frame.shape[0] != int(data["dim"]):
            raise MaslovError("frame row count does not match dim")
        if data.get("space") == "graph":
            return cls(frame, graph_omega(frame.shape[0] // 4))
        return cls(frame)


def graph_omega(m: int) -> np.ndarray:
    O = omega0(m)
    Z = np.zeros_like(O)
    return np.block([[-O, Z], [Z, O]])


def intersection_dim(L1: LagrangianFrame, L2: LagrangianFrame, tol: float = 1e-8, band: float = 100.0) -> int:
    """dim(L1 ∩ L2) from the singular values of the stacked orthonormal frames.

    Singular values in ``[tol, band*tol)`` are treated as ambiguous.
    """
    if L1.dim != L2.dim:
        raise MaslovError("frames live in different dimensions")
    s = np.linalg.svd(np.hstack([_orth(L1.frame), _orth(L2.frame)]), compute_uv=False)
    if ((s >= tol) & (s < band * tol)).any():
        raise RankAmbiguityError(
            f"singular value {s[(s >= tol) & (s < band * tol)][0]:.3e} is within the ambiguity band; "
            "use a finer tolerance"
        )
    return int(np.count_nonzero(s < tol))


# ---------------------------------------------------------------- paths ----
class LagrangianPath:
    """Smooth path t ↦ Λ(t) given by a frame-valued function on [t_start, t_end]."""

    def __init__(
        self,
        frame: Callable[[float], np.ndarray],
        t_start: float,
        t_end: float,
        omega: np.ndarray | None = None,
        grid: Sequence[float] | None = None,
        n_grid: int = 2001,
    ):
        if not t_end > t_start:
            raise MaslovError("need t_end > t_start")
        self.frame = frame
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        f0 = np.asarray(frame(self.t_start), dtype=float)
        self.omega = omega0(f0.shape[1]) if omega is None else omega
        self.grid = np.asarray(grid, dtype=float) if grid is not None else np.linspace(t_start, t_end, n_grid)

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.frame(t), dtype=float)

    def reversed(self) -> LagrangianPath:
        a, b = self.t_start, self.t_end
        return LagrangianPath(lambda t: self.frame(a + b - t), a, b, self.omega, (a + b - self.grid)[::-1])

    def restrict(self, a: float, b: float) -> LagrangianPath:
        grid = self.grid[(self.grid > a) & (self.grid < b)]
        return LagrangianPath(self.frame, a, b, self.omega, np.concatenate([[a], grid, [b]]))


class SymplecticPath:
    """Path in Sp(2m), stored as samples and optionally backed by an exact function.

    Without a function, evaluation between samples uses entrywise cubic
    splines.
    """

    def __init__(
        self,
        times: Sequence[float],
        matrices: Sequence[np.ndarray],
        func: Callable[[float], np.ndarray] | None = None,
        tolerance: float = 1e-8,
    ):
        self.times = np.asarray(times, dtype=float)
        self.matrices = np.asarray(matrices, dtype=float)
        if self.matrices.ndim != 3 or self.matrices.shape[1] != self.matrices.shape[2] or self.matrices.shape[1] % 2:
            raise MaslovError("matrices must be a stack of 2m×2m arrays")
        if len(self.times) != len(self.matrices) or len(self.times) < 2:
            raise MaslovError("need at least two samples with matching times")
        if np.any(np.diff(self.times) <= 0):
            raise MaslovError("sample times must be strictly increasing")
        self.tolerance = tolerance
        J = J0(self.m)
        for t, A in zip(self.times, self.matrices):
            if np.linalg.norm(A.T @ J @ A - J) > tolerance * max(1.0, np.linalg.norm(A) ** 2):
                raise MaslovError(f"sample at t={t} is not symplectic within {tolerance}")
        self.func = func
        self._spline = None if func is not None else CubicSpline(self.times, self.matrices, axis=0)

    @classmethod
    def from_function(cls, func, t_end: float, n_samples: int = 2001, t_start: float = 0.0, **kw) -> SymplecticPath:
        times = np.linspace(t_start, t_end, n_samples)
        return cls(times, [func(t) for t in times], func, **kw)

    @property
    def m(self) -> int:
        return self.matrices.shape[1] // 2

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> np.ndarray:
        if self.func is not None:
            return np.asarray(self.func(t), dtype=float)
        return self._spline(t)

    def graph_path(self) -> LagrangianPath:
        k = self.dim
        I = np.eye(k)
        return LagrangianPath(lambda t: np.vstack([I, self(t)]), self.t_start, self.t_end,
                              graph_omega(self.m), self._scan_grid())

    def _scan_grid(self) -> np.ndarray:
        # exact paths are scanned at the samples, interpolated ones four times finer
        t = self.times
        if self.func is not None:
            return t
        fine = [np.linspace(a, b, 5)[:-1] for a, b in zip(t[:-1], t[1:])]
        return np.concatenate(fine + [[t[-1]]])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "samples": [{"t": float(t), "matrix": A.ravel().tolist()} for t, A in zip(self.times, self.matrices)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, tolerance: float = 1e-6) -> SymplecticPath:
        k = int(data["dim"])
        samples = data["samples"]
        times = [float(s["t"]) for s in samples]
        mats = [np.asarray(s["matrix"], dtype=float).reshape(k, k) for s in samples]
        return cls(times, mats, tolerance=tolerance)


def hamiltonian_path(S: np.ndarray, t_end: float = 1.0, n_samples: int = 401) -> SymplecticPath:
    """The path exp(t J0 S) for symmetric S."""
    S = np.asarray(S, dtype=float)
    if not np.allclose(S, S.T):
        raise MaslovError("S must be symmetric")
    A = J0(S.shape[0] // 2) @ S
    w, P = np.linalg.eig(A)
    if np.linalg.cond(P) < 1e6:
        Pinv = np.linalg.inv(P)
        return SymplecticPath.from_function(lambda t: ((P * np.exp(t * w)) @ Pinv).real, t_end, n_samples)
    return SymplecticPath.from_function(lambda t: expm(t * A), t_end, n_samples)


def rotation_path(theta: float, m: int = 1, t_end: float = 1.0, n_samples: int = 401) -> SymplecticPath:
    """exp(t θ J0) on R^{2m}."""
    J = J0(m)
    I = np.eye(2 * m)
    return SymplecticPath.from_function(lambda t: math.cos(theta * t) * I + math.sin(theta * t) * J, t_end, n_samples)


def block_diag_path(*paths: SymplecticPath) -> SymplecticPath:
    """Direct sum of symplectic paths, reordered into (q, p) coordinates."""
    ms = [p.m for p in paths]
    m = sum(ms)
    order_q, order_p, off = [], [], 0
    for mi in ms:
        order_q += list(range(off, off + mi))
        order_p += list(range(off + mi, off + 2 * mi))
        off += 2 * mi
    perm = np.array(order_q + order_p)

    def func(t):
        from scipy.linalg import block_diag

        B = block_diag(*[p(t) for p in paths])
        return B[np.ix_(perm, perm)]

    return SymplecticPath.from_function(func, paths[0].t_end, len(paths[0].times), paths[0].t_start)


# -------------------------------------------------------- crossing forms ----
@dataclass(frozen=True)
class CrossingRecord:
    t: float
    kernel_dim: int
    signature: int
    boundary: str  # "start" | "interior" | "end"


def _intersection_basis(Z: np.ndarray, V: np.ndarray, tol: float) -> np.ndarray:
    Zq, Vq = _orth(Z), _orth(V)
    M = np.hstack([Zq, -Vq])
    _, s, vh = np.linalg.svd(M)
    null = vh[s < tol] if len(s) == M.shape[1] else vh[np.r_[s, np.zeros(M.shape[1] - len(s))] < tol]
    if len(null) == 0:
        return np.zeros((Z.shape[0], 0))
    vecs = Zq @ null[:, : Zq.shape[1]].T
    return _orth(vecs)


def crossing_form(
    path: LagrangianPath,
    V: LagrangianFrame,
    t0: float,
    W: np.ndarray | None = None,
    h: float = 1e-5,
    stencil: str = "central",
    tol: float = 1e-6,
) -> np.ndarray:
    """Matrix of Q_{t0}(v) = d/dt ω(v, w(t)) on a basis of Λ(t0) ∩ V.

    ``w(t) ∈ W`` is defined by v + w(t) ∈ Λ(t).  W defaults to the
    complement J Λ(t0) with J = −Ω; any Lagrangian complement gives the
    same form.
    """
    Om = path.omega
    if stencil == "central" and (t0 - h < path.t_start - 1e-15 or t0 + h > path.t_end + 1e-15):
        raise MaslovError(f"no room for a central stencil at t0={t0}")
    if stencil == "forward" and t0 + 2 * h > path.t_end + 1e-15:
        raise MaslovError(f"no room for a forward stencil at t0={t0}")
    if stencil == "backward" and t0 - 2 * h < path.t_start - 1e-15:
        raise MaslovError(f"no room for a backward stencil at t0={t0}")

    Z0 = path(t0)
    basis = _intersection_basis(Z0, V.frame, tol)
    k = basis.shape[1]
    if k == 0:
        return np.zeros((0, 0))
    if W is None:
        W = -Om @ _orth(Z0)
    n = Z0.shape[1]

    def M(t):
        Zt = _orth(path(t))
        sol = np.linalg.solve(np.hstack([Zt, -W]), basis)
        w = W @ sol[n:]
        return basis.T @ Om @ w

    if stencil == "central":
        D = (M(t0 + h) - M(t0 - h)) / (2 * h)
    elif stencil == "forward":
        D = (-3 * M(t0) + 4 * M(t0 + h) - M(t0 + 2 * h)) / (2 * h)
    elif stencil == "backward":
        D = (3 * M(t0) - 4 * M(t0 - h) + M(t0 - 2 * h)) / (2 * h)
    else:
        raise MaslovError(f"unknown stencil {stencil!r}")
    return 0.5 * (D + D.T)


def _signature(G: np.ndarray, rel_tol: float = 1e-7, abs_tol: float = 1e-9) -> int:
    ev = np.linalg.eigvalsh(G)
    scale = max(np.abs(ev).max(initial=0.0), 0.0)
    if scale < abs_tol or (np.abs(ev) < rel_tol * scale).any():
        raise NonRegularCrossingError(f"singular crossing form with eigenvalues {ev}")
    return int(np.count_nonzero(ev > 0) - np.count_nonzero(ev < 0))


def _sigma_min(path: LagrangianPath, Vq: np.ndarray, t: float) -> float:
    return float(np.linalg.svd(np.hstack([_orth(path(t)), Vq]), compute_uv=False)[-1])


def find_crossings(
    path: LagrangianPath,
    V: LagrangianFrame,
    crossing_tol: float = 1e-7,
    time_tol: float = 1e-8,
    h: float = 1e-5,
) -> list[CrossingRecord]:
    """Locate the crossings of Λ with Σ(V) and evaluate their crossing forms."""
    Vq = _orth(V.frame)
    grid = path.grid
    s = np.array([_sigma_min(path, Vq, t) for t in grid])
    records: list[CrossingRecord] = []
    a, b = path.t_start, path.t_end
    h = min(h, (b - a) / 4)

    def record(t, where):
        stencil = {"start": "forward", "end": "backward"}.get(where, "central")
        step = min(h, (t - a) / 2, (b - t) / 2) if where == "interior" else h
        G = crossing_form(path, V, t, h=step, stencil=stencil)
        kdim = G.shape[0]
        sig = _signature(G)
        records.append(CrossingRecord(float(t), kdim, sig, where))

    if s[0] < crossing_tol:
        record(a, "start")
    interior = []
    for i in range(1, len(grid) - 1):
        if s[i] <= s[i - 1] and s[i] <= s[i + 1] and s[i] < 0.5:
            res = minimize_scalar(
                lambda t: _sigma_min(path, Vq, t),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": time_tol * 1e-2},
            )
            t = float(res.x)
            if res.fun >= crossing_tol:
                continue
            if t - a < 10 * time_tol or b - t < 10 * time_tol:
                continue  # endpoint crossing, handled separately
            if interior and abs(t - interior[-1]) < 10 * time_tol:
                continue
            interior.append(t)
    for t in interior:
        record(t, "interior")
    if s[-1] < crossing_tol:
        record(b, "end")
    return records


def _is_constant(path: LagrangianPath, tol: float = 1e-12) -> bool:
    # compare orthogonal projections onto Λ(t) along the scan grid
    q0 = _orth(path(path.t_start))
    P0 = q0 @ q0.T
    for t in path.grid:
        q = _orth(path(t))
        if np.linalg.norm(q @ q.T - P0) > tol:
            return False
    return True


def rs_index(path: LagrangianPath, V: LagrangianFrame, **kw) -> Fraction:
    """μ_RS(Λ, V) = ½ sign Γ_start + Σ_interior sign Γ_t + ½ sign Γ_end."""
    if V.dim != path(path.t_start).shape[0]:
        raise MaslovError("V and the path live in different dimensions")
    if _is_constant(path):
        return Fraction(0)
    twice = 0
    for rec in find_crossings(path, V, **kw):
        twice += rec.signature if rec.boundary != "interior" else 2 * rec.signature
    return Fraction(twice, 2)


def cz_index(path: SymplecticPath, **kw) -> Fraction:
    """μ_RS(gr Ψ, Δ); equals the Conley–Zehnder index when det(I − Ψ(τ)) ≠ 0."""
    return rs_index(path.graph_path(), LagrangianFrame.diagonal(path.m), **kw)


def is_nondegenerate(A: np.ndarray, tol: float = 1e-8) -> bool:
    return abs(np.linalg.det(np.eye(A.shape[0]) - A)) > tol


# ------------------------------------------------------------ rotation Δ ----
def _unitary_angle(A: np.ndarray) -> float:
    m = A.shape[0] // 2
    U, _ = polar(A)
    X, Y = U[:m, :m], U[:m, m:]
    return float(np.angle(np.linalg.det(X + 1j * Y)))


def delta_winding(path: SymplecticPath, times: Sequence[float] | None = None) -> float:
    """Δ_τ(Ψ) = (α(τ) − α(0))/π with e^{iα} the determinant of the unitary polar factor."""
    ts = path.times if times is None else np.asarray(times, dtype=float)
    angles = np.array([_unitary_angle(path(t)) for t in ts])
    jumps = np.diff(angles)
    jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(jumps) >= np.pi / 2):
        raise SamplingError("sampling too coarse: rotation angle jumps by more than π/2")
    return float(jumps.sum() / np.pi)


def iterate_path(path: SymplecticPath, k: int) -> SymplecticPath:
    """Extension Ψ(jτ + t) = Ψ(t) Ψ(τ)^j to [0, kτ]; requires t_start = 0."""
    if k < 1:
        raise MaslovError("k must be >= 1")
    if path.t_start != 0.0:
        raise MaslovError("iteration needs a path starting at t = 0")
    tau = path.t_end
    end = path(tau)
    powers = [np.linalg.matrix_power(end, j) for j in range(k + 1)]

    def func(t):
        j = min(int(t // tau), k - 1) if t < k * tau else k - 1
        return path(t - j * tau) @ powers[j]

    times = np.concatenate([path.times[:-1] + j * tau for j in range(k)] + [[k * tau]])
    mats = [func(t) for t in times]
    return SymplecticPath(times, mats, func, tolerance=max(path.tolerance, 1e-7))


__all__ = [
    "J0", "omega0", "graph_omega", "LagrangianFrame", "LagrangianPath", "SymplecticPath",
    "CrossingRecord", "intersection_dim", "crossing_form", "find_crossings", "rs_index",
    "cz_index", "delta_winding", "iterate_path", "hamiltonian_path", "rotation_path",
    "block_diag_path", "is_symplectic", "is_nondegenerate", "MaslovError",
    "NonRegularCrossingError", "SamplingError", "RankAmbiguityError",
]
