"""Hamiltonian dynamics on R^{2m} and T*T^n.

Conventions: λ = p dq, ω = dλ and ω(X_H, ·) = −dH, so that
q̇ = ∂H/∂p and ṗ = −∂H/∂q.  On the torus the q-coordinates of an orbit are
kept lifted to R^n; closure is tested modulo the integer lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._parallel import pmap

MAX_STEPS = 10_000_000


class FlowError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseSpace:
    kind: str  # "euclidean" | "torus"
    n: int

    def __post_init__(self):
        if self.kind not in ("euclidean", "torus"):
            raise FlowError(f"unknown phase space kind {self.kind!r}")
        if self.n < 1:
            raise FlowError("dimension must be positive")

    def wrap(self, q: np.ndarray) -> np.ndarray:
        return np.mod(q, 1.0) if self.kind == "torus" else np.asarray(q)

    def q_distance(self, a: np.ndarray, b: np.ndarray) -> float:
        d = np.asarray(a, float) - np.asarray(b, float)
        if self.kind == "torus":
            d = d - np.round(d)
        return float(np.linalg.norm(d))


class HamiltonianField:
    """H(t, q, p) with either an analytic or a central-difference gradient.

    ``grad`` must return ``(∂H/∂q, ∂H/∂p)``.  The finite-difference step is
    ``h_rel·(1 + |x_i|)`` per coordinate.
    """

    def __init__(
        self,
        H: Callable[[float, np.ndarray, np.ndarray], float],
        grad: Callable | None = None,
        homogeneity_degree: int | None = None,
        h_rel: float = 1e-6,
        autonomous: bool = True,
    ):
        self.H = H
        self._grad = grad
        self.homogeneity_degree = homogeneity_degree
        self.h_rel = h_rel
        self.autonomous = autonomous

    def __call__(self, t, q, p) -> float:
        return float(self.H(t, np.asarray(q, float), np.asarray(p, float)))

    def gradient(self, t, q, p) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self._grad is not None:
            gq, gp = self._grad(t, q, p)
            return np.asarray(gq, float), np.asarray(gp, float)
        return self._fd(t, q, p, 0), self._fd(t, q, p, 1)

    def _fd(self, t, q, p, which):
        base = q if which == 0 else p
        g = np.empty_like(base)
        for i in range(len(base)):
            h = self.h_rel * (1.0 + abs(base[i]))
            up, dn = base.copy(), base.copy()
            up[i] += h
            dn[i] -= h
            if which == 0:
                g[i] = (self.H(t, up, p) - self.H(t, dn, p)) / (2 * h)
            else:
                g[i] = (self.H(t, q, up) - self.H(t, q, dn)) / (2 * h)
        return g

    def check_homogeneity(self, points: Sequence[tuple[np.ndarray, np.ndarray]], scales=(0.5, 2.0, 3.0),
                          tol: float = 1e-9) -> bool:
        """F(q, s·p) = s^d F(q, p) on the sampled points."""
        d = self.homogeneity_degree
        if d is None:
            raise FlowError("field has no declared homogeneity degree")
        for q, p in points:
            f = self(0.0, q, p)
            for s in scales:
                if abs(self(0.0, q, s * np.asarray(p)) - s**d * f) > tol * max(1.0, abs(s**d * f)):
                    return False
        return True


def hamiltonian_vector_field(H: HamiltonianField, x: np.ndarray, t: float = 0.0) -> np.ndarray:
    """(q̇, ṗ) = (∂_p H, −∂_q H) at x = (q, p)."""
    x = np.asarray(x, dtype=float)
    n = len(x) // 2
    gq, gp = H.gradient(t, x[:n], x[n:])
    out = np.concatenate([gp, -gq])
    if not np.all(np.isfinite(out)):
        raise FlowError(f"non-finite vector field at x={x}")
    return out


def euler_identity_residual(F: HamiltonianField, x: np.ndarray) -> float:
    """|dF(x)(Y(x)) − 2F(x)| with Y = Σ p_i ∂/∂p_i."""
    x = np.asarray(x, dtype=float)
    n = len(x) // 2
    q, p = x[:n], x[n:]
    _, gp = F.gradient(0.0, q, p)
    return abs(float(gp @ p) - 2.0 * F(0.0, q, p))


# ---------------------------------------------------------------- orbits ----
@dataclass
class Orbit:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    space: PhaseSpace
    step: float = 0.0
    method: str = "rk4"
    energy_drift: float | None = None
    _action: float | None = field(default=None, repr=False)

    @property
    def period(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def x(self) -> np.ndarray:
        return np.hstack([self.q, self.p])

    def closure_defect(self) -> float:
        dq = self.space.q_distance(self.q[-1], self.q[0])
        return math.hypot(dq, float(np.linalg.norm(self.p[-1] - self.p[0])))

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "space": {"kind": self.space.kind, "n": self.space.n},
            "step": self.step,
            "method": self.method,
            "closure_defect": self.closure_defect(),
            "energy_drift": self.energy_drift,
            "samples": [
                {"t": float(t), "q": qq.tolist(), "p": pp.tolist()} for t, qq, pp in zip(self.times, self.q, self.p)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> Orbit:
        s = data["samples"]
        sp = data.get("space", {"kind": "euclidean", "n": len(s[0]["q"])})
        return cls(
            np.array([x["t"] for x in s], float),
            np.array([x["q"] for x in s], float),
            np.array([x["p"] for x in s], float),
            PhaseSpace(sp["kind"], int(sp["n"])),
            float(data.get("step", 0.0)),
            data.get("method", "rk4"),
            data.get("energy_drift"),
        )


def integrate_flow(
    H: HamiltonianField,
    x0: Sequence[float],
    T: float,
    dt: float,
    space: PhaseSpace | None = None,
    t0: float = 0.0,
) -> Orbit:
    """Fixed-step RK4; the step is shrunk slightly so that it divides T."""
    if not dt > 0:
        raise FlowError("dt must be positive")
    if not T > 0:
        raise FlowError("T must be positive")
    nsteps = max(1, math.ceil(T / dt - 1e-9))
    if nsteps > MAX_STEPS:
        raise FlowError(f"T/dt = {nsteps} exceeds the step cap {MAX_STEPS}")
    x = np.asarray(x0, dtype=float).copy()
    if len(x) % 2:
        raise FlowError("state must be (q, p) of even length")
    n = len(x) // 2
    space = space or PhaseSpace("euclidean", n)
    h = T / nsteps
    traj = np.empty((nsteps + 1, 2 * n))
    traj[0] = x
    f = lambda t, y: hamiltonian_vector_field(H, y, t)
    t = t0
    for i in range(nsteps):
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FlowError(f"non-finite state at t={t + h}")
        t = t0 + (i + 1) * h
        traj[i + 1] = x
    times = t0 + h * np.arange(nsteps + 1)
    drift = None
    if H.autonomous:
        e = np.array([H(0.0, y[:n], y[n:]) for y in traj])
        drift = float(np.abs(e - e[0]).max())
    return Orbit(times, traj[:, :n].copy(), traj[:, n:].copy(), space, h, "rk4", drift)


def integrate_batch(H: HamiltonianField, x0s, T: float, dt: float, space=None, workers: int | None = None):
    return pmap(lambda x0: integrate_flow(H, x0, T, dt, space), list(x0s), workers)


def action(H: HamiltonianField, orbit: Orbit, closure_tol: float = 1e-6) -> float:
    """A_H(x) = ∫ (p·q̇ − H) dt by the trapezoid rule, with q̇ = ∂_p H along x."""
    if orbit.closure_defect() > closure_tol:
        raise FlowError(f"orbit is not closed: defect {orbit.closure_defect():.3e} > {closure_tol}")
    vals = np.empty(len(orbit.times))
    for i, (t, q, p) in enumerate(zip(orbit.times, orbit.q, orbit.p)):
        _, gp = H.gradient(t, q, p)
        vals[i] = float(p @ gp) - H(t, q, p)
    return float(np.trapezoid(vals, orbit.times))


def rescale_orbit(orbit: Orbit, s: float) -> Orbit:
    """y(t) = c_s x(s t) = (q(st), s·p(st)), an orbit of the same degree-2 field with period τ/s."""
    if not s > 0:
        raise FlowError("scale must be positive")
    return Orbit(orbit.times / s, orbit.q.copy(), s * orbit.p, orbit.space, orbit.step / s, orbit.method)


def scale_momentum(orbit: Orbit, r: float) -> Orbit:
    """(q(t), p(t)/r): a solution of X_{rH} when x solves X_H and H is fiberwise quadratic."""
    if not r > 0:
        raise FlowError("r must be positive")
    return Orbit(orbit.times.copy(), orbit.q.copy(), orbit.p / r, orbit.space, orbit.step, orbit.method)


def flow_rescaling_residual(F: HamiltonianField, x0, s: float, t: float, dt: float = 1e-3) -> float:
    """|φ^t(c_s x0) − c_s φ^{st}(x0)| for fiberwise quadratic F."""
    x0 = np.asarray(x0, dtype=float)
    n = len(x0) // 2
    scaled = np.concatenate([x0[:n], s * x0[n:]])
    lhs = integrate_flow(F, scaled, t, dt).x[-1]
    rhs = integrate_flow(F, x0, s * t, dt).x[-1]
    rhs = np.concatenate([rhs[:n], s * rhs[n:]])
    return float(np.linalg.norm(lhs - rhs))


# --------------------------------------------------------------- cut-off ----
class Cutoff:
    """f(r) = 0 for r ≤ ε², f(r) = r for r ≥ ε, cubic Hermite blend in between.

    The blend matches value and slope at both ends (C¹), so f' ∈ [0, 2]
    holds for every ε ∈ (0, ¼); the bound is rechecked on a grid.
    """

    def __init__(self, eps: float):
        if not 0 < eps < 0.25:
            raise FlowError(f"epsilon must lie in (0, 1/4), got {eps}")
        self.eps = eps
        self.lo, self.hi = eps * eps, eps
        D = self.hi - self.lo
        # g(u) = a u² + b u³ with g(1) = ε, g'(1) = D
        self._a = 3 * eps - D
        self._b = D - 2 * eps
        self._D = D
        r = np.linspace(self.lo, self.hi, 10_001)
        d = self.derivative(r)
        if d.max() > 2 + 1e-9 or (d[1:] <= 0).any():
            raise FlowError("cut-off blend violates 0 < f' <= 2")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip((r - self.lo) / self._D, 0.0, 1.0)
        mid = self._a * u**2 + self._b * u**3
        out = np.where(r <= self.lo, 0.0, np.where(r >= self.hi, r, mid))
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip((r - self.lo) / self._D, 0.0, 1.0)
        mid = (2 * self._a * u + 3 * self._b * u**2) / self._D
        out = np.where(r <= self.lo, 0.0, np.where(r >= self.hi, 1.0, mid))
        return out if out.ndim else float(out)


def cutoff_f(eps: float) -> Cutoff:
    return Cutoff(eps)


# -------------------------------------------------------------- Legendre ----
def _zero_potential(t, q):
    return 0.0


def quadratic_hamiltonian(beta: float, W: Callable | None = None) -> HamiltonianField:
    """H = β|p|²/2 + W(t, q)."""
    if not beta > 0:
        raise FlowError("beta must be positive")
    W = W or _zero_potential
    return HamiltonianField(lambda t, q, p: 0.5 * beta * float(p @ p) + W(t, q),
                            homogeneity_degree=2 if W is _zero_potential else None)


def legendre_quadratic(beta: float, W: Callable | None = None) -> Callable:
    """Legendre dual of β|p|²/2 + W: L(t, q, v) = |v|²/(2β) − W(t, q)."""
    if not beta > 0:
        raise FlowError("beta must be positive")
    W = W or _zero_potential

    def L(t, q, v):
        v = np.asarray(v, dtype=float)
        return float(v @ v) / (2 * beta) - W(t, np.asarray(q, float))

    return L


def _spectral_velocity(orbit: Orbit) -> np.ndarray:
    """q̇ from a uniformly sampled closed orbit via FFT, removing the lattice winding."""
    t = orbit.times
    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=1e-12):
        raise FlowError("spectral velocity needs uniform sampling")
    tau = orbit.period
    q = orbit.q[:-1]
    N = len(q)
    winding = orbit.q[-1] - orbit.q[0]
    if orbit.space.kind == "torus":
        winding = np.round(winding)
    else:
        winding = np.zeros_like(winding)
    drift = np.outer(t[:-1] - t[0], winding / tau)
    k = np.fft.fftfreq(N, d=tau / N) * 2 * np.pi
    if N % 2 == 0:
        k[N // 2] = 0.0
    periodic = q - drift
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(periodic, axis=0), axis=0)) + winding / tau


def lagrangian_action(L: Callable, orbit: Orbit, closure_tol: float = 1e-6) -> float:
    """E_L(q) = ∫ L(t, q, q̇) dt over one period (periodic rectangle rule)."""
    if orbit.closure_defect() > closure_tol:
        raise FlowError(f"orbit is not closed: defect {orbit.closure_defect():.3e}")
    v = _spectral_velocity(orbit)
    vals = [L(t, q, vv) for t, q, vv in zip(orbit.times[:-1], orbit.q[:-1], v)]
    return float(np.sum(vals) * (orbit.period / len(vals)))


def legendre_check(beta: float, W: Callable | None, orbit: Orbit) -> float:
    """|A_H(x) − E_L(q)| for H = β|p|²/2 + W on a closed orbit x."""
    return abs(action(quadratic_hamiltonian(beta, W), orbit) - lagrangian_action(legendre_quadratic(beta, W), orbit))


def flow_residual(K: HamiltonianField, orbit: Orbit) -> float:
    """Max deviation of the sampled derivative from X_K along the orbit."""
    x = orbit.x
    xdot = np.gradient(x, orbit.times, axis=0, edge_order=2)
    return float(max(np.abs(xdot[i] - hamiltonian_vector_field(K, x[i], orbit.times[i])).max() for i in range(len(x))))


def action_formula_check(
    h: Callable[[float], float],
    H: HamiltonianField,
    W: Callable | None,
    orbit: Orbit,
    dh: Callable[[float], float] | None = None,
    flow_tol: float = 1e-4,
) -> float:
    """|A_{h∘H+W}(x) − ∫ (2h'(H)H − h(H) − W) dt| on a closed orbit of h∘H + W."""
    W = W or _zero_potential
    if dh is None:
        dh = lambda r: (h(r + 1e-6 * (1 + abs(r))) - h(r - 1e-6 * (1 + abs(r)))) / (2e-6 * (1 + abs(r)))
    K = HamiltonianField(lambda t, q, p: h(H(t, q, p)) + W(t, q))
    if flow_residual(K, orbit) > flow_tol:
        raise FlowError("orbit does not solve the flow of h∘H + W")
    direct = action(K, orbit)
    vals = []
    for t, q, p in zip(orbit.times, orbit.q, orbit.p):
        e = H(t, q, p)
        vals.append(2 * dh(e) * e - h(e) - W(t, q))
    return abs(direct - float(np.trapezoid(vals, orbit.times)))


# -------------------------------------------------- expression Hamiltonians ----
_ALLOWED = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "pi", "e", "sum", "dot", "cosh", "sinh", "tanh")
}


def parse_hamiltonian(expr: str, n: int) -> HamiltonianField:
    """Compile expressions like ``0.5*|p|^2 + cos(2*pi*q[0])``.

    ``|v|`` is the Euclidean norm and ``^`` is exponentiation; the names q, p,
    t and common numpy functions are available.
    """
    import re

    src = re.sub(r"\|([^|]+)\|", r"norm(\1)", expr).replace("^", "**")
    try:
        code = compile(src, "<hamiltonian>", "eval")
    except SyntaxError as e:
        raise FlowError(f"cannot parse Hamiltonian {expr!r}: {e.msg}") from None
    for name in code.co_names:
        if name not in _ALLOWED and name not in ("q", "p", "t", "norm"):
            raise FlowError(f"name {name!r} is not allowed in Hamiltonian expressions")
    env = {"__builtins__": {}, "norm": np.linalg.norm, **_ALLOWED}

    def H(t, q, p):
        return float(eval(code, env, {"q": q, "p": p, "t": t}))

    try:
        H(0.0, np.zeros(n), np.ones(n))
    except Exception as e:  # noqa: BLE001
        raise FlowError(f"cannot evaluate Hamiltonian {expr!r}: {e}") from None
    return HamiltonianField(H, autonomous="t" not in code.co_names)


__all__ = [
    "PhaseSpace", "HamiltonianField", "Orbit", "FlowError", "hamiltonian_vector_field",
    "euler_identity_residual", "integrate_flow", "integrate_batch", "action", "rescale_orbit",
    "scale_momentum", "flow_rescaling_residual", "Cutoff", "cutoff_f", "quadratic_hamiltonian",
    "legendre_quadratic", "lagrangian_action", "legendre_check", "flow_residual",
    "action_formula_check", "parse_hamiltonian",
]
