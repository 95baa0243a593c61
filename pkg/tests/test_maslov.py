from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from reeb_growth.maslov import (
    J0, LagrangianFrame, LagrangianPath, MaslovError, NonRegularCrossingError, RankAmbiguityError,
    SamplingError, SymplecticPath, block_diag_path, crossing_form, cz_index, delta_winding,
    find_crossings, graph_omega, hamiltonian_path, intersection_dim, is_nondegenerate, is_symplectic,
    iterate_path, omega0, rotation_path, rs_index,
)


def rot(theta):
    return np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]])


def graph_of(path_fn, a, b, m=1, n_grid=401):
    I = np.eye(2 * m)
    return LagrangianPath(lambda t: np.vstack([I, path_fn(t)]), a, b, graph_omega(m), np.linspace(a, b, n_grid))


def sheared_loop(c):
    """exp(2πtJ0)·[[1, ct], [0, 1]]: Ψ(1) is parabolic with a 1-dim fixed space."""
    J = J0(1)
    return SymplecticPath.from_function(lambda t: expm(2 * np.pi * t * J) @ np.array([[1, c * t], [0, 1]]), 1.0)


# ------------------------------------------------------------ frames ----
def test_conventions():
    J = J0(1)
    assert np.array_equal(J, [[0, 1], [-1, 0]])
    # ω0(v, w) = <J0 v, w>
    v, w = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert v @ omega0(1) @ w == pytest.approx((J @ v) @ w)
    assert is_symplectic(expm(J @ np.array([[2.0, 1.0], [1.0, 3.0]])))


def test_intersection_dim_examples():
    H, V = LagrangianFrame.horizontal(2), LagrangianFrame.vertical(2)
    assert intersection_dim(H, H) == 2
    assert intersection_dim(H, V) == 0
    assert intersection_dim(LagrangianFrame.graph(rot(np.pi / 2)), LagrangianFrame.diagonal(1)) == 0
    assert intersection_dim(LagrangianFrame.graph(rot(2 * np.pi)), LagrangianFrame.diagonal(1)) == 2


def test_intersection_dim_ambiguity():
    tilted = LagrangianFrame(np.array([[1.0], [1e-7]]))
    with pytest.raises(RankAmbiguityError):
        intersection_dim(tilted, LagrangianFrame.horizontal(1))


def test_frame_validation():
    with pytest.raises(MaslovError):
        LagrangianFrame(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))  # spans q1 and p1
    with pytest.raises(MaslovError):
        LagrangianFrame(np.zeros((2, 1)))
    with pytest.raises(MaslovError):
        LagrangianFrame(np.ones((3, 1)))


def test_symplectic_path_validation():
    with pytest.raises(MaslovError):
        SymplecticPath([0.0, 1.0], [np.eye(2), 2 * np.eye(2)])
    with pytest.raises(MaslovError):
        SymplecticPath([0.0, 0.0], [np.eye(2), np.eye(2)])


def test_path_json_round_trip():
    p = rotation_path(np.pi, n_samples=21)
    q = SymplecticPath.from_dict(json.loads(p.to_json()))
    assert np.array_equal(q.times, p.times) and np.array_equal(q.matrices, p.matrices)
    assert cz_index(q) == 1


# ---------------------------------------------------- crossing forms ----
@pytest.mark.parametrize("theta", [0.5, 2.0, 5.0])
def test_crossing_form_rotation_positive(theta):
    path = graph_of(lambda t: rot(theta * t), -0.5, 1.0)
    G = crossing_form(path, LagrangianFrame.diagonal(1), 0.0)
    # Q((z, z)) = θ|z|², and unit vectors of the diagonal have |z|² = ½
    assert np.allclose(G, theta / 2 * np.eye(2), atol=1e-6)


def test_crossing_form_constant_path_is_zero():
    V = LagrangianFrame.horizontal(1)
    path = LagrangianPath(lambda t: V.frame, -1.0, 1.0)
    assert np.allclose(crossing_form(path, V, 0.0), 0.0)


def test_crossing_form_reversal_negates():
    path = graph_of(lambda t: rot(1.3 * t), -1.0, 1.0)
    V = LagrangianFrame.diagonal(1)
    assert np.allclose(crossing_form(path.reversed(), V, 0.0), -crossing_form(path, V, 0.0), atol=1e-8)


def test_crossing_form_independent_of_complement():
    rng = np.random.default_rng(5)
    m = 2
    S = rng.normal(size=(2 * m, 2 * m))
    S = S + S.T
    path = graph_of(lambda t: expm(t * J0(m) @ S), -0.5, 0.5, m)
    V = LagrangianFrame.diagonal(m)
    Z0, _ = np.linalg.qr(path(0.0))
    Jt = -path.omega
    B = rng.normal(size=(2 * m, 2 * m))
    W2 = Jt @ Z0 + Z0 @ (B + B.T)  # graph of a symmetric map over the standard complement
    assert np.linalg.norm(W2.T @ path.omega @ W2) < 1e-10
    assert np.allclose(crossing_form(path, V, 0.0), crossing_form(path, V, 0.0, W=W2), atol=1e-6)


def test_crossing_form_needs_room():
    path = graph_of(lambda t: rot(t), 0.0, 1.0)
    with pytest.raises(MaslovError):
        crossing_form(path, LagrangianFrame.diagonal(1), 0.0)
    G = crossing_form(path, LagrangianFrame.diagonal(1), 0.0, stencil="forward")
    assert np.allclose(G, 0.5 * np.eye(2), atol=1e-6)


def test_non_regular_crossing_raises():
    path = LagrangianPath(lambda t: np.array([[math.cos(t * t)], [math.sin(t * t)]]), -1.0, 1.0)
    with pytest.raises(NonRegularCrossingError):
        rs_index(path, LagrangianFrame.horizontal(1))


# ------------------------------------------------------------- indices ----
def test_rs_constant_path():
    V = LagrangianFrame.horizontal(1)
    assert rs_index(LagrangianPath(lambda t: V.frame, 0.0, 1.0), V) == 0
    transverse = LagrangianFrame.vertical(1).frame
    assert rs_index(LagrangianPath(lambda t: transverse, 0.0, 1.0), V) == 0


def test_rs_full_rotation():
    path = graph_of(lambda t: rot(2 * np.pi * t), 0.0, 1.0)
    assert rs_index(path, LagrangianFrame.diagonal(1)) == 2
    recs = find_crossings(path, LagrangianFrame.diagonal(1))
    assert [(r.boundary, r.kernel_dim, r.signature) for r in recs] == [("start", 2, 2), ("end", 2, 2)]


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 12.0), st.floats(0.05, 0.95))
def test_rs_reversal_negates(theta, phase):
    # Λ(t) = rot(θt + φ)·R against the horizontal line; crossings where θt + φ ∈ πZ
    if min(abs((theta + phase) / np.pi - round((theta + phase) / np.pi)), phase / np.pi) < 1e-3:
        return
    e1 = np.array([[1.0], [0.0]])
    path = LagrangianPath(lambda t: rot(theta * t + phase) @ e1, 0.0, 1.0)
    V = LagrangianFrame.horizontal(1)
    assert rs_index(path.reversed(), V) == -rs_index(path, V)
    assert rs_index(path, V) == math.floor((theta + phase) / np.pi)


def test_cz_examples():
    assert cz_index(rotation_path(np.pi)) == 1
    assert cz_index(rotation_path(2 * np.pi)) == 2
    assert cz_index(rotation_path(-np.pi)) == -1


def test_cz_block_additivity():
    rng = np.random.default_rng(11)
    for _ in range(4):
        blocks = []
        for _ in range(2):
            S = rng.normal(size=(2, 2))
            blocks.append(hamiltonian_path(3 * (S + S.T)))
        total = block_diag_path(*blocks)
        assert cz_index(total) == sum(cz_index(b) for b in blocks)


def test_cz_integer_iff_nondegenerate():
    rng = np.random.default_rng(2)
    for _ in range(6):
        S = rng.normal(size=(2, 2))
        p = hamiltonian_path(4 * (S + S.T))
        assert is_nondegenerate(p(1.0))
        assert cz_index(p).denominator == 1
    for c in (0.5, -0.5, 2.0):
        p = sheared_loop(c)
        assert not is_nondegenerate(p(1.0))
        assert cz_index(p).denominator == 2


def test_half_integer_family_values():
    # endpoint kernel is 1-dimensional; the half weight sees sign ±1
    assert cz_index(sheared_loop(0.5)) == Fraction(5, 2)
    assert cz_index(sheared_loop(-0.5)) == Fraction(3, 2)


def test_crossing_record_invariants():
    rng = np.random.default_rng(4)
    for _ in range(5):
        S = rng.normal(size=(4, 4))
        p = hamiltonian_path(2 * (S + S.T))
        for r in find_crossings(p.graph_path(), LagrangianFrame.diagonal(2)):
            assert r.kernel_dim >= 1
            assert abs(r.signature) <= r.kernel_dim
            assert (r.signature - r.kernel_dim) % 2 == 0


def test_concatenation_additivity():
    V = LagrangianFrame.diagonal(1)
    path = graph_of(lambda t: rot(3 * np.pi * t), 0.0, 1.0, n_grid=601)
    split = 0.4  # 1.2π: not a crossing
    total = rs_index(path, V)
    assert total == rs_index(path.restrict(0.0, split), V) + rs_index(path.restrict(split, 1.0), V)
    assert total == 3


def test_homotopy_invariance_small_perturbation():
    rng = np.random.default_rng(8)
    J = J0(1)
    for _ in range(3):
        S = rng.normal(size=(2, 2))
        S = 3 * (S + S.T)
        P = rng.normal(size=(2, 2))
        P = P + P.T
        base = hamiltonian_path(S)
        if not is_nondegenerate(base(1.0), 1e-3):
            continue
        # endpoint-fixed perturbation of size ≤ 1e−4
        pert = SymplecticPath.from_function(
            lambda t: base(t) @ expm(1e-4 * math.sin(np.pi * t) * J @ P), 1.0, 401)
        assert cz_index(pert) == cz_index(base)


# ------------------------------------------------------------- winding ----
def test_delta_examples():
    assert delta_winding(rotation_path(2 * np.pi)) == pytest.approx(2.0, abs=1e-9)
    const = SymplecticPath.from_function(lambda t: np.eye(2), 1.0, 11)
    assert delta_winding(const) == 0.0
    hyper = SymplecticPath.from_function(lambda t: np.diag([math.exp(t), math.exp(-t)]), 1.0, 51)
    assert delta_winding(hyper) == pytest.approx(0.0, abs=1e-12)


def test_delta_sampling_error():
    coarse = SymplecticPath([0.0, 0.5, 1.0], [np.eye(2), rot(0.9 * np.pi), rot(1.8 * np.pi)])
    with pytest.raises(SamplingError):
        delta_winding(coarse)


def test_iterate_path_examples():
    p = rotation_path(2 * np.pi / 3 + 0.2)
    one = iterate_path(p, 1)
    assert np.allclose(one.matrices, p.matrices)
    for k in (2, 3, 5):
        pk = iterate_path(p, k)
        assert np.allclose(pk(pk.t_end), np.linalg.matrix_power(p(1.0), k), atol=1e-12)
        assert delta_winding(pk) == pytest.approx(k * delta_winding(p), abs=1e-6)
    full = rotation_path(2 * np.pi)
    assert delta_winding(iterate_path(full, 4)) == pytest.approx(8.0, abs=1e-6)
    with pytest.raises(MaslovError):
        iterate_path(p, 0)


def test_cz_delta_sandwich_small_suite():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 10:
        m = int(rng.integers(1, 3))
        A = rng.normal(size=(2 * m, 2 * m))
        p = hamiltonian_path((A + A.T) * rng.uniform(0.5, 3), n_samples=1001)
        if not is_nondegenerate(p(1.0), 1e-6):
            continue
        try:
            cz = cz_index(p)
        except NonRegularCrossingError:
            continue
        assert abs(float(cz) - delta_winding(p)) < m
        checked += 1
