import numpy as np
import pytest
from hypothesis import given, strategies as st

from simmaps import config
from simmaps.errors import DegenerateAnchors, DimensionMismatch, NotCommuting, NotCongruent, Unrealizable
from simmaps.motion_group import (
    Motion, apply, cayley_menger, compose, distance_to_fixed_subspace, fit_motion, identity,
    in_general_position, inverse, locate_from_distances, motion_distance, plane_rotation,
    random_motion, recompose, screw_decompose, simultaneous_diagonalize, translation)

ROT90 = Motion([[0.0, -1.0], [1.0, 0.0]], [0.0, 0.0])
TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def simplex(n):
    return np.vstack([np.zeros(n), np.eye(n)])


seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([1, 2, 3, 5, 8])


def test_motion_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        Motion([[1.0, 0.1], [0.0, 1.0]], [0.0, 0.0])


def test_motion_arrays_read_only():
    m = random_motion(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        m.Q[0, 0] = 2.0


def test_compose_examples():
    m = random_motion(3, np.random.default_rng(1))
    assert motion_distance(compose(identity(3), m), m) <= 1e-15
    assert motion_distance(compose(m, inverse(m)), identity(3)) <= 1e-12
    p = apply(compose(ROT90, translation([1.0, 0.0])), [0.0, 0.0])
    np.testing.assert_allclose(p, [0.0, 1.0], atol=1e-15)


def test_compose_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        compose(identity(2), identity(3))


def test_inverse_examples():
    assert motion_distance(inverse(identity(4)), identity(4)) == 0.0
    t = np.array([1.0, -2.0, 3.0])
    assert motion_distance(inverse(translation(t)), translation(-t)) == 0.0
    np.testing.assert_allclose(apply(inverse(ROT90), [0.0, 1.0]), [1.0, 0.0], atol=1e-15)


@given(seeds, dims)
def test_group_laws(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_motion(n, rng, scale=3.0) for _ in range(3))
    assert motion_distance(compose(compose(a, b), c), compose(a, compose(b, c))) <= 1e-10
    assert motion_distance(compose(a, inverse(a)), identity(n)) <= 1e-12
    assert motion_distance(compose(inverse(a), a), identity(n)) <= 1e-12
    x, y = rng.standard_normal((2, n))
    assert abs(np.linalg.norm(apply(a, x) - apply(a, y)) - np.linalg.norm(x - y)) <= 1e-10


def test_long_composition_chain_stays_orthogonal():
    rng = np.random.default_rng(2)
    m = identity(5)
    for _ in range(2000):
        m = compose(m, random_motion(5, rng))
    assert np.max(np.abs(m.Q.T @ m.Q - np.eye(5))) <= 1e-12


def test_cayley_menger_triangle():
    # unit right triangle: |CM| = 2^2 (2!)^2 vol^2 = 16 / 4
    assert abs(cayley_menger(TRI)) == pytest.approx(4.0, rel=1e-12)
    assert abs(cayley_menger([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])) <= 1e-12
    assert in_general_position(TRI)
    assert not in_general_position([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0 + 1e-9]])


def test_locate_examples():
    np.testing.assert_allclose(locate_from_distances(TRI, [np.sqrt(2), 1.0, 1.0]), [1.0, 1.0],
                               atol=1e-12)
    np.testing.assert_allclose(locate_from_distances(TRI, [0.0, 1.0, 1.0]), [0.0, 0.0], atol=1e-12)
    S = simplex(3)
    c = S.mean(axis=0)
    np.testing.assert_allclose(locate_from_distances(S, np.linalg.norm(S - c, axis=1)), c,
                               atol=1e-12)


def test_locate_errors():
    with pytest.raises(DegenerateAnchors):
        locate_from_distances([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [1.0, 1.0, 1.0])
    with pytest.raises(Unrealizable):
        locate_from_distances(TRI, [1.0, 1.0, 5.0])


def test_locate_matches_grid_minimizer():
    # independent oracle: minimize sum (|b - a_i| - d_i)^2 over a fine grid
    rng = np.random.default_rng(3)
    g = np.linspace(-3.0, 3.0, 1201)
    X, Y = np.meshgrid(g, g, indexing="ij")
    step = g[1] - g[0]
    for _ in range(5):
        A = rng.uniform(-2, 2, size=(3, 2))
        if not in_general_position(A):
            continue
        b = rng.uniform(-2, 2, size=2)
        d = np.linalg.norm(A - b, axis=1)
        loss = sum((np.hypot(X - a[0], Y - a[1]) - di) ** 2 for a, di in zip(A, d))
        i, j = np.unravel_index(np.argmin(loss), loss.shape)
        got = locate_from_distances(A, d)
        assert np.max(np.abs(got - [g[i], g[j]])) <= step


@given(seeds, st.sampled_from([1, 2, 3, 5, 8]))
def test_locate_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n + 1, n))
    if not in_general_position(A):
        return
    b = 2 * rng.standard_normal(n)
    got = locate_from_distances(A, np.linalg.norm(A - b, axis=1))
    assert np.max(np.abs(np.linalg.norm(A - got, axis=1) - np.linalg.norm(A - b, axis=1))) <= 1e-9


def test_fit_motion_examples():
    m = fit_motion(TRI, TRI)
    assert motion_distance(m, identity(2)) <= 1e-12
    m = fit_motion(TRI, [[1.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(m.Q, rot(np.pi / 2), atol=1e-12)
    np.testing.assert_allclose(m.t, [1.0, 0.0], atol=1e-12)
    S = simplex(3)
    m = fit_motion(S, S + [0.0, 0.0, 5.0])
    assert motion_distance(m, translation([0.0, 0.0, 5.0])) <= 1e-12


def test_fit_motion_errors():
    with pytest.raises(NotCongruent):
        fit_motion(TRI, 2 * TRI)
    with pytest.raises(DegenerateAnchors):
        fit_motion([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])


@given(seeds, dims)
def test_fit_motion_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    m = random_motion(n, rng, scale=2.0)
    S = rng.standard_normal((n + 1, n))
    if not in_general_position(S):
        return
    assert motion_distance(fit_motion(S, apply(m, S)), m) <= 1e-9


def test_fit_motion_handles_reflections():
    R = Motion(np.diag([1.0, -1.0, 1.0]), [0.0, 1.0, 0.0])
    S = simplex(3)
    assert motion_distance(fit_motion(S, apply(R, S)), R) <= 1e-12


def test_screw_decompose_examples():
    sd = screw_decompose(translation([1.0, 2.0, 3.0]))
    assert sd.planes == [] and sd.reflections == []
    np.testing.assert_allclose(sd.axis_drift, [1.0, 2.0, 3.0])
    sd = screw_decompose(identity(4))
    assert sd.planes == [] and sd.angles == []
    assert np.all(sd.axis_drift == 0)
    screw = Motion(np.block([[rot(np.pi / 2), np.zeros((2, 1))], [np.zeros((1, 2)), np.eye(1)]]),
                   [0.0, 0.0, 1.0])
    sd = screw_decompose(screw)
    assert len(sd.planes) == 1
    assert sd.angles[0] == pytest.approx(np.pi / 2, abs=1e-12)
    P = sd.planes[0]
    np.testing.assert_allclose(P @ P.T, np.diag([1.0, 1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(sd.axis_drift, [0.0, 0.0, 1.0], atol=1e-12)


@given(seeds, st.sampled_from([1, 2, 3, 4, 5, 8, 16]), st.sampled_from([None, True, False]))
def test_screw_recomposition(seed, n, proper):
    rng = np.random.default_rng(seed)
    m = random_motion(n, rng, scale=3.0, proper=proper)
    sd = screw_decompose(m)
    assert motion_distance(recompose(sd), m) <= 1e-10
    assert all(0 < a <= np.pi for a in sd.angles)
    assert list(sd.angles) == sorted(sd.angles, key=abs)
    frames = sd.planes + [r[:, None] for r in sd.reflections]
    if frames:
        F = np.hstack(frames)
        np.testing.assert_allclose(F.T @ F, np.eye(F.shape[1]), atol=1e-10)
        assert np.max(np.abs(F.T @ sd.axis_drift)) <= 1e-10


def test_distance_to_fixed_subspace_examples():
    P = np.eye(3)[:, :2]
    assert distance_to_fixed_subspace(P, np.zeros(3), [0.0, 0.0, 7.0]) == 0.0
    assert distance_to_fixed_subspace(P, np.zeros(3), [3.0, 4.0, 7.0]) == pytest.approx(5.0)
    c = np.array([1.0, 2.0, 3.0])
    assert distance_to_fixed_subspace(P, c, c + [1.0, 0.0, 0.0]) == pytest.approx(1.0)


def _check_diag(A, B, d):
    P = d.P
    assert np.max(np.abs(P.conj().T @ P - np.eye(len(P)))) <= 1e-10
    assert np.max(np.abs(P.conj().T @ A @ P - np.diag(d.eigsA))) <= 1e-9
    assert np.max(np.abs(P.conj().T @ B @ P - np.diag(d.eigsB))) <= 1e-9
    assert np.max(np.abs(np.abs(d.eigsA) - 1)) <= 1e-10
    assert np.max(np.abs(np.abs(d.eigsB) - 1)) <= 1e-10


def test_simultaneous_diagonalize_examples():
    d = simultaneous_diagonalize(np.eye(3), np.eye(3))
    np.testing.assert_allclose(d.eigsA, 1.0)
    A, B = rot(np.pi / 3), rot(np.pi / 4)
    d = simultaneous_diagonalize(A, B)
    _check_diag(A, B, d)
    # a shared eigenvector carries e^{i pi/3} for A together with e^{i pi/4} for B
    pairs = sorted(zip(np.angle(d.eigsA), np.angle(d.eigsB)))
    np.testing.assert_allclose(pairs, [(-np.pi / 3, -np.pi / 4), (np.pi / 3, np.pi / 4)], atol=1e-12)
    A = plane_rotation(3, 0, 1, 0.7).Q
    B = np.diag([1.0, 1.0, -1.0])
    d = simultaneous_diagonalize(A, B)
    _check_diag(A, B, d)
    assert np.any(np.abs(d.eigsB + 1) <= 1e-10)


def test_simultaneous_diagonalize_not_commuting():
    with pytest.raises(NotCommuting):
        simultaneous_diagonalize(plane_rotation(3, 0, 1, 0.5).Q, plane_rotation(3, 1, 2, 0.5).Q)


@given(seeds, st.sampled_from([2, 3, 4, 6, 9]))
def test_simultaneous_diagonalize_random_commuting(seed, n):
    # block rotations on a shared basis, with repeated angles to force shared eigenspaces
    rng = np.random.default_rng(seed)
    K = random_motion(n, rng).Q
    DA, DB = np.eye(n), np.eye(n)
    for i in range(n // 2):
        a = rng.choice([0.0, 0.5, 1.3])
        b = rng.choice([0.0, 0.5, 2.1])
        DA[2 * i:2 * i + 2, 2 * i:2 * i + 2] = rot(a)
        DB[2 * i:2 * i + 2, 2 * i:2 * i + 2] = rot(b)
    A, B = K.T @ DA @ K, K.T @ DB @ K
    _check_diag(A, B, simultaneous_diagonalize(A, B, seed=seed % 1000))


def test_tolerance_overrides():
    tol = config.DEFAULT.with_overrides(general_position=0.5)
    assert not in_general_position([[0.0, 0.0], [1.0, 0.0], [0.0, 0.1]], tol)
    with pytest.raises(KeyError):
        config.DEFAULT.with_overrides(nonsense=1.0)
