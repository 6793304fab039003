"""Euclidean motions of R^n: v -> Q v + t with Q orthogonal.

Composition, inversion, fitting a motion to point correspondences,
multilateration from anchor distances, screw decomposition and the
simultaneous unitary diagonalization of commuting orthogonal matrices.
Dimensions up to ~16 are supported; nothing here is batched over motions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import config
from .errors import (
    DegenerateAnchors,
    DimensionMismatch,
    NotCommuting,
    NotCongruent,
    SimMapsError,
    Unrealizable,
)


def polar_orthogonal(M: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix to ``M`` in Frobenius norm."""
    if M.size == 0:
        return np.zeros_like(M, dtype=float)
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


@dataclass(frozen=True, eq=False)
class Motion:
    """A rigid motion ``v -> Q @ v + t``.

    ``Q`` may have determinant -1; the motion group contains reflections.
    """

    Q: np.ndarray
    t: np.ndarray
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        t = np.array(self.t, dtype=float).reshape(-1)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != t.shape[0]:
            raise DimensionMismatch(f"Q {Q.shape} and t {t.shape} do not describe a motion")
        err = orthogonality_error(Q)
        if err > self.tol:
            raise SimMapsError("Q is not orthogonal", residual=err)
        Q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "t", t)

    @property
    def dim(self) -> int:
        return self.t.shape[0]

    def __call__(self, v):
        return apply(self, v)

    def __matmul__(self, other: "Motion") -> "Motion":
        return compose(self, other)

    def as_matrix(self) -> np.ndarray:
        """Homogeneous (n+1)x(n+1) matrix."""
        n = self.dim
        H = np.eye(n + 1)
        H[:n, :n] = self.Q
        H[:n, n] = self.t
        return H

    def __repr__(self):
        return f"Motion(dim={self.dim}, Q={self.Q.tolist()}, t={self.t.tolist()})"


def orthogonality_error(Q: np.ndarray) -> float:
    if Q.size == 0:
        return 0.0
    return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))))


def identity(n: int) -> Motion:
    return Motion(np.eye(n), np.zeros(n))


def translation(t) -> Motion:
    t = np.asarray(t, dtype=float)
    return Motion(np.eye(t.shape[0]), t)


def plane_rotation(n: int, i: int, j: int, theta: float) -> Motion:
    """Rotation by ``theta`` in the (e_i, e_j) coordinate plane, e_i -> e_j for theta=pi/2."""
    Q = np.eye(n)
    c, s = np.cos(theta), np.sin(theta)
    Q[i, i] = c
    Q[j, j] = c
    Q[i, j] = -s
    Q[j, i] = s
    return Motion(Q, np.zeros(n))


def random_motion(n: int, rng: np.random.Generator, scale: float = 1.0,
                  proper: bool | None = None) -> Motion:
    """Haar-distributed orthogonal part, Gaussian translation.

    ``proper=True`` forces det +1, ``False`` forces det -1, ``None`` leaves it random.
    """
    Z = rng.standard_normal((n, n))
    Qr, R = np.linalg.qr(Z)
    Qr = Qr * np.sign(np.diag(R))
    if proper is not None:
        want = 1.0 if proper else -1.0
        if np.linalg.det(Qr) * want < 0:
            Qr[:, 0] = -Qr[:, 0]
    return Motion(Qr, scale * rng.standard_normal(n))


def _check_same_dim(*motions: Motion):
    dims = {m.dim for m in motions}
    if len(dims) != 1:
        raise DimensionMismatch(f"motions have different dimensions {sorted(dims)}")


def apply(m: Motion, v) -> np.ndarray:
    """Apply ``m`` to a point (shape (n,)) or to rows of an (k, n) array."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != m.dim:
        raise DimensionMismatch(f"point of dim {v.shape[-1]} for motion of dim {m.dim}")
    return v @ m.Q.T + m.t


def compose(m1: Motion, m2: Motion) -> Motion:
    """``m1 o m2``: first ``m2``, then ``m1``. Q is re-projected onto O(n)."""
    _check_same_dim(m1, m2)
    Q = polar_orthogonal(m1.Q @ m2.Q)
    t = m1.Q @ m2.t + m1.t
    return Motion(Q, t)


def inverse(m: Motion) -> Motion:
    return Motion(m.Q.T, -(m.Q.T @ m.t))


def motion_distance(m1: Motion, m2: Motion) -> float:
    """Max-entry difference of the homogeneous matrices."""
    _check_same_dim(m1, m2)
    if m1.dim == 0:
        return 0.0
    return float(max(np.max(np.abs(m1.Q - m2.Q)), np.max(np.abs(m1.t - m2.t))))


# -- general position ---------------------------------------------------------


def cayley_menger(points) -> float:
    """Cayley-Menger determinant of k+1 points (rows).

    For a k-simplex ``|CM| = 2^k (k!)^2 vol^2``; zero iff the points are
    affinely dependent.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m = P.shape[0]
    D2 = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1)
    CM = np.ones((m + 1, m + 1))
    CM[0, 0] = 0.0
    CM[1:, 1:] = D2
    return float(np.linalg.det(CM))


def diameter(points) -> float:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] < 2:
        return 0.0
    return float(np.sqrt(np.max(np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1))))


def frame_certificate(points) -> tuple[float, float]:
    """Return ``(|CM|, diameter^(2k))`` for k+1 points."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    k = P.shape[0] - 1
    return abs(cayley_menger(P)), diameter(P) ** (2 * k)


def in_general_position(points, tol: config.Tolerances | None = None) -> bool:
    tol = config.resolve(tol)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] == 1:
        return True
    cm, scale = frame_certificate(P)
    return scale > 0 and cm > tol.general_position * scale


def _require_frame(anchors: np.ndarray, tol: config.Tolerances):
    n = anchors.shape[1]
    if anchors.shape[0] != n + 1:
        raise DimensionMismatch(f"need {n + 1} anchors in R^{n}, got {anchors.shape[0]}")
    if n == 0:
        return
    cm, scale = frame_certificate(anchors)
    if not (scale > 0 and cm > tol.general_position * scale):
        raise DegenerateAnchors("anchors are not affinely independent",
                                residual=cm / scale if scale > 0 else 0.0)


# -- multilateration and fitting ----------------------------------------------


def locate_from_distances(anchors, dists, tol: config.Tolerances | None = None) -> np.ndarray:
    """The unique point at the given distances from n+1 affinely independent anchors.

    Subtracting the first squared-distance equation from the others gives the
    linear system ``2 (a_i - a_0) . b = |a_i|^2 - |a_0|^2 - d_i^2 + d_0^2``.
    The discarded equation is then used as a consistency check.
    """
    tol = config.resolve(tol)
    A = np.asarray(anchors, dtype=float)
    d = np.asarray(dists, dtype=float)
    if A.ndim != 2 or d.shape != (A.shape[0],):
        raise DimensionMismatch("anchors must be (n+1, n) and dists (n+1,)")
    if np.any(d < 0):
        raise Unrealizable("negative distance", residual=float(-d.min()))
    _require_frame(A, tol)
    sq = np.sum(A**2, axis=1)
    M = 2.0 * (A[1:] - A[0])
    rhs = sq[1:] - sq[0] - d[1:] ** 2 + d[0] ** 2
    b = np.linalg.solve(M, rhs)
    resid = float(np.max(np.abs(np.linalg.norm(A - b, axis=1) - d)))
    scale = max(1.0, diameter(A), float(d.max()))
    if resid > tol.distance * scale:
        raise Unrealizable("distances are not realized by any point", residual=resid)
    return b


def fit_motion(src, dst, tol: config.Tolerances | None = None) -> Motion:
    """The unique motion taking the anchor frame ``src`` onto ``dst``.

    Exact linear solve on edge vectors (``Q E_src = E_dst``) followed by a
    polar projection to remove round-off.
    """
    tol = config.resolve(tol)
    S = np.asarray(src, dtype=float)
    D = np.asarray(dst, dtype=float)
    if S.shape != D.shape:
        raise DimensionMismatch(f"src {S.shape} vs dst {D.shape}")
    n = S.shape[1]
    _require_frame(S, tol)
    if n == 0:
        return identity(0)
    dS = np.linalg.norm(S[:, None] - S[None], axis=-1)
    dD = np.linalg.norm(D[:, None] - D[None], axis=-1)
    mismatch = float(np.max(np.abs(dS - dD)))
    scale = max(1.0, float(dS.max()))
    if mismatch > tol.congruence * scale:
        raise NotCongruent("dst is not congruent to src", residual=mismatch)
    Es = (S[1:] - S[0]).T
    Ed = (D[1:] - D[0]).T
    Q = polar_orthogonal(np.linalg.solve(Es.T, Ed.T).T)
    t = np.mean(D - S @ Q.T, axis=0)
    m = Motion(Q, t)
    resid = float(np.max(np.abs(apply(m, S) - D)))
    if resid > tol.distance * scale:
        raise NotCongruent("fitted motion does not reproduce dst", residual=resid)
    return m


# -- screw decomposition ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScrewDecomposition:
    """Rotations in mutually orthogonal planes about ``center_offset``,
    followed by a drift orthogonal to all planes.

    ``planes[i]`` is an (n, 2) orthonormal frame (u, v); the rotation takes
    u towards v by ``angles[i]``.  ``reflections`` holds unit normals of
    mirror hyperplanes through the center (only present when det Q = -1).
    """

    planes: list
    angles: list
    axis_drift: np.ndarray
    center_offset: np.ndarray
    reflections: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.axis_drift.shape[0]


def screw_decompose(m: Motion, angle_eps: float = 1e-14) -> ScrewDecomposition:
    n = m.dim
    T, Z = scipy.linalg.schur(m.Q, output="real")
    planes, angles, fixed, negs = [], [], [], []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            c = 0.5 * (T[i, i] + T[i + 1, i + 1])
            s = 0.5 * (T[i + 1, i] - T[i, i + 1])
            theta = np.arctan2(s, c)
            u, v = Z[:, i].copy(), Z[:, i + 1].copy()
            if theta < 0:
                theta, v = -theta, -v
            if theta <= angle_eps:
                fixed.extend([u, v])
            else:
                planes.append(np.column_stack([u, v]))
                angles.append(float(theta))
            i += 2
        else:
            (fixed if T[i, i] > 0 else negs).append(Z[:, i].copy())
            i += 1
    # pairs of -1 eigen-directions are half turns
    while len(negs) >= 2:
        u, v = negs.pop(0), negs.pop(0)
        planes.append(np.column_stack([u, v]))
        angles.append(float(np.pi))
    reflections = negs

    order = np.argsort(np.abs(angles), kind="stable")
    planes = [planes[k] for k in order]
    angles = [angles[k] for k in order]

    F = np.column_stack(fixed) if fixed else np.zeros((n, 0))
    drift = F @ (F.T @ m.t)
    moving = list(planes) + [r[:, None] for r in reflections]
    if moving:
        Mb = np.hstack(moving)
        A = Mb.T @ (np.eye(n) - m.Q) @ Mb
        center = Mb @ np.linalg.solve(A, Mb.T @ (m.t - drift))
    else:
        center = np.zeros(n)
    return ScrewDecomposition(planes, angles, drift, center, list(reflections))


def screw_orthogonal_part(sd: ScrewDecomposition) -> np.ndarray:
    n = sd.dim
    Q = np.eye(n)
    for P, theta in zip(sd.planes, sd.angles):
        u, v = P[:, 0], P[:, 1]
        Q += (np.cos(theta) - 1.0) * (np.outer(u, u) + np.outer(v, v))
        Q += np.sin(theta) * (np.outer(v, u) - np.outer(u, v))
    for r in sd.reflections:
        Q -= 2.0 * np.outer(r, r)
    return Q


def recompose(sd: ScrewDecomposition) -> Motion:
    Q = polar_orthogonal(screw_orthogonal_part(sd))
    t = (np.eye(sd.dim) - Q) @ sd.center_offset + sd.axis_drift
    return Motion(Q, t)


def distance_to_fixed_subspace(plane, center_offset, z) -> float:
    """Radius of ``z`` about the affine subspace fixed by a rotation in ``plane``.

    ``plane`` is an orthonormal (n, 2) frame; wider orthonormal frames are
    accepted and give the root-sum-square of the per-plane radii.
    """
    P = np.asarray(plane, dtype=float)
    d = np.asarray(z, dtype=float) - np.asarray(center_offset, dtype=float)
    return float(np.linalg.norm(P.T @ d))


# -- commuting orthogonal pairs -----------------------------------------------


@dataclass(frozen=True, eq=False)
class CommutingPairDiag:
    P: np.ndarray
    eigsA: np.ndarray
    eigsB: np.ndarray


def _offdiag_residual(P, M, eigs) -> float:
    D = P.conj().T @ M @ P
    return float(np.max(np.abs(D - np.diag(eigs)))) if M.size else 0.0


def simultaneous_diagonalize(A, B, seed: int = 0, max_tries: int = 8,
                             tol: config.Tolerances | None = None) -> CommutingPairDiag:
    """Common unitary eigenbasis of two commuting orthogonal matrices.

    Takes the complex Schur form of ``A + eps*B`` (a normal matrix, so the
    Schur factor is diagonal and the Schur vectors are unitary) for a random
    complex ``eps``; a fresh ``eps`` is drawn if the basis fails to
    diagonalize both inputs, which happens on eigenvalue collisions.
    """
    tol = config.resolve(tol)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionMismatch(f"A {A.shape} vs B {B.shape}")
    n = A.shape[0]
    if n == 0:
        return CommutingPairDiag(np.zeros((0, 0), complex), np.zeros(0, complex), np.zeros(0, complex))
    comm = float(np.max(np.abs(A @ B - B @ A)))
    if comm > tol.commutation:
        raise NotCommuting("A and B do not commute", residual=comm)

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max_tries):
        eps = rng.uniform(0.2, 0.8) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
        _, P = scipy.linalg.schur(A + eps * B, output="complex")
        eA = np.diag(P.conj().T @ A @ P)
        eB = np.diag(P.conj().T @ B @ P)
        resid = max(_offdiag_residual(P, A, eA), _offdiag_residual(P, B, eB))
        if best is None or resid < best[0]:
            best = (resid, P, eA, eB)
        if resid <= tol.diagonalization:
            break
    resid, P, eA, eB = best
    if resid > tol.diagonalization:
        raise NotCommuting("no common diagonalization found", residual=resid)

    thA, thB = np.angle(eA), np.angle(eB)
    order = sorted(range(n), key=lambda j: (-round(abs(thA[j]) + abs(thB[j]), 12),
                                            -round(thA[j], 12), -round(thB[j], 12)))
    P = P[:, order]
    eA, eB = eA[order], eB[order]
    # put units exactly on the circle
    eA = eA / np.abs(eA)
    eB = eB / np.abs(eB)
    return CommutingPairDiag(P, eA, eB)
