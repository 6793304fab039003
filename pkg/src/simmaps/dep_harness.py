"""Maps h(x, y) = phi_x(psi_y(z)) built from two commuting one-parameter groups.

Such a map is translation-covariant: h(p) = f_p(z) with f a homomorphism
from (R^2, +), so |h(p) - h(q)| depends only on q - p.  Writing the
difference as r (cos g, sin g), the squared distance is a chord profile

    c(r, g)^2 = (r lam(g))^2 + sum_k w_k(g)^2 (2 - 2 cos(r kappa_k(g)))

with kappa_k(g) among |cos g alpha_j + sin g beta_j|.  The map preserves
equality of distances iff this profile does not depend on g, which forces
the kappa-set to be empty and h to be a similarity.  This module computes
the profiles geometrically, fuzzes the DEP implication directly, and
produces either a similarity certificate or an explicit violating quadruple.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .chord_profile import ChordCoeffs, eval_profile, make_coeffs
from .errors import DiagonalizationFailed, DimensionMismatch, NotCommuting
from .helix import OneParamGroup, apply_batch, eval_group, make_group
from .motion_group import (Motion, compose, distance_to_fixed_subspace, motion_distance,
                           random_motion, simultaneous_diagonalize)

_GRID = np.array([-2.3, -0.7, 0.4, 1.9, 3.1])


@dataclass(frozen=True, eq=False)
class ProductMap:
    phi: OneParamGroup
    psi: OneParamGroup
    z: np.ndarray
    vectorized = True

    @property
    def dim(self) -> int:
        return self.z.shape[0]

    def __call__(self, x, y) -> np.ndarray:
        """h(x, y); ``x`` and ``y`` may be equal-length arrays."""
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        if xs.ndim == 0 and ys.ndim == 0:
            return eval_map(self, float(xs), float(ys))
        xs, ys = np.broadcast_arrays(xs.reshape(-1), ys.reshape(-1))
        return apply_batch(self.phi, xs, apply_batch(self.psi, ys, self.z))

    def motion(self, x: float, y: float) -> Motion:
        return compose(eval_group(self.phi, x), eval_group(self.psi, y))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "z": self.z.tolist(),
                "phi": self.phi.to_dict(), "psi": self.psi.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, tol: config.Tolerances | None = None) -> "ProductMap":
        phi = OneParamGroup.from_dict(d["phi"])
        psi = OneParamGroup.from_dict(d["psi"])
        z = np.asarray(d["z"], dtype=float)
        if "dim" in d and int(d["dim"]) != z.shape[0]:
            raise DimensionMismatch(f"dim={d['dim']} but z has length {z.shape[0]}")
        return build_product_map(phi, psi, z, tol)


def build_product_map(phi: OneParamGroup, psi: OneParamGroup, z,
                      tol: config.Tolerances | None = None) -> ProductMap:
    """Validate commutation on a 5x5 grid, both for the orthogonal parts and
    for the full motions."""
    tol = config.resolve(tol)
    z = np.array(z, dtype=float).reshape(-1)
    if not (phi.dim == psi.dim == z.shape[0]):
        raise DimensionMismatch(f"dims phi={phi.dim}, psi={psi.dim}, z={z.shape[0]}")
    worst_q = worst_m = 0.0
    for x in _GRID:
        fx = eval_group(phi, x)
        for y in _GRID:
            gy = eval_group(psi, y)
            worst_q = max(worst_q, float(np.max(np.abs(fx.Q @ gy.Q - gy.Q @ fx.Q), initial=0.0)))
            scale = max(1.0, float(np.max(np.abs(fx.t), initial=0.0)),
                        float(np.max(np.abs(gy.t), initial=0.0)))
            worst_m = max(worst_m, motion_distance(compose(fx, gy), compose(gy, fx)) / scale)
    if worst_q > tol.commutation:
        raise NotCommuting("orthogonal parts do not commute", residual=worst_q)
    if worst_m > tol.motion_commutation:
        raise NotCommuting("motions do not commute", residual=worst_m)
    z.setflags(write=False)
    return ProductMap(phi, psi, z)


def eval_map(pm: ProductMap, x: float, y: float) -> np.ndarray:
    return apply_batch(pm.phi, [x], apply_batch(pm.psi, [y], pm.z))[0]


# -- eigen-angles ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenAngles:
    P: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def _max_rate(g: OneParamGroup) -> float:
    return max(g.rates, default=0.0)


def eigen_angles(pm: ProductMap, seed: int = 0,
                 tol: config.Tolerances | None = None) -> EigenAngles:
    """Common unitary P and rates with P* A_x P = diag(exp(i x alpha)), likewise for B.

    The groups are sampled at parameters small enough that no angle wraps,
    so angle / parameter is the rate itself.  The result is then checked at
    two larger incommensurate parameters.
    """
    tol = config.resolve(tol)
    n = pm.dim
    xi = 0.5 / (1.0 + _max_rate(pm.phi))
    eta = 0.5 / (1.0 + _max_rate(pm.psi))
    A = eval_group(pm.phi, xi).Q
    B = eval_group(pm.psi, eta).Q
    try:
        diag = simultaneous_diagonalize(A, B, seed=seed, tol=tol)
    except NotCommuting as e:
        raise DiagonalizationFailed(str(e), residual=e.residual) from e
    P = diag.P
    alpha = np.angle(diag.eigsA) / xi
    beta = np.angle(diag.eigsB) / eta
    # eigenvalue 1 comes back as exp(i*1e-18) and the like
    alpha[np.abs(alpha) < 1e-12] = 0.0
    beta[np.abs(beta) < 1e-12] = 0.0
    worst = 0.0
    for s in (np.sqrt(2.0), -np.sqrt(5.0)):
        for g, rates in ((pm.phi, alpha), (pm.psi, beta)):
            M = eval_group(g, s).Q
            D = P.conj().T @ M @ P
            worst = max(worst, float(np.max(np.abs(D - np.diag(np.exp(1j * s * rates))),
                                            initial=0.0)))
    if worst > tol.diagonalization:
        raise DiagonalizationFailed("eigen-rates do not extrapolate", residual=worst)
    if n == 0:
        P = np.zeros((0, 0), dtype=complex)
    return EigenAngles(P, alpha, beta)


# -- direction profiles --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionProfile:
    gamma: float
    coeffs: ChordCoeffs
    kappa_set: tuple

    @property
    def lam(self) -> float:
        return self.coeffs.lam


def _real_span(Pc: np.ndarray) -> np.ndarray:
    """Orthonormal real basis of the real subspace underlying complex columns."""
    M = np.hstack([Pc.real, Pc.imag])
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(sv > 1e-8 * sv[0])) if sv.size and sv[0] > 0 else 0
    return U[:, :rank]


def direction_profile(pm: ProductMap, gamma: float, angles: EigenAngles | None = None,
                      tol: config.Tolerances | None = None) -> DirectionProfile:
    """Chord profile of r -> h(r cos gamma, r sin gamma) from the eigen-structure.

    The combined motion has generator (G, u) with eigen-rates
    omega_j = cos(gamma) alpha_j + sin(gamma) beta_j.  The drift lam is the
    part of u in the kernel of G; the rotation centre c solves G c = -u on
    the complement; each distinct |omega| contributes the distance from z to
    the subspace fixed by that rotation block.
    """
    tol = config.resolve(tol)
    if angles is None:
        angles = eigen_angles(pm, tol=tol)
    cg, sg = np.cos(gamma), np.sin(gamma)
    _, u_phi = pm.phi.generator()
    _, u_psi = pm.psi.generator()
    u = cg * u_phi + sg * u_psi
    P = angles.P
    omega = cg * angles.alpha + sg * angles.beta
    zero_cut = tol.rate_merge * max(1.0, float(np.max(np.abs(omega), initial=0.0)))
    nz = np.abs(omega) > zero_cut
    P0 = P[:, ~nz]
    u0 = (P0 @ (P0.conj().T @ u)).real
    lam = float(np.linalg.norm(u0))
    Pn = P[:, nz]
    c = -(Pn @ ((Pn.conj().T @ u) / (1j * omega[nz]))).real if nz.any() else np.zeros(pm.dim)
    mags = np.abs(omega[nz])
    cols = np.flatnonzero(nz)
    order = np.argsort(mags, kind="stable")
    clusters: list[list[int]] = []
    for idx in order:
        if clusters and mags[idx] - mags[clusters[-1][0]] <= tol.rate_merge * max(1.0, mags[idx]):
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    terms = []
    for cl in clusters:
        kappa = float(np.mean(mags[cl]))
        frame = _real_span(P[:, cols[cl]])
        radius = distance_to_fixed_subspace(frame, c, pm.z) if frame.shape[1] else 0.0
        if radius > tol.radius:
            terms.append((kappa, radius))
    coeffs = make_coeffs(lam, terms, merge_tol=tol.rate_merge)
    return DirectionProfile(float(gamma), coeffs, tuple(coeffs.kappas.tolist()))


def sampled_profile(pm: ProductMap, gamma: float, r) -> np.ndarray:
    """|z - h(r cos gamma, r sin gamma)|^2 by direct evaluation."""
    r = np.asarray(r, dtype=float).reshape(-1)
    pts = pm(r * np.cos(gamma), r * np.sin(gamma))
    return np.sum((pts - pm.z) ** 2, axis=1)


# -- DEP fuzzing ---------------------------------------------------------------


@dataclass(frozen=True)
class Pass:
    trials: int
    max_gap: float

    def to_dict(self) -> dict:
        return {"verdict": "pass", "trials": self.trials, "max_gap": self.max_gap}


@dataclass(frozen=True)
class Counterexample:
    x: tuple
    y: tuple
    z: tuple
    w: tuple
    image_gap: float
    trial: int
    violations: int
    max_gap: float

    def to_dict(self) -> dict:
        return {"verdict": "counterexample", "x": list(self.x), "y": list(self.y),
                "z": list(self.z), "w": list(self.w), "image_gap": self.image_gap,
                "trial": self.trial, "violations": self.violations, "max_gap": self.max_gap}


def _call_map(fn, P: np.ndarray) -> np.ndarray:
    if getattr(fn, "vectorized", False):
        return np.asarray(fn(P[:, 0], P[:, 1]), dtype=float).reshape(P.shape[0], -1)
    return np.array([np.asarray(fn(p[0], p[1]), dtype=float).reshape(-1) for p in P])


def _box_arrays(box):
    B = np.asarray(box, dtype=float).reshape(-1, 2)
    if np.any(B[:, 1] < B[:, 0]):
        raise DimensionMismatch("box bounds must be (low, high) pairs")
    return B[:, 0], B[:, 1]


def _segments(rng: np.random.Generator, lo, hi, lengths) -> tuple[np.ndarray, np.ndarray]:
    """Random segments of the given lengths lying inside the box (rejection sampling)."""
    m = lengths.shape[0]
    d = lo.shape[0]
    P = np.empty((m, d))
    Q = np.empty((m, d))
    todo = np.arange(m)
    while todo.size:
        p = rng.uniform(lo, hi, size=(todo.size, d))
        v = rng.standard_normal((todo.size, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        q = p + lengths[todo, None] * v
        ok = np.all((q >= lo) & (q <= hi), axis=1)
        P[todo[ok]] = p[ok]
        Q[todo[ok]] = q[ok]
        todo = todo[~ok]
    return P, Q


def dep_test(fn, box=((-5.0, 5.0), (-5.0, 5.0)), trials: int = 10_000, tol: float = 1e-9,
             seed: int = 0) -> Pass | Counterexample:
    """Fuzz |x - y| = |z - w|  =>  |h(x) - h(y)| = |h(z) - h(w)|.

    Each trial draws a length, then two segments of exactly that length at
    independent random positions and orientations inside the box.  The first
    violation in trial order is reported.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    lo, hi = _box_arrays(box)
    rng = np.random.default_rng(seed)
    max_len = float(np.min(hi - lo))
    L = rng.uniform(0.0, max_len, size=trials)
    X, Y = _segments(rng, lo, hi, L)
    Z, W = _segments(rng, lo, hi, L)
    hx, hy, hz, hw = (_call_map(fn, A) for A in (X, Y, Z, W))
    gap = np.abs(np.linalg.norm(hx - hy, axis=1) - np.linalg.norm(hz - hw, axis=1))
    bad = np.flatnonzero(gap > tol)
    max_gap = float(gap.max())
    if bad.size == 0:
        return Pass(trials, max_gap)
    i = int(bad[0])
    return Counterexample(tuple(X[i].tolist()), tuple(Y[i].tolist()), tuple(Z[i].tolist()),
                          tuple(W[i].tolist()), float(gap[i]), i, int(bad.size), max_gap)


def similarity_check(fn, box=((-5.0, 5.0), (-5.0, 5.0)), samples: int = 200,
                     tol: float = 1e-9, seed: int = 0) -> float | None:
    """Median ratio sigma if |h(p) - h(q)| = sigma |p - q| within ``tol`` on all sampled pairs."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    lo, hi = _box_arrays(box)
    rng = np.random.default_rng(seed)
    P = rng.uniform(lo, hi, size=(samples, lo.shape[0]))
    Q = rng.uniform(lo, hi, size=(samples, lo.shape[0]))
    dom = np.linalg.norm(P - Q, axis=1)
    keep = dom > 0
    img = np.linalg.norm(_call_map(fn, P[keep]) - _call_map(fn, Q[keep]), axis=1)
    sigma = float(np.median(img / dom[keep]))
    if np.max(np.abs(img - sigma * dom[keep]), initial=0.0) > tol:
        return None
    return sigma


def similarity_map(sigma: float, U, z) -> "AffineMap":
    """p -> z + sigma U p for U with orthonormal columns."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 2:
        raise DimensionMismatch("similarity needs an n x 2 frame")
    if np.max(np.abs(U.T @ U - np.eye(2))) > 1e-9:
        raise DimensionMismatch("similarity frame must have orthonormal columns")
    return AffineMap(sigma * U, np.asarray(z, dtype=float))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """p -> z + M p; a similarity when M^T M is a multiple of the identity."""
    M: np.ndarray
    z: np.ndarray
    vectorized = True

    def __call__(self, x, y):
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        if xs.ndim == 0 and ys.ndim == 0:
            return self.z + self.M @ np.array([xs, ys])
        xs, ys = np.broadcast_arrays(xs.reshape(-1), ys.reshape(-1))
        return self.z + np.stack([xs, ys], axis=1) @ self.M.T


# -- theorem witness -------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityCertificate:
    sigma: float
    constant: bool
    dep_pass: bool
    similarity_sigma: float | None
    profiles: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"certificate": "similarity", "sigma": self.sigma, "constant": self.constant,
                "dep_pass": self.dep_pass, "similarity_sigma": self.similarity_sigma,
                "profiles": [_profile_dict(p) for p in self.profiles]}


@dataclass(frozen=True)
class DepViolation:
    gamma1: float
    gamma2: float
    r: float
    quadruple: tuple
    image_gap: float
    verified: bool
    profiles: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"certificate": "violation", "gamma1": self.gamma1, "gamma2": self.gamma2,
                "r": self.r, "quadruple": [list(p) for p in self.quadruple],
                "image_gap": self.image_gap, "verified": self.verified,
                "profiles": [_profile_dict(p) for p in self.profiles]}


def _profile_dict(p: DirectionProfile) -> dict:
    return {"gamma": p.gamma, **p.coeffs.to_dict(), "kappa_set": list(p.kappa_set)}


def default_gamma_grid(count: int = 16) -> np.ndarray:
    return np.arange(count) * (np.pi / count)


def theorem_witness(pm: ProductMap, r_grid=None, gamma_grid=None, seed: int = 0,
                    random_gammas: int = 4, trials: int = 10_000,
                    box=((-5.0, 5.0), (-5.0, 5.0)),
                    tol: config.Tolerances | None = None) -> SimilarityCertificate | DepViolation:
    """Similarity certificate or explicit DEP violation for a product map.

    Profiles are computed on the gamma grid plus a few random angles.  If
    every kappa-set is empty and lam is the same for all angles, the map is
    a similarity with sigma = lam, which is cross-checked by fuzzing.
    Otherwise the two directions and radius with the largest difference in
    chord length give the quadruple (0, r e1, 0, r e2).
    """
    tol = config.resolve(tol)
    r_grid = np.linspace(0.0, 10.0, 201) if r_grid is None else np.asarray(r_grid, dtype=float)
    gammas = default_gamma_grid() if gamma_grid is None else np.asarray(gamma_grid, dtype=float)
    rng = np.random.default_rng(seed)
    gammas = np.concatenate([gammas, rng.uniform(0.0, np.pi, size=random_gammas)])
    angles = eigen_angles(pm, seed=seed, tol=tol)
    profiles = tuple(direction_profile(pm, g, angles, tol) for g in gammas)
    lams = np.array([p.lam for p in profiles])
    flat = all(p.coeffs.s == 0 for p in profiles)
    lam_spread = float(lams.max() - lams.min())
    if flat and lam_spread <= tol.profile * max(1.0, float(lams.max())):
        sigma = float(np.mean(lams))
        verdict = dep_test(pm, box, trials, tol.dep * max(1.0, sigma * 10.0), seed)
        ratio = similarity_check(pm, box, 200, tol.dep * max(1.0, sigma * 10.0), seed)
        return SimilarityCertificate(sigma, sigma == 0.0, isinstance(verdict, Pass), ratio,
                                     profiles)
    C = np.sqrt(np.array([eval_profile(p.coeffs, r_grid) for p in profiles]))
    spread = C.max(axis=0) - C.min(axis=0)
    j = int(np.argmax(spread))
    i1, i2 = int(np.argmax(C[:, j])), int(np.argmin(C[:, j]))
    r = float(r_grid[j])
    g1, g2 = float(gammas[i1]), float(gammas[i2])
    origin = (0.0, 0.0)
    p2 = (float(r * np.cos(g1)), float(r * np.sin(g1)))
    p4 = (float(r * np.cos(g2)), float(r * np.sin(g2)))
    h0 = eval_map(pm, *origin)
    gap = abs(float(np.linalg.norm(eval_map(pm, *p2) - h0))
              - float(np.linalg.norm(eval_map(pm, *p4) - h0)))
    return DepViolation(g1, g2, r, (origin, p2, origin, p4), gap, gap > 10 * tol.dep, profiles)


# -- random generators -----------------------------------------------------------


def _group_from_canonical(k: Motion, planes: list[int], rates, drift_c: np.ndarray) -> OneParamGroup:
    """Group rotating canonical planes ``planes`` (pair indices) at ``rates``.

    The coordinate permutation bringing those pairs to the front is folded
    into the conjugator, and the drift (given in shared canonical
    coordinates) is permuted along.
    """
    n = k.dim
    perm = []
    for p in planes:
        perm.extend([2 * p, 2 * p + 1])
    perm.extend(i for i in range(n) if i not in perm)
    Pm = np.eye(n)[perm]
    return make_group(compose(Motion(Pm, np.zeros(n)), k), rates, Pm @ drift_c)


def random_product_map(n: int, rng: np.random.Generator, kind: str = "generic",
                       rate_range=(0.3, 3.0), scale: float = 1.0) -> ProductMap:
    """Random commuting pair on a shared conjugator.

    ``kind``:
      - "generic": at least one rotating plane, random base point and drifts.
      - "translation": no rotation, orthogonal drifts of equal length.
      - "axis": rotations present but the base point sits on every axis,
        with orthogonal equal drifts on the free coordinates (needs n >= 4).
    """
    k = random_motion(n, rng, scale=scale, proper=True)
    npl = n // 2
    if kind == "translation":
        used = []
    elif kind == "axis":
        if n < 4:
            raise DimensionMismatch("axis-form maps need n >= 4")
        used = list(range(int(rng.integers(1, (n - 2) // 2 + 1))))
    elif kind == "generic":
        if npl == 0:
            raise DimensionMismatch("rotations need n >= 2")
        used = list(range(int(rng.integers(1, npl + 1))))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    phi_planes = [p for p in used if rng.random() < 0.7]
    psi_planes = [p for p in used if p not in phi_planes or rng.random() < 0.5]
    if used and not phi_planes and not psi_planes:
        phi_planes = [used[0]]
    free = np.arange(2 * len(used), n)
    b_phi = np.zeros(n)
    b_psi = np.zeros(n)
    if kind == "generic":
        b_phi[free] = rng.standard_normal(free.size)
        b_psi[free] = rng.standard_normal(free.size)
        w = scale * rng.standard_normal(n)
    else:
        sigma = float(rng.uniform(0.2, 2.0)) if free.size >= 2 else 0.0
        if sigma:
            Qf, _ = np.linalg.qr(rng.standard_normal((free.size, 2)))
            b_phi[free] = sigma * Qf[:, 0]
            b_psi[free] = sigma * Qf[:, 1]
        w = np.zeros(n)
        w[free] = scale * rng.standard_normal(free.size)
    phi = _group_from_canonical(k, phi_planes, rng.uniform(*rate_range, len(phi_planes)), b_phi)
    psi = _group_from_canonical(k, psi_planes, rng.uniform(*rate_range, len(psi_planes)), b_psi)
    z = k.Q.T @ (w - k.t)
    return build_product_map(phi, psi, z)
