"""Continuous one-parameter groups x -> f_x of motions and the curves they trace.

In canonical coordinates (after the conjugating motion ``k``) the group acts as

    k(f_x(a)) = x*b + diag(R(x*alpha_1), ..., R(x*alpha_s), I_{n-2s}) @ k(a)

with R(theta) the 2x2 rotation, rotation planes spanned by coordinate pairs
(e_1, e_2), (e_3, e_4), ... and a drift ``b`` vanishing on those coordinates.
The orbit x -> f_x(a) of a point is a generalized helix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .chord_profile import ChordCoeffs, make_coeffs
from .errors import BadRates, DimensionMismatch, DriftNotOrthogonal, TooManyPlanes
from .motion_group import (Motion, apply, compose, identity, inverse, motion_distance,
                           polar_orthogonal, random_motion)


@dataclass(frozen=True, eq=False)
class OneParamGroup:
    k: Motion
    rates: tuple
    b: np.ndarray

    @property
    def dim(self) -> int:
        return self.k.dim

    @property
    def s(self) -> int:
        return len(self.rates)

    def __call__(self, x: float) -> Motion:
        return eval_group(self, x)

    def generator(self) -> tuple[np.ndarray, np.ndarray]:
        """Infinitesimal motion ``(G, u)``: d/dx f_x(v) at x=0 equals ``G v + u``.

        ``G`` is skew-symmetric.
        """
        J = np.zeros((self.dim, self.dim))
        for i, a in enumerate(self.rates):
            J[2 * i + 1, 2 * i] = a
            J[2 * i, 2 * i + 1] = -a
        Qk, tk = self.k.Q, self.k.t
        return Qk.T @ J @ Qk, Qk.T @ (J @ tk + self.b)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "rates": list(self.rates),
            "drift": self.b.tolist(),
            "conjugator": {"Q": self.k.Q.tolist(), "t": self.k.t.tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OneParamGroup":
        rates = [float(a) for a in d.get("rates", [])]
        if "drift" in d:
            b = np.asarray(d["drift"], dtype=float)
        elif "dim" in d:
            b = np.zeros(int(d["dim"]))
        else:
            raise DimensionMismatch("group spec needs 'drift' or 'dim'")
        if "dim" in d and int(d["dim"]) != b.shape[0]:
            raise DimensionMismatch(f"dim={d['dim']} but drift has length {b.shape[0]}")
        conj = d.get("conjugator")
        if conj is None:
            k = identity(b.shape[0])
        else:
            # accept JSON round-off, then project back onto O(n)
            loose = Motion(conj["Q"], conj["t"], tol=1e-9)
            k = Motion(polar_orthogonal(loose.Q), loose.t)
        return make_group(k, rates, b)


def make_group(k: Motion, rates, b) -> OneParamGroup:
    rates = tuple(float(a) for a in rates)
    b = np.array(b, dtype=float).reshape(-1)
    n = k.dim
    if b.shape[0] != n:
        raise DimensionMismatch(f"drift has length {b.shape[0]}, conjugator has dim {n}")
    bad = [a for a in rates if not a > 0]
    if bad:
        raise BadRates(f"rotation rates must be positive, got {bad}")
    if 2 * len(rates) > n:
        raise TooManyPlanes(f"{len(rates)} rotation planes do not fit in R^{n}")
    leak = float(np.max(np.abs(b[: 2 * len(rates)]))) if rates else 0.0
    if leak > 0:
        raise DriftNotOrthogonal("drift must vanish on the rotated coordinates", residual=leak)
    b.setflags(write=False)
    return OneParamGroup(k, rates, b)


def _block_motion(g: OneParamGroup, x: float) -> Motion:
    n = g.dim
    Q = np.eye(n)
    for i, a in enumerate(g.rates):
        c, s = np.cos(x * a), np.sin(x * a)
        Q[2 * i: 2 * i + 2, 2 * i: 2 * i + 2] = [[c, -s], [s, c]]
    return Motion(Q, x * g.b)


def eval_group(g: OneParamGroup, x: float) -> Motion:
    """The motion f_x = k^-1 o B_x o k."""
    return compose(inverse(g.k), compose(_block_motion(g, x), g.k))


def curve_point(g: OneParamGroup, a, x: float) -> np.ndarray:
    return apply(eval_group(g, x), a)


def apply_batch(g: OneParamGroup, xs, points) -> np.ndarray:
    """``f_{xs[j]}(points[j])`` for every j, without building Motion objects.

    ``points`` may be a single point (broadcast) or an array of shape (len(xs), n).
    """
    xs = np.asarray(xs, dtype=float).reshape(-1)
    P = np.broadcast_to(np.asarray(points, dtype=float), (xs.shape[0], g.dim))
    u = P @ g.k.Q.T + g.k.t
    out = u.copy()
    for i, a in enumerate(g.rates):
        c, s = np.cos(xs * a), np.sin(xs * a)
        u1, u2 = u[:, 2 * i], u[:, 2 * i + 1]
        out[:, 2 * i] = c * u1 - s * u2
        out[:, 2 * i + 1] = s * u1 + c * u2
    out += xs[:, None] * g.b
    return (out - g.k.t) @ g.k.Q


def curve_chord_coeffs(g: OneParamGroup, a, tol: config.Tolerances | None = None) -> ChordCoeffs:
    """Chord profile of the helix through ``a``: |h(0) - h(r)|^2 as ChordCoeffs.

    The drift gives the linear coefficient |b|; each rotation plane contributes
    its rate with the radius of k(a) in that plane.  Planes with equal rates
    merge by root-sum-square of radii.
    """
    tol = config.resolve(tol)
    u = apply(g.k, a)
    terms = []
    for i, alpha in enumerate(g.rates):
        radius = float(np.hypot(u[2 * i], u[2 * i + 1]))
        if radius > tol.radius:
            terms.append((alpha, radius))
    return make_coeffs(float(np.linalg.norm(g.b)), terms, merge_tol=tol.rate_merge)


def canonicalize(g: OneParamGroup) -> OneParamGroup:
    """Same homomorphism with rates sorted ascending.

    The coordinate pairs are permuted and the permutation is absorbed into
    the conjugator; the drift is untouched since it vanishes on every pair.
    """
    order = sorted(range(g.s), key=lambda i: g.rates[i])
    n = g.dim
    perm = []
    for i in order:
        perm.extend([2 * i, 2 * i + 1])
    perm.extend(range(2 * g.s, n))
    Pm = np.eye(n)[perm]
    k = compose(Motion(Pm, np.zeros(n)), g.k)
    return make_group(k, [g.rates[i] for i in order], g.b)


def groups_equal(g1: OneParamGroup, g2: OneParamGroup, xs=(-2.3, -0.7, 0.4, 1.9, 3.1),
                 atol: float = 1e-9) -> bool:
    """Equality as homomorphisms, checked on sample parameters."""
    if g1.dim != g2.dim:
        return False
    return all(motion_distance(eval_group(g1, x), eval_group(g2, x)) <= atol for x in xs)


def random_group(n: int, rng: np.random.Generator, s: int | None = None,
                 rate_range=(0.3, 3.0), drift_scale: float = 1.0) -> OneParamGroup:
    if s is None:
        s = int(rng.integers(0, n // 2 + 1))
    rates = rng.uniform(*rate_range, size=s)
    b = np.zeros(n)
    b[2 * s:] = drift_scale * rng.standard_normal(n - 2 * s)
    return make_group(random_motion(n, rng, proper=True), rates, b)
