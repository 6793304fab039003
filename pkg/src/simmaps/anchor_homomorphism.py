"""Extract the motion-valued homomorphism behind a distance-equality-preserving map.

A map ``h`` on a monoid ``X`` is given on a finite carrier.  When the images
span R^n, n+1 anchors ``x_0..x_n`` with affinely independent images pin down,
for every ``x``, the motion ``f_x`` taking ``h(x_i)`` to ``h(x x_i)``.  Then
``h(x y) = f_x(h(y))`` and ``x -> f_x`` is a homomorphism with ``h(x) = f_x(h(1))``.

If the images lie in a k-dimensional affine subspace, the map is first
pulled back to R^k through an isometric chart and the motions of R^k are
embedded into G_n, acting trivially on the orthogonal complement.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import config
from .errors import (DegenerateAnchors, DimensionMismatch, EmptyCarrier, MissingProducts,
                     NotCongruent, NotDegenerate)
from .motion_group import (Motion, apply, compose, fit_motion, frame_certificate,
                           motion_distance)

Element = Hashable


@dataclass(frozen=True, eq=False)
class SampledMonoidMap:
    """A map ``h : X -> R^n`` known on a finite carrier of a monoid.

    Elements are addressed by carrier index.  ``product(i, j)`` returns the
    index of ``x_i x_j`` or ``None`` when the product falls outside the carrier.
    """
    elements: tuple
    images: np.ndarray
    unit: int
    _product: Callable[[int, int], int | None] = field(repr=False)
    _lookup: Callable[[object], int | None] = field(repr=False)
    vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    def product(self, i: int, j: int) -> int | None:
        return self._product(i, j)

    def index_of(self, x) -> int:
        i = self._lookup(x)
        if i is None:
            raise MissingProducts(f"{x!r} is not in the carrier")
        return i

    def image(self, x) -> np.ndarray:
        return self.images[self.index_of(x)]

    def with_images(self, images) -> "SampledMonoidMap":
        images = np.asarray(images, dtype=float)
        if images.shape[0] != self.size:
            raise DimensionMismatch("one image per carrier element required")
        images.setflags(write=False)
        return SampledMonoidMap(self.elements, images, self.unit, self._product,
                                self._lookup, self.vectors)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def from_vectors(xs, images, match_tol: float = 1e-9) -> SampledMonoidMap:
    """Carrier inside the monoid (R^m, +, 0).

    Sums are matched back to carrier points with a KD-tree at relative
    tolerance ``match_tol``.
    """
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    H = np.asarray(images, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if X.shape[0] == 0:
        raise EmptyCarrier("carrier has no elements")
    if H.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} elements but {H.shape[0]} images")
    tree = cKDTree(X)

    def lookup(v):
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != X.shape[1]:
            return None
        d, i = tree.query(v)
        return int(i) if d <= match_tol * max(1.0, float(np.linalg.norm(v))) else None

    unit = lookup(np.zeros(X.shape[1]))
    if unit is None:
        raise MissingProducts("carrier does not contain the unit 0")

    def product(i, j):
        return lookup(X[i] + X[j])

    return SampledMonoidMap(tuple(map(tuple, X.tolist())), _freeze(H.copy()), unit,
                            product, lookup, _freeze(X.copy()))


def from_table(elements: Sequence[Element], unit: Element, table: dict, images) -> SampledMonoidMap:
    """Abstract carrier with an explicit (possibly partial) product table.

    ``table[(a, b)]`` is the element ``a b``.  Products involving the unit
    need not be listed.
    """
    elements = tuple(elements)
    if not elements:
        raise EmptyCarrier("carrier has no elements")
    pos = {e: i for i, e in enumerate(elements)}
    if unit not in pos:
        raise MissingProducts(f"unit {unit!r} is not in the carrier")
    H = np.asarray(images, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[0] != len(elements):
        raise DimensionMismatch(f"{len(elements)} elements but {H.shape[0]} images")
    u = pos[unit]

    def product(i, j):
        if i == u:
            return j
        if j == u:
            return i
        c = table.get((elements[i], elements[j]))
        return None if c is None else pos.get(c)

    return SampledMonoidMap(elements, _freeze(H.copy()), u, product, pos.get)


def load_json(obj) -> SampledMonoidMap:
    """Read ``{"dim_domain": m, "dim_range": n, "points": [{"x": .., "hx": ..}]}``."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    m, n = int(obj["dim_domain"]), int(obj["dim_range"])
    pts = obj["points"]
    if not pts:
        raise EmptyCarrier("no points given")
    X = np.array([p["x"] for p in pts], dtype=float).reshape(len(pts), -1)
    H = np.array([p["hx"] for p in pts], dtype=float).reshape(len(pts), -1)
    if X.shape[1] != m or H.shape[1] != n:
        raise DimensionMismatch(f"points do not match dim_domain={m}, dim_range={n}")
    return from_vectors(X, H)


def dump_json(hmap: SampledMonoidMap) -> dict:
    if hmap.vectors is None:
        raise DimensionMismatch("only vector carriers have a JSON form")
    return {"dim_domain": hmap.vectors.shape[1], "dim_range": hmap.dim,
            "points": [{"x": x.tolist(), "hx": h.tolist()}
                       for x, h in zip(hmap.vectors, hmap.images)]}


# -- anchor frames ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnchorFrame:
    indices: tuple
    anchors: tuple
    anchor_images: np.ndarray
    certificate: float
    hull_dim: int

    @property
    def full(self) -> bool:
        return self.hull_dim == self.anchor_images.shape[1]


def hull_dimension(images, rank_tol: float = 1e-8) -> int:
    P = np.asarray(images, dtype=float)
    if P.shape[0] < 2 or P.shape[1] == 0:
        return 0
    sv = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def select_frame(hmap: SampledMonoidMap, candidates: Sequence[int] | None = None,
                 start: int | None = None, tol: config.Tolerances | None = None) -> AnchorFrame:
    """Greedy maximization of the scale-free certificate |CM| / diam^(2j).

    Starts from the unit (or ``start``) and its nearest distinct image, then
    repeatedly adds the candidate maximizing height^2 / diam^(2j), where the
    height is the distance to the affine hull of the picks so far.  Raw
    volume would favour far-apart anchors, which on elongated image sets
    (long drifts) gives thin frames.  Stops once the hull dimension of all
    images is reached; deterministic in carrier order.
    """
    tol = config.resolve(tol)
    if hmap.size == 0:
        raise EmptyCarrier("carrier has no elements")
    cand = list(range(hmap.size)) if candidates is None else [int(i) for i in candidates]
    if not cand:
        raise EmptyCarrier("no candidate anchors")
    P = hmap.images
    k = hull_dimension(P[cand], tol.rank)
    first = hmap.unit if start is None else int(start)
    if first not in cand:
        first = cand[0]
    picks = [first]
    C = P[cand]
    basis = np.zeros((P.shape[1], 0))
    diam = 0.0
    # far from the picks' hull relative to the diameter they would create
    reach = np.linalg.norm(C - P[first], axis=1)
    for step in range(1, k + 1):
        rel = C - P[first]
        height = np.linalg.norm(rel - (rel @ basis) @ basis.T, axis=1)
        new_diam = np.maximum(diam, reach)
        ok = height > tol.rank * max(float(new_diam.max()), 1e-300)
        if step == 1:
            score = np.where(ok, -height, -np.inf)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                score = np.where(ok, height**2 / new_diam ** (2 * step), -np.inf)
        j = int(np.argmax(score))
        picks.append(cand[j])
        basis = np.hstack([basis, ((rel[j] - basis @ (basis.T @ rel[j])) / height[j])[:, None]])
        diam = float(new_diam[j])
        reach = np.maximum(reach, np.linalg.norm(C - C[j], axis=1))
    imgs = _freeze(P[picks].copy())
    cm, _ = frame_certificate(imgs)
    return AnchorFrame(tuple(picks), tuple(hmap.elements[i] for i in picks), imgs,
                       cm, k)


def local_frame(hmap: SampledMonoidMap, i: int,
                tol: config.Tolerances | None = None) -> AnchorFrame:
    """A frame restricted to anchors y whose product x_i y lies in the carrier."""
    tol = config.resolve(tol)
    cand = [j for j in range(hmap.size) if hmap.product(i, j) is not None]
    if not cand:
        raise MissingProducts(f"no product of {hmap.elements[i]!r} stays in the carrier")
    frame = select_frame(hmap, cand, tol=tol)
    if frame.hull_dim < hull_dimension(hmap.images, tol.rank):
        raise MissingProducts(f"too few products of {hmap.elements[i]!r} in the carrier "
                              f"to span a frame")
    return frame


def _products_of(hmap: SampledMonoidMap, i: int, js) -> list:
    out = [hmap.product(i, j) for j in js]
    missing = [hmap.elements[j] for j, p in zip(js, out) if p is None]
    if missing:
        raise MissingProducts(f"products of {hmap.elements[i]!r} with {missing[:3]} "
                              f"are outside the carrier")
    return out


def _scale(hmap: SampledMonoidMap) -> float:
    P = hmap.images
    return max(1.0, float(np.max(np.abs(P - P[hmap.unit])))) if P.size else 1.0


def extract_at_index(hmap: SampledMonoidMap, frame: AnchorFrame, i: int, verify: bool = True,
                     tol: config.Tolerances | None = None) -> Motion:
    tol = config.resolve(tol)
    if not frame.full:
        raise DegenerateAnchors(f"frame spans a {frame.hull_dim}-dimensional hull in "
                                f"R^{hmap.dim}; reduce the map first")
    prods = _products_of(hmap, i, frame.indices)
    f = fit_motion(frame.anchor_images, hmap.images[prods], tol)
    if verify:
        ys, xy = [], []
        for j in range(hmap.size):
            p = hmap.product(i, j)
            if p is not None:
                ys.append(j)
                xy.append(p)
        resid = float(np.max(np.abs(apply(f, hmap.images[ys]) - hmap.images[xy])))
        if resid > tol.distance * _scale(hmap):
            raise NotCongruent("h(xy) != f_x(h(y)) on the carrier; the map is not DEP",
                               residual=resid)
    return f


def extract_at(hmap: SampledMonoidMap, frame: AnchorFrame, x, verify: bool = True,
               tol: config.Tolerances | None = None) -> Motion:
    """The motion f_x with f_x(h(x_i)) = h(x x_i) on the anchors.

    With ``verify`` the identity h(x y) = f_x(h(y)) is checked for every
    carrier element y whose product with x is available.
    """
    return extract_at_index(hmap, frame, hmap.index_of(x), verify, tol)


@dataclass(frozen=True)
class HomomorphismReport:
    pairs: int
    max_residual: float
    max_unit_residual: float
    passed: bool


def verify_homomorphism(hmap: SampledMonoidMap, frame: AnchorFrame, pairs,
                        tol: config.Tolerances | None = None) -> HomomorphismReport:
    """Check f_{xy} = f_x o f_y on the given pairs and h(x) = f_x(h(1))."""
    tol = config.resolve(tol)
    cache: dict[int, Motion] = {}

    def motion(i):
        if i not in cache:
            cache[i] = extract_at_index(hmap, frame, i, verify=False, tol=tol)
        return cache[i]

    h1 = hmap.images[hmap.unit]
    worst = worst_unit = 0.0
    npairs = 0
    for x, y in pairs:
        i, j = hmap.index_of(x), hmap.index_of(y)
        p = hmap.product(i, j)
        if p is None:
            raise MissingProducts(f"{x!r}*{y!r} is outside the carrier")
        worst = max(worst, motion_distance(motion(p), compose(motion(i), motion(j))))
        for a in (i, j, p):
            worst_unit = max(worst_unit,
                             float(np.max(np.abs(apply(motion(a), h1) - hmap.images[a]))))
        npairs += 1
    ok = worst <= tol.homomorphism and worst_unit <= tol.distance * _scale(hmap)
    return HomomorphismReport(npairs, worst, worst_unit, ok)


# -- degenerate case ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HullIsometry:
    """``i(u) = origin + basis @ u``; ``basis`` is n x k with orthonormal columns."""
    origin: np.ndarray
    basis: np.ndarray

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.origin + u @ self.basis.T

    def pullback(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return (p - self.origin) @ self.basis


def reduce_degenerate(hmap: SampledMonoidMap, tol: config.Tolerances | None = None):
    """Return ``(k, i, reduced)`` with ``i : R^k -> hull`` an isometric chart.

    The chart is centred at h(1) and spanned by the leading right singular
    vectors of the centred images.
    """
    tol = config.resolve(tol)
    P = hmap.images
    k = hull_dimension(P, tol.rank)
    if k == hmap.dim:
        raise NotDegenerate(f"images span all of R^{hmap.dim}")
    origin = P[hmap.unit].copy()
    if k:
        _, _, Vt = np.linalg.svd(P - P.mean(axis=0))
        basis = Vt[:k].T.copy()
    else:
        basis = np.zeros((hmap.dim, 0))
    chart = HullIsometry(_freeze(origin), _freeze(basis))
    return k, chart, hmap.with_images(chart.pullback(P))


def embed_motions(chart: HullIsometry, m: Motion) -> Motion:
    """The motion g(m) of R^n with g(m) o i = i o m, identity across the hull."""
    if m.dim != chart.k:
        raise DimensionMismatch(f"motion of R^{m.dim} vs hull of dimension {chart.k}")
    U, o = chart.basis, chart.origin
    Q = U @ m.Q @ U.T + (np.eye(chart.n) - U @ U.T)
    t = U @ ((np.eye(chart.k) - m.Q) @ (U.T @ o) + m.t) if chart.k else np.zeros(chart.n)
    return Motion(Q, t)


# -- full pipeline ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtractedHomomorphism:
    """x -> f_x in G_n, covering both the full and the degenerate case."""
    hmap: SampledMonoidMap
    frame: AnchorFrame
    chart: HullIsometry | None
    reduced: SampledMonoidMap
    tol: config.Tolerances

    def motion_index(self, i: int, verify: bool = False) -> Motion:
        try:
            m = extract_at_index(self.reduced, self.frame, i, verify=verify, tol=self.tol)
        except MissingProducts:
            frame = local_frame(self.reduced, i, self.tol)
            m = extract_at_index(self.reduced, frame, i, verify=verify, tol=self.tol)
        return m if self.chart is None else embed_motions(self.chart, m)

    def motion(self, x, verify: bool = False) -> Motion:
        return self.motion_index(self.hmap.index_of(x), verify)


def extract_homomorphism(hmap: SampledMonoidMap, tol: config.Tolerances | None = None,
                         start: int | None = None) -> ExtractedHomomorphism:
    tol = config.resolve(tol)
    k = hull_dimension(hmap.images, tol.rank)
    if k < hmap.dim:
        _, chart, reduced = reduce_degenerate(hmap, tol)
    else:
        chart, reduced = None, hmap
    frame = select_frame(reduced, start=start, tol=tol)
    return ExtractedHomomorphism(hmap, frame, chart, reduced, tol)


def continuity_modulus(ext: ExtractedHomomorphism, delta: float) -> float:
    """Largest ``motion_distance(f_x, f_y)`` over carrier pairs with |x - y| <= delta.

    Empirical only; vector carriers required.
    """
    X = ext.hmap.vectors
    if X is None:
        raise DimensionMismatch("continuity needs a vector carrier")
    tree = cKDTree(X)
    motions = [ext.motion_index(i) for i in range(ext.hmap.size)]
    worst = 0.0
    for i, j in tree.query_pairs(delta):
        worst = max(worst, motion_distance(motions[i], motions[j]))
    return worst


def sample_line(fn: Callable, xs, dim_domain: int = 1) -> SampledMonoidMap:
    """Carrier from a callable on (R^m, +): ``images[j] = fn(xs[j])``."""
    X = np.asarray(xs, dtype=float).reshape(len(xs), dim_domain)
    H = np.array([np.asarray(fn(x if dim_domain > 1 else x[0]), dtype=float) for x in X])
    return from_vectors(X, H)
