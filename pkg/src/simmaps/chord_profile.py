"""Chord profiles C(r) = (r*lam)^2 + sum_k w_k^2 (2 - 2 cos(r*kappa_k)).

Such a profile is the squared chord length |h(0) - h(r)|^2 of a generalized
helix.  The coefficients are uniquely determined by C; this module evaluates
profiles and their derivatives and recovers the coefficients either from a
derivative oracle (growth rate of the (4n+1)-st derivative, peeling off the
fastest frequency each round) or from uniform samples (annihilating filter on
second differences, then least squares).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import config
from .errors import (
    AliasingSuspicion,
    NegativeR,
    NoConvergence,
    NonUniformGrid,
    SimMapsError,
    TooFewSamples,
)


@dataclass(frozen=True)
class ChordCoeffs:
    """``lam`` is the linear (drift) rate; ``terms`` are ``(kappa, weight)``
    pairs with strictly increasing kappa and positive weight."""

    lam: float = 0.0
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((float(k), float(w)) for k, w in self.terms)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "terms", terms)
        if self.lam < 0:
            raise SimMapsError(f"lam must be nonnegative, got {self.lam}")
        for k, w in terms:
            if not (k > 0 and w > 0):
                raise SimMapsError(f"terms need kappa > 0 and weight > 0, got {(k, w)}")
        kappas = [k for k, _ in terms]
        if any(b - a < 1e-9 for a, b in zip(kappas, kappas[1:])):
            raise SimMapsError("kappas must be strictly increasing; use make_coeffs to canonicalize")

    @property
    def kappas(self) -> np.ndarray:
        return np.array([k for k, _ in self.terms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.terms])

    @property
    def s(self) -> int:
        return len(self.terms)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "terms": [{"kappa": k, "weight": w} for k, w in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "ChordCoeffs":
        return make_coeffs(d.get("lambda", 0.0), [(t["kappa"], t["weight"]) for t in d.get("terms", [])])


def make_coeffs(lam: float, terms: Iterable, merge_tol: float = 1e-9,
                drop_below: float = 0.0) -> ChordCoeffs:
    """Canonical ChordCoeffs: sorted, kappas closer than ``merge_tol`` merged
    (weights combined root-sum-square), nonpositive kappas and weights
    ``<= drop_below`` removed."""
    pairs = sorted((float(k), float(w)) for k, w in terms if k > 0 and abs(w) > drop_below)
    merged: list[list[float]] = []
    for k, w in pairs:
        if merged and k - merged[-1][0] < merge_tol:
            k0, w0 = merged[-1]
            merged[-1] = [k0, float(np.hypot(w0, w))]
        else:
            merged.append([k, abs(w)])
    return ChordCoeffs(abs(float(lam)), tuple((k, w) for k, w in merged))


def eval_profile(c: ChordCoeffs, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise NegativeR("chord profiles are defined for r >= 0", residual=float(-r_arr.min()))
    out = (c.lam * r_arr) ** 2
    for k, w in c.terms:
        out = out + w * w * (2.0 - 2.0 * np.cos(k * r_arr))
    return float(out) if np.ndim(out) == 0 else out


def derivative(c: ChordCoeffs, r, order: int):
    """Closed-form ``order``-th derivative of the profile (order 0 is the profile)."""
    if order < 0:
        raise ValueError("order must be >= 0")
    r_arr = np.asarray(r, dtype=float)
    if order == 0:
        out = _profile_any_r(c, r_arr)
        return float(out) if np.ndim(out) == 0 else out
    if order == 1:
        out = 2.0 * c.lam**2 * r_arr
    elif order == 2:
        out = np.full_like(r_arr, 2.0 * c.lam**2)
    else:
        out = np.zeros_like(r_arr)
    # d^p/dr^p of -2 w^2 cos(k r)
    phase = order % 4
    for k, w in c.terms:
        a = 2.0 * w * w * k**order
        if phase == 0:
            out = out - a * np.cos(k * r_arr)
        elif phase == 1:
            out = out + a * np.sin(k * r_arr)
        elif phase == 2:
            out = out + a * np.cos(k * r_arr)
        else:
            out = out - a * np.sin(k * r_arr)
    return float(out) if np.ndim(out) == 0 else out


def _profile_any_r(c, r):
    out = (c.lam * r) ** 2
    for k, w in c.terms:
        out = out + w * w * (2.0 - 2.0 * np.cos(k * r))
    return out


def profiles_equal(c1: ChordCoeffs, c2: ChordCoeffs, r_max: float, grid_n: int,
                   tol: config.Tolerances | None = None) -> bool:
    tol = config.resolve(tol)
    r = np.linspace(0.0, r_max, grid_n)
    return bool(np.max(np.abs(eval_profile(c1, r) - eval_profile(c2, r))) <= tol.profile)


def coeff_distance(c1: ChordCoeffs, c2: ChordCoeffs) -> float:
    """Max-norm distance between coefficient vectors; inf if term counts differ."""
    if c1.s != c2.s:
        return float("inf")
    d = abs(c1.lam - c2.lam)
    if c1.s:
        d = max(d, float(np.max(np.abs(c1.kappas - c2.kappas))),
                float(np.max(np.abs(c1.weights - c2.weights))))
    return d


def asymptotic_error(c: ChordCoeffs, r, n: int) -> tuple[float, float]:
    """Deviation of ``C^(4n+1)(r) / (2 kappa_s^(4n+1))`` from ``w_s^2 sin(r kappa_s)``.

    Returns ``(max deviation over r, bound)`` where the bound is
    ``sum_{k<s} w_k^2 * (kappa_{s-1}/kappa_s)^(4n+1)``.
    """
    if c.s == 0:
        return 0.0, 0.0
    p = 4 * n + 1
    r = np.asarray(r, dtype=float)
    ks, ws = c.kappas, c.weights
    ratio = derivative(c, r, p) / (2.0 * ks[-1] ** p)
    err = float(np.max(np.abs(ratio - ws[-1] ** 2 * np.sin(r * ks[-1]))))
    if c.s == 1:
        return err, 0.0
    bound = float(np.sum(ws[:-1] ** 2) * (ks[-2] / ks[-1]) ** p)
    return err, bound


# -- recovery from a derivative oracle ----------------------------------------

Oracle = Callable[[np.ndarray, int], np.ndarray]


def oracle_from_coeffs(c: ChordCoeffs) -> Oracle:
    return lambda r, order: derivative(c, r, order)


def _call(oracle: Oracle, r: np.ndarray, order: int) -> np.ndarray:
    try:
        out = np.asarray(oracle(r, order), dtype=float)
        if out.shape == r.shape:
            return out
    except TypeError:
        pass
    return np.array([float(oracle(float(x), order)) for x in r])


def _trig_part(kappas, w2, r, order):
    """Order-p derivative of sum w2 (2 - 2cos(kappa r)) for odd p."""
    sign = 1.0 if order % 4 == 1 else -1.0
    out = np.zeros_like(r)
    for k, a in zip(kappas, w2):
        out += 2.0 * sign * a * k**order * np.sin(k * r)
    return out


def _aitken(seq: Sequence[float]) -> float:
    a, b, c = seq[-3:]
    den = c - 2.0 * b + a
    if den == 0.0:
        return c
    return c - (c - b) ** 2 / den


def _rel_change(a: float, b: float) -> float:
    return abs(b - a) / abs(b) if b != 0 else np.inf


def _oracle_mismatch(oracle_vals: dict, r, kappas, w2) -> float:
    return max(float(np.max(np.abs(v - _trig_part(kappas, w2, r, p)))) / max(float(np.max(np.abs(v))), 1e-300)
               for p, v in oracle_vals.items())


def _polish_terms(oracle_vals: dict, r, kappas, w2):
    """Least-squares refinement of (kappa, w^2) against oracle values at orders = 1 mod 4."""
    orders = sorted(oracle_vals)
    scales = {p: max(np.max(np.abs(oracle_vals[p])), 1e-300) for p in orders}

    def resid(x):
        s = len(x) // 2
        ks, ws = x[:s], x[s:]
        return np.concatenate([(oracle_vals[p] - _trig_part(ks, ws, r, p)) / scales[p] for p in orders])

    x0 = np.concatenate([kappas, w2])
    sol = scipy.optimize.least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    s = len(kappas)
    return list(np.abs(sol.x[:s])), list(sol.x[s:])


def _resolvable(oracle_vals: dict, r, kappa: float, a: float) -> bool:
    """False for a term whose contribution is below round-off at every order."""
    return any(float(np.max(np.abs(_trig_part([kappa], [a], r, p))))
               > 1e-10 * float(np.max(np.abs(v))) for p, v in oracle_vals.items())


def _low_order_rate(residual_values, r) -> float | None:
    """Growth rate of the residual across orders 3, 5, 7.

    A slow term with a small weight is buried under the amplified error of
    the faster peeled terms at orders 9 and up, but at low orders the step
    ratio ``-R^(p+2) / R^(p)`` still equals kappa^2 for a single sinusoid.
    """
    s3, s5, s7 = (residual_values(p) for p in (3, 5, 7))
    d3, d5 = float(s3 @ s3), float(s5 @ s5)
    if d3 == 0.0 or d5 == 0.0:
        return None
    q1 = -float(s5 @ s3) / d3
    q2 = -float(s7 @ s5) / d5
    if q1 <= 0 or q2 <= 0 or _rel_change(q1, q2) > 1e-3:
        return None
    return float(np.sqrt(q2))


def recover_via_derivatives(oracle: Oracle, kappa_cap: float, grid, n_start: int = 2,
                            n_max: int = 40, max_terms: int = 6,
                            tol: config.Tolerances | None = None) -> ChordCoeffs:
    """Recover coefficients from derivative values, fastest frequency first.

    For the residual profile R (the oracle minus already-found terms), the
    normalized growth ``<g_{n+1}, g_n> / <g_n, g_n>`` with
    ``g_n = R^(4n+1) / (2 cap^(4n+1))`` tends to ``(kappa_s / cap)^4``; the
    sequence over n = 2, 3, 4, ... is accelerated with Aitken's delta-squared
    until it stabilizes.  The weight ``w_s^2`` is the limit of the projection
    of ``R^(4n+1) / (2 kappa_s^(4n+1))`` onto ``sin(kappa_s r)``.  Subtracting
    a fast term from high derivatives amplifies its error, so the peeled
    estimates only seed a joint least-squares fit on low-order oracle values,
    which also decides when every term has been found; ``lam`` comes from the second derivative once the oscillatory
    part is known.
    """
    tol = config.resolve(tol)
    r = np.asarray(grid, dtype=float)
    cap = float(kappa_cap)
    base = {p: _call(oracle, r, p) for p in (5, 9, 13, 17)}
    scale5 = float(np.max(np.abs(base[5])))
    kappas: list[float] = []
    w2: list[float] = []

    def residual_values(p):
        vals = base[p] if p in base else _call(oracle, r, p)
        return vals - _trig_part(kappas, w2, r, p)

    fitted = ([], [])
    while scale5 > 0:
        if np.max(np.abs(residual_values(5))) <= 1e-10 * scale5:
            break
        if kappas:
            fk, fw = _polish_terms(base, r, np.array(kappas), np.array(w2))
            fitted = (fk, fw)
            if _oracle_mismatch(base, r, fk, fw) <= 1e-9:
                break
        if len(kappas) >= max_terms:
            break
        # later rounds start lower: subtraction error grows with the order
        n0 = n_start if not kappas else max(1, n_start - 1)
        g, q, est, est2 = [], [], [], []
        kappa = None
        best = (np.inf, None, n0)
        worsening = 0
        n_used = n0
        for n in range(n0, n_max + 1):
            p = 4 * n + 1
            g.append(residual_values(p) / (2.0 * cap**p))
            if len(g) < 2:
                continue
            denom = float(g[-2] @ g[-2])
            if denom == 0.0:
                break
            q.append(float(g[-1] @ g[-2]) / denom)
            est.append(_aitken(q) if len(q) >= 3 else q[-1])
            est2.append(_aitken(est) if len(est) >= 3 else est[-1])
            if len(est) < 2:
                continue
            # raw ratios, their Aitken transform and the iterated transform
            # (for two nearly equal rates) are all candidates
            changes = [(_rel_change(est[-2], est[-1]), est[-1]),
                       (_rel_change(q[-2], q[-1]), q[-1]),
                       (_rel_change(est2[-2], est2[-1]), est2[-1])]
            change, value = min(changes)
            if change <= 1e-10:
                kappa, n_used = cap * abs(value) ** 0.25, n
                break
            if change < best[0]:
                best, worsening = (change, value, n), 0
            else:
                worsening += 1
                # the transforms wander for a while when two rates are close
                if worsening >= 6 and n - n0 >= 16:
                    break
        # a few stable digits suffice: the joint refinement finishes the job
        if kappa is None and best[0] <= 1e-3:
            kappa, n_used = cap * abs(best[1]) ** 0.25, best[2]
        # at high orders a re-found rate is subtraction error of a peeled term
        if kappas and (kappa is None or any(abs(kappa - k) <= 1e-3 * k for k in kappas)):
            kappa = _low_order_rate(residual_values, r)
            n_used = n0
        if kappa is None:
            raise NoConvergence("growth-rate estimates did not stabilize",
                                residual=best[0] if np.isfinite(best[0]) else None)
        if kappa > cap * (1 + 1e-6):
            raise NoConvergence(f"growth rate {kappa:.6g} exceeds kappa_cap {cap:.6g}",
                                residual=kappa - cap)
        if any(abs(kappa - k) <= 1e-3 * k for k in kappas):
            raise NoConvergence("round re-found an already peeled frequency; subtraction error "
                                "dominates the remaining terms", residual=kappa)
        s_vec = np.sin(kappa * r)
        ss = float(s_vec @ s_vec)
        if ss == 0.0:
            raise NoConvergence("grid sits on zeros of sin(kappa r)")
        # weights at the orders where the growth estimate settled; beyond
        # that, subtraction error of faster terms takes over
        weights = []
        for n in range(max(n0, n_used - 2), n_used + 1):
            p = 4 * n + 1
            ratio = residual_values(p) / (2.0 * kappa**p)
            weights.append(float(ratio @ s_vec) / ss)
        wk = _aitken(weights) if len(weights) == 3 else weights[-1]
        kappas.append(kappa)
        w2.append(max(wk, 0.0))
    if len(fitted[0]) != len(kappas):
        fitted = (kappas, w2)
    if fitted[0]:
        fitted = _polish_terms(base, r, np.array(fitted[0]), np.array(fitted[1]))
        keep = [i for i, (k, a) in enumerate(zip(*fitted))
                if _resolvable(base, r, k, a)]
        if len(keep) < len(fitted[0]):
            fitted = ([fitted[0][i] for i in keep], [fitted[1][i] for i in keep])
            if keep:
                fitted = _polish_terms(base, r, np.array(fitted[0]), np.array(fitted[1]))
    kappas, w2 = fitted
    c2 = _call(oracle, r, 2)
    osc = np.zeros_like(r)
    for k, a in zip(kappas, w2):
        osc += 2.0 * a * k * k * np.cos(k * r)
    lam2 = float(np.mean(c2 - osc)) / 2.0
    if lam2 <= 1e-12 * max(float(np.max(np.abs(c2))), 1e-300):
        lam2 = 0.0
    coeffs = make_coeffs(np.sqrt(lam2), [(k, np.sqrt(max(a, 0.0))) for k, a in zip(kappas, w2)],
                         merge_tol=tol.rate_merge, drop_below=tol.weight_drop)

    worst = 0.0
    for n in (2, 3, 4):
        p = 4 * n + 1
        want = _call(oracle, r, p)
        got = derivative(coeffs, r, p)
        worst = max(worst, float(np.max(np.abs(want - got))) / max(float(np.max(np.abs(want))), 1e-300))
    if scale5 > 0 and worst > tol.recovery:
        raise NoConvergence("recovered coefficients do not reproduce the oracle", residual=worst)
    return coeffs


# -- recovery from samples -----------------------------------------------------


def _uniform_step(r: np.ndarray) -> float:
    d = np.diff(r)
    if np.any(d <= 0):
        raise NonUniformGrid("sample radii must be strictly increasing")
    step = float(np.mean(d))
    dev = float(np.max(np.abs(d - step)))
    if dev > 1e-9 * max(step, abs(r[-1])):
        raise NonUniformGrid("samples are not on a uniform grid", residual=dev)
    return step


def _esprit_kappas(y: np.ndarray, order: int, step: float) -> np.ndarray:
    L = len(y) // 2
    H = scipy.linalg.hankel(y[: len(y) - L], y[len(y) - L - 1:])
    U, _, _ = np.linalg.svd(H, full_matrices=False)
    Us = U[:, :order]
    Phi = np.linalg.lstsq(Us[:-1], Us[1:], rcond=None)[0]
    z = np.linalg.eigvals(Phi)
    kap = np.abs(np.angle(z)) / step
    return np.sort(kap[np.abs(np.angle(z)) > 1e-5])


def _cluster(vals: np.ndarray, tol: float) -> list[float]:
    out: list[list[float]] = []
    for v in np.sort(vals):
        if out and v - out[-1][-1] <= tol:
            out[-1].append(v)
        else:
            out.append([v])
    return [float(np.mean(g)) for g in out]


def _fit_linear(r, C, kappas):
    cols = [r**2] + [2.0 - 2.0 * np.cos(k * r) for k in kappas]
    X = np.column_stack(cols)
    coef, _ = scipy.optimize.nnls(X, C)
    return coef


def _model(r, lam, kappas, weights):
    out = (lam * r) ** 2
    for k, w in zip(kappas, weights):
        out = out + w * w * (2.0 - 2.0 * np.cos(k * r))
    return out


def _polish_samples(r, C, lam, kappas, weights):
    s = len(kappas)
    scale = max(float(np.max(np.abs(C))), 1e-300)

    def resid(x):
        return (_model(r, x[0], x[1:1 + s], x[1 + s:]) - C) / scale

    x0 = np.concatenate([[lam], kappas, weights])
    sol = scipy.optimize.least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    x = sol.x
    return abs(x[0]), np.abs(x[1:1 + s]), np.abs(x[1 + s:])


def recover_from_samples(samples, max_terms: int,
                         tol: config.Tolerances | None = None) -> ChordCoeffs:
    """Coefficients from uniform samples ``(r_j, C(r_j))``.

    Second central differences turn the quadratic part into a constant, so
    ``D2 C`` is a sum of complex exponentials with roots 1 and
    ``exp(+-i kappa_k step)``.  The roots come from a Hankel/shift-invariance
    (ESPRIT) step with model order chosen by a relative singular-value
    threshold; lam and the weights then follow from nonnegative least
    squares and a final joint nonlinear refinement.
    """
    tol = config.resolve(tol)
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SimMapsError("samples must be (r, C) pairs")
    arr = arr[np.argsort(arr[:, 0])]
    r, C = arr[:, 0], arr[:, 1]
    N = len(r) - 1
    if N < 4 * max_terms + 8:
        raise TooFewSamples(f"need at least {4 * max_terms + 9} samples for max_terms={max_terms}, got {N + 1}")
    if np.any(r < 0):
        raise NegativeR("sample radii must be nonnegative", residual=float(-r.min()))
    step = _uniform_step(r)
    scale = float(np.max(np.abs(C)))
    if scale <= tol.profile:
        # indistinguishable from the zero profile (round-off of a constant curve)
        return ChordCoeffs(0.0, ())

    y = C[2:] - 2.0 * C[1:-1] + C[:-2]
    L = len(y) // 2
    sv = np.linalg.svd(scipy.linalg.hankel(y[: len(y) - L], y[len(y) - L - 1:]), compute_uv=False)
    max_order = min(2 * max_terms + 1, L)
    first = int(np.sum(sv > tol.hankel_rank * sv[0])) if sv[0] > 0 else 0
    first = min(max(first, 0), max_order)

    best = None
    for order in range(first, max_order + 1):
        kap = _esprit_kappas(y, order, step) if order > 0 else np.zeros(0)
        kap = _cluster(kap, 1e-3)
        kap = [k for k in kap if k < np.pi / step]
        lam, ks, ws = _solve_and_prune(r, C, kap, tol)
        if ks.size:
            lam, ks, ws = _polish_samples(r, C, lam, ks, ws)
            lam, ks, ws = _prune(r, C, lam, ks, ws, tol)
        resid = float(np.max(np.abs(_model(r, lam, ks, ws) - C))) / scale
        if best is None or resid < best[0]:
            best = (resid, lam, ks, ws)
        if resid <= tol.recovery and ks.size <= max_terms:
            break
    resid, lam, ks, ws = best
    if resid > tol.recovery or ks.size > max_terms:
        raise AliasingSuspicion("samples are not reproduced by any admissible profile", residual=resid)
    return make_coeffs(lam, zip(ks, ws), merge_tol=tol.rate_merge, drop_below=tol.weight_drop)


def _solve_and_prune(r, C, kappas, tol):
    coef = _fit_linear(r, C, kappas)
    lam = float(np.sqrt(coef[0]))
    ks = np.asarray(kappas, dtype=float)
    ws = np.sqrt(coef[1:])
    return _prune(r, C, lam, ks, ws, tol)


def _prune(r, C, lam, ks, ws, tol):
    keep = ws >= tol.weight_drop
    if not np.all(keep):
        ks = ks[keep]
        coef = _fit_linear(r, C, ks)
        lam, ws = float(np.sqrt(coef[0])), np.sqrt(coef[1:])
    order = np.argsort(ks)
    return lam, ks[order], ws[order]


# -- file formats ---------------------------------------------------------------


def write_samples_csv(fh, r, C) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r", "C"])
    for a, b in zip(np.asarray(r, dtype=float), np.asarray(C, dtype=float)):
        w.writerow([repr(float(a)), repr(float(b))])


def read_samples_csv(fh) -> np.ndarray:
    rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["r", "C"]:
        raise SimMapsError("samples CSV must start with the header 'r,C'")
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise SimMapsError(f"line {i}: expected 2 fields, got {len(row)}")
        try:
            data.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise SimMapsError(f"line {i}: {exc}") from None
    return np.array(data, dtype=float).reshape(-1, 2)


def coeffs_to_json(c: ChordCoeffs) -> str:
    return json.dumps(c.to_dict())


def coeffs_from_json(text: str) -> ChordCoeffs:
    return ChordCoeffs.from_dict(json.loads(text))
