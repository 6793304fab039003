"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are also listed in
the terminal summary.  ``python3 tests/test_acceptance.py`` runs the
criteria without pytest.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from simmaps import anchor_homomorphism as ah
from simmaps import chord_profile as cp
from simmaps import dep_harness as dh
from simmaps.motion_group import (apply, compose, fit_motion, identity, in_general_position,
                                  inverse, motion_distance, random_motion)

import helpers
from helpers import helix_samples, random_coeffs

LINE = np.arange(-30, 31) * 0.25
GRID2 = np.array([(u, v) for u in range(-3, 4) for v in range(-3, 4)], dtype=float)
R_SAMPLES = np.arange(200) * 0.05


def report(number, ok, detail, started):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.time() - started:.1f}s)"
    print(line)
    helpers.ACCEPTANCE_LINES.append(line)
    return ok


# -- 1. motion algebra ------------------------------------------------------------


def criterion_1():
    t0 = time.time()
    rng = np.random.default_rng(1)
    law = fit = 0.0
    for n in (2, 3, 5, 8):
        for _ in range(1000):
            a, b, c = (random_motion(n, rng, scale=3.0) for _ in range(3))
            law = max(law,
                      motion_distance(compose(compose(a, b), c), compose(a, compose(b, c))),
                      motion_distance(compose(a, identity(n)), a),
                      motion_distance(compose(identity(n), a), a),
                      motion_distance(compose(a, inverse(a)), identity(n)),
                      motion_distance(compose(inverse(a), a), identity(n)))
            u, v = rng.standard_normal((2, n)) * 3
            law = max(law, abs(np.linalg.norm(apply(a, u) - apply(a, v)) - np.linalg.norm(u - v)))
            while True:
                S = rng.standard_normal((n + 1, n)) * 2
                if in_general_position(S):
                    break
            fit = max(fit, motion_distance(fit_motion(S, apply(a, S)), a))
    ok = law <= 1e-10 and fit <= 1e-9
    return report(1, ok, f"group laws/isometry max {law:.2e} (<=1e-10), fit round-trip max {fit:.2e} "
                         "(<=1e-9) over 4x1000 motions", t0)


# -- 2. anchor extraction -----------------------------------------------------------


def _near(hmap, radius):
    return [i for i, x in enumerate(hmap.elements) if max(abs(v) for v in x) <= radius]


def _check_line_map(hmap):
    """(hom residual, unit residual, frame-independence gap) for a map on (R, +).

    Maps with a lower-dimensional hull are checked in the chart coordinates;
    the chart is an isometry, so every residual carries over unchanged.
    """
    if ah.hull_dimension(hmap.images) < hmap.dim:
        _, _, hmap = ah.reduce_degenerate(hmap)
    # two frames on disjoint anchor sets: even and odd grid points
    parity = [round(x[0] / 0.25) % 2 for x in hmap.elements]
    f1 = ah.select_frame(hmap, [i for i in _near(hmap, 2.5) if parity[i] == 0])
    f2 = ah.select_frame(hmap, [i for i in _near(hmap, 2.75) if parity[i] == 1])
    inner = [x for x in LINE if abs(x) <= 2.5]
    pairs = [((x,), (y,)) for x in inner[::2] for y in inner[::2]]
    rep = ah.verify_homomorphism(hmap, f1, pairs)
    h1 = hmap.images[hmap.unit]
    unit = rep.max_unit_residual
    gap = 0.0
    for x in inner:
        m1 = ah.extract_at(hmap, f1, (x,), verify=False)
        m2 = ah.extract_at(hmap, f2, (x,), verify=False)
        gap = max(gap, motion_distance(m1, m2))
        unit = max(unit, float(np.max(np.abs(apply(m1, h1) - hmap.image((x,))))))
    return rep.max_residual, unit, gap


def _check_similarity(rng):
    """Similarity R^2 -> R^3: planar image, handled through the degenerate path."""
    sigma = rng.uniform(0.3, 3.0)
    U, _ = np.linalg.qr(rng.standard_normal((3, 2)))
    z = rng.standard_normal(3)
    hmap = ah.from_vectors(GRID2, sigma * GRID2 @ U.T + z)
    ext = ah.extract_homomorphism(hmap)
    if ext.chart is None or ext.chart.k != 2:
        return np.inf, np.inf, np.inf, np.inf
    other = ah.extract_homomorphism(hmap, start=hmap.index_of((1.0, 1.0)))
    inner = _near(hmap, 1.0)
    h1 = hmap.images[hmap.unit]
    motions = {i: ext.motion_index(i) for i in range(hmap.size)}
    hom = unit = gap = 0.0
    for i in inner:
        for j in inner:
            p = hmap.product(i, j)
            hom = max(hom, motion_distance(motions[p], compose(motions[i], motions[j])))
        gap = max(gap, motion_distance(motions[i], other.motion_index(i)))
    for i, m in motions.items():
        unit = max(unit, float(np.max(np.abs(apply(m, h1) - hmap.images[i]))))
    # round trip through the chart: reduced images pushed back reproduce h
    roundtrip = float(np.max(np.abs(ext.chart(ext.reduced.images) - hmap.images)))
    return hom, unit, gap, roundtrip


def _line_of_product_map(rng):
    n = int(rng.integers(2, 5))
    pm = dh.random_product_map(n, rng, rate_range=(0.8, 3.0))
    ea = dh.eigen_angles(pm)
    while True:
        gamma = rng.uniform(0.0, np.pi)
        w = np.abs(np.cos(gamma) * ea.alpha + np.sin(gamma) * ea.beta)
        if np.all((w == 0) | (w >= 0.8)) and np.all(w <= 3.0):
            break
    c, s = np.cos(gamma), np.sin(gamma)
    return ah.sample_line(lambda x: pm(x * c, x * s), LINE)


def criterion_2():
    t0 = time.time()
    rng = np.random.default_rng(2)
    hom = unit = gap = rt = 0.0
    counts = {"similarity": 0, "helix": 0, "line": 0}
    for trial in range(50):
        kind = ("similarity", "helix", "line")[trial % 3]
        counts[kind] += 1
        if kind == "similarity":
            h, u, g, r = _check_similarity(rng)
            rt = max(rt, r)
        else:
            if kind == "helix":
                _, _, images = helix_samples(rng, int(rng.integers(1, 5)), LINE)
                hmap = ah.from_vectors(LINE, images)
            else:
                hmap = _line_of_product_map(rng)
            h, u, g = _check_line_map(hmap)
        hom, unit, gap = max(hom, h), max(unit, u), max(gap, g)
    ok = hom <= 1e-8 and unit <= 1e-9 and gap <= 1e-8 and rt <= 1e-9
    mix = ", ".join(f"{v} {k}" for k, v in counts.items())
    return report(2, ok, f"homomorphism {hom:.2e} (<=1e-8), h(x)=f_x(h(1)) {unit:.2e} (<=1e-9), "
                         f"frame independence {gap:.2e} (<=1e-8), degenerate round-trip {rt:.2e} "
                         f"(<=1e-9) over {mix}", t0)


# -- 3. chord profiles ----------------------------------------------------------------


def _relative_distance(got, want):
    scale = max([1.0, want.lam] + [abs(v) for t in want.terms for v in t])
    return cp.coeff_distance(got, want) / scale


def _perturbed(rng, c):
    """Nearby canonical set: one coefficient moved by 1e-3 to 1e-2, kappa-gap kept."""
    while True:
        delta = rng.uniform(1e-3, 1e-2) * rng.choice([-1.0, 1.0])
        lam = c.lam
        terms = [list(t) for t in c.terms]
        which = int(rng.integers(0, 1 + 2 * len(terms)))
        if which == 0:
            lam = abs(lam + delta)
        else:
            terms[(which - 1) // 2][(which - 1) % 2] += delta
        out = cp.make_coeffs(lam, terms)
        ks = out.kappas
        if out.s == c.s and (ks.size < 2 or np.diff(ks).min() >= 0.2) \
                and cp.coeff_distance(out, c) >= 1e-3:
            return out


def _uniqueness_pair(rng, near):
    c1 = random_coeffs(rng, s_max=3, gap=0.2)
    if near:
        return c1, _perturbed(rng, c1)
    while True:
        c2 = random_coeffs(rng, s_max=3, gap=0.2)
        if cp.coeff_distance(c1, c2) >= 1e-3:
            return c1, c2


def criterion_3():
    t0 = time.time()
    rng = np.random.default_rng(3)
    worst_samples = 0.0
    for _ in range(200):
        c = random_coeffs(rng, s_max=3, gap=0.2)
        got = cp.recover_from_samples(np.c_[R_SAMPLES, cp.eval_profile(c, R_SAMPLES)], 3)
        worst_samples = max(worst_samples, _relative_distance(got, c))
    distinct = 0
    for trial in range(1000):
        c1, c2 = _uniqueness_pair(rng, near=trial % 2 == 1)
        distinct += not cp.profiles_equal(c1, c2, 500.0, 50_001)
    grid = np.linspace(0.1, 6.0, 40)
    worst_deriv = 0.0
    for _ in range(100):
        c = random_coeffs(rng, s_max=2, gap=0.2)
        got = cp.recover_via_derivatives(cp.oracle_from_coeffs(c), 6.0, grid)
        worst_deriv = max(worst_deriv, _relative_distance(got, c))
    r = np.linspace(0.0, 10.0, 201)
    asym_ok = 0
    for _ in range(100):
        c = random_coeffs(rng, s=int(rng.integers(2, 4)), gap=0.2)
        errs, bounds = zip(*(cp.asymptotic_error(c, r, n) for n in (2, 3, 4)))
        slack = 1e-12 * max(1.0, c.weights[-1] ** 2)
        asym_ok += (all(e <= b + slack for e, b in zip(errs, bounds))
                    and bounds[0] > bounds[1] > bounds[2])
    ok = worst_samples <= 1e-6 and distinct == 1000 and worst_deriv <= 1e-6 and asym_ok == 100
    return report(3, ok, f"sample round-trip {worst_samples:.2e} rel (<=1e-6, 200 sets), "
                         f"uniqueness {distinct}/1000, derivative oracle s<=2 {worst_deriv:.2e} "
                         f"(<=1e-6, 100 sets), asymptotic bound n=2,3,4 {asym_ok}/100", t0)


# -- 4./5. product maps -------------------------------------------------------------


def criterion_4():
    t0 = time.time()
    rng = np.random.default_rng(4)
    witnessed = fuzzed = 0
    for trial in range(100):
        pm = dh.random_product_map(int(rng.integers(2, 8)), rng, "generic")
        v = dh.theorem_witness(pm, seed=trial)
        witnessed += isinstance(v, dh.DepViolation) and v.verified
        found = dh.dep_test(pm, trials=10_000, tol=1e-3, seed=trial)
        fuzzed += isinstance(found, dh.Counterexample) and found.image_gap > 1e-3
    ok = witnessed == 100 and fuzzed == 100
    return report(4, ok, f"DepViolation {witnessed}/100, dep_test gap>1e-3 within 1e4 trials "
                         f"{fuzzed}/100", t0)


def criterion_5():
    t0 = time.time()
    rng = np.random.default_rng(5)
    passed = certified = 0
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(2, 8))
        kind = "axis" if n >= 4 and trial % 2 else "translation"
        pm = dh.random_product_map(n, rng, kind)
        sigma = float(np.linalg.norm(pm.phi.b))
        passed += isinstance(dh.dep_test(pm, trials=10_000, tol=1e-9, seed=trial), dh.Pass)
        got = dh.similarity_check(pm, seed=trial)
        if got is not None:
            worst = max(worst, abs(got - sigma))
        else:
            worst = np.inf
        certified += isinstance(dh.theorem_witness(pm, seed=trial, trials=1000),
                                dh.SimilarityCertificate)
    ok = passed == 100 and worst <= 1e-9 and certified == 100
    return report(5, ok, f"dep_test pass {passed}/100 (1e4 trials, tol 1e-9), similarity_check "
                         f"sigma error {worst:.2e} (<=1e-9), certificates {certified}/100", t0)


# -- 6. cross-link ----------------------------------------------------------------------


def _well_conditioned(p):
    """Profiles whose kappa-set is resolvable from 200 samples at step 0.05."""
    ks = np.array(p.kappa_set)
    ws = np.array([w for _, w in p.coeffs.terms])
    if ks.size == 0:
        return True
    return bool(ks.min() >= 0.3 and ws.min() >= 0.1
                and (ks.size < 2 or np.diff(ks).min() >= 0.2))


def criterion_6():
    t0 = time.time()
    rng = np.random.default_rng(6)
    worst = 0.0
    used = skipped = mismatched = 0
    gammas = np.concatenate([dh.default_gamma_grid(16), rng.uniform(0, np.pi, 4)])
    for _ in range(20):
        pm = dh.random_product_map(int(rng.integers(2, 8)), rng, "generic")
        ea = dh.eigen_angles(pm)
        for g in gammas:
            p = dh.direction_profile(pm, g, ea)
            if not _well_conditioned(p):
                skipped += 1
                continue
            used += 1
            samples = np.c_[R_SAMPLES, dh.sampled_profile(pm, g, R_SAMPLES)]
            got = cp.recover_from_samples(samples, 3)
            if got.s != len(p.kappa_set):
                mismatched += 1
                continue
            if got.s:
                worst = max(worst, float(np.max(np.abs(got.kappas - np.array(p.kappa_set)))))
    ok = mismatched == 0 and worst <= 1e-6 and used > 0
    return report(6, ok, f"kappa-set error {worst:.2e} (<=1e-6) on {used} direction profiles, "
                         f"{mismatched} count mismatches, {skipped} ill-conditioned angles skipped", t0)


# -- 7. CLI -------------------------------------------------------------------------------

SCREW_DRIFT = ('{"phi": {"dim": 3, "rates": [1.0]}, "psi": {"drift": [0, 0, 1]}, '
               '"z": [1, 0, 0]}')
SIMILARITY = ('{"type": "similarity", "sigma": 2.0, "frame": [[1, 0], [0, 1], [0, 0]], '
              '"z": [0, 0, 1]}')
CROSSED = '{"phi": {"dim": 3, "rates": [1.0]}, "psi": {"drift": [1, 0, 0]}, "z": [0, 0, 0]}'


def _cli(args, out=None):
    cmd = [sys.executable, "-m", "simmaps.cli", *args]
    if out is not None:
        cmd += ["--out", str(out)]
    return subprocess.run(cmd, capture_output=True).returncode


def criterion_7(tmp_path):
    t0 = time.time()
    runs = {
        "helix": ["helix", "--spec", '{"dim": 3, "rates": [1.0], "drift": [0, 0, 1]}',
                  "--a", "1,0,0", "--steps", "64"],
        "depcheck": ["depcheck", "--spec", SCREW_DRIFT, "--seed", "11"],
        "theorem": ["theorem", "--spec", SCREW_DRIFT, "--seed", "11", "--format", "csv"],
    }
    identical = 0
    for name, argv in runs.items():
        blobs = []
        for k in range(2):
            path = tmp_path / f"{name}{k}"
            _cli(argv, path)
            blobs.append(path.read_bytes() if path.exists() else b"")
        identical += blobs[0] == blobs[1] and len(blobs[0]) > 0
    samples = tmp_path / "short.csv"
    samples.write_text("r,C\n0.0,0.0\n0.1,0.01\n0.2,0.04\n")
    expected = [
        (["depcheck", "--spec", SIMILARITY, "--trials", "2000"], 0),
        (["depcheck", "--spec", SCREW_DRIFT], 4),
        (["depcheck", "--spec", SIMILARITY, "--trials", "0"], 2),
        (["helix", "--spec", '{"dim": 3, "rates": [-1]}', "--a", "1,0,0"], 2),
        (["recover", "--samples", str(samples), "--max-terms", "2"], 3),
        (["theorem", "--spec", CROSSED], 3),
        (["theorem", "--spec", SCREW_DRIFT], 0),
    ]
    codes_ok = sum(_cli(argv) == code for argv, code in expected)
    ok = identical == len(runs) and codes_ok == len(expected)
    return report(7, ok, f"byte-identical reruns {identical}/{len(runs)}, exit codes "
                         f"{codes_ok}/{len(expected)}", t0)


def test_criterion_1_motion_algebra():
    assert criterion_1()


def test_criterion_2_anchor_extraction():
    assert criterion_2()


def test_criterion_3_chord_profiles():
    assert criterion_3()


def test_criterion_4_falsification():
    assert criterion_4()


def test_criterion_5_similarity():
    assert criterion_5()


def test_criterion_6_cross_link():
    assert criterion_6()


def test_criterion_7_cli(tmp_path):
    assert criterion_7(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        results = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(),
                   criterion_6(), criterion_7(Path(d))]
    sys.exit(0 if all(results) else 1)
