"""Command-line front end.

Exit codes: 0 success or DEP pass, 2 input error, 3 precondition failure,
4 DEP counterexample (including carriers on which extraction shows the map
is not DEP).  All randomness comes from ``numpy.random.default_rng(--seed)``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import anchor_homomorphism as ah
from . import chord_profile as cp
from . import config
from . import dep_harness as dh
from .errors import (AliasingSuspicion, DegenerateAnchors, DiagonalizationFailed, MissingProducts,
                     NoConvergence, NonUniformGrid, NotCommuting, NotCongruent, TooFewSamples)
from .helix import OneParamGroup, apply_batch, curve_chord_coeffs
from .motion_group import apply

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_COUNTEREXAMPLE = 0, 2, 3, 4

_PRECONDITION = (NotCommuting, TooFewSamples, AliasingSuspicion, NonUniformGrid,
                 DiagonalizationFailed, NoConvergence, DegenerateAnchors, MissingProducts)


class InputError(Exception):
    pass


def _fmt(v) -> str:
    return repr(float(v))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating, int, np.integer))
                    and not isinstance(v, bool) else v for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, text: str) -> None:
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


def _load_json(spec: str):
    """A path to a JSON file, ``-`` for stdin, or an inline JSON document."""
    text = spec if spec.lstrip().startswith(("{", "[")) else _read_text(spec)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}") from e


def _floats(text: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError as e:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from e
    if count is not None and len(vals) != count:
        raise InputError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _tolerances(args) -> config.Tolerances:
    over: dict[str, float] = {}
    for item in args.tol or []:
        name, eq, value = item.partition("=")
        try:
            if eq:
                over[name.strip()] = float(value)
            else:
                over["dep"] = float(name)
        except ValueError as e:
            raise InputError(f"bad --tol value {item!r}") from e
    try:
        return config.DEFAULT.with_overrides(**over)
    except KeyError as e:
        raise InputError(f"unknown tolerance {e.args[0]!r}") from e


# -- subcommands -----------------------------------------------------------------


def cmd_helix(args) -> int:
    tol = _tolerances(args)
    g = OneParamGroup.from_dict(_load_json(args.spec))
    a = np.array(_floats(args.a, g.dim))
    if args.steps < 1:
        raise InputError("steps must be at least 1")
    xs = args.x_min + np.arange(args.steps) * ((args.x_max - args.x_min) / args.steps)
    pts = apply_batch(g, xs, a)
    coeffs = curve_chord_coeffs(g, a, tol)
    if args.format == "json":
        _emit(args, _json_text({"x": xs.tolist(), "points": pts.tolist(),
                                "coeffs": coeffs.to_dict()}))
        return EXIT_OK
    header = ["x"] + [f"h_{i + 1}" for i in range(g.dim)]
    _emit(args, _csv_text(header, [[x, *p] for x, p in zip(xs, pts)]))
    sidecar = args.coeffs
    if sidecar is None and args.out not in (None, "-"):
        sidecar = str(args.out) + ".coeffs.json"
    if sidecar is not None:
        Path(sidecar).write_text(cp.coeffs_to_json(coeffs) + "\n")
    else:
        sys.stderr.write(cp.coeffs_to_json(coeffs) + "\n")
    return EXIT_OK


def cmd_recover(args) -> int:
    tol = _tolerances(args)
    text = _read_text(args.samples)
    try:
        samples = cp.read_samples_csv(io.StringIO(text))
    except (ValueError, IndexError) as e:
        if isinstance(e, _PRECONDITION):
            raise
        raise InputError(f"cannot parse samples: {e}") from e
    if args.max_terms < 0:
        raise InputError("max-terms must be non-negative")
    c = cp.recover_from_samples(samples, args.max_terms, tol)
    r, C = samples[:, 0], samples[:, 1]
    fit = cp.eval_profile(c, r)
    resid = float(np.max(np.abs(fit - C)) / max(1.0, float(np.max(np.abs(C)))))
    if args.format == "csv":
        rows = [["lambda", c.lam]] + [[f"term_{i + 1}", k, w]
                                      for i, (k, w) in enumerate(c.terms)]
        _emit(args, _csv_text(["name", "kappa_or_value", "weight"], rows))
    else:
        _emit(args, _json_text({**c.to_dict(), "residual": resid, "samples": int(len(r))}))
    return EXIT_OK


def _load_map(spec: dict, tol: config.Tolerances):
    kind = spec.get("type", "product" if "phi" in spec else None)
    if kind == "product":
        return dh.ProductMap.from_dict(spec, tol)
    if kind == "similarity":
        return dh.similarity_map(float(spec.get("sigma", 1.0)), spec["frame"], spec["z"])
    raise InputError(f"unknown map type {kind!r}")


def _box(text: str):
    x0, x1, y0, y1 = _floats(text, 4)
    if x1 <= x0 or y1 <= y0:
        raise InputError("box must be xmin,xmax,ymin,ymax with positive extent")
    return ((x0, x1), (y0, y1))


def cmd_depcheck(args) -> int:
    tol = _tolerances(args)
    fn = _load_map(_load_json(args.spec), tol)
    if args.trials < 1:
        raise InputError("trials must be at least 1")
    verdict = dh.dep_test(fn, _box(args.box), args.trials, tol.dep, args.seed)
    d = verdict.to_dict()
    if args.format == "csv":
        keys = sorted(d)
        _emit(args, _csv_text(keys, [[json.dumps(d[k]) if isinstance(d[k], (list, str))
                                      else d[k] for k in keys]]))
    else:
        _emit(args, _json_text(d))
    return EXIT_OK if isinstance(verdict, dh.Pass) else EXIT_COUNTEREXAMPLE


def cmd_theorem(args) -> int:
    tol = _tolerances(args)
    spec = _load_json(args.spec)
    if spec.get("type", "product") != "product":
        raise InputError("theorem needs a product-map spec")
    pm = dh.ProductMap.from_dict(spec, tol)
    if args.r_steps < 2 or args.gammas < 1:
        raise InputError("need r-steps >= 2 and gammas >= 1")
    r_grid = np.linspace(0.0, args.r_max, args.r_steps)
    cert = dh.theorem_witness(pm, r_grid, dh.default_gamma_grid(args.gammas), seed=args.seed,
                              random_gammas=args.random_gammas, trials=args.trials,
                              box=_box(args.box), tol=tol)
    gammas = [p.gamma for p in cert.profiles]
    table = [[float(np.sqrt(max(v, 0.0))) for v in cp.eval_profile(p.coeffs, r_grid)]
             for p in cert.profiles]
    if args.format == "csv":
        rows = [[g, r, c] for g, row in zip(gammas, table) for r, c in zip(r_grid, row)]
        _emit(args, _csv_text(["gamma", "r", "c"], rows))
    else:
        _emit(args, _json_text({**cert.to_dict(),
                                "table": {"gamma": gammas, "r": r_grid.tolist(), "c": table}}))
    return EXIT_OK


def cmd_extract(args) -> int:
    tol = _tolerances(args)
    hmap = ah.load_json(_load_json(args.spec))
    try:
        ext = ah.extract_homomorphism(hmap, tol)
        motions = [ext.motion_index(i, verify=True) for i in range(hmap.size)]
    except NotCongruent as e:
        _emit(args, _json_text({"verdict": "not_dep", "error": str(e),
                                "residual": e.residual}))
        return EXIT_COUNTEREXAMPLE
    h1 = hmap.images[hmap.unit]
    unit_resid = max(float(np.max(np.abs(apply(m, h1) - hmap.images[i]), initial=0.0))
                     for i, m in enumerate(motions))
    hom_resid = 0.0
    for i in range(hmap.size):
        for j in range(hmap.size):
            p = hmap.product(i, j)
            if p is not None:
                d = motions[p].as_matrix() - motions[i].as_matrix() @ motions[j].as_matrix()
                hom_resid = max(hom_resid, float(np.max(np.abs(d))))
    out = {"hull_dim": int(ext.frame.hull_dim), "dim_range": hmap.dim,
           "anchors": [list(a) for a in ext.frame.anchors],
           "certificate": ext.frame.certificate,
           "unit_residual": unit_resid, "homomorphism_residual": hom_resid,
           "motions": [{"x": list(x), "Q": m.Q.tolist(), "t": m.t.tolist()}
                       for x, m in zip(hmap.elements, motions)]}
    if args.format == "csv":
        rows = [[*x, *m.Q.ravel(), *m.t] for x, m in zip(hmap.elements, motions)]
        n, dm = hmap.dim, len(hmap.elements[0])
        header = ([f"x_{i + 1}" for i in range(dm)]
                  + [f"Q_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
                  + [f"t_{i + 1}" for i in range(n)])
        _emit(args, _csv_text(header, rows))
    else:
        _emit(args, _json_text(out))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for numpy default_rng")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="tolerance override, repeatable; a bare number sets 'dep'")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    p = argparse.ArgumentParser(prog="simmaps", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("helix", parents=[common], help="sample a generalized helix")
    s.add_argument("--spec", required=True, help="group JSON (file, '-' or inline)")
    s.add_argument("--a", required=True, help="start point, comma separated")
    s.add_argument("--x-min", type=float, default=0.0)
    s.add_argument("--x-max", type=float, default=2 * np.pi)
    s.add_argument("--steps", type=int, default=64)
    s.add_argument("--coeffs", help="where to write the chord coefficients JSON")
    s.set_defaults(func=cmd_helix, default_format="csv")

    s = sub.add_parser("recover", parents=[common], help="chord coefficients from samples")
    s.add_argument("--samples", required=True, help="CSV with header r,C ('-' for stdin)")
    s.add_argument("--max-terms", type=int, default=3)
    s.set_defaults(func=cmd_recover, default_format="json")

    s = sub.add_parser("depcheck", parents=[common], help="fuzz a map for DEP violations")
    s.add_argument("--spec", required=True, help="map JSON (similarity or product)")
    s.add_argument("--box", default="-5,5,-5,5", help="xmin,xmax,ymin,ymax")
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_depcheck, default_format="json")

    s = sub.add_parser("theorem", parents=[common],
                       help="similarity certificate or DEP violation for a product map")
    s.add_argument("--spec", required=True, help="product-map JSON")
    s.add_argument("--r-max", type=float, default=10.0)
    s.add_argument("--r-steps", type=int, default=201)
    s.add_argument("--gammas", type=int, default=16)
    s.add_argument("--random-gammas", type=int, default=4)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--box", default="-5,5,-5,5")
    s.set_defaults(func=cmd_theorem, default_format="json")

    s = sub.add_parser("extract", parents=[common],
                       help="motions f_x of a sampled map on (R^m, +)")
    s.add_argument("--spec", required=True, help="sampled-map JSON")
    s.set_defaults(func=cmd_extract, default_format="json")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); nothing left to report
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except _PRECONDITION as e:
        sys.stderr.write(f"precondition failed: {type(e).__name__}: {e}\n")
        return EXIT_PRECONDITION
    except (InputError, ValueError, KeyError, TypeError) as e:
        sys.stderr.write(f"input error: {type(e).__name__}: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
