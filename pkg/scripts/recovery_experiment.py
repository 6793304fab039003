"""Success rate of the two chord-profile recovery routes by number of terms.

Samples route: uniform samples at step 0.05.  Derivative route: exact
derivative values on a fixed grid.  A run counts as recovered when the
coefficient error is at most --tol.

    python3 scripts/recovery_experiment.py --cases 100
"""
import argparse

import numpy as np

from simmaps import chord_profile as cp
from simmaps.errors import SimMapsError


def random_coeffs(rng, s, gap=0.2, k_range=(0.5, 5.0)):
    while True:
        ks = np.sort(rng.uniform(*k_range, size=s))
        if s < 2 or np.min(np.diff(ks)) >= gap:
            break
    return cp.make_coeffs(rng.uniform(0.0, 2.0), list(zip(ks, rng.uniform(0.1, 2.0, size=s))))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    r = np.arange(200) * 0.05
    grid = np.linspace(0.1, 6.0, 40)
    print(f"{'s':>2}{'samples':>10}{'derivs':>10}")
    for s in range(4):
        ok_s = ok_d = 0
        for _ in range(args.cases):
            c = random_coeffs(rng, s)
            got = cp.recover_from_samples(np.c_[r, cp.eval_profile(c, r)], 3)
            ok_s += cp.coeff_distance(got, c) <= args.tol
            try:
                got = cp.recover_via_derivatives(cp.oracle_from_coeffs(c), 6.0, grid)
                ok_d += cp.coeff_distance(got, c) <= args.tol
            except SimMapsError:
                pass
        print(f"{s:>2}{ok_s:>10}{ok_d:>10}   (of {args.cases})")


if __name__ == "__main__":
    main()
