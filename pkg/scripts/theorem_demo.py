"""Run theorem_witness on random product maps of each kind and tabulate verdicts.

    python3 scripts/theorem_demo.py --maps 20 --seed 0
"""
import argparse
import collections

import numpy as np

from simmaps import dep_harness as dh


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--maps", type=int, default=20, help="maps per kind")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dim", type=int, default=7)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    tally = collections.Counter()
    gaps = collections.defaultdict(list)
    for kind in ("generic", "translation", "axis"):
        lo = 4 if kind == "axis" else 2
        for i in range(args.maps):
            pm = dh.random_product_map(int(rng.integers(lo, args.max_dim + 1)), rng, kind)
            w = dh.theorem_witness(pm, seed=i, trials=2000)
            if isinstance(w, dh.DepViolation):
                tally[kind, "violation"] += 1
                gaps[kind].append(w.image_gap)
            else:
                tally[kind, "similarity"] += 1

    print(f"{'kind':<12}{'similarity':>12}{'violation':>12}{'median gap':>14}")
    for kind in ("generic", "translation", "axis"):
        med = f"{np.median(gaps[kind]):.3g}" if gaps[kind] else "-"
        print(f"{kind:<12}{tally[kind, 'similarity']:>12}{tally[kind, 'violation']:>12}{med:>14}")


if __name__ == "__main__":
    main()
