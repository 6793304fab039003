"""Generators shared by the test modules."""
import numpy as np

from simmaps.helix import apply_batch, random_group
from simmaps.motion_group import apply, inverse

# filled by test_acceptance, printed in the pytest terminal summary
ACCEPTANCE_LINES: list[str] = []


def spread_point(g, rng, min_radius=0.5):
    """A start point whose radius in every rotation plane is at least ``min_radius``."""
    u = rng.standard_normal(g.dim)
    for i in range(g.s):
        v = u[2 * i:2 * i + 2]
        nv = np.linalg.norm(v)
        u[2 * i:2 * i + 2] = v / nv * max(nv, min_radius)
    return apply(inverse(g.k), u)


def helix_samples(rng, n, xs, s=None, rate_range=(0.8, 3.0)):
    g = random_group(n, rng, s=s, rate_range=rate_range)
    a = spread_point(g, rng)
    return g, a, apply_batch(g, xs, a)


def random_coeffs(rng, s_max=3, gap=0.2, k_range=(0.5, 5.0), s=None):
    from simmaps.chord_profile import make_coeffs
    if s is None:
        s = int(rng.integers(0, s_max + 1))
    while True:
        ks = np.sort(rng.uniform(*k_range, size=s))
        if s < 2 or np.min(np.diff(ks)) >= gap:
            break
    ws = rng.uniform(0.1, 2.0, size=s)
    return make_coeffs(rng.uniform(0.0, 2.0), list(zip(ks, ws)))
