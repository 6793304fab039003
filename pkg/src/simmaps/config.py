"""Numerical tolerances shared across the library.

Every routine that makes a yes/no numerical decision takes an optional
``tol`` argument; ``None`` means :data:`DEFAULT`.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    orthogonality: float = 1e-12      # ||Q^T Q - I||_max for a Motion
    distance: float = 1e-9            # point / distance agreement
    congruence: float = 1e-9          # pairwise-distance mismatch in fit_motion
    general_position: float = 1e-8    # Cayley-Menger vs diameter^(2n)
    rank: float = 1e-8                # relative singular-value cutoff for hulls
    commutation: float = 1e-10        # ||AB - BA||_max
    motion_commutation: float = 1e-9  # phi_x o psi_y vs psi_y o phi_x
    diagonalization: float = 1e-9     # ||P^-1 A P - diag||_max
    unitary: float = 1e-10            # ||P^* P - I||_max
    rate_merge: float = 1e-9          # equal rotation rates / kappas
    radius: float = 1e-9              # rotation radii treated as zero
    homomorphism: float = 1e-8        # verify_homomorphism pass threshold
    profile: float = 1e-9             # profiles_equal grid deviation
    hankel_rank: float = 1e-7         # Prony model-order cutoff
    weight_drop: float = 1e-7         # recovered weights below this are dropped
    recovery: float = 1e-6            # relative sample residual after recovery
    dep: float = 1e-9                 # dep_test image-distance gap

    def with_overrides(self, **overrides: float) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
