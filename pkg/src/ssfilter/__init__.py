"""Exact-arithmetic spectral-sequence calculator for families of spaces
filtered by powers of a fixed space.

Builds first pages from sign-twisted invariants of tensor powers, assembles
face-map-pullback differentials, computes second pages over the rationals,
and reports Betti tables of the zeroth strata (configuration spaces, spaces
of coprime polynomial tuples, moduli of basepoint-free pencils).
"""

__version__ = "0.1.0"

from .families import (
    family_pencils_curve,
    family_pencils_p1,
    family_tuples,
    family_uconf_general,
    family_uconf_plane,
)
from .engine import (
    betti_of_stratum,
    build_e1,
    compute_e2,
    euler_characteristic,
    stalk_acyclicity_check,
    stratum_tables,
)

__all__ = [
    "__version__",
    "family_uconf_plane",
    "family_uconf_general",
    "family_tuples",
    "family_pencils_p1",
    "family_pencils_curve",
    "build_e1",
    "compute_e2",
    "betti_of_stratum",
    "stratum_tables",
    "euler_characteristic",
    "stalk_acyclicity_check",
]
