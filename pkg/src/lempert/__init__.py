"""Generalized Lempert and Green functions with elementary local indicators on polydisks."""

from __future__ import annotations

from .disk import (
    RationalDisk,
    UndeterminedValuation,
    blaschke,
    disk_eval,
    multiplicity,
    numeric_lelong,
    range_check,
    scale_disk,
    valuation,
)
from .indicator import (
    PSI_0,
    PSI_V,
    ElementaryIndicator,
    estimate_offset,
    eval_indicator,
    find_bijection,
    mass,
    orthonormalize,
    support_relation,
)
from .polesys import (
    Assignment,
    InconsistencyError,
    Pole,
    PoleSystem,
    check_admissible,
    check_admissible_old,
    functional,
    green_bidisk_S,
    green_bidisk_S_eps,
    make_assignment,
)
from .search import (
    CollisionFamily,
    DiskFamily,
    build_example_disk,
    convergence_sweep,
    lagrange_basis,
    lagrange_pair_bound,
    minkowski_polydisk,
    optimize_upper_bound,
    perturb_to_collision,
)

__all__ = [
    "RationalDisk",
    "UndeterminedValuation",
    "blaschke",
    "disk_eval",
    "multiplicity",
    "numeric_lelong",
    "range_check",
    "scale_disk",
    "valuation",
    "PSI_0",
    "PSI_V",
    "ElementaryIndicator",
    "estimate_offset",
    "eval_indicator",
    "find_bijection",
    "mass",
    "orthonormalize",
    "support_relation",
    "Assignment",
    "InconsistencyError",
    "Pole",
    "PoleSystem",
    "check_admissible",
    "check_admissible_old",
    "functional",
    "green_bidisk_S",
    "green_bidisk_S_eps",
    "make_assignment",
    "CollisionFamily",
    "DiskFamily",
    "build_example_disk",
    "convergence_sweep",
    "lagrange_basis",
    "lagrange_pair_bound",
    "minkowski_polydisk",
    "optimize_upper_bound",
    "perturb_to_collision",
]
