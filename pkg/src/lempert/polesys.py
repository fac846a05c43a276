"""Pole systems, admissible disks and the Lempert functional.

Also the closed-form Green functions of the two product-set pole systems in
the bidisk used as lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .disk import (
    COEFF_TOL,
    HIT_TOL,
    RationalDisk,
    disk_eval,
    hits,
    multiplicity,
    range_check,
)
from .indicator import NEG_INF, ElementaryIndicator, mass

DISTINCT_TOL = 1e-12
BUDGET_TOL = 1e-12
GREEN_SLACK = 1e-9


class PoleSystemError(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """A claimed upper bound fell below the Green lower bound."""


def _point(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex).copy()
    a.setflags(write=False)
    return a


def _encode_vec(v) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex)]


def _decode_vec(v) -> np.ndarray:
    return np.array([complex(c[0], c[1]) for c in v])


@dataclass(frozen=True, eq=False)
class Pole:
    point: np.ndarray
    psi: ElementaryIndicator

    def __post_init__(self):
        object.__setattr__(self, "point", _point(self.point))
        if self.point.shape != (self.psi.dim,):
            raise PoleSystemError("pole and indicator dimensions differ")

    @property
    def tau(self) -> float:
        return mass(self.psi)


@dataclass(frozen=True, eq=False)
class PoleSystem:
    poles: tuple[Pole, ...]

    def __post_init__(self):
        poles = tuple(self.poles)
        object.__setattr__(self, "poles", poles)
        if poles and len({p.psi.dim for p in poles}) != 1:
            raise PoleSystemError("poles live in different dimensions")
        for i in range(len(poles)):
            for j in range(i + 1, len(poles)):
                if np.linalg.norm(poles[i].point - poles[j].point) <= DISTINCT_TOL:
                    raise PoleSystemError(f"poles {i} and {j} coincide; model collisions with a CollisionFamily")

    @classmethod
    def build(cls, items) -> "PoleSystem":
        """From an iterable of ``(point, indicator)`` pairs."""
        return cls(tuple(Pole(a, psi) for a, psi in items))

    def __len__(self) -> int:
        return len(self.poles)

    @property
    def taus(self) -> list[float]:
        return [p.tau for p in self.poles]

    def subsystem(self, count: int) -> "PoleSystem":
        return PoleSystem(self.poles[:count])

    def to_json(self) -> dict:
        return {"poles": [{"a": _encode_vec(p.point), "psi": p.psi.to_json()} for p in self.poles]}

    @classmethod
    def from_json(cls, data: dict) -> "PoleSystem":
        try:
            return cls.build((_decode_vec(p["a"]), ElementaryIndicator.from_json(p["psi"]))
                             for p in data["poles"])
        except (KeyError, TypeError, IndexError) as exc:
            raise PoleSystemError(f"malformed pole system JSON: {exc}") from exc


def _canonical(points) -> tuple[complex, ...]:
    return tuple(sorted((complex(a) for a in points), key=lambda c: (c.real, c.imag)))


@dataclass(frozen=True, eq=False)
class Assignment:
    """A disk with preimage sets ``A_j`` and the multiplicity at each point."""

    disk: RationalDisk
    preimages: tuple[tuple[complex, ...], ...]
    multiplicities: tuple[tuple[float, ...], ...]

    def to_json(self) -> dict:
        return {
            "disk": self.disk.to_json(),
            "preimages": [
                [{"alpha": [a.real, a.imag], "multiplicity": m} for a, m in zip(pts, ms)]
                for pts, ms in zip(self.preimages, self.multiplicities)
            ],
        }


def make_assignment(
    system: PoleSystem,
    disk: RationalDisk,
    preimages: Sequence[Sequence[complex]],
    tol_hit: float = HIT_TOL,
    tol_coeff: float = COEFF_TOL,
) -> Assignment:
    if len(preimages) != len(system):
        raise PoleSystemError(f"expected {len(system)} preimage sets, got {len(preimages)}")
    pre = tuple(_canonical(pts) for pts in preimages)
    mults = tuple(
        tuple(multiplicity(disk, a, pole.point, pole.psi, tol_hit, tol_coeff) for a in pts)
        for pts, pole in zip(pre, system.poles)
    )
    return Assignment(disk, pre, mults)


def assignment_from_json(system: PoleSystem, data: dict, **tols) -> Assignment:
    disk = RationalDisk.from_json(data["disk"])
    pre = [[complex(p["alpha"][0], p["alpha"][1]) if isinstance(p, dict) else complex(p[0], p[1])
            for p in pts] for pts in data["preimages"]]
    return make_assignment(system, disk, pre, **tols)


@dataclass
class PoleReport:
    index: int
    preimages: list[complex]
    multiplicities: list[float]
    all_hit: bool
    total: float
    tau: float
    within_budget: bool
    stored_match: bool

    @property
    def passed(self) -> bool:
        return self.all_hit and self.within_budget and self.stored_match


@dataclass
class AdmissibilityReport:
    passed: bool
    base_point_ok: bool
    in_range: bool
    poles: list[PoleReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "base_point_ok": self.base_point_ok,
            "in_range": self.in_range,
            "poles": [
                {
                    "index": p.index,
                    "preimages": [[a.real, a.imag] for a in p.preimages],
                    "multiplicities": p.multiplicities,
                    "all_hit": p.all_hit,
                    "total": p.total,
                    "tau": p.tau,
                    "within_budget": p.within_budget,
                }
                for p in self.poles
            ],
        }


def check_admissible(
    system: PoleSystem,
    z,
    assignment: Assignment,
    scale: float = 1.0,
    tol_hit: float = HIT_TOL,
    tol_coeff: float = COEFF_TOL,
) -> AdmissibilityReport:
    """Recompute multiplicities and check hits, mass budgets, ``phi(0) = z``
    and that the disk maps into the polydisk of radius ``scale``."""
    disk = assignment.disk
    base_ok = float(np.linalg.norm(disk_eval(disk, 0.0) - np.asarray(z, dtype=complex))) <= tol_hit
    in_range = range_check(disk, scale).ok
    reports = []
    for j, (pole, pts, stored) in enumerate(zip(system.poles, assignment.preimages, assignment.multiplicities)):
        inside = all(abs(a) < 1 for a in pts)
        hit = inside and all(hits(disk, a, pole.point, tol_hit) for a in pts)
        mults = [multiplicity(disk, a, pole.point, pole.psi, tol_hit, tol_coeff) if abs(a) < 1 else 0.0
                 for a in pts]
        total = float(sum(mults))
        reports.append(PoleReport(
            index=j,
            preimages=list(pts),
            multiplicities=mults,
            all_hit=hit,
            total=total,
            tau=pole.tau,
            within_budget=total <= pole.tau + BUDGET_TOL,
            stored_match=len(stored) == len(mults) and all(abs(s - m) <= 1e-12 for s, m in zip(stored, mults)),
        ))
    passed = base_ok and in_range and all(r.passed for r in reports)
    return AdmissibilityReport(passed, base_ok, in_range, reports)


@dataclass
class FunctionalValue:
    value: float
    terms: list[tuple[int, complex, float, float]]

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "terms": [{"pole": j, "alpha": [a.real, a.imag], "multiplicity": m, "contribution": c}
                      for j, a, m, c in self.terms],
        }


def functional(assignment: Assignment) -> FunctionalValue:
    """Sum over poles and preimages of ``multiplicity * log|alpha|``."""
    terms = []
    for j, (pts, ms) in enumerate(zip(assignment.preimages, assignment.multiplicities)):
        for a, m in zip(pts, ms):
            if m == 0:
                c = 0.0
            elif a == 0:
                c = NEG_INF
            else:
                c = m * math.log(abs(a))
            terms.append((j, a, float(m), c))
    return FunctionalValue(float(sum(t[3] for t in terms)), terms)


@dataclass
class OldAdmissibilityReport:
    passed: bool
    base_point_ok: bool
    full_mass: list[bool]
    multiplicities: list[float]
    value: float


def check_admissible_old(
    system: PoleSystem,
    z,
    disk: RationalDisk,
    points: Sequence[complex],
    tol_hit: float = HIT_TOL,
    tol_coeff: float = COEFF_TOL,
) -> OldAdmissibilityReport:
    """One preimage per pole, each hit with the full mass ``tau_j``.

    ``Psi_j(phi - a_j) <= tau_j log|zeta - alpha_j| + C`` near ``alpha_j`` is
    equivalent to the multiplicity at ``alpha_j`` reaching ``tau_j``.
    """
    if len(points) != len(system):
        raise PoleSystemError("need exactly one point per pole")
    base_ok = float(np.linalg.norm(disk_eval(disk, 0.0) - np.asarray(z, dtype=complex))) <= tol_hit
    mults, full = [], []
    for pole, a in zip(system.poles, points):
        m = multiplicity(disk, a, pole.point, pole.psi, tol_hit, tol_coeff)
        mults.append(m)
        full.append(abs(m - pole.tau) <= BUDGET_TOL)
    value = float(sum(0.0 if p.tau == 0 else p.tau * math.log(abs(a)) if a != 0 else NEG_INF
                      for p, a in zip(system.poles, points)))
    return OldAdmissibilityReport(base_ok and all(full), base_ok, full, mults, value)


def _phi(w: complex, x: complex) -> complex:
    return (w - x) / (1 - x * np.conj(w))


def _log_abs(x: complex) -> float:
    return math.log(abs(x)) if x != 0 else NEG_INF


GREEN_FORMULAS = ("corrected", "verbatim")


def green_bidisk_S(z, a: complex, b: complex, formula: str = "corrected") -> float:
    """Green function of ``{((a,0), Psi_V), ((b,0), Psi_V)}`` in the bidisk.

    ``max(log|phi_a(z1) phi_b(z1)|, 2 log|z2|)``. The ``verbatim`` variant
    evaluates the first factor pair as ``phi_a(z1) phi_b(z2)``, which does
    not reproduce the value ``2 log|a|`` at ``(0, gamma)``.
    """
    z1, z2 = complex(z[0]), complex(z[1])
    second = z1 if formula == "corrected" else z2
    if formula not in GREEN_FORMULAS:
        raise ValueError(f"unknown green formula {formula!r}")
    return max(_log_abs(_phi(a, z1) * _phi(b, second)), 2 * _log_abs(z2))


def green_bidisk_S_eps(z, a: complex, b: complex, eps: complex, formula: str = "corrected") -> float:
    """Green function of the four single poles ``(a,0), (b,0), (b,eps), (a,eps)``."""
    z1, z2 = complex(z[0]), complex(z[1])
    if formula not in GREEN_FORMULAS:
        raise ValueError(f"unknown green formula {formula!r}")
    second = z1 if formula == "corrected" else z2
    return max(_log_abs(_phi(a, z1) * _phi(b, second)), _log_abs(z2 * _phi(eps, z2)))


def lower_bound_check(functional_value, green_value: float, tol: float = GREEN_SLACK) -> bool:
    """``G_S(z) <= S(phi, A)`` up to ``tol``; False means something is wrong."""
    v = functional_value.value if isinstance(functional_value, FunctionalValue) else float(functional_value)
    return green_value <= v + tol


def extend_assignment(system: PoleSystem, assignment: Assignment) -> Assignment:
    """Pad an assignment for a leading subsystem with empty preimage sets."""
    missing = len(system) - len(assignment.preimages)
    if missing < 0:
        raise PoleSystemError("assignment has more poles than the system")
    return replace(
        assignment,
        preimages=assignment.preimages + ((),) * missing,
        multiplicities=assignment.multiplicities + ((),) * missing,
    )


def check_subset_monotonicity(system: PoleSystem, z, assignment: Assignment, **tols) -> bool:
    """An admissible assignment for the first N' poles stays admissible for
    all N poles (extra sets empty) with the same functional value."""
    count = len(assignment.preimages)
    sub = system.subsystem(count)
    if not check_admissible(sub, z, assignment, **tols).passed:
        return False
    full = extend_assignment(system, assignment)
    if not check_admissible(system, z, full, **tols).passed:
        return False
    return functional(full).value == functional(assignment).value
