"""Upper bounds for the generalized Lempert function.

Explicit extremal disk for two vertical poles in the bidisk, disk rescaling,
Lagrange corrections, the perturbation that turns an admissible disk for a
limit system into one for nearby single-pole systems, and a derivative-free
search over parameterized disk families.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import null_space
from scipy.optimize import minimize

from .disk import (
    HIT_TOL,
    RationalDisk,
    add_polynomial,
    boundary_max,
    compose_mobius,
    coordinate_series,
    disk_eval,
    mobius,
    range_check,
    scale_disk,
)
from .indicator import PSI_V, ElementaryIndicator
from .polesys import (
    GREEN_SLACK,
    Assignment,
    FunctionalValue,
    InconsistencyError,
    PoleSystem,
    check_admissible,
    functional,
    green_bidisk_S,
    green_bidisk_S_eps,
    make_assignment,
)

FEASIBILITY_SCALE = 1.0 - 1e-9
NODE_TOL = 1e-13


class SearchError(ValueError):
    pass


class Infeasible(Exception):
    """Raised by family builders when parameters give no valid disk."""

    def __init__(self, violation: float = 1.0):
        super().__init__(violation)
        self.violation = float(violation)


def minkowski_polydisk(z) -> float:
    """Minkowski function of the unit polydisk, ``max_i |z_i|``."""
    z = np.asarray(z, dtype=complex)
    return float(np.abs(z).max()) if z.size else 0.0


def _blaschke_product(zeros) -> tuple[np.ndarray, np.ndarray]:
    num = np.ones(1, dtype=complex)
    den = np.ones(1, dtype=complex)
    for w in zeros:
        p, q = mobius(w)
        num, den = P.polymul(num, p), P.polymul(den, q)
    return num, den


def _phi(w, x):
    return (w - x) / (1 - x * np.conj(w))


# ---------------------------------------------------------------------------
# the two-pole bidisk example


@dataclass
class ExampleDisk:
    system: PoleSystem
    z: np.ndarray
    assignment: Assignment
    zeta1: complex
    zeta2: complex
    zeta4: complex


def vertical_system(a: complex, b: complex) -> PoleSystem:
    return PoleSystem.build([((a, 0), PSI_V), ((b, 0), PSI_V)])


TEMPLATE_SUBSETS = ("both", "first", "second")


def _example_coords(a: float, gamma: complex, zeta2: complex, subset: str = "both"):
    """Template coordinates for a critical point ``zeta2`` with ``|zeta2|^2 = a``.

    ``phi_1 = phi_{-a}(kappa phi_{zeta2}^2)`` with ``kappa = -a/zeta2^2`` so that
    ``phi_1(0) = 0``; ``subset`` picks which preimages of ``a`` under ``phi_1``
    the second coordinate vanishes at.
    """
    if subset not in TEMPLATE_SUBSETS:
        raise ValueError(f"subset must be one of {TEMPLATE_SUBSETS}")
    s = math.sqrt(2 * a / (1 + a * a))
    kappa = -a / zeta2 ** 2
    z1, z4 = _phi(zeta2, s * zeta2 / math.sqrt(a)), _phi(zeta2, -s * zeta2 / math.sqrt(a))
    num, den = mobius(zeta2)
    p1, q1 = compose_mobius(-a, kappa * P.polymul(num, num), P.polymul(den, den))
    kept = {"both": [z1, z4], "first": [z1], "second": [z4]}[subset]
    zeros = kept + [zeta2]
    c = gamma / np.prod(zeros)
    p2, q2 = _blaschke_product(zeros)
    return (p1, c * p2), (q1, q2), [complex(x) for x in kept], c


def build_example_disk(a: float, gamma: float) -> ExampleDisk:
    """Admissible disk for ``{((a,0),Psi_V), ((-a,0),Psi_V)}`` at ``(0, gamma)``.

    ``zeta2 = sqrt(a)``, ``zeta1, zeta4 = phi_{zeta2}(+-sqrt(2a/(1+a^2)))``,
    first coordinate ``phi_{-a}(-phi_{zeta2}^2)`` (critical at ``zeta2``),
    second coordinate a Blaschke product vanishing at the three points.
    Preimages ``{zeta1, zeta4}`` for ``(a,0)`` and ``{zeta2}`` for ``(-a,0)``.
    """
    if not 0 < a < 1:
        raise SearchError("a must lie in (0, 1)")
    if not a * a < abs(gamma) < a ** 1.5:
        raise SearchError(f"need a^2 < |gamma| < a^(3/2); got a={a}, gamma={gamma}")
    zeta2 = math.sqrt(a)
    nums, dens, (z1, z4), _ = _example_coords(a, gamma, zeta2)
    disk = RationalDisk(nums, dens)
    system = vertical_system(a, -a)
    z = np.array([0.0, gamma], dtype=complex)
    assignment = make_assignment(system, disk, [[z1, z4], [zeta2]])
    return ExampleDisk(system, z, assignment, z1, complex(zeta2), z4)


# ---------------------------------------------------------------------------
# Lagrange interpolation


def lagrange_basis(nodes: Sequence[complex]) -> list[np.ndarray]:
    """Cardinal polynomials (ascending coefficients), ``Pi_a(a) = 1``, ``Pi_a(b) = 0``."""
    nodes = [complex(x) for x in nodes]
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if abs(nodes[i] - nodes[j]) <= NODE_TOL:
                raise SearchError(f"duplicate interpolation nodes {nodes[i]} and {nodes[j]}")
    out = []
    for i, x in enumerate(nodes):
        others = nodes[:i] + nodes[i + 1:]
        poly = P.polyfromroots(others) if others else np.ones(1)
        denom = np.prod([x - y for y in others]) if others else 1.0
        out.append(np.asarray(poly, dtype=complex) / denom)
    return out


def interpolate(nodes: Sequence[complex], values) -> np.ndarray:
    """Vector polynomial ``sum_a Pi_a w(a)``; ``values`` has shape (len(nodes), n).

    Returns coefficients with shape (n, len(nodes)).
    """
    values = np.asarray(values, dtype=complex)
    basis = lagrange_basis(nodes)
    deg = len(nodes)
    out = np.zeros((values.shape[1], deg), dtype=complex)
    for pi, w in zip(basis, values):
        out[:, : pi.size] += np.outer(w, pi)
    return out


def poly_sup(poly: np.ndarray, samples: int = 4096) -> float:
    """``sup_{|zeta|=1} ||P(zeta)||`` for a vector polynomial of shape (n, d+1)."""
    zeta = np.exp(2j * np.pi * np.arange(samples) / samples)
    vals = np.stack([P.polyval(zeta, c) for c in np.atleast_2d(poly)], axis=-1)
    return float(np.linalg.norm(vals, axis=-1).max())


def _segment_distance(x0: complex, x1: complex, pts) -> float:
    d = x1 - x0
    best = math.inf
    for p in pts:
        t = 0.0 if d == 0 else min(1.0, max(0.0, ((p - x0) * np.conj(d)).real / abs(d) ** 2))
        best = min(best, abs(p - (x0 + t * d)))
    return best


@dataclass
class LagrangeBoundReport:
    gamma: float
    sup_P: float
    divided_difference: float
    w0_norm: float
    # sup|P| / (|dd| + |w0|): the empirical constant with L0 = L1
    ratio: float


def lagrange_pair_bound(x0, x1, others, w0, w1, samples: int = 4096):
    """Interpolant with ``P(x0)=w0``, ``P(x1)=w1``, zero at ``others``.

    The separation ``|x1-x0| <= gamma <= dist([x0,x1], others)/2`` is checked
    with ``gamma`` set to half the distance.
    """
    others = [complex(x) for x in others]
    gap = abs(complex(x1) - complex(x0))
    gamma = _segment_distance(complex(x0), complex(x1), others) / 2 if others else max(gap, 1.0)
    if gap > gamma:
        raise SearchError(f"separation fails: |x1-x0|={gap:.3g} > gamma={gamma:.3g}")
    w0 = np.atleast_1d(np.asarray(w0, dtype=complex))
    w1 = np.atleast_1d(np.asarray(w1, dtype=complex))
    values = [w0, w1] + [np.zeros_like(w0)] * len(others)
    poly = interpolate([x0, x1, *others], values)
    sup = poly_sup(poly, samples)
    dd = float(np.linalg.norm((w1 - w0) / (complex(x1) - complex(x0))))
    wn = float(np.linalg.norm(w0))
    ratio = sup / (dd + wn) if dd + wn > 0 else 0.0
    return poly, LagrangeBoundReport(gamma, sup, dd, wn, ratio)


# ---------------------------------------------------------------------------
# colliding pole families


def pair_indicator(v) -> ElementaryIndicator:
    """``max(log||pi(z)||, 2 log|z . conj(v)|)`` up to a bounded term, pi = projection on v^perp."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    comp = null_space(v.conj()[None, :]).T
    basis = np.vstack([comp, v[None, :]])
    weights = np.r_[np.ones(len(comp)), 2.0]
    return ElementaryIndicator(basis, weights)


def single_indicator(n: int) -> ElementaryIndicator:
    return ElementaryIndicator.standard([1.0] * n)


PointPath = Callable[[complex], np.ndarray]


@dataclass
class CollisionFamily:
    """Single poles ``a_j(eps)`` and pairs ``a'_j(eps), a''_j(eps)`` merging at ``eps = 0``.

    ``directions[j]`` is the unit limit direction of ``a''_j - a'_j``.
    ``bidisk`` records ``(a, b)`` for the two-pair family in the bidisk whose
    Green functions are known in closed form.
    """

    dim: int
    singles: tuple[PointPath, ...]
    pairs: tuple[tuple[PointPath, PointPath], ...]
    single_limits: tuple[np.ndarray, ...]
    pair_limits: tuple[np.ndarray, ...]
    directions: tuple[np.ndarray, ...]
    bidisk: Optional[tuple[complex, complex]] = None

    @classmethod
    def bidisk_family(cls, a: complex, b: complex) -> "CollisionFamily":
        """Pairs ``(a,0),(a,eps)`` and ``(b,0),(b,eps)``; both collide vertically."""
        def fixed(c):
            return lambda eps: np.array([c, 0.0], dtype=complex)

        def moving(c):
            return lambda eps: np.array([c, eps], dtype=complex)

        e2 = np.array([0.0, 1.0], dtype=complex)
        return cls(
            dim=2,
            singles=(),
            pairs=((fixed(a), moving(a)), (fixed(b), moving(b))),
            single_limits=(),
            pair_limits=(np.array([a, 0], dtype=complex), np.array([b, 0], dtype=complex)),
            directions=(e2, e2),
            bidisk=(complex(a), complex(b)),
        )

    @property
    def M(self) -> int:
        return len(self.singles)

    @property
    def N(self) -> int:
        return len(self.singles) + len(self.pairs)

    def points(self, eps: complex) -> list[np.ndarray]:
        pts = [np.asarray(f(eps), dtype=complex) for f in self.singles]
        for f1, f2 in self.pairs:
            pts += [np.asarray(f1(eps), dtype=complex), np.asarray(f2(eps), dtype=complex)]
        return pts

    def distinct(self, eps: complex, tol: float = 1e-12) -> bool:
        pts = self.points(eps)
        return all(np.linalg.norm(pts[i] - pts[j]) > tol
                   for i in range(len(pts)) for j in range(i + 1, len(pts)))

    def gap(self, j: int, eps: complex) -> tuple[complex, np.ndarray]:
        """``(n_j(eps), v_j(eps))`` with ``a'' - a' = n v``, ``||v|| = 1``, v aligned with the limit."""
        f1, f2 = self.pairs[j]
        d = np.asarray(f2(eps), dtype=complex) - np.asarray(f1(eps), dtype=complex)
        norm = float(np.linalg.norm(d))
        if norm == 0:
            raise SearchError("pair points coincide")
        proj = np.vdot(self.directions[j], d)
        phase = proj / abs(proj) if abs(proj) > 0 else 1.0
        n = norm * phase
        return complex(n), d / n

    def max_gap(self, eps: complex) -> float:
        return max((abs(self.gap(j, eps)[0]) for j in range(len(self.pairs))), default=0.0)

    def projection(self, j: int) -> np.ndarray:
        """Orthogonal projection onto the complement of the j-th collision direction."""
        v = self.directions[j] / np.linalg.norm(self.directions[j])
        return np.eye(self.dim) - np.outer(v, v.conj())

    def generic_direction(self, seed: int = 0, floor: float = 1e-3) -> np.ndarray:
        """Seeded unit vector whose projections off every collision direction are nonzero."""
        rng = np.random.default_rng(seed)
        for _ in range(100):
            v = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
            v /= np.linalg.norm(v)
            if all(np.linalg.norm(self.projection(j) @ v) > floor for j in range(len(self.pairs))):
                return v
        raise SearchError("no generic direction found")

    def limit_system(self) -> PoleSystem:
        items = [(a, single_indicator(self.dim)) for a in self.single_limits]
        items += [(a, pair_indicator(v)) for a, v in zip(self.pair_limits, self.directions)]
        return PoleSystem.build(items)

    def single_system(self, eps: complex) -> PoleSystem:
        if not self.distinct(eps):
            raise SearchError(f"points of S(eps) are not distinct at eps={eps}")
        psi = single_indicator(self.dim)
        return PoleSystem.build((p, psi) for p in self.points(eps))


def eta_from_rule(rule: str, gap: float) -> float:
    """``sqrt``: |n|^(1/2); ``power:<p>``: |n|^p; ``zero``: no derivative perturbation."""
    if rule == "sqrt":
        return math.sqrt(gap)
    if rule == "zero":
        return 0.0
    if rule.startswith("power:"):
        return gap ** float(rule.split(":", 1)[1])
    raise ValueError(f"unknown eta rule {rule!r}")


@dataclass
class CollisionResult:
    eps: complex
    eta: float
    system: PoleSystem
    assignment: Assignment
    value: FunctionalValue
    admissible: bool
    sup_P: float
    range_before: float
    mu: float
    residual: float
    lambdas: dict
    nodes: list[complex]


def _fit_by_rescale(disk: RationalDisk, target: float, samples: int = 4096) -> float:
    """Largest ``mu`` in (0, 1] with ``disk(mu .)`` inside the target polydisk."""
    if range_check(disk, target, samples).ok:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if range_check(scale_disk(disk, mid), target, samples).ok:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise SearchError("no rescaling fits the disk into the target polydisk")
    return lo


def _classify(base: Assignment, family: CollisionFamily):
    kinds = []
    for j, (pts, ms) in enumerate(zip(base.preimages, base.multiplicities)):
        if j < family.M:
            if len(pts) > 1:
                raise SearchError(f"single pole {j} has more than one preimage")
            kinds.append(("single", list(pts)))
            continue
        if not pts:
            kinds.append(("empty", []))
        elif len(pts) == 2:
            kinds.append(("split", list(pts)))
        elif len(pts) == 1 and abs(ms[0] - 2) < 1e-9:
            kinds.append(("double", list(pts)))
        elif len(pts) == 1 and abs(ms[0] - 1) < 1e-9:
            kinds.append(("simple", list(pts)))
        else:
            raise SearchError(f"pole {j}: unsupported preimage configuration {pts} / {ms}")
    return kinds


def perturb_to_collision(
    base: Assignment,
    family: CollisionFamily,
    eps: complex,
    eta: float,
    z,
    target_scale: float = FEASIBILITY_SCALE,
    tol_hit: float = 1e-10,
) -> CollisionResult:
    """Disk admissible for the single-pole system ``S(eps)`` built from ``base``.

    ``base`` must be admissible for ``family.limit_system()``. A double
    preimage ``alpha'`` of a pair pole is split into ``alpha'`` and
    ``alpha' + n(eps)/lambda`` where ``lambda`` is the derivative of the
    perturbed disk along the collision direction; the remaining mismatch is
    absorbed by a Lagrange correction vanishing at 0, and the result is
    rescaled into the polydisk.
    """
    if not family.distinct(eps):
        raise SearchError(f"points of S(eps) are not distinct at eps={eps}")
    kinds = _classify(base, family)
    disk = base.disk
    n = family.dim

    # eta * zeta * prod(zeta - alpha over kept points) * sum_j [...] v_j
    common = np.array([0.0, 1.0], dtype=complex)
    doubles = []
    for j, (kind, pts) in enumerate(kinds):
        if kind in ("single", "split", "simple"):
            for a in pts:
                common = P.polymul(common, [-a, 1.0])
        elif kind == "double":
            doubles.append((j, pts[0]))
    correction = np.zeros((n, 1), dtype=complex)
    for j, a in doubles:
        term = np.array([-a, 1.0], dtype=complex)
        for k, b in doubles:
            if k != j:
                term = P.polymul(term, P.polymul([-b, 1.0], [-b, 1.0]))
        term = P.polymul(common, term)
        v = family.directions[j - family.M]
        block = np.outer(v, term)
        width = max(correction.shape[1], block.shape[1])
        correction = np.pad(correction, ((0, 0), (0, width - correction.shape[1])))
        correction[:, : block.shape[1]] += block
    tilde = add_polynomial(disk, eta * correction) if doubles and eta != 0 else disk

    lambdas = {}
    nodes, targets = [0.0 + 0.0j], [np.asarray(z, dtype=complex)]
    for j, (kind, pts) in enumerate(kinds):
        if kind == "single":
            if pts:
                nodes.append(pts[0])
                targets.append(family.singles[j](eps))
            continue
        p = j - family.M
        f1, f2 = family.pairs[p]
        if kind == "split":
            nodes += pts
            targets += [f1(eps), f2(eps)]
        elif kind == "simple":
            nodes.append(pts[0])
            targets.append(f1(eps))
        elif kind == "double":
            a = pts[0]
            v = family.directions[p]
            deriv = coordinate_series(tilde, a, 1)[:, 1]
            lam = complex(np.vdot(v, deriv))
            if abs(lam) <= 1e-12 * max(1.0, float(np.linalg.norm(deriv))):
                raise SearchError(f"derivative along the collision direction vanishes at pole {j}; increase eta")
            n_eps, _ = family.gap(p, eps)
            lambdas[j] = lam
            nodes += [a, a + n_eps / lam]
            targets += [f1(eps), f2(eps)]
    if any(abs(a) >= 1 for a in nodes):
        raise SearchError("an interpolation node left the unit disk")
    values = [np.asarray(t, dtype=complex) - disk_eval(tilde, a) for a, t in zip(nodes, targets)]
    values[0] = np.zeros(n, dtype=complex)
    correction_P = interpolate(nodes, values)
    final = add_polynomial(tilde, correction_P)

    residual = max(float(np.linalg.norm(disk_eval(final, a) - np.asarray(t))) for a, t in zip(nodes, targets))
    sup_P = poly_sup(correction_P)
    range_before = float(boundary_max(final).max())
    mu = _fit_by_rescale(final, target_scale)
    scaled = scale_disk(final, mu) if mu < 1 else final

    # preimage sets for S(eps): singles, then (a', a'') for each pair
    pre: list[list[complex]] = [[] for _ in range(family.M + 2 * len(family.pairs))]
    cursor = 1
    for j, (kind, pts) in enumerate(kinds):
        if kind == "single":
            if pts:
                pre[j].append(nodes[cursor])
                cursor += 1
            continue
        slot = family.M + 2 * (j - family.M)
        if kind in ("split", "double"):
            pre[slot].append(nodes[cursor])
            pre[slot + 1].append(nodes[cursor + 1])
            cursor += 2
        elif kind == "simple":
            pre[slot].append(nodes[cursor])
            cursor += 1
    pre = [[a / mu for a in pts if abs(a) < mu] for pts in pre]
    system = family.single_system(eps)
    assignment = make_assignment(system, scaled, pre, tol_hit=tol_hit)
    report = check_admissible(system, z, assignment, scale=target_scale, tol_hit=tol_hit)
    return CollisionResult(
        eps=eps,
        eta=float(eta),
        system=system,
        assignment=assignment,
        value=functional(assignment),
        admissible=report.passed,
        sup_P=sup_P,
        range_before=range_before,
        mu=mu,
        residual=residual,
        lambdas=lambdas,
        nodes=nodes,
    )


# ---------------------------------------------------------------------------
# parameterized families and the optimizer


def squash(u: float, v: float) -> complex:
    """Map R^2 onto the open unit disk radially via tanh."""
    rho = math.hypot(u, v)
    if rho == 0:
        return 0j
    return complex(u, v) * (math.tanh(rho) / rho)


def unsquash(w: complex) -> tuple[float, float]:
    r = abs(w)
    if r == 0:
        return 0.0, 0.0
    rho = math.atanh(min(r, 1 - 1e-16))
    return rho * w.real / r, rho * w.imag / r


Builder = Callable[[np.ndarray], tuple[RationalDisk, list[list[complex]]]]


@dataclass
class DiskFamily:
    """``build(theta) -> (disk, preimage sets)``; raises :class:`Infeasible`."""

    name: str
    build: Builder
    x0: np.ndarray
    spread: float = 0.5


def blaschke_family(system: PoleSystem, z, extra_zeros: int = 0) -> DiskFamily:
    """Coordinates ``phi_{z_i}(c_i zeta B_i(zeta))`` for a single pole.

    Each coordinate is a Blaschke product of degree ``1 + extra_zeros`` with an
    interior multiplier; ``B_i`` carries the extra free zeros. The multiplier
    ``c_i`` is solved so the pole is hit at the free preimage ``alpha``, and
    feasibility requires ``|c_i| <= 1``.
    """
    if len(system) != 1:
        raise SearchError("the Blaschke family handles one pole")
    a = system.poles[0].point
    z = np.asarray(z, dtype=complex)
    n = len(z)
    targets = [_phi(z[i], a[i]) for i in range(n)]

    def build(theta):
        alpha = squash(theta[0], theta[1])
        if abs(alpha) < 1e-300:
            raise Infeasible(10.0)
        nums, dens = [], []
        excess = 0.0
        for i in range(n):
            zeros = [squash(*theta[2 + 2 * (i * extra_zeros + k): 4 + 2 * (i * extra_zeros + k)])
                     for k in range(extra_zeros)]
            bn, bd = _blaschke_product(zeros)
            bval = P.polyval(alpha, bn) / P.polyval(alpha, bd)
            if abs(bval) == 0:
                raise Infeasible(10.0)
            c = targets[i] / (alpha * bval)
            excess = max(excess, abs(c) - 1)
            p, q = compose_mobius(z[i], c * P.polymul([0, 1], bn), bd)
            nums.append(p)
            dens.append(q)
        if excess > 0:
            raise Infeasible(excess)
        return RationalDisk(tuple(nums), tuple(dens)), [[alpha]]

    r0 = min(0.9, max(abs(t) for t in targets) ** 0.5 + 0.05)
    # free zeros start near the circle, where their factor is nearly a unimodular constant
    starts = [unsquash(0.999 * np.exp(2j * np.pi * (k + 0.5) / max(1, n * extra_zeros)))
              for k in range(n * extra_zeros)]
    x0 = np.r_[unsquash(r0 + 0j), np.ravel(starts)] if starts else np.array(unsquash(r0 + 0j))
    return DiskFamily("blaschke", build, x0)


def template_family(a: float, gamma: complex, subset: str = "both", mu: float = 1 - 1e-7) -> DiskFamily:
    """Two-pole bidisk template, rescaled by ``mu`` to clear the feasibility margin.

    ``phi_1(0) = 0`` pins ``|zeta2| = sqrt(a)``, so the continuous parameter is
    the phase of ``zeta2``; ``subset`` fixes the preimage set of ``(a, 0)``.
    """

    def build(theta):
        zeta2 = math.sqrt(a) * complex(math.cos(theta[0]), math.sin(theta[0]))
        nums, dens, kept, c = _example_coords(a, gamma, zeta2, subset)
        if abs(c) > 1:
            raise Infeasible(abs(c) - 1)
        disk = scale_disk(RationalDisk(nums, dens), mu)
        return disk, [[x / mu for x in kept], [zeta2 / mu]]

    return DiskFamily(f"template-{subset}", build, np.array([0.3]))


def perturbation_family(base: RationalDisk, preimages, direction, degree: int = 2,
                        target: float = FEASIBILITY_SCALE) -> DiskFamily:
    """``base + zeta prod(zeta - alpha) poly(zeta) v`` rescaled into the polydisk.

    All hits are preserved; the parameters trade off the rescaling cost.
    """
    v = np.asarray(direction, dtype=complex)
    v = v / np.linalg.norm(v)
    common = np.array([0.0, 1.0], dtype=complex)
    for pts in preimages:
        for a in pts:
            common = P.polymul(common, [-a, 1.0])

    def build(theta):
        coeffs = theta[0::2] + 1j * theta[1::2]
        poly = P.polymul(common, coeffs)
        disk = add_polynomial(base, np.outer(v, poly))
        mu = _fit_by_rescale(disk, target, 1024)
        pre = [[x / mu for x in pts if abs(x) < mu] for pts in preimages]
        return (scale_disk(disk, mu) if mu < 1 else disk), pre

    return DiskFamily("perturbation", build, np.zeros(2 * (degree + 1)), spread=0.05)


@dataclass
class OptimizationResult:
    theta: Optional[np.ndarray]
    value: Optional[FunctionalValue]
    assignment: Optional[Assignment]
    evaluations: int

    @property
    def found(self) -> bool:
        return self.value is not None


PENALTY = 1e3


def optimize_upper_bound(
    system: PoleSystem,
    z,
    family: DiskFamily,
    budget: int = 2000,
    seed: int = 0,
    restarts: int = 8,
    green_value: Optional[float] = None,
    target_scale: float = FEASIBILITY_SCALE,
    tol_hit: float = HIT_TOL,
) -> OptimizationResult:
    """Nelder-Mead with seeded restarts minimizing the functional over a family.

    Infeasible parameters (no disk, out of range, not admissible) are
    penalized; only feasible evaluations are recorded. Returns an empty result
    when nothing feasible is found within ``budget`` evaluations.
    """
    rng = np.random.default_rng(seed)
    best = {"value": math.inf, "theta": None, "assignment": None, "fv": None}
    count = [0]

    def objective(theta):
        if count[0] >= budget:
            return PENALTY * 10
        count[0] += 1
        try:
            disk, pre = family.build(np.asarray(theta, dtype=float))
        except Infeasible as exc:
            return PENALTY + exc.violation
        except (SearchError, ValueError, ZeroDivisionError):
            return PENALTY * 2
        rc = range_check(disk, target_scale, 1024)
        if not rc.ok:
            return PENALTY - rc.margin
        assignment = make_assignment(system, disk, pre, tol_hit=tol_hit)
        if not check_admissible(system, z, assignment, scale=target_scale, tol_hit=tol_hit).passed:
            return PENALTY * 2
        fv = functional(assignment)
        if fv.value < best["value"]:
            best.update(value=fv.value, theta=np.array(theta, dtype=float), assignment=assignment, fv=fv)
        return fv.value

    if budget > 0:
        per = max(1, budget // max(1, restarts))
        for r in range(max(1, restarts)):
            if count[0] >= budget:
                break
            start = family.x0 if r == 0 else family.x0 + family.spread * rng.normal(size=family.x0.shape)
            minimize(objective, start, method="Nelder-Mead",
                     options={"maxfev": per, "xatol": 1e-10, "fatol": 1e-13})
    if best["fv"] is None:
        return OptimizationResult(None, None, None, count[0])
    if green_value is not None and best["value"] < green_value - GREEN_SLACK:
        raise InconsistencyError(
            f"upper bound {best['value']:.15g} below Green value {green_value:.15g}")
    # final confirmation with the full-resolution range check
    check = check_admissible(system, z, best["assignment"], scale=target_scale, tol_hit=tol_hit)
    if not check.passed:
        return OptimizationResult(None, None, None, count[0])
    return OptimizationResult(best["theta"], best["fv"], best["assignment"], count[0])


# ---------------------------------------------------------------------------
# convergence sweep

SWEEP_COLUMNS = ("eps", "upper_bound", "green_eps", "limit_upper", "limit_green", "sup_P", "eta", "seed")


@dataclass
class SweepRow:
    eps: complex
    upper_bound: Optional[float]
    green_eps: Optional[float]
    limit_upper: Optional[float]
    limit_green: Optional[float]
    sup_P: Optional[float]
    eta: float
    seed: int
    admissible: bool = True
    mu: float = 1.0


def limit_assignment(family: CollisionFamily, z, budget: int = 2000, seed: int = 0) -> Assignment:
    """Admissible assignment for the limit system of a bidisk family.

    Uses the explicit disk when ``b = -a`` and ``a^2 < gamma < a^(3/2)``,
    otherwise searches the template family.
    """
    if family.bidisk is None:
        raise SearchError("pass an explicit base assignment for non-bidisk families")
    a, b = family.bidisk
    gamma = complex(np.asarray(z)[1])
    if abs(z[0]) != 0 or b != -a or a.imag != 0 or a.real <= 0:
        raise SearchError("automatic base assignment needs z = (0, gamma) and b = -a with a > 0")
    a = a.real
    system = family.limit_system()
    if a * a < abs(gamma) < a ** 1.5 and gamma.imag == 0:
        ex = build_example_disk(a, gamma.real)
        return make_assignment(system, ex.assignment.disk, ex.assignment.preimages)
    best = None
    for subset in TEMPLATE_SUBSETS:
        res = optimize_upper_bound(system, z, template_family(a, gamma, subset),
                                   budget=budget // len(TEMPLATE_SUBSETS), seed=seed,
                                   green_value=green_bidisk_S(z, a, -a))
        if res.found and (best is None or res.value.value < best.value.value):
            best = res
    if best is None:
        raise SearchError("no admissible limit disk found")
    return best.assignment


def convergence_sweep(
    family: CollisionFamily,
    z,
    eps_list: Sequence[complex],
    eta_rule: str = "sqrt",
    base: Optional[Assignment] = None,
    seed: int = 0,
    polish_budget: int = 0,
    green_formula: str = "corrected",
    base_budget: int = 2000,
) -> list[SweepRow]:
    """Upper bounds for the single-pole systems ``S(eps)`` along a decreasing eps grid."""
    eps_list = list(eps_list)
    if any(abs(b) >= abs(a) for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing in modulus")
    z = np.asarray(z, dtype=complex)
    if base is None:
        base = limit_assignment(family, z, base_budget, seed)
    limit_upper = functional(base).value
    limit_green = None
    if family.bidisk is not None:
        a, b = family.bidisk
        limit_green = green_bidisk_S(z, a, b, green_formula)
    rows = []
    for i, eps in enumerate(eps_list):
        eta = eta_from_rule(eta_rule, family.max_gap(eps))
        green_eps = None if family.bidisk is None else green_bidisk_S_eps(z, *family.bidisk, eps, green_formula)
        try:
            res = perturb_to_collision(base, family, eps, eta, z)
        except SearchError:
            rows.append(SweepRow(eps, None, green_eps, limit_upper, limit_green, None, eta, seed, False))
            continue
        upper = res.value.value if res.admissible else None
        if polish_budget > 0 and res.admissible:
            v = family.generic_direction(seed)
            fam = perturbation_family(res.assignment.disk, res.assignment.preimages, v)
            opt = optimize_upper_bound(res.system, z, fam, budget=polish_budget, seed=seed + i,
                                       restarts=2, tol_hit=1e-10)
            if opt.found and opt.value.value < upper:
                upper = opt.value.value
        if upper is not None and green_eps is not None and upper < green_eps - GREEN_SLACK:
            raise InconsistencyError(f"eps={eps}: upper bound {upper} below Green value {green_eps}")
        rows.append(SweepRow(eps, upper, green_eps, limit_upper, limit_green, res.sup_P, eta, seed,
                             res.admissible, res.mu))
    return rows


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, complex):
        return f"{x.real:.15g}" if x.imag == 0 else f"{x.real:.15g}{x.imag:+.15g}j"
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.15g}"


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, c)) for c in SWEEP_COLUMNS])
    return buf.getvalue()
