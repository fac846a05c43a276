"""Rational analytic disks and their multiplicities at poles.

A disk is a map ``zeta -> (p_1/q_1, ..., p_n/q_n)(zeta)`` with complex
polynomial numerators and denominators stored as ascending coefficient
arrays. Denominators must not vanish on the closed unit disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from .indicator import ElementaryIndicator, mass

HIT_TOL = 1e-12
COEFF_TOL = 1e-9
VALUATION_CAP = 64
ROOT_MARGIN = 1e-12
# relative size of rounding noise in a computed Taylor coefficient
ROUNDING = 1e-12


class DiskError(ValueError):
    """Malformed disk data or a denominator vanishing on the closed disk."""


class UndeterminedValuation(ArithmeticError):
    """All Taylor coefficients up to the cap vanish but the function is not zero."""


def trim(p: np.ndarray) -> np.ndarray:
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    nz = np.nonzero(p)[0]
    return p[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)


def shift(p: np.ndarray, alpha: complex) -> np.ndarray:
    """Coefficients of ``zeta -> p(alpha + zeta)``."""
    out = np.zeros(1, dtype=complex)
    lin = np.array([alpha, 1.0], dtype=complex)
    for c in p[::-1]:
        out = P.polyadd(P.polymul(out, lin), [c])
    return trim(out)


def mobius(w: complex) -> tuple[np.ndarray, np.ndarray]:
    """(num, den) of the disk automorphism ``(w - zeta) / (1 - conj(w) zeta)``."""
    return np.array([w, -1.0], dtype=complex), np.array([1.0, -np.conj(w)], dtype=complex)


def compose_mobius(w: complex, num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(num, den) of ``phi_w(num/den)``."""
    return (
        trim(P.polysub(w * np.asarray(den), num)),
        trim(P.polysub(den, np.conj(w) * np.asarray(num))),
    )


def _check_denominator(den: np.ndarray) -> None:
    den = trim(den)
    if not np.any(den):
        raise DiskError("denominator is identically zero")
    if den.size > 1:
        roots = P.polyroots(den)
        if np.any(np.abs(roots) <= 1.0 + ROOT_MARGIN):
            raise DiskError("denominator vanishes on the closed unit disk")


@dataclass(frozen=True, eq=False)
class RationalDisk:
    nums: tuple[np.ndarray, ...]
    dens: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.nums) != len(self.dens) or not self.nums:
            raise DiskError("need one (num, den) pair per coordinate")
        nums = tuple(trim(p) for p in self.nums)
        dens = tuple(trim(q) for q in self.dens)
        for q in dens:
            _check_denominator(q)
        for arr in nums + dens:
            arr.setflags(write=False)
        object.__setattr__(self, "nums", nums)
        object.__setattr__(self, "dens", dens)

    @property
    def dim(self) -> int:
        return len(self.nums)

    @classmethod
    def polynomial(cls, coords: Sequence[Sequence[complex]]) -> "RationalDisk":
        return cls(tuple(np.asarray(c, dtype=complex) for c in coords),
                   tuple(np.ones(1, dtype=complex) for _ in coords))

    @classmethod
    def constant(cls, z) -> "RationalDisk":
        return cls.polynomial([[c] for c in np.asarray(z, dtype=complex)])

    def to_json(self) -> dict:
        def enc(p):
            return [[float(c.real), float(c.imag)] for c in p]
        return {"coords": [{"num": enc(p), "den": enc(q)} for p, q in zip(self.nums, self.dens)]}

    @classmethod
    def from_json(cls, data) -> "RationalDisk":
        coords = data["coords"] if isinstance(data, dict) else data
        try:
            nums = tuple(np.array([complex(c[0], c[1]) for c in d["num"]]) for d in coords)
            dens = tuple(np.array([complex(c[0], c[1]) for c in d.get("den", [[1, 0]])]) for d in coords)
        except (KeyError, TypeError, IndexError) as exc:
            raise DiskError(f"malformed disk JSON: {exc}") from exc
        return cls(nums, dens)


def blaschke(w: complex) -> RationalDisk:
    """One-dimensional disk ``phi_w``; exchanges 0 and ``w``, involutive."""
    if abs(w) >= 1:
        raise DiskError(f"|w| = {abs(w)} must be < 1")
    num, den = mobius(w)
    return RationalDisk((num,), (den,))


def disk_eval(phi: RationalDisk, zeta) -> np.ndarray:
    """Componentwise evaluation; scalar ``zeta`` gives shape (n,), arrays add a leading axis."""
    zeta = np.asarray(zeta, dtype=complex)
    vals = [P.polyval(zeta, p) / P.polyval(zeta, q) for p, q in zip(phi.nums, phi.dens)]
    return np.stack(vals, axis=-1)


def _series(num: np.ndarray, den: np.ndarray, alpha: complex, order: int) -> np.ndarray:
    # q * sum c_k zeta^k = p, matched degree by degree after shifting to alpha
    p = shift(num, alpha)
    q = shift(den, alpha)
    p = np.concatenate([p, np.zeros(max(0, order + 1 - p.size), dtype=complex)])
    c = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        acc = p[k]
        for i in range(1, min(k, q.size - 1) + 1):
            acc -= q[i] * c[k - i]
        c[k] = acc / q[0]
    return c


def coordinate_series(phi: RationalDisk, alpha: complex, order: int) -> np.ndarray:
    """Taylor coefficients of each coordinate about ``alpha``, shape (n, order+1)."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    return np.stack([_series(p, q, alpha, order) for p, q in zip(phi.nums, phi.dens)])


def taylor_coeffs(phi: RationalDisk, alpha: complex, direction, order: int, pole=None) -> np.ndarray:
    """Coefficients of ``zeta -> (phi(alpha + zeta) - pole) . conj(direction)``."""
    series = coordinate_series(phi, alpha, order)
    if pole is not None:
        series[:, 0] -= np.asarray(pole, dtype=complex)
    return np.conj(np.asarray(direction, dtype=complex)) @ series


def _is_zero_function(phi: RationalDisk, direction, pole, tol: float) -> bool:
    # numerator of sum_i conj(d_i) (p_i/q_i - a_i) over the common denominator
    d = np.conj(np.asarray(direction, dtype=complex))
    a = np.zeros(phi.dim, dtype=complex) if pole is None else np.asarray(pole, dtype=complex)
    total = np.zeros(1, dtype=complex)
    scale = 0.0
    for i in range(phi.dim):
        term = P.polysub(phi.nums[i], a[i] * phi.dens[i])
        for j in range(phi.dim):
            if j != i:
                term = P.polymul(term, phi.dens[j])
        term = d[i] * term
        scale = max(scale, float(np.abs(term).max()))
        total = P.polyadd(total, term)
    return float(np.abs(total).max()) <= tol * max(scale, 1e-300)


def _size_bound(phi: RationalDisk, radius: float, samples: int = 64) -> np.ndarray:
    """Per coordinate, sum of ``|p_k| radius^k`` over the smallest sampled ``|q|`` on that circle."""
    zeta = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    out = []
    for p, q in zip(phi.nums, phi.dens):
        top = float(np.abs(p) @ radius ** np.arange(p.size))
        out.append(top / float(np.abs(P.polyval(zeta, q)).min()))
    return np.array(out)


def valuation(
    phi: RationalDisk,
    alpha: complex,
    direction,
    pole=None,
    tol: float = COEFF_TOL,
    cap: int = VALUATION_CAP,
) -> float:
    """Order of vanishing at ``alpha`` of ``(phi - pole) . conj(direction)``.

    Coefficients are compared after weighting by ``r**k``, ``r = 1 - |alpha|``,
    against the largest weighted coefficient in the window; this keeps the
    test scale-invariant and insensitive to growth of the raw coefficients near
    the boundary. A coefficient also counts as zero when it is below the
    rounding floor: ``ROUNDING`` times a bound for ``|phi . conj(direction)|``
    (and the pole term) on the circle of radius ``r`` around ``alpha``, which
    by Cauchy's estimate dominates every weighted coefficient. Returns
    ``math.inf`` for the zero function.
    """
    if abs(alpha) >= 1:
        raise ValueError("alpha must lie in the open unit disk")
    series = coordinate_series(phi, alpha, cap)
    d = np.conj(np.asarray(direction, dtype=complex))
    r = max(1.0 - abs(alpha), 1e-3)
    floor = float(np.abs(d) @ _size_bound(phi, abs(alpha) + r))
    if pole is not None:
        pole = np.asarray(pole, dtype=complex)
        series[:, 0] -= pole
        floor += float(np.abs(d) @ np.abs(pole))
    c = d @ series
    weights = r ** np.arange(cap + 1)
    weighted = np.abs(c) * weights
    floor *= ROUNDING
    scale = float(weighted.max())
    nz = np.nonzero((weighted > tol * scale) & (weighted > floor))[0]
    if nz.size:
        return int(nz[0])
    if _is_zero_function(phi, direction, pole, tol):
        return math.inf
    raise UndeterminedValuation(f"no nonzero Taylor coefficient up to order {cap}")


def valuations(phi: RationalDisk, alpha: complex, pole, psi: ElementaryIndicator,
               tol: float = COEFF_TOL, cap: int = VALUATION_CAP) -> list[float]:
    """Valuations along each basis direction of ``psi``."""
    return [valuation(phi, alpha, v, pole, tol, cap) for v in psi.basis]


def hits(phi: RationalDisk, alpha: complex, pole, tol_hit: float = HIT_TOL) -> bool:
    return float(np.linalg.norm(disk_eval(phi, alpha) - np.asarray(pole, dtype=complex))) <= tol_hit


def weighted_order(weights, nus) -> float:
    """``min_j m_j nu_j`` with ``0 * inf = 0``."""
    terms = [0.0 if m == 0 else m * nu for m, nu in zip(weights, nus)]
    return float(min(terms))


def multiplicity(
    phi: RationalDisk,
    alpha: complex,
    pole,
    psi: ElementaryIndicator,
    tol_hit: float = HIT_TOL,
    tol_coeff: float = COEFF_TOL,
) -> float:
    """Multiplicity of ``phi`` at ``alpha`` with respect to ``(pole, psi)``.

    Zero when ``phi(alpha) != pole``; otherwise ``min(min_j m_j nu_j, tau)``.
    """
    if not hits(phi, alpha, pole, tol_hit):
        return 0.0
    nus = valuations(phi, alpha, pole, psi, tol_coeff)
    return min(weighted_order(psi.weights, nus), mass(psi))


@dataclass
class LelongEstimate:
    """``estimate`` is the secant slope of the circle maxima against log r
    between the last two radii; ``ratio`` is ``max_circle Psi / log r`` at the
    last radius; ``trend`` holds that ratio for every radius."""

    estimate: float
    ratio: float
    radii: list[float]
    maxima: list[float]
    trend: list[float]


def _mp_eval(phi: RationalDisk, zeta) -> list:
    out = []
    for p, q in zip(phi.nums, phi.dens):
        num = mpmath.mpc(0)
        for c in p[::-1]:
            num = num * zeta + mpmath.mpc(c.real, c.imag)
        den = mpmath.mpc(0)
        for c in q[::-1]:
            den = den * zeta + mpmath.mpc(c.real, c.imag)
        out.append(num / den)
    return out


def numeric_lelong(
    phi: RationalDisk,
    alpha: complex,
    pole,
    psi: ElementaryIndicator,
    radii: Sequence[float] = (1e-4, 1e-5, 1e-6),
    samples: int = 64,
    dps: Optional[int] = None,
) -> LelongEstimate:
    """Sampled Lelong number of ``Psi(phi(alpha + .) - pole)`` at 0.

    Independent of the Taylor machinery: only pointwise evaluation, carried
    out in ``dps``-digit arithmetic so that ``phi - pole`` is not swamped by
    rounding at small radii. The default precision keeps the rounding residue
    of an identically vanishing term below every finite term: a nonzero
    component has valuation at most the total degree of the disk, which
    bounds the slope.
    """
    radii = [float(r) for r in radii]
    if dps is None:
        degree = sum(max(p.size, q.size) - 1 for p, q in zip(phi.nums, phi.dens))
        positive = [m for m in psi.weights if m > 0]
        slope = max(max(psi.weights) * max(degree, 1), 1.0)
        dps = 30 + math.ceil(slope * abs(math.log10(min(radii))) / min(positive, default=1.0))
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if radii[0] >= 1 - abs(alpha):
        raise ValueError("radii must stay inside the unit disk around alpha")
    pole = np.asarray(pole, dtype=complex)
    maxima, trend = [], []
    with mpmath.workdps(dps):
        a = [mpmath.mpc(c.real, c.imag) for c in pole]
        al = mpmath.mpc(complex(alpha).real, complex(alpha).imag)
        basis = [[mpmath.mpc(c.real, -c.imag) for c in row] for row in psi.basis]
        for r in radii:
            best = -mpmath.inf
            for s in range(samples):
                zeta = al + r * mpmath.expjpi(mpmath.mpf(2 * s) / samples)
                w = [x - y for x, y in zip(_mp_eval(phi, zeta), a)]
                val = -mpmath.inf
                for m, v in zip(psi.weights, basis):
                    if m == 0:
                        term = mpmath.mpf(0)
                    else:
                        dot = mpmath.fsum(wi * vi for wi, vi in zip(w, v))
                        term = m * mpmath.log(abs(dot)) if dot != 0 else -mpmath.inf
                    val = max(val, term)
                best = max(best, val)
            maxima.append(float(best))
            trend.append(float(best / mpmath.log(r)))
    if len(radii) >= 2 and all(math.isfinite(x) for x in maxima[-2:]):
        estimate = (maxima[-1] - maxima[-2]) / (math.log(radii[-1]) - math.log(radii[-2]))
    else:
        estimate = trend[-1]
    return LelongEstimate(estimate, trend[-1], radii, maxima, trend)


@dataclass
class RangeReport:
    ok: bool
    margin: float
    coord_max: list[float]
    scale: float

    def __bool__(self) -> bool:
        return self.ok


def boundary_max(phi: RationalDisk, samples: int = 4096) -> np.ndarray:
    zeta = np.exp(2j * np.pi * np.arange(samples) / samples)
    return np.abs(disk_eval(phi, zeta)).max(axis=0)


def range_check(phi: RationalDisk, scale: float = 1.0, boundary_samples: int = 4096,
                tol: float = 1e-12) -> RangeReport:
    """Does ``phi`` map the disk into the polydisk of radius ``scale``?

    By the maximum principle the boundary supremum decides; ``tol`` absorbs
    rounding for inner coordinates whose modulus is exactly 1 on the circle.
    """
    cmax = boundary_max(phi, boundary_samples)
    margin = float(scale - cmax.max())
    return RangeReport(margin >= -tol, margin, [float(x) for x in cmax], float(scale))


def scale_disk(phi: RationalDisk, mu: float) -> RationalDisk:
    """``zeta -> phi(mu * zeta)``."""
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    def sc(p):
        return p * mu ** np.arange(p.size)
    return RationalDisk(tuple(sc(p) for p in phi.nums), tuple(sc(q) for q in phi.dens))


def add_polynomial(phi: RationalDisk, poly: np.ndarray) -> RationalDisk:
    """``phi + poly`` where ``poly`` has shape (n, d+1)."""
    nums = tuple(P.polyadd(p, P.polymul(c, q)) for p, q, c in zip(phi.nums, phi.dens, poly))
    return RationalDisk(nums, phi.dens)
