"""Elementary local indicators.

An elementary indicator on C^n is

    Psi(z) = max_j m_j * log|z . conj(v_j)|

for a basis ``v_1..v_n`` (rows of ``basis``) and nonnegative weights ``m_j``.
Terms with ``m_j == 0`` contribute 0 (the usual ``0 * inf = 0`` convention).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

NEG_INF = float("-inf")
RELATION_TOL = 1e-10
PIVOT_TOL = 1e-12
DEFAULT_RADII = tuple(10.0 ** -k for k in range(1, 9))


class IndicatorError(ValueError):
    """Raised for malformed indicator data (bad basis, negative weights...)."""


class NoMatchingError(RuntimeError):
    """No bijection sigma with sigma(l) R l exists for the given relation."""


def _as_complex_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=complex)
    if arr.ndim != 2:
        raise IndicatorError(f"basis must be a 2-d array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ElementaryIndicator:
    """Basis rows ``v_j`` and weights ``m_j``.

    ``permutation`` is only set by :func:`orthonormalize`; entry ``i`` is the
    index in the original indicator of the i-th (sorted) basis vector.
    """

    basis: np.ndarray
    weights: np.ndarray
    permutation: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        basis = _as_complex_matrix(self.basis)
        weights = np.asarray(self.weights, dtype=float)
        n = basis.shape[0]
        if basis.shape != (n, n):
            raise IndicatorError(f"basis must be n x n, got {basis.shape}")
        if weights.shape != (n,):
            raise IndicatorError(f"expected {n} weights, got shape {weights.shape}")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise IndicatorError("weights must be finite and nonnegative")
        norms = np.linalg.norm(basis, axis=1)
        if np.any(norms == 0):
            raise IndicatorError("basis vectors must be nonzero")
        # Hadamard: |det| <= prod of row norms
        if abs(np.linalg.det(basis)) <= PIVOT_TOL * float(np.prod(norms)):
            raise IndicatorError("basis vectors are linearly dependent")
        basis = basis.copy()
        weights = weights.copy()
        basis.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def standard(cls, weights: Sequence[float]) -> "ElementaryIndicator":
        """Indicator in the standard coordinate basis."""
        n = len(weights)
        return cls(np.eye(n, dtype=complex), np.asarray(weights, dtype=float))

    def to_json(self) -> dict:
        return {
            "basis": [[[float(c.real), float(c.imag)] for c in row] for row in self.basis],
            "weights": [float(m) for m in self.weights],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ElementaryIndicator":
        try:
            basis = [[complex(c[0], c[1]) for c in row] for row in data["basis"]]
            weights = [float(m) for m in data["weights"]]
        except (KeyError, TypeError, IndexError) as exc:
            raise IndicatorError(f"malformed indicator JSON: {exc}") from exc
        return cls(np.array(basis, dtype=complex), np.array(weights))


# Single-pole indicator log max|z_i| and the "vertical" indicator of the
# bidisk example, max(log|z1|, 2 log|z2|).
PSI_0 = ElementaryIndicator.standard([1.0, 1.0])
PSI_V = ElementaryIndicator.standard([1.0, 2.0])


def eval_indicator(psi: ElementaryIndicator, z) -> float | np.ndarray:
    """Evaluate Psi at a point (shape ``(n,)``) or a stack of points ``(k, n)``.

    Returns ``-inf`` exactly when every weighted term is ``-inf``.
    """
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != psi.dim:
        raise IndicatorError(f"point has dimension {z.shape[-1]}, indicator has {psi.dim}")
    dots = z @ psi.basis.conj().T
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = psi.weights * np.log(np.abs(dots))
    terms = np.where(psi.weights == 0, 0.0, terms)
    out = terms.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def mass(psi: ElementaryIndicator) -> float:
    """Monge-Ampere mass at the origin: the product of the weights."""
    return float(np.prod(psi.weights))


def orthonormalize(psi: ElementaryIndicator, tol: float = PIVOT_TOL) -> ElementaryIndicator:
    """Equivalent indicator with an orthonormal basis.

    Weights are sorted ascending (stable) and the basis is run through
    modified Gram-Schmidt in that order, so the span of the first k new
    vectors equals the span of the first k sorted old ones. The result differs
    from ``psi`` by a bounded function near 0.
    """
    order = np.argsort(psi.weights, kind="stable")
    vecs = psi.basis[order].copy()
    out = np.zeros_like(vecs)
    for k in range(psi.dim):
        v = vecs[k].copy()
        scale = np.linalg.norm(v)
        # two passes of projection keep the result orthogonal to ~eps
        for _ in range(2):
            for i in range(k):
                v -= np.vdot(out[i], v) * out[i]
        norm = np.linalg.norm(v)
        if norm <= tol * scale:
            raise IndicatorError(f"Gram-Schmidt pivot {norm:.3e} below tolerance at step {k}")
        out[k] = v / norm
    return ElementaryIndicator(out, psi.weights[order], permutation=tuple(int(i) for i in order))


@dataclass(frozen=True, eq=False)
class SupportRelation:
    """``matrix[k, l]`` is True iff ``v_k . conj(v'_l)`` is nonzero.

    ``gram`` holds the inner products themselves; the bijection search uses
    its minors.
    """

    matrix: np.ndarray
    gram: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def related(self, k: int, l: int) -> bool:
        return bool(self.matrix[k, l])


def support_relation(
    psi: ElementaryIndicator, psi2: ElementaryIndicator, tol: float = RELATION_TOL
) -> SupportRelation:
    if psi.dim != psi2.dim:
        raise IndicatorError("indicators live in different dimensions")
    gram = psi.basis @ psi2.basis.conj().T
    norms = np.outer(np.linalg.norm(psi.basis, axis=1), np.linalg.norm(psi2.basis, axis=1))
    matrix = np.abs(gram) > tol * norms
    if not matrix.any(axis=0).all():
        raise IndicatorError("relation has an empty column; inputs are not both bases")
    return SupportRelation(matrix, gram)


def _det_nonzero(block: np.ndarray, tol: float) -> bool:
    if block.size == 0:
        return True
    scale = float(np.prod(np.maximum(np.linalg.norm(block, axis=0), 1e-300)))
    return abs(np.linalg.det(block)) > tol * scale


def _structural_matching(pattern: np.ndarray, rows: list[int], cols: list[int]) -> Optional[dict]:
    # augmenting-path bipartite matching on the boolean pattern
    match_row: dict[int, int] = {}

    def augment(l, seen):
        for k in rows:
            if pattern[k, l] and k not in seen:
                seen.add(k)
                if k not in match_row or augment(match_row[k], seen):
                    match_row[k] = l
                    return True
        return False

    for l in cols:
        if not augment(l, set()):
            return None
    return {l: k for k, l in match_row.items()}


def find_bijection(rel: SupportRelation, tol: float = RELATION_TOL) -> dict[int, int]:
    """Bijection sigma of {1..n-1} (0-based) with ``rel[sigma[l], l]`` for all l.

    Follows the cofactor expansion of ``det A``, ``A = gram[1:, 1:]``: pick a
    row ``k`` with ``a_{k,l} * det(minor) != 0`` for the current column and
    recurse on the minor. If ``A`` is numerically singular (which cannot
    happen when ``rel[0, 0]`` holds for orthonormal bases) the pattern is
    matched structurally instead.
    """
    n = rel.dim
    rows = list(range(1, n))
    cols = list(range(1, n))
    gram = rel.gram

    def expand(rows: list[int], cols: list[int]) -> Optional[dict]:
        if not cols:
            return {}
        l, rest = cols[0], cols[1:]
        for k in rows:
            if not rel.matrix[k, l]:
                continue
            others = [r for r in rows if r != k]
            if not _det_nonzero(gram[np.ix_(others, rest)], tol):
                continue
            sub = expand(others, rest)
            if sub is not None:
                sub[l] = k
                return sub
        return None

    sigma = None
    if _det_nonzero(gram[np.ix_(rows, cols)], tol):
        sigma = expand(rows, cols)
    if sigma is None:
        sigma = _structural_matching(rel.matrix, rows, cols)
    if sigma is None:
        raise NoMatchingError("no bijection sigma with sigma(l) R l on {2..n}")
    return dict(sorted(sigma.items()))


def brute_force_bijections(rel: SupportRelation) -> list[dict[int, int]]:
    """All admissible sigma by enumerating (n-1)! permutations. Test oracle."""
    idx = list(range(1, rel.dim))
    found = []
    for perm in itertools.permutations(idx):
        if all(rel.matrix[k, l] for l, k in zip(idx, perm)):
            found.append(dict(zip(idx, perm)))
    return found


@dataclass(frozen=True)
class WeightViolation:
    k: int
    l: int
    m_k: float
    m_prime_l: float


def check_weight_domination(
    psi: ElementaryIndicator,
    psi2: ElementaryIndicator,
    rel: Optional[SupportRelation] = None,
    tol: float = RELATION_TOL,
) -> list[WeightViolation]:
    """Pairs ``k R l`` with ``m_k < m'_l``; empty when Psi <= Psi' + C is consistent."""
    if rel is None:
        rel = support_relation(psi, psi2, tol)
    out = []
    for k, l in zip(*np.nonzero(rel.matrix)):
        if psi.weights[k] < psi2.weights[l] - 1e-12:
            out.append(WeightViolation(int(k), int(l), float(psi.weights[k]), float(psi2.weights[l])))
    return out


@dataclass
class OffsetEstimate:
    bounded: bool
    c_hat: float
    radii: list[float]
    maxima: list[float]
    growth: float


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _sample_points(psi, psi2, r, n_random, rng_state):
    """Points of size ~r: random directions, basis directions, anisotropic mixes."""
    n = psi.dim
    rng = np.random.default_rng(rng_state)
    dirs = rng.normal(size=(n_random, n)) + 1j * rng.normal(size=(n_random, n))
    dirs = _unit_rows(dirs)
    frames = []
    for p in (psi, psi2):
        frames.append(_unit_rows(p.basis))
        try:
            frames.append(orthonormalize(p).basis)
        except IndicatorError:
            pass
    special = np.vstack(frames)
    # anisotropic points sum_j r^{s_j} e^{i t_j} u_j along each frame
    n_aniso = max(n_random // 4, 8)
    exps = rng.choice(np.array([1.0, 1.5, 2.0, 3.0]), size=(n_aniso, n))
    phases = np.exp(2j * np.pi * rng.random((n_aniso, n)))
    aniso = []
    for frame in frames:
        coeff = (r ** exps) * phases
        aniso.append(coeff @ frame)
    return np.vstack([r * dirs, r * special, *aniso])


def estimate_offset(
    psi: ElementaryIndicator,
    psi2: ElementaryIndicator,
    radii: Sequence[float] = DEFAULT_RADII,
    samples_per_radius: int = 10_000,
    seed: int = 0,
    slack: float = 3.0,
) -> OffsetEstimate:
    """Sampling estimate of C in ``Psi <= Psi' + C`` near 0.

    ``maxima[i]`` is the largest sampled ``Psi - Psi'`` at radius ``radii[i]``.
    ``growth`` is the peak of the maxima above their value at the largest
    radius; the comparison is declared bounded when it is at most ``slack``.
    A weight gap ``d`` along some direction makes the maxima climb like
    ``d * log(1/r)`` until the ``1e-16 r`` rounding residue of the other
    basis components takes over; a small gap next to a large weight ratio can
    stall the climb early. Both verdicts are sampling statements: offsets
    larger than ``slack`` read as unbounded, and stalled climbs read as
    bounded. ``c_hat`` is a sample maximum, not a certified supremum.
    """
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    maxima = []
    for r in radii:
        pts = _sample_points(psi, psi2, r, samples_per_radius, seed)
        a = eval_indicator(psi, pts)
        b = eval_indicator(psi2, pts)
        with np.errstate(invalid="ignore"):
            diff = a - b
        diff = diff[~np.isnan(diff)]
        maxima.append(float(diff.max()) if diff.size else NEG_INF)
    m = np.array(maxima)
    if np.any(np.isposinf(m)):
        return OffsetEstimate(False, math.inf, radii, maxima, math.inf)
    finite = m[np.isfinite(m)]
    growth = float(finite.max() - finite[0]) if finite.size >= 2 else 0.0
    c_hat = max(0.0, float(finite.max())) if finite.size else 0.0
    return OffsetEstimate(growth <= slack, c_hat, radii, maxima, growth)
