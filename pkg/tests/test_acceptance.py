"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""

from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from generators import dominated_pair, random_hit_case, random_valuation_disk, structured_pair  # noqa: E402
from lempert.disk import (  # noqa: E402
    hits,
    multiplicity,
    numeric_lelong,
    range_check,
    taylor_coeffs,
    valuations,
    weighted_order,
)
from lempert.indicator import (  # noqa: E402
    ElementaryIndicator,
    NoMatchingError,
    brute_force_bijections,
    check_weight_domination,
    estimate_offset,
    find_bijection,
    mass,
    support_relation,
)
from lempert.polesys import (  # noqa: E402
    check_admissible,
    check_admissible_old,
    functional,
    green_bidisk_S,
    lower_bound_check,
)
from lempert.search import CollisionFamily, build_example_disk, convergence_sweep, lagrange_pair_bound  # noqa: E402

A_VALUES = (0.30, 0.50, 0.64)


def _gamma(a: float) -> float:
    return (a * a + a ** 1.5) / 2


def criterion_1():
    """Explicit two-pole disk: admissible, multiplicities, products, value, range, time."""
    problems, notes = [], []
    for a in A_VALUES:
        start = time.perf_counter()
        ex = build_example_disk(a, _gamma(a))
        rep = check_admissible(ex.system, ex.z, ex.assignment)
        value = functional(ex.assignment).value
        rc = range_check(ex.assignment.disk)
        elapsed = time.perf_counter() - start
        mults = ex.assignment.multiplicities
        checks = {
            "admissible": rep.passed,
            "multiplicities (1,1,2)": mults == ((1.0, 1.0), (2.0,)),
            "zeta1 zeta4 = -a": abs(ex.zeta1 * ex.zeta4 + a) <= 1e-12,
            "|zeta1 zeta2 zeta4| = a^1.5": abs(abs(ex.zeta1 * ex.zeta2 * ex.zeta4) - a ** 1.5) <= 1e-12,
            "|zeta1 zeta4 zeta2^2| = a^2": abs(abs(ex.zeta1 * ex.zeta4 * ex.zeta2 ** 2) - a * a) <= 1e-12,
            "S = 2 log a": abs(value - 2 * math.log(a)) <= 1e-10,
            "range_check passes": rc.ok,
            "range margin > 0": rc.margin > 0,
            "runtime < 1 s": elapsed < 1.0,
        }
        problems += [f"a={a}: {name}" for name, ok in checks.items() if not ok]
        notes.append(f"a={a}: margin={rc.margin:.2e} t={elapsed:.3f}s")
    detail = "; ".join(notes)
    if problems:
        detail = "failed " + ", ".join(problems) + " | " + detail
        if all(p.endswith("range margin > 0") for p in problems):
            detail += (" | the first coordinate is inner (modulus exactly 1 on the circle), so the exact"
                       " margin is 0 and only rounding decides its sign")
    return not problems, detail


def criterion_2():
    """Green value 2 log a on the gamma range, equality with the explicit functional."""
    worst_green, worst_gap, ok = 0.0, 0.0, True
    for a in A_VALUES:
        for gamma in np.linspace(a * a, a, 202)[1:-1]:
            worst_green = max(worst_green, abs(green_bidisk_S([0, gamma], a, -a) - 2 * math.log(a)))
        ex = build_example_disk(a, _gamma(a))
        value = functional(ex.assignment)
        green = green_bidisk_S(ex.z, a, -a)
        ok &= lower_bound_check(value, green)
        worst_gap = max(worst_gap, abs(value.value - green))
    ok = ok and worst_green <= 1e-12 and worst_gap <= 1e-9
    return ok, f"max |G - 2 log a| = {worst_green:.1e}, max |S - G| = {worst_gap:.1e}"


def criterion_3(count: int = 200, seed: int = 12345):
    """Taylor multiplicity against the sampled Lelong number on random disks."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst, failures, misses = 0.0, [], 0
    for i in range(count):
        n = int(rng.integers(2, 4))
        case = random_hit_case(rng, n)
        alpha = case.alpha
        if rng.random() < 0.1:
            # a point that does not map to the pole: multiplicity 0
            alpha = alpha + 0.125
            misses += 1
        m = multiplicity(case.disk, alpha, case.pole, case.psi)
        est = numeric_lelong(case.disk, alpha, case.pole, case.psi, radii=(1e-4, 1e-5, 1e-6))
        delta = abs(min(est.estimate, mass(case.psi)) - m)
        worst = max(worst, delta)
        if delta > 1e-2:
            failures.append(i)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    return ok, (f"{count} disks ({misses} misses), {len(failures)} disagreements, "
                f"max delta {worst:.1e}, {elapsed:.1f}s")


def criterion_4(count: int = 1000, seed: int = 2024):
    """Bijection on the tail indices for random orthonormal pairs with 1 R 1."""
    rng = np.random.default_rng(seed)
    n = 4
    ones = np.ones(n)
    used = skipped = failures = 0
    while used < count:
        v, vp = structured_pair(rng, n)
        rel = support_relation(ElementaryIndicator(v, ones), ElementaryIndicator(vp, ones))
        if not rel.related(0, 0):
            skipped += 1
            continue
        used += 1
        exhaustive = brute_force_bijections(rel)
        try:
            sigma = find_bijection(rel)
        except NoMatchingError:
            failures += 1
            continue
        valid = sorted(sigma) == sorted(sigma.values()) == list(range(1, n))
        valid &= all(rel.related(k, l) for l, k in sigma.items())
        if not (valid and exhaustive and sigma in exhaustive):
            failures += 1
    return failures == 0, f"{used} pairs ({skipped} without 1 R 1 skipped), {failures} failures"


def criterion_5(count: int = 200, seed: int = 5):
    """Budget transfer, weight domination, valuation and normalized inequalities."""
    rng = np.random.default_rng(seed)
    viol = dict.fromkeys(
        ("budget_transfer", "weight_domination", "valuation_order", "normalized_order", "certificate"), 0)
    case2 = hit_points = 0
    for i in range(count):
        n = int(rng.integers(2, 4))
        pair = dominated_pair(rng, n)
        psi, psi2 = pair.psi, pair.psi2
        if not estimate_offset(psi, psi2, samples_per_radius=300, seed=i).bounded:
            viol["certificate"] += 1
        rel = support_relation(psi, psi2)
        viol["weight_domination"] += len(check_weight_domination(psi, psi2, rel))
        disk, pole, points = random_valuation_disk(rng, psi2, int(rng.integers(1, 4)))
        tau, tau2 = mass(psi), mass(psi2)
        m1 = [multiplicity(disk, x, pole, psi) for x in points]
        m2 = [multiplicity(disk, x, pole, psi2) for x in points]
        within = sum(m2) <= tau2 + 1e-12
        if within and sum(m1) > tau + 1e-12:
            viol["budget_transfer"] += 1
        all_below = all(x < tau2 - 1e-12 for x in m2)
        for x in points:
            if not hits(disk, x, pole):
                continue
            hit_points += 1
            nu = valuations(disk, x, pole, psi)
            nu2 = valuations(disk, x, pole, psi2)
            for l in range(n):
                if nu2[l] < min(nu[k] for k in range(n) if rel.matrix[k, l]):
                    viol["valuation_order"] += 1
            if within and all_below:
                case2 += 1
                lhs = weighted_order(psi2.weights, nu2) / tau2
                rhs = weighted_order(psi.weights, nu) / tau
                if lhs < rhs - 1e-12:
                    viol["normalized_order"] += 1
    ok = not any(viol.values())
    return ok, f"{count} configs, {hit_points} hit points, {case2} normalized checks, violations {viol}"


def criterion_6():
    """Collision sweep: finite, non-increasing bounds; correction norm decreasing."""
    start = time.perf_counter()
    a, gamma = 0.64, 0.45
    rows = convergence_sweep(CollisionFamily.bidisk_family(a, -a), [0, gamma], [1e-2, 1e-3, 1e-4])
    elapsed = time.perf_counter() - start
    ups = [r.upper_bound for r in rows]
    sups = [r.sup_P for r in rows]
    finite = all(u is not None and math.isfinite(u) for u in ups)
    ok = finite and all(r.admissible for r in rows)
    if ok:
        ok &= all(b <= u + 1e-3 for u, b in zip(ups, ups[1:]))
        ok &= ups[-1] <= 2 * math.log(0.64) + 1e-2
        ok &= all(b < s for s, b in zip(sups, sups[1:]))
    ok &= elapsed < 300
    fmt = ", ".join(f"eps={r.eps:g}: S={r.upper_bound:.6f} supP={r.sup_P:.2e}" if r.upper_bound is not None
                    else f"eps={r.eps:g}: none" for r in rows)
    return ok, f"{fmt}; limit {2 * math.log(0.64):.6f}; {elapsed:.1f}s"


def criterion_7():
    """Lagrange pair bound uniform in the gap with fixed divided difference."""
    x0 = 0.2
    others = [-0.5, 0.6j, -0.5j, 0.7]
    w0 = np.array([0.3, -0.2j])
    slope = np.array([1.0, 0.5j])
    sups = []
    for t in 10.0 ** -np.arange(1, 7):
        _, rep = lagrange_pair_bound(x0, x0 + t, others, w0, w0 + t * slope)
        sups.append(rep.sup_P)
    ratio = max(sups) / min(sups)
    return ratio < 10, f"sup|P| in [{min(sups):.4f}, {max(sups):.4f}], max/min = {ratio:.3f}"


def criterion_8():
    """New admissibility holds; old full-mass admissibility fails at each simple preimage."""
    a = 0.64
    ex = build_example_disk(a, 0.45)
    new_ok = check_admissible(ex.system, ex.z, ex.assignment).passed
    details, ok = [], new_ok
    for name, zeta in (("zeta1", ex.zeta1), ("zeta4", ex.zeta4)):
        old = check_admissible_old(ex.system, ex.z, ex.assignment.disk, [zeta, ex.zeta2])
        derivative = taylor_coeffs(ex.assignment.disk, zeta, [1, 0], 1)[1]
        ok &= (not old.passed) and old.multiplicities[0] == 1 and abs(derivative) > 1e-6
        details.append(f"{name}: old={old.passed} m={old.multiplicities[0]:g} |phi1'|={abs(derivative):.3f}")
    return ok, f"new admissible={new_ok}; " + "; ".join(details)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def _line(number: int, ok: bool, detail: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + _line(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [(k, *CRITERIA[k]()) for k in sorted(CRITERIA)]
    for k, ok, detail in results:
        print(_line(k, ok, detail))
    sys.exit(0 if all(ok for _, ok, _ in results) else 1)
