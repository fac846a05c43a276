"""Command-line front end.

Each subcommand reads one JSON config (``--config``), applies flag overrides
and prints a JSON report on stdout. Exit codes: 0 success, 2 parse error,
3 numerical indeterminacy, 4 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .disk import (
    COEFF_TOL,
    HIT_TOL,
    DiskError,
    RationalDisk,
    UndeterminedValuation,
    hits,
    multiplicity,
    numeric_lelong,
    range_check,
    valuations,
)
from .indicator import (
    RELATION_TOL,
    ElementaryIndicator,
    IndicatorError,
    NoMatchingError,
    check_weight_domination,
    estimate_offset,
    eval_indicator,
    find_bijection,
    mass,
    orthonormalize,
    support_relation,
)
from .polesys import (
    GREEN_FORMULAS,
    InconsistencyError,
    PoleSystemError,
    check_admissible,
    check_admissible_old,
    functional,
    green_bidisk_S,
    lower_bound_check,
)
from .search import (
    CollisionFamily,
    SearchError,
    build_example_disk,
    convergence_sweep,
    sweep_csv,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_PRECONDITION = 4

DEFAULT_GRID = ((0.5, 0.5), (0.1, 0.01), (0.01, 0.1), (0.3, 0.0))


class ConfigError(ValueError):
    """Malformed config or flags; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    config: dict
    seed: int = 0
    tol_hit: float = HIT_TOL
    tol_coeff: float = COEFF_TOL
    tol_relation: float = RELATION_TOL
    out: Optional[Path] = None
    green_formula: str = "corrected"

    def __post_init__(self):
        for name in ("tol_hit", "tol_coeff", "tol_relation"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.green_formula not in GREEN_FORMULAS:
            raise ConfigError(f"green formula must be one of {GREEN_FORMULAS}")


def _num(x: float) -> Any:
    """15 significant digits; infinities as strings so the JSON stays strict."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.15g}")


def clean(obj: Any) -> Any:
    """Recursively convert numpy and complex values into JSON-safe output."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    raise ConfigError(f"expected a number or [re, im], got {value!r}")


def _vector(value) -> np.ndarray:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"expected a list of coordinates, got {value!r}")
    return np.array([_complex(c) for c in value])


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def _indicator(data) -> ElementaryIndicator:
    try:
        return ElementaryIndicator.from_json(data)
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"malformed indicator: {exc}") from exc


def _disk(data) -> RationalDisk:
    try:
        return RationalDisk.from_json(data)
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"malformed disk: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_indicator(rc: RunConfig) -> dict:
    cfg = rc.config
    psi = _indicator(_require(cfg, "psi"))
    default = DEFAULT_GRID if psi.dim == 2 else [[0.5] * psi.dim]
    grid = [_vector(z) for z in cfg.get("grid", default)]
    ortho = orthonormalize(psi)
    report = {
        "mass": mass(psi),
        "eval": [{"z": z, "value": eval_indicator(psi, z)} for z in grid],
        "orthonormalized": {**ortho.to_json(), "permutation": list(ortho.permutation)},
    }
    if "psi2" in cfg:
        psi2 = _indicator(cfg["psi2"])
        off = estimate_offset(psi, psi2, seed=rc.seed, samples_per_radius=int(cfg.get("samples", 2000)))
        rel = support_relation(orthonormalize(psi), orthonormalize(psi2), rc.tol_relation)
        report["offset"] = {"bounded": off.bounded, "c_hat": off.c_hat, "growth": off.growth}
        report["relation"] = rel.matrix.astype(int)
        report["weight_violations"] = [vars(v) for v in check_weight_domination(
            orthonormalize(psi), orthonormalize(psi2), rel)]
        if rel.related(0, 0):
            try:
                report["bijection"] = {str(l): k for l, k in find_bijection(rel, rc.tol_relation).items()}
            except NoMatchingError:
                report["bijection"] = None
    return report


def cmd_multiplicity(rc: RunConfig) -> dict:
    cfg = rc.config
    disk = _disk(_require(cfg, "disk"))
    pole = _vector(_require(cfg, "pole"))
    psi = _indicator(_require(cfg, "psi"))
    alpha = _complex(_require(cfg, "alpha"))
    if pole.shape != (disk.dim,) or psi.dim != disk.dim:
        raise ConfigError("disk, pole and indicator dimensions differ")
    hit = hits(disk, alpha, pole, rc.tol_hit)
    report: dict[str, Any] = {"hit": hit}
    report["valuations"] = valuations(disk, alpha, pole, psi, rc.tol_coeff) if hit else None
    m = multiplicity(disk, alpha, pole, psi, rc.tol_hit, rc.tol_coeff)
    report["multiplicity"] = m
    if cfg.get("lelong", True):
        radii = tuple(cfg.get("radii", (1e-4, 1e-5, 1e-6)))
        est = numeric_lelong(disk, alpha, pole, psi, radii=radii)
        truncated = min(est.estimate, mass(psi))
        report["lelong"] = {"estimate": est.estimate, "truncated": truncated, "ratio": est.ratio,
                            "radii": est.radii, "trend": est.trend}
        report["agreement_delta"] = abs(truncated - m)
    return report


def cmd_reproduce_distinct(rc: RunConfig) -> dict:
    cfg = rc.config
    a = float(_require(cfg, "a"))
    gamma = float(_require(cfg, "gamma"))
    ex = build_example_disk(a, gamma)
    asg = ex.assignment
    report = check_admissible(ex.system, ex.z, asg, tol_hit=rc.tol_hit, tol_coeff=rc.tol_coeff)
    value = functional(asg)
    green = green_bidisk_S(ex.z, a, -a, rc.green_formula)
    # one preimage per pole, each required to carry the full mass
    old = check_admissible_old(ex.system, ex.z, asg.disk, [ex.zeta1, ex.zeta2],
                               rc.tol_hit, rc.tol_coeff)
    old_alt = check_admissible_old(ex.system, ex.z, asg.disk, [ex.zeta4, ex.zeta2],
                                   rc.tol_hit, rc.tol_coeff)
    out = {
        "a": a,
        "gamma": gamma,
        "zeta1": ex.zeta1,
        "zeta2": ex.zeta2,
        "zeta4": ex.zeta4,
        "zeta1_zeta4_plus_a": abs(ex.zeta1 * ex.zeta4 + a),
        "abs_zeta1_zeta2_zeta4": abs(ex.zeta1 * ex.zeta2 * ex.zeta4),
        "multiplicities": [list(ms) for ms in asg.multiplicities],
        "admissibility": report.to_dict(),
        "range_margin": range_check(asg.disk).margin,
        "functional": value.to_dict(),
        "green": green,
        "green_formula": rc.green_formula,
        "lower_bound_ok": lower_bound_check(value, green),
        "old_admissible": {
            "with_zeta1": {"passed": old.passed, "multiplicities": old.multiplicities},
            "with_zeta4": {"passed": old_alt.passed, "multiplicities": old_alt.multiplicities},
        },
        "summary": ("functional equals the Green value 2 log a; the disk is admissible only "
                    "with two simple preimages of (a, 0), each short of the full mass 2"),
    }
    if rc.out is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("quantity", "value"))
        rows = [("a", a), ("gamma", gamma), ("functional", value.value), ("green", green),
                ("zeta1_re", ex.zeta1.real), ("zeta1_im", ex.zeta1.imag),
                ("zeta2_re", ex.zeta2.real), ("zeta2_im", ex.zeta2.imag),
                ("zeta4_re", ex.zeta4.real), ("zeta4_im", ex.zeta4.imag)]
        for name, v in rows:
            w.writerow((name, f"{v:.15g}"))
        rc.out.write_text(buf.getvalue())
    return out


def _eps_value(x):
    z = _complex(x)
    return z.real if z.imag == 0 else z


def cmd_sweep(rc: RunConfig) -> tuple[dict, str]:
    cfg = rc.config
    a = _complex(_require(cfg, "a"))
    b = _complex(cfg.get("b", -a))
    a = a.real if a.imag == 0 else a
    b = b.real if b.imag == 0 else b
    if "z" in cfg:
        z = _vector(cfg["z"])
    else:
        z = np.array([0.0, float(_require(cfg, "gamma"))], dtype=complex)
    eps_list = [_eps_value(e) for e in _require(cfg, "eps_list")]
    family = CollisionFamily.bidisk_family(a, b)
    rows = convergence_sweep(
        family, z, eps_list,
        eta_rule=str(cfg.get("eta_rule", "sqrt")),
        seed=rc.seed,
        polish_budget=int(cfg.get("polish_budget", 0)),
        green_formula=rc.green_formula,
        base_budget=int(cfg.get("budget", 2000)),
    )
    text = sweep_csv(rows)
    summary = {
        "rows": len(rows),
        "no_upper_bound": [r.eps for r in rows if r.upper_bound is None],
        "upper_bounds": [r.upper_bound for r in rows],
        "out": str(rc.out) if rc.out else None,
    }
    return summary, text


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol-hit", type=float, default=None)
    common.add_argument("--tol-coeff", type=float, default=None)
    common.add_argument("--tol-relation", type=float, default=None)
    common.add_argument("--out", type=Path, default=None, help="CSV output path")
    common.add_argument("--green-formula", choices=GREEN_FORMULAS, default=None)

    parser = argparse.ArgumentParser(prog="lempert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("indicator", parents=[common], help="evaluate and compare elementary indicators")
    sub.add_parser("multiplicity", parents=[common], help="multiplicity of a disk at a preimage")
    rd = sub.add_parser("reproduce-distinct", parents=[common], help="two-pole bidisk example")
    rd.add_argument("--a", type=float, default=None)
    rd.add_argument("--gamma", type=float, default=None)
    sub.add_parser("sweep", parents=[common], help="pole-collision convergence sweep")
    return parser


def _load(args) -> RunConfig:
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("a", "gamma"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return cfg.get(key, default)

    try:
        return RunConfig(
            command=args.command,
            config=cfg,
            seed=int(pick(args.seed, "seed", 0)),
            tol_hit=float(pick(args.tol_hit, "tol_hit", HIT_TOL)),
            tol_coeff=float(pick(args.tol_coeff, "tol_coeff", COEFF_TOL)),
            tol_relation=float(pick(args.tol_relation, "tol_relation", RELATION_TOL)),
            out=args.out if args.out is not None else (Path(cfg["out"]) if "out" in cfg else None),
            green_formula=str(pick(args.green_formula, "green_formula", "corrected")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


COMMANDS = {
    "indicator": cmd_indicator,
    "multiplicity": cmd_multiplicity,
    "reproduce-distinct": cmd_reproduce_distinct,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        rc = _load(args)
        if rc.command == "sweep":
            summary, text = cmd_sweep(rc)
            if rc.out is not None:
                rc.out.write_text(text)
                print(json.dumps(clean(summary), indent=2), file=stdout)
            else:
                stdout.write(text)
            return EXIT_OK
        report = COMMANDS[rc.command](rc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UndeterminedValuation, InconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (IndicatorError, DiskError, PoleSystemError, SearchError, NoMatchingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(json.dumps(clean(report), indent=2), file=stdout)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
