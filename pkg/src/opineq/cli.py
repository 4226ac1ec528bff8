"""Command-line front end.

Exit codes: 0 success, 1 mathematical finding (failed check or violation),
2 usage, configuration or parse error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, checks, linalg
from .campaign import default_workers, run_campaign
from .errors import OpineqError
from .norms import IsometricColumn, parse_norm
from .opconvex import Power, kappa
from .report import TOL, dumps
from .search import TARGETS, analytic_extremal_lemma, hunt_violation, maximize_ratio

MAX_DIM = 64


class UsageError(Exception):
    """Invalid flags or configuration (exit code 2)."""


# configuration ---------------------------------------------------------------

@dataclass
class CampaignConfig:
    checks: List[str] = field(default_factory=lambda: list(checks.CHECK_IDS))
    trials: int = 1000
    dims: List[int] = field(default_factory=lambda: list(range(2, 9)))
    seed: int = 0
    tol: float = TOL
    json: Optional[str] = None
    workers: int = field(default_factory=default_workers)
    anomaly_rate: float = 0.0
    all_results: bool = False

    def to_dict(self) -> dict:
        """Settings that determine the report (output path and workers excluded)."""
        return {"checks": self.checks, "trials": self.trials,
                "dims": [self.dims[0], self.dims[-1]], "seed": self.seed, "tol": self.tol,
                "anomaly_rate": self.anomaly_rate, "all_results": self.all_results}


def parse_dims(text: str) -> List[int]:
    parts = text.split("..")
    try:
        lo, hi = (int(parts[0]), int(parts[-1])) if len(parts) in (1, 2) else (None, None)
    except ValueError:
        lo = hi = None
    if lo is None or not 1 <= lo <= hi <= MAX_DIM:
        raise UsageError(f"dims must be N or A..B with 1 <= A <= B <= {MAX_DIM}, got {text!r}")
    return list(range(lo, hi + 1))


def parse_checks(text: str) -> List[str]:
    if text.strip() == "all":
        return list(checks.CHECK_IDS)
    ids = [c.strip() for c in text.split(",") if c.strip()]
    unknown = [c for c in ids if c not in checks.CHECK_IDS]
    if unknown or not ids:
        raise UsageError(f"unknown check ids: {', '.join(unknown) or '(none given)'}; "
                         f"known: {', '.join(checks.CHECK_IDS)}")
    return ids


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "checks": parse_checks,
    "trials": int,
    "dims": parse_dims,
    "seed": int,
    "tol": float,
    "json": str,
    "workers": int,
    "anomaly_rate": float,
    "all_results": _bool,
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(args) -> CampaignConfig:
    raw = read_config_file(args.config) if args.config else {}
    for key in _CONVERTERS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            raw[key] = v
    cfg = CampaignConfig()
    for key, value in raw.items():
        try:
            conv = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
        setattr(cfg, key, conv)
    if cfg.trials < 1:
        raise UsageError("trials must be >= 1")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")
    if not cfg.tol > 0:
        raise UsageError("tol must be positive")
    if not 0 <= cfg.anomaly_rate <= 1:
        raise UsageError("anomaly rate must lie in [0, 1]")
    return cfg


def _write_json(path: Optional[str], obj) -> None:
    if not path:
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(obj) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


# repro-paper -------------------------------------------------------------------

@dataclass
class Row:
    label: str
    expected: str
    computed: str
    delta: str
    ok: bool


def _value_row(label, expected, computed, tol) -> Row:
    d = abs(computed - expected)
    return Row(label, f"{expected:.6g}", f"{computed:.6f}", f"{d:.1e}", d <= tol)


def repro_rows() -> List[Row]:
    rows = []
    z = checks.REF_Z
    lam = linalg.eigvalsh(z)
    rows.append(_value_row("eig1(Z)", 8.0, lam[0], 1e-10))
    rows.append(_value_row("eig2(Z)", 2.0, lam[1], 1e-10))
    k = kappa(8, 2)
    rows.append(_value_row("kappa1(8,2)", 1.25, k.kappa1, 1e-12))
    rows.append(_value_row("kappa2(8,2)", 1.5625, k.kappa2, 1e-12))
    sv = checks.check_sv_non_extension()
    f = sv.facts
    rows.append(_value_row("mu2(ZAB)", 8.0, f["mu2_ZAB"], 1e-9))
    rows.append(_value_row("mu2(BZA)", 4.604, f["mu2_BZA"], 1e-3))
    rows.append(_value_row("mu2(AZB)", 4.604, f["mu2_AZB"], 1e-3))
    rows.append(_value_row("kappa1*mu2(BZA)", 5.755, f["kappa1_mu2_BZA"], 2e-3))
    viol = f["mu2_ZAB"] > f["kappa1_mu2_BZA"]
    rows.append(Row("sv extension", "violated",
                    f"{f['mu2_ZAB']:.4f} > {f['kappa1_mu2_BZA']:.4f}",
                    "", viol and not sv.passed))
    zl, h, ratio = analytic_extremal_lemma(8, 2)
    rows.append(_value_row("lemma extremal ratio", 1.25, ratio, 1e-12))
    hb = np.array([1.0, 1.0]) / math.sqrt(2)
    kant = float((hb @ zl.real @ hb) * (hb @ np.linalg.inv(zl.real) @ hb))
    rows.append(_value_row("Kantorovich balanced", 1.5625, kant, 1e-12))
    w = checks.check_wedge_remark(np.diag([3.0, 3.0, 1.0, 1.0]), 2)
    rows.append(Row("wedge diag(3,3,1,1) k=2", "violated",
                    f"LHS {w.lhs:.4f} > RHS {w.rhs:.4f}", "",
                    not w.passed and abs(w.lhs - 25 / 9) <= 1e-9 and abs(w.rhs - 16 / 9) <= 1e-9))
    mid = midpoint_instance()
    rows.append(_value_row("8/9 midpoint slack", 0.25 / 9, mid, 1e-9))
    return rows


def midpoint_instance() -> float:
    """Reverse-Jensen margin for A=diag(1,2), B=diag(2,1), f=t^2, weights I/sqrt2."""
    half = np.eye(2) / math.sqrt(2)
    rep = checks.check_jensen([np.diag([1.0, 2.0]), np.diag([2.0, 1.0])],
                              IsometricColumn((half, half)), Power(2.0))
    part = next(p for p in rep.parts if p.name == "thm2.4")
    return part.margin


def cmd_repro_paper(args) -> int:
    rows = repro_rows()
    w = max(len(r.label) for r in rows)
    print(f"{'quantity':<{w}}  {'expected':>10}  {'computed':>24}  {'|delta|':>8}  status")
    for r in rows:
        print(f"{r.label:<{w}}  {r.expected:>10}  {r.computed:>24}  {r.delta:>8}  "
              f"{'pass' if r.ok else 'FAIL'}")
    bad = sum(not r.ok for r in rows)
    print(f"{len(rows) - bad}/{len(rows)} reproduced")
    return 0 if bad == 0 else 1


# verify --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = build_config(args)
    result = run_campaign(cfg.checks, cfg.dims, cfg.trials, cfg.seed, workers=cfg.workers,
                          tol=cfg.tol, keep_all=cfg.all_results)
    summary = {}
    print(f"{'check':<16} {'kind':<10} {'n':>6} {'pass':>6} {'fail':>6} {'anom':>5}  min normalized margin")
    for cid, s in result.summaries.items():
        d = s.to_dict()
        d["worst"] = s.worst
        summary[cid] = d
        print(f"{cid:<16} {s.kind:<10} {s.instances:>6} {s.passed:>6} {s.failed:>6} "
              f"{s.anomalies:>5}  {s.min_normalized_margin:.3e}")
    rate = result.anomaly_count / max(1, result.instances)
    report = {
        "meta": {"version": __version__, "seed": cfg.seed, "config": cfg.to_dict()},
        "results": result.results,
        "anomalies": result.anomalies,
        "summary": {"checks": summary, "instances": result.instances,
                    "failures": result.failures, "anomalies": result.anomaly_count},
    }
    _write_json(cfg.json, report)
    ok = result.failures == 0 and rate <= cfg.anomaly_rate
    print(f"{result.instances} instances, {result.failures} inequality failures, "
          f"{result.anomaly_count} anomalies -> {'OK' if ok else 'FINDINGS'}")
    return 0 if ok else 1


# fuzz ------------------------------------------------------------------------------

def cmd_fuzz(args) -> int:
    from . import iql

    try:
        with open(args.path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc}") from None
    try:
        prog = iql.parse(text)
    except iql.IqlError as exc:
        raise UsageError(f"{args.path}:{exc}") from None
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    try:
        found = hunt_violation(prog, trials=args.trials, seed=args.seed, tol=args.tol)
    except iql.IqlError as exc:
        raise UsageError(f"{args.path}:{exc}") from None
    report = {
        "meta": {"version": __version__, "seed": args.seed,
                 "config": {"statement": iql.pretty(prog), "trials": args.trials, "tol": args.tol}},
        "results": [found.to_dict()] if found else [],
        "summary": {"violated": found is not None,
                    "trials_run": found.trials_run if found else args.trials},
    }
    _write_json(args.json, report)
    if found is None:
        print(f"no violation in {args.trials} trials")
        return 0
    print(f"violation at trial {found.index}: normalized magnitude {found.magnitude:.6g}")
    if found.steps:
        print("shrunk: " + "; ".join(found.steps) +
              f" (magnitude {found.shrunk_magnitude:.6g})")
    print("witness:")
    for name, value in found.witness.items():
        print(f"  {name} = {_show_matrix(value)}")
    return 1


def _show_matrix(m: np.ndarray) -> str:
    def num(z):
        z = complex(z)
        if z.imag == 0:
            return f"{z.real:.6g}"
        return f"{z.real:.6g}{z.imag:+.6g}j"
    return "[" + ", ".join("[" + ", ".join(num(v) for v in row) + "]" for row in m) + "]"


# sharpness ---------------------------------------------------------------------------

def cmd_sharpness(args) -> int:
    if args.target not in TARGETS:
        raise UsageError(f"unknown target {args.target!r}; choose from {', '.join(TARGETS)}")
    try:
        norm = parse_norm(args.norm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not (args.a > 0 and args.b > 0):
        raise UsageError("a and b must be positive")
    dims = parse_dims(args.dims)[0]
    if dims < 2:
        raise UsageError("sharpness search needs dims >= 2")
    if args.budget < 1:
        raise UsageError("budget must be >= 1")
    res = maximize_ratio(args.target, dims=dims, budget=args.budget, seed=args.seed,
                         a=args.a, b=args.b, norm=norm, starts=args.starts)
    print(f"target {res.target}  n={res.dims}  norm {res.norm}")
    print(f"best_ratio {res.best_ratio:.10f}  bound {res.bound:.10f}  "
          f"ratio/bound {res.best_ratio / res.bound:.10f}")
    print(f"evaluations {res.iterations}  converged {res.converged}")
    _write_json(args.json, {
        "meta": {"version": __version__, "seed": args.seed,
                 "config": {"target": args.target, "a": args.a, "b": args.b, "dims": dims,
                            "budget": args.budget, "norm": args.norm, "starts": args.starts}},
        "results": [res.to_dict()],
        "summary": {"best_ratio": res.best_ratio, "bound": res.bound},
    })
    return 0


# parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opineq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("repro-paper", help="recompute the reference values and witnesses")
    r.set_defaults(func=cmd_repro_paper)

    v = sub.add_parser("verify", help="run seeded verification campaigns")
    v.add_argument("--checks", help="comma-separated check ids or 'all'")
    v.add_argument("--trials", help="instances per check and dimension")
    v.add_argument("--dims", help="dimension range A..B")
    v.add_argument("--seed")
    v.add_argument("--tol")
    v.add_argument("--json", help="write the JSON report here")
    v.add_argument("--workers", help="worker processes (default: available CPUs)")
    v.add_argument("--anomaly-rate", dest="anomaly_rate",
                   help="tolerated fraction of hypothesis-violation anomalies")
    v.add_argument("--all-results", dest="all_results", action="store_true",
                   help="store every report, not only failures")
    v.add_argument("--config", help="key=value file; flags override it")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fuzz", help="hunt violations of a query file")
    f.add_argument("path")
    f.add_argument("--trials", type=int, default=10_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--tol", type=float, default=TOL)
    f.add_argument("--json")
    f.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("sharpness", help="maximize an inequality's ratio toward its bound")
    s.add_argument("--target", required=True)
    s.add_argument("--a", type=float, default=8.0)
    s.add_argument("--b", type=float, default=2.0)
    s.add_argument("--dims", default="2")
    s.add_argument("--budget", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--norm", default="fan:1")
    s.add_argument("--starts", type=int, default=16)
    s.add_argument("--json")
    s.set_defaults(func=cmd_sharpness)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"opineq: error: {exc}", file=sys.stderr)
        return 2
    except (OpineqError, ValueError) as exc:
        print(f"opineq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
