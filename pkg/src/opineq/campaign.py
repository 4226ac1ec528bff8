"""Seeded verification campaigns over every check.

Instance ``(check_id, dim, index)`` is built from its own substream, so a
campaign gives identical reports regardless of worker count or order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from . import checks, ensembles as en
from .errors import HypothesisViolation
from .opconvex import random_member
from .report import TOL, CheckReport


def _z(rng, n):
    a, b = en.random_extremes(rng)
    return en.gen_posdef(n, a, b, rng=rng, force_endpoints=n >= 2)


def _psd(rng, n):
    scale = float(10 ** rng.uniform(-1, 1))
    if rng.uniform() < 0.15:
        h = en.gen_unit_vector(n, rng=rng)
        return scale * np.outer(h, h.conj())
    return en.gen_psd(n, scale, rng=rng)


def _eq1(rng, n, index):
    mode = en.AB_MODES[index % 2]
    return checks.check_eq1, dict(zip("ab", en.gen_ab_pair(n, mode, rng=rng)))


def _thm12(rng, n, index):
    a, b = en.gen_ab_pair(n, en.AB_MODES[index % 2], rng=rng)
    return checks.check_thm_1_2, {"a": a, "b": b, "z": _z(rng, n)}


def _lem11(rng, n, index):
    return checks.check_lemma_1_1, {"z": _z(rng, n), "h": en.gen_unit_vector(n, rng=rng)}


def _cor13(rng, n, index):
    return checks.check_cor_1_3, {"a": _psd(rng, n), "z": _z(rng, n)}


def _cor14(rng, n, index):
    return checks.check_cor_1_4, {"a": _psd(rng, n), "z": _z(rng, n)}


def _cor15(rng, n, index):
    return checks.check_cor_1_5, {"x": en.gen_positive_contraction(n, rng=rng), "z": _z(rng, n)}


def _cor167(rng, n, index):
    k = 1 if index % 2 == 0 else int(rng.integers(1, n + 1))
    return checks.check_cor_1_6_1_7, {"z": _z(rng, n), "p": en.gen_isometry(n, k, rng=rng)}


def _cor18(rng, n, index):
    k = int(rng.integers(1, n + 1))
    return checks.check_cor_1_8, {"z": _z(rng, n), "p": en.gen_isometry(n, k, rng=rng)}


def _compression(rng, n, index):
    k = int(rng.integers(1, n + 1))
    return checks.check_compression_convexity, {
        "z": _z(rng, n), "p": en.gen_isometry(n, k, rng=rng), "f": random_member(rng)}


def _jensen(rng, n, index):
    m = int(rng.integers(1, 5))
    hi, lo = en.random_extremes(rng)
    zs = []
    for _ in range(m):
        x, y = np.sort(rng.uniform(lo, hi, 2))[::-1]
        zs.append(en.gen_posdef(n, x, y, rng=rng, force_endpoints=n >= 2))
    col = en.gen_isometric_column(n, m, rng=rng)
    return checks.check_jensen, {"zs": zs, "col": col, "f": random_member(rng)}


def _contractive(rng, n, index):
    z = _z(rng, n)
    f = random_member(rng, include_inverse=False)
    if index % 2 == 0:
        return checks.check_contractive, {"z": z, "f": f, "a": en.gen_contraction(n, rng=rng)}
    m = int(rng.integers(1, 4))
    col = en.gen_isometric_column(n, m, rng=rng)
    scale = float(rng.uniform(0.5, 1.0))
    return checks.check_contractive, {"z": z, "f": f, "kraus": [scale * b for b in col.blocks]}


def _wedge(rng, n, index):
    return checks.check_wedge_remark, {"z": _z(rng, n), "k": int(rng.integers(1, n + 1))}


def _svnonext(rng, n, index):
    return checks.check_sv_non_extension, {}


BUILDERS = {
    "eq1": _eq1,
    "thm1.2": _thm12,
    "lem1.1": _lem11,
    "cor1.3": _cor13,
    "cor1.4": _cor14,
    "cor1.5": _cor15,
    "cor1.6-7": _cor167,
    "cor1.8": _cor18,
    "prop1.11+thm2.1": _compression,
    "thm2.2+2.4": _jensen,
    "cor2.3+2.5+2.9": _contractive,
    "rem1.10": _wedge,
    "sv-nonext": _svnonext,
}
assert tuple(BUILDERS) == checks.CHECK_IDS


def run_instance(check_id: str, n: int, seed: int, index: int, tol: float = TOL) -> CheckReport:
    """Build and evaluate one seeded instance."""
    rng = en.substream(seed, check_id, index, n)
    fn, kwargs = BUILDERS[check_id](rng, n, index)
    report = fn(**kwargs, tol=tol)
    return report.with_digest(mode="campaign", seed=seed, index=index, dims=[n])


@dataclass
class CheckSummary:
    check_id: str
    kind: str
    instances: int = 0
    passed: int = 0
    failed: int = 0
    anomalies: int = 0
    min_margin: float = float("inf")
    min_normalized_margin: float = float("inf")
    worst: dict = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "instances": self.instances,
            "passed": self.passed,
            "failed": self.failed,
            "anomalies": self.anomalies,
            "min_margin": self.min_margin,
            "min_normalized_margin": self.min_normalized_margin,
        }
        if self.kind == "relation":
            out["relation_held"] = out.pop("passed")
            out["relation_violated"] = out.pop("failed")
        return out


@dataclass
class CampaignResult:
    summaries: Dict[str, CheckSummary]
    results: List[dict]
    anomalies: List[dict]

    @property
    def failures(self) -> int:
        """Failed instances of inequality checks (relation checks excluded)."""
        return sum(s.failed for s in self.summaries.values() if s.kind == "inequality")

    @property
    def anomaly_count(self) -> int:
        return sum(s.anomalies for s in self.summaries.values())

    @property
    def instances(self) -> int:
        return sum(s.instances for s in self.summaries.values())


def _run_block(args):
    check_id, n, seed, start, stop, tol, keep_all = args
    out = []
    for index in range(start, stop):
        try:
            rep = run_instance(check_id, n, seed, index, tol)
        except HypothesisViolation as exc:
            out.append(("anomaly", index, {"check_id": check_id, "dims": [n], "seed": seed,
                                           "index": index, "error": str(exc)}))
            continue
        keep = keep_all or (not rep.passed and rep.kind == "inequality")
        out.append(("report", index, rep.passed, rep.margin, rep.scale,
                    rep.to_dict() if keep else None))
    return out


def run_campaign(check_ids: Sequence[str], dims: Sequence[int], trials: int, seed: int,
                 workers: int = 1, tol: float = TOL, keep_all: bool = False,
                 block: int = 250) -> CampaignResult:
    """Run ``trials`` instances per (check, dimension).

    ``results`` holds every failing inequality report (all reports with
    ``keep_all``); each summary carries the full report of its tightest
    instance.
    """
    unknown = [c for c in check_ids if c not in BUILDERS]
    if unknown:
        raise ValueError(f"unknown check ids: {', '.join(unknown)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [(c, n, seed, s, min(s + block, trials), tol, keep_all)
             for c in check_ids for n in dims for s in range(0, trials, block)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block, tasks))
    else:
        blocks = [_run_block(t) for t in tasks]

    summaries = {c: CheckSummary(c, "relation" if c in checks.RELATION_CHECKS else "inequality")
                 for c in check_ids}
    results, anomalies = [], []
    tightest = {}
    for (cid, n, *_), items in zip(tasks, blocks):
        summ = summaries[cid]
        for item in items:
            summ.instances += 1
            if item[0] == "anomaly":
                summ.anomalies += 1
                anomalies.append(item[2])
                continue
            _, index, ok, margin, scale, data = item
            summ.passed += ok
            summ.failed += not ok
            summ.min_margin = min(summ.min_margin, margin)
            if margin / scale < summ.min_normalized_margin:
                summ.min_normalized_margin = margin / scale
                tightest[cid] = (n, index)
            if data is not None:
                results.append(data)
    for cid, (n, index) in tightest.items():
        summaries[cid].worst = run_instance(cid, n, seed, index, tol).to_dict()
    return CampaignResult(summaries, results, anomalies)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
