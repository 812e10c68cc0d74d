"""Kendall's tau and the train-on-synthetic / test-on-real harness."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import baselines as bl
from .embed import WalkConfig, node_features
from .graph import Graph
from .ican.config import ABLATIONS, IcanConfig, ablation
from .ican.inference import rank_nodes
from .ican.training import train
from .netgen import GenSpec, generate
from .ranking import Ranking
from .sir import SirConfig, influence_scores

log = logging.getLogger(__name__)


# -- Kendall tau ------------------------------------------------------------------


@dataclass(frozen=True)
class TauResult:
    tau: float  # tau-a
    n: int
    concordant: int
    discordant: int
    ties_x: int  # pairs tied in x (including joint ties)
    ties_y: int
    ties_xy: int  # pairs tied in both
    tau_b: float


def _tied_pairs(sorted_vals: np.ndarray) -> int:
    if sorted_vals.size == 0:
        return 0
    change = np.flatnonzero(np.diff(sorted_vals) != 0)
    runs = np.diff(np.concatenate(([0], change + 1, [sorted_vals.size])))
    return int(np.sum(runs * (runs - 1) // 2))


def _joint_tied_pairs(x: np.ndarray, y: np.ndarray) -> int:
    """Pairs tied in both coordinates; ``x``, ``y`` already sorted lexicographically."""
    if x.size == 0:
        return 0
    new = np.concatenate(([True], (np.diff(x) != 0) | (np.diff(y) != 0)))
    idx = np.flatnonzero(new)
    runs = np.diff(np.concatenate((idx, [x.size])))
    return int(np.sum(runs * (runs - 1) // 2))


def _count_inversions(a: np.ndarray) -> int:
    """Number of pairs i < j with a[i] > a[j], by bottom-up merge sort."""
    a = a.copy()
    n = a.size
    buf = np.empty_like(a)
    inv = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            if mid >= hi:
                buf[lo:hi] = a[lo:hi]
                continue
            left, right = a[lo:mid], a[mid:hi]
            # for each right element, how many left elements are strictly greater
            pos = np.searchsorted(left, right, side="right")
            inv += int(np.sum(left.size - pos))
            merged = np.concatenate((left, right))
            merged.sort(kind="mergesort")
            buf[lo:hi] = merged
        a, buf = buf, a
        width *= 2
    return inv


def kendall_tau(x, y) -> TauResult:
    """Tau-a: 2 (N_c - N_d) / (n (n - 1)), tied pairs counted as neither."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 2:
        raise ValueError("kendall_tau needs at least two observations")
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(xs)
    n3 = _joint_tied_pairs(xs, ys)
    n2 = _tied_pairs(np.sort(ys))
    # within x-ties y is ascending, so inversions only come from x-ordered pairs
    nd = _count_inversions(ys)
    nc = n0 - n1 - n2 + n3 - nd
    tau = 2.0 * (nc - nd) / (n * (n - 1))
    denom = np.sqrt(float(n0 - n1) * float(n0 - n2))
    tau_b = (nc - nd) / denom if denom > 0 else float("nan")
    return TauResult(tau, n, nc, nd, n1, n2, n3, float(tau_b))


def kendall_tau_bruteforce(x, y) -> TauResult:
    """O(n^2) reference definition."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.size
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, 1)
    prod = (dx * dy)[iu]
    nc, nd = int(np.sum(prod > 0)), int(np.sum(prod < 0))
    tx, ty = int(np.sum(dx[iu] == 0)), int(np.sum(dy[iu] == 0))
    txy = int(np.sum((dx[iu] == 0) & (dy[iu] == 0)))
    n0 = n * (n - 1) // 2
    denom = np.sqrt(float(n0 - tx) * float(n0 - ty))
    return TauResult(2.0 * (nc - nd) / (n * (n - 1)), n, nc, nd, tx, ty, txy,
                     float((nc - nd) / denom) if denom > 0 else float("nan"))


# -- experiment harness -----------------------------------------------------------


@dataclass(frozen=True)
class Target:
    """A named evaluation network; ``graph`` is loaded lazily by the caller."""

    name: str
    graph: Graph


@dataclass(frozen=True)
class HarnessConfig:
    sir: SirConfig = SirConfig()
    walk: WalkConfig = WalkConfig()
    ican: IcanConfig = IcanConfig()
    label_seed: int = 12345  # fixed ground-truth labels per target
    use_presets: bool = False  # per-target lambda presets at training time

    def to_dict(self) -> dict:
        return {"sir": asdict(self.sir), "walk": asdict(self.walk), "ican": self.ican.to_dict(),
                "label_seed": self.label_seed, "use_presets": self.use_presets}


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TauRecord:
    method: str
    train_model: str
    target: str
    seed: int
    tau: float
    tau_b: float


@dataclass
class ExperimentReport:
    train_spec: dict
    targets: list[str]
    seeds: list[int]
    methods: list[str]
    records: list[TauRecord] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash({"train": self.train_spec, "targets": self.targets, "seeds": self.seeds,
                            "methods": self.methods, "config": self.config})

    def taus(self, method: str, target: str) -> list[float]:
        return [r.tau for r in self.records if r.method == method and r.target == target]

    def means(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for m in self.methods:
            for t in self.targets:
                v = self.taus(m, t)
                if v:
                    out.setdefault(m, {})[t] = float(np.mean(v))
        return out

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "train_spec": self.train_spec, "targets": self.targets,
                "seeds": self.seeds, "methods": self.methods, "config": self.config,
                "records": [asdict(r) for r in self.records], "means": self.means(),
                "failures": self.failures, "wall_clock_seconds": self.wall_clock}

    def to_csv(self) -> str:
        """Flat per-seed table; no timing, so equal inputs give equal bytes."""
        buf = io.StringIO()
        buf.write(f"# config_hash={self.config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "train_model", "target", "seed", "tau"])
        for r in self.records:
            w.writerow([r.method, r.train_model, r.target, r.seed, repr(float(r.tau))])
        return buf.getvalue()

    def write(self, out_dir: str | Path, stem: str = "benchmark") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        j, c = out / f"{stem}.json", out / f"{stem}.csv"
        j.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        c.write_text(self.to_csv())
        return j, c


ICAN_METHODS = {"ICAN": "full", **{f"ICAN_{v}": v for v in ABLATIONS if v != "full"}}


def method_variant(method: str) -> str | None:
    return ICAN_METHODS.get(method)


def _label(g: Graph, cfg: SirConfig, seed: int) -> np.ndarray:
    return influence_scores(g, replace(cfg, seed=seed)).y


def _seed_cell(train_spec, targets, methods, seed, cfg, lambdas_for, truth):
    """Everything that depends on one model seed: (records, failures)."""
    records, failures = [], []
    spec = replace(train_spec, seed=seed)
    g = generate(spec)
    y = _label(g, cfg.sir, seed)
    wcfg = replace(cfg.walk, seed=seed)
    x = node_features(g, wcfg, cfg.ican.feature_dim).data
    feats = {t.name: node_features(t.graph, wcfg, cfg.ican.feature_dim).data for t in targets}
    models = {}
    for m in methods:
        variant = method_variant(m)
        for t in targets:
            try:
                if variant is None:
                    scores = _baseline_scores(m, t.graph)
                else:
                    lams = lambdas_for(t.name) if lambdas_for else cfg.ican.lambdas
                    icfg = ablation(replace(cfg.ican, seed=seed).with_lambdas(lams), variant)
                    if icfg not in models:
                        log.info("seed %d: training %s with lambdas %s", seed, m, icfg.lambdas)
                        models[icfg] = train(g, x, y, icfg)
                    scores = rank_nodes(models[icfg], t.graph, feats[t.name]).scores
                res = kendall_tau(scores, truth[t.name])
                records.append(TauRecord(m, spec.model, t.name, seed, res.tau, res.tau_b))
            except Exception as e:  # keep going; the failure is part of the report
                log.error("seed %d, %s on %s failed: %s", seed, m, t.name, e)
                failures.append({"seed": seed, "method": m, "target": t.name, "error": repr(e)})
    return records, failures


def _baseline_scores(method: str, g: Graph) -> np.ndarray:
    return bl.baseline(method, g).values


def run_benchmark(
    train_spec: GenSpec,
    targets: Sequence[Target],
    methods: Sequence[str],
    seeds: Sequence[int],
    cfg: HarnessConfig = HarnessConfig(),
    lambdas_for: Callable[[str], tuple[float, float, float]] | None = None,
    jobs: int = 1,
) -> ExperimentReport:
    """Train on synthetic graphs (one per seed), rank each target with every method.

    Target ground truth is labelled once with ``cfg.label_seed``; only the
    model seed varies between runs. With ``jobs > 1`` seeds run in worker
    processes and results are merged in seed order, so the report does not
    depend on ``jobs``.
    """
    t_start = time.perf_counter()
    report = ExperimentReport(
        train_spec={"model": train_spec.model, "n": train_spec.n,
                    "target_avg_degree": train_spec.target_avg_degree,
                    "model_params": dict(train_spec.model_params)},
        targets=[t.name for t in targets], seeds=list(seeds), methods=list(methods),
        config=cfg.to_dict(),
    )
    base_names = {k.lower() for k in bl.BASELINES}
    for m in methods:
        if m not in ICAN_METHODS and m.lower() not in base_names:
            raise ValueError(f"unknown method {m!r}")
    truth = {t.name: _label(t.graph, cfg.sir, cfg.label_seed) for t in targets}
    args = [(train_spec, list(targets), list(methods), s, cfg, lambdas_for, truth) for s in seeds]
    if jobs > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            cells = list(ex.map(_seed_cell, *zip(*args)))
    else:
        cells = [_seed_cell(*a) for a in args]
    for recs, fails in cells:
        report.records.extend(recs)
        report.failures.extend(fails)
    report.wall_clock = time.perf_counter() - t_start
    return report


def run_ablation(train_spec, targets, seeds, cfg=HarnessConfig(), variants=ABLATIONS, lambdas_for=None):
    methods = ["ICAN" if v == "full" else f"ICAN_{v}" for v in variants]
    return run_benchmark(train_spec, targets, methods, seeds, cfg, lambdas_for)


def lambda_sweep(train_spec, target: Target, seeds, which: int, values, cfg=HarnessConfig()):
    """Mean tau of ICAN as one of (lambda1, lambda2, lambda3) varies."""
    rows = []
    base = cfg.ican.lambdas
    for v in values:
        lams = list(base)
        lams[which] = float(v)
        rep = run_benchmark(train_spec, [target], ["ICAN"], seeds, cfg, lambdas_for=lambda _t, l=tuple(lams): l)
        taus = rep.taus("ICAN", target.name)
        rows.append({"lambda": f"lambda{which + 1}", "value": float(v),
                     "mean_tau": float(np.mean(taus)) if taus else float("nan"), "taus": taus})
    return rows


# -- top-k degree export ----------------------------------------------------------


def topk_degree_hist(g: Graph, ranking: Ranking, fraction: float = 0.1):
    """Degree histogram and (node, degree, score) scatter of the top fraction of nodes."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    k = max(1, int(np.ceil(fraction * g.n - 1e-9)))
    top = ranking.order[:k]
    deg = g.degrees[top]
    vals, counts = np.unique(deg, return_counts=True)
    hist = [(int(d), float(c) / k) for d, c in zip(vals, counts)]
    scatter = [(int(v), int(g.degrees[v]), float(ranking.scores[v])) for v in top]
    return hist, scatter
