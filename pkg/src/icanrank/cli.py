"""Command-line entry point: ``icanrank <subcommand> ...``.

Settings resolve as defaults < ``--config`` file < flags. The config file
holds flat ``section.key = value`` lines with sections ``graph``, ``sir``,
``walk``, ``ican`` and ``eval``. Every file written carries a header comment
with the hash of the resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import baselines as bl
from .embed import WalkConfig, load_features, node_features, save_features
from .evaluate import (
    HarnessConfig,
    Target,
    config_hash,
    kendall_tau,
    lambda_sweep,
    run_ablation,
    run_benchmark,
    topk_degree_hist,
)
from .graph import Graph, karate_club, load_edge_list, save_edge_list
from .ican import ABLATIONS, IcanConfig, ablation, lambda_preset, load_model, rank_nodes, save_model, train
from .netgen import MODELS, GenSpec, generate
from .ranking import Ranking
from .sir import SirConfig, influence_scores, label_header

log = logging.getLogger("icanrank")

SECTIONS = {"sir": SirConfig, "walk": WalkConfig, "ican": IcanConfig}


class CliError(Exception):
    pass


# -- config resolution ------------------------------------------------------------


def _coerce(raw: str, default):
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise CliError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or default is None:
        return None if raw.lower() == "none" else float(raw)
    return raw


def read_config_file(path: str | None) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    if not path:
        return out
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{k}: expected section.key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise CliError(f"{path}:{k}: key {key!r} lacks a section prefix")
        sec, name = key.split(".", 1)
        out.setdefault(sec, {})[name] = val
    return out


def _build(cls, file_section: dict[str, str], overrides: dict):
    base = cls()
    known = {f.name: getattr(base, f.name) for f in fields(cls)}
    kw = {}
    for k, v in file_section.items():
        if k not in known:
            raise CliError(f"unknown config key {cls.__name__}.{k}")
        kw[k] = _coerce(v, known[k])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return replace(base, **kw)
    except (TypeError, ValueError) as e:
        raise CliError(str(e)) from e


def resolve(args, **overrides) -> dict:
    """Merged run configuration for the subcommand."""
    file_cfg = read_config_file(getattr(args, "config", None))
    unknown = set(file_cfg) - set(SECTIONS) - {"graph", "eval"}
    if unknown:
        raise CliError(f"unknown config sections: {sorted(unknown)}")
    out = {}
    for sec, cls in SECTIONS.items():
        out[sec] = _build(cls, file_cfg.get(sec, {}), overrides.get(sec, {}))
    out["graph"] = {**file_cfg.get("graph", {}), **{k: v for k, v in overrides.get("graph", {}).items() if v is not None}}
    out["eval"] = {**file_cfg.get("eval", {}), **{k: v for k, v in overrides.get("eval", {}).items() if v is not None}}
    return out


def run_config_dict(rc: dict, command: str) -> dict:
    d = {"command": command, "version": __version__}
    for k, v in rc.items():
        d[k] = v.to_dict() if hasattr(v, "to_dict") else (asdict(v) if hasattr(v, "__dataclass_fields__") else v)
    return d


def header(rc: dict, command: str) -> str:
    d = run_config_dict(rc, command)
    return f"icanrank {__version__} {command} config_hash={config_hash(d)}\nconfig={json.dumps(d, sort_keys=True)}"


# -- IO helpers -------------------------------------------------------------------


def load_graph(spec: str) -> Graph:
    if spec.lower() == "karate":
        return karate_club()
    path = Path(spec)
    if not path.exists():
        raise CliError(f"graph file not found: {spec}")
    return load_edge_list(path)


def node_ids(g: Graph) -> list[str]:
    return list(g.node_labels) if g.node_labels else [str(i) for i in range(g.n)]


def _write_csv(path: str, head: str, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for h in head.splitlines():
            fh.write(f"# {h}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(r)


def read_score_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Node ids and the second column of a CSV written by label/rank/baseline."""
    ids, vals = [], []
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise CliError(f"{path}: no rows")
    start = 1 if not _is_number(rows[0][1]) else 0
    for r in rows[start:]:
        ids.append(r[0])
        vals.append(float(r[1]))
    return ids, np.asarray(vals)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _aligned(g: Graph, path: str) -> np.ndarray:
    ids, vals = read_score_csv(path)
    index = {v: i for i, v in enumerate(ids)}
    try:
        return np.asarray([vals[index[v]] for v in node_ids(g)])
    except KeyError as e:
        raise CliError(f"{path}: no score for node {e.args[0]}") from None


def _features(g: Graph, path: str | None, rc: dict, dim: int):
    if path:
        fm = load_features(path, expected_dim=dim)
        if fm.rows != g.n:
            raise CliError(f"{path}: {fm.rows} feature rows for a graph of {g.n} nodes")
        return fm
    return node_features(g, rc["walk"], dim)


def _write_ranking(path: str, g: Graph, r: Ranking, head: str) -> None:
    ids = node_ids(g)
    _write_csv(path, head, ["node", "score", "rank"],
               ([ids[i], repr(float(r.scores[i])), int(r.ranks[i])] for i in range(g.n)))


# -- subcommands ------------------------------------------------------------------


def cmd_generate(args):
    rc = resolve(args, graph={"model": args.model, "nodes": args.nodes, "avg_degree": args.avg_degree,
                              "seed": args.seed})
    params = dict(_kv(p) for p in args.param or [])
    spec = GenSpec(args.model, args.nodes, args.avg_degree, args.seed, params)
    g = generate(spec)
    rc["graph"]["params"] = params
    save_edge_list(g, args.out, header(rc, "generate"))
    log.info("wrote %s: n=%d, m=%d, mean degree %.4f", args.out, g.n, g.num_edges, 2 * g.num_edges / g.n)


def _kv(s: str):
    if "=" not in s:
        raise CliError(f"expected key=value, got {s!r}")
    k, v = s.split("=", 1)
    return k, (float(v) if _is_number(v) else v)


def _sir_overrides(args):
    return {"gamma": args.gamma, "delta": args.delta, "sims_per_node": args.sims, "seed": args.seed}


def cmd_label(args):
    rc = resolve(args, sir=_sir_overrides(args), graph={"path": args.graph})
    g = load_graph(args.graph)
    res = influence_scores(g, rc["sir"])
    head = header(rc, "label") + "\n" + label_header(res)
    ids = node_ids(g)
    _write_csv(args.out, head, ["node_id", "influence_score"],
               ([ids[i], repr(float(res.y[i]))] for i in range(g.n)))


def _walk_overrides(args):
    return {"seed": args.seed, "walks_per_node": args.walks_per_node, "walk_length": args.walk_length,
            "window": args.window, "p": args.p, "q": args.q, "epochs": args.epochs}


def cmd_embed(args):
    rc = resolve(args, walk=_walk_overrides(args), graph={"path": args.graph})
    g = load_graph(args.graph)
    fm = node_features(g, rc["walk"], args.dim)
    save_features(fm, args.out, header(rc, "embed"))


def _ican_overrides(args):
    keys = ("outer_iters", "inner_steps", "learning_rate", "lambda1", "lambda2", "lambda3",
            "feature_dim", "w_threshold", "ranking_input", "ranking_loss", "optimizer",
            "rank_adjacency", "seed")
    return {k: getattr(args, k, None) for k in keys}


def _apply_variant(cfg: IcanConfig, variant: str | None, causal_flag: bool | None) -> IcanConfig:
    if causal_flag is False and variant in (None, "full"):
        if cfg.ranking_input == "mb":
            raise CliError("ranking_input=mb needs the causal graph; pass --variant wo-cau to disable it")
        cfg = replace(cfg, causal_enabled=False)
    return ablation(cfg, variant) if variant else cfg


def cmd_train(args):
    rc = resolve(args, ican=_ican_overrides(args), graph={"path": args.graph})
    rc["ican"] = _apply_variant(rc["ican"], args.variant, args.causal)
    g = load_graph(args.graph)
    y = _aligned(g, args.labels)
    x = _features(g, args.features, rc, rc["ican"].feature_dim)
    model = train(g, x, y, rc["ican"])
    save_model(model, args.out)
    log.info("saved %s; mb columns %s", args.out, model.mb_columns)


def cmd_rank(args):
    model = load_model(args.model)
    rc = resolve(args, ican=model.config.to_dict(), graph={"path": args.graph})
    g = load_graph(args.graph)
    x = _features(g, args.features, rc, model.config.feature_dim)
    r = rank_nodes(model, g, x)
    _write_ranking(args.out, g, r, header(rc, "rank"))


def cmd_baseline(args):
    rc = resolve(args, graph={"path": args.graph}, eval={"method": args.method})
    g = load_graph(args.graph)
    res = bl.baseline(args.method, g)
    _write_ranking(args.out, g, res.ranking, header(rc, "baseline"))


def cmd_eval(args):
    g = load_graph(args.graph) if args.graph else None
    if g is not None:
        s, y = _aligned(g, args.scores), _aligned(g, args.labels)
    else:
        ids_s, s = read_score_csv(args.scores)
        ids_y, y = read_score_csv(args.labels)
        if ids_s != ids_y:
            index = {v: i for i, v in enumerate(ids_y)}
            y = np.asarray([y[index[v]] for v in ids_s])
    res = kendall_tau(s, y)
    text = json.dumps(asdict(res), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


def _targets(names: list[str]) -> list[Target]:
    out = []
    for t in names:
        g = load_graph(t)
        out.append(Target(Path(t).stem if t.lower() != "karate" else "karate", g))
    return out


def _harness(args, rc) -> HarnessConfig:
    return HarnessConfig(rc["sir"], rc["walk"], rc["ican"], label_seed=args.label_seed,
                         use_presets=args.presets)


def _bench_rc(args):
    return resolve(
        args,
        ican=_ican_overrides(args),
        sir={"sims_per_node": args.sims},
        graph={"train_model": args.train_model, "nodes": args.nodes, "avg_degree": args.avg_degree},
        eval={"targets": args.targets, "seeds": args.seeds, "label_seed": args.label_seed,
              "presets": args.presets},
    )


def _write_report(rep, out_dir: str, stem: str):
    j, c = rep.write(out_dir, stem)
    log.info("wrote %s and %s", j, c)
    for m, per in rep.means().items():
        for t, v in per.items():
            log.info("%-20s %-12s mean tau %.4f", m, t, v)


def cmd_benchmark(args):
    rc = _bench_rc(args)
    cfg = _harness(args, rc)
    spec = GenSpec(args.train_model, args.nodes, args.avg_degree)
    lam = lambda_preset if args.presets else None
    rep = run_benchmark(spec, _targets(args.targets), args.methods, _seeds(args), cfg, lam, jobs=args.jobs)
    rep.config["run"] = run_config_dict(rc, "benchmark")
    _write_report(rep, args.out_dir, "benchmark")


def cmd_ablate(args):
    rc = _bench_rc(args)
    cfg = _harness(args, rc)
    spec = GenSpec(args.train_model, args.nodes, args.avg_degree)
    lam = lambda_preset if args.presets else None
    variants = args.variant or list(ABLATIONS)
    if args.sweep:
        which = int(args.sweep[-1]) - 1
        rows = lambda_sweep(spec, _targets(args.targets)[0], _seeds(args), which, args.values, cfg)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(str(out / f"sweep_{args.sweep}.csv"), header(rc, "ablate"), ["lambda", "value", "mean_tau"],
                   ([r["lambda"], r["value"], repr(r["mean_tau"])] for r in rows))
        return
    rep = run_ablation(spec, _targets(args.targets), _seeds(args), cfg, variants, lam)
    rep.config["run"] = run_config_dict(rc, "ablate")
    _write_report(rep, args.out_dir, "ablation")


def _seeds(args) -> list[int]:
    return list(range(args.master_seed, args.master_seed + args.seeds))


def cmd_topk(args):
    rc = resolve(args, graph={"path": args.graph}, eval={"fraction": args.fraction})
    g = load_graph(args.graph)
    r = Ranking.from_scores(_aligned(g, args.scores))
    hist, scatter = topk_degree_hist(g, r, args.fraction)
    head = header(rc, "topk-degrees")
    ids = node_ids(g)
    _write_csv(f"{args.out_prefix}_hist.csv", head, ["degree", "relative_frequency"],
               ([d, repr(f)] for d, f in hist))
    _write_csv(f"{args.out_prefix}_scatter.csv", head, ["node", "degree", "score"],
               ([ids[v], d, repr(s)] for v, d, s in scatter))


# -- parser -----------------------------------------------------------------------


def _version_string() -> str:
    defaults = {"sir": asdict(SirConfig()), "walk": asdict(WalkConfig()), "ican": IcanConfig().to_dict()}
    h = hashlib.sha256(json.dumps(defaults, sort_keys=True).encode()).hexdigest()[:12]
    return f"icanrank {__version__} (defaults {h})"


def _add_ican(p):
    g = p.add_argument_group("model")
    g.add_argument("--outer-iters", dest="outer_iters", type=int)
    g.add_argument("--inner-steps", dest="inner_steps", type=int)
    g.add_argument("--learning-rate", dest="learning_rate", type=float)
    g.add_argument("--lambda1", type=float)
    g.add_argument("--lambda2", type=float)
    g.add_argument("--lambda3", type=float)
    g.add_argument("--feature-dim", dest="feature_dim", type=int)
    g.add_argument("--w-threshold", dest="w_threshold", type=float)
    g.add_argument("--ranking-input", dest="ranking_input", choices=("mb", "full"))
    g.add_argument("--ranking-loss", dest="ranking_loss", choices=("causal_listmle", "listmle_full", "mse"))
    g.add_argument("--rank-adjacency", dest="rank_adjacency", choices=("raw", "normalized"))
    g.add_argument("--optimizer", choices=("adam", "gd"))


def _add_bench(p):
    p.add_argument("--train-model", default="BA", type=str.upper, choices=MODELS)
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--avg-degree", type=float, default=4.0)
    p.add_argument("--targets", nargs="+", default=["karate"], help="edge-list paths or 'karate'")
    p.add_argument("--seeds", type=int, default=5, help="number of model seeds")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--label-seed", type=int, default=12345)
    p.add_argument("--sims", type=int, help="SIR replicates per node")
    p.add_argument("--presets", action="store_true", help="use the per-target lambda presets")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_ican(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icanrank", description="Causal node-importance ranking toolkit")
    ap.add_argument("--version", action="version", version=_version_string())
    ap.add_argument("--config", help="flat section.key = value file")
    ap.add_argument("--log-level", default="INFO")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic training network")
    p.add_argument("--model", required=True, type=str.upper, choices=MODELS)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--avg-degree", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", help="model parameter key=value")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="SIR influence scores")
    p.add_argument("--graph", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--sims", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("embed", help="random-walk node features")
    p.add_argument("--graph", required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--seed", type=int)
    p.add_argument("--walks-per-node", type=int)
    p.add_argument("--walk-length", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="fit a model on a labelled graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--features", help="feature CSV; embedded on the fly when omitted")
    p.add_argument("--variant", choices=ABLATIONS)
    p.add_argument("--no-causal", dest="causal", action="store_false", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    _add_ican(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="score the nodes of a target graph")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="Kendall tau between a score file and labels")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--graph", help="align rows to this graph's node order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="classical centrality ranking")
    p.add_argument("--method", required=True, choices=list(bl.BASELINES), type=_method_name)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("benchmark", help="train on synthetic graphs, evaluate on targets")
    p.add_argument("--methods", nargs="+", default=["ICAN", "DC", "BC", "EC", "H-index", "K-shell"])
    _add_bench(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ablate", help="ablation variants or a lambda sweep")
    p.add_argument("--variant", action="append", choices=ABLATIONS)
    p.add_argument("--sweep", choices=("lambda1", "lambda2", "lambda3"))
    p.add_argument("--values", nargs="+", type=float, default=[0.1, 0.5, 1.0, 1.5, 2.0])
    _add_bench(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("topk-degrees", help="degree histogram of the top-ranked nodes")
    p.add_argument("--graph", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_topk)
    return ap


def _method_name(s: str) -> str:
    for k in bl.BASELINES:
        if k.lower() == s.lower():
            return k
    return s


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as e:  # one line for scripts, full trace at DEBUG
        log.debug("failure", exc_info=True)
        msg = str(e).replace("\n", " ")
        print(f"error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
