"""Command line entry point: generate | ground-truth | train | infer | evaluate | pipeline."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from .centrality import brandes_betweenness
from .config import PipelineConfig, field_names, format_config, load_config
from .estimator import InferenceTiming, infer_scores
from .generators import (
    GeneratorConfigError,
    generate_hyperbolic,
    generate_scale_free,
    load_param_table,
    sample_training_config,
)
from .graph import Graph, load_graph, load_scores, save_edge_list, save_scores
from .metrics import RankingReport, export_ranking_report, kendall_tau_b
from .model import load_model, save_model
from .preprocess import prune
from .training import AdamState, TrainingSample, save_training_log, train
from .model import graph_inputs

log = logging.getLogger("brava")


def _atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# generate ------------------------------------------------------------------

def cmd_generate(cfg: PipelineConfig) -> dict:
    """Write the synthetic training graphs and ``manifest.json`` under ``workdir/graphs``."""
    out_dir = os.path.join(cfg.workdir, "graphs")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(cfg.data_seed)
    table = load_param_table(cfg.param_table or None)
    n_sf, n_hrg = cfg.recipe_counts()
    entries = []
    for i in range(n_sf):
        seed = int(rng.integers(2**31 - 1))
        params = {"n": cfg.n_nodes, "attach_m": cfg.attach_m}
        try:
            g = generate_scale_free(cfg.n_nodes, cfg.attach_m, seed)
        except GeneratorConfigError as exc:
            raise GeneratorConfigError(f"scale-free graph {i}: {exc}") from exc
        name = f"sf_{i:03d}.txt"
        save_edge_list(os.path.join(out_dir, name), g, header=f"scale_free {json.dumps(params)} seed={seed}")
        entries.append({"file": name, "generator": "scale_free", "params": params, "seed": seed})
    for i in range(n_hrg):
        hc = sample_training_config(table, rng, cfg.n_nodes, cfg.max_temperature)
        try:
            g = generate_hyperbolic(hc)
        except GeneratorConfigError as exc:
            raise GeneratorConfigError(f"hyperbolic graph {i}: {exc}") from exc
        params = {k: v for k, v in hc.to_dict().items() if k != "seed"}
        name = f"hrg_{i:03d}.txt"
        save_edge_list(os.path.join(out_dir, name), g, header=f"hyperbolic {json.dumps(params)} seed={hc.seed}")
        entries.append({"file": name, "generator": "hyperbolic", "params": params, "seed": hc.seed})
    manifest = {"data_seed": cfg.data_seed, "graphs": entries}
    _atomic_write_text(os.path.join(out_dir, "manifest.json"),
                       json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("generated %d graphs in %s", len(entries), out_dir)
    return manifest


# ground truth --------------------------------------------------------------

def file_key(path: str, **flags) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    h.update(json.dumps(flags, sort_keys=True).encode())
    return h.hexdigest()


def cmd_ground_truth(graph_path: str, cache_dir: str, directed: bool = False,
                     pruned: bool = True, threads: int = 1) -> tuple[str, bool]:
    """Exact betweenness for a graph file, cached by content hash.

    With ``pruned`` the scores belong to the surviving nodes of the pruned
    graph (training supervision); otherwise to every node of the graph.
    Returns the score file path and whether it was a cache hit.
    """
    os.makedirs(cache_dir, exist_ok=True)
    key = file_key(graph_path, directed=directed, pruned=pruned)
    out = os.path.join(cache_dir, f"{key}.tsv")
    if os.path.exists(out):
        log.info("ground truth cache hit for %s", graph_path)
        return out, True
    g = load_graph(graph_path, directed)
    work = prune(g).reduced if pruned else g
    bc = brandes_betweenness(work, n_jobs=threads)
    save_scores(out, work.node_labels(), bc)
    log.info("ground truth for %s (%d nodes) written to %s", graph_path, work.n, out)
    return out, False


def align_scores(g: Graph, score_path: str) -> np.ndarray:
    """Scores from an ``id<TAB>score`` file, ordered like ``g``'s nodes."""
    ids, values = load_scores(score_path)
    lookup = dict(zip(ids.tolist(), values.tolist()))
    try:
        return np.array([lookup[int(i)] for i in g.node_labels()], dtype=np.float64)
    except KeyError as exc:
        raise ValueError(f"{score_path}: no score for node {exc.args[0]}") from None


# train ---------------------------------------------------------------------

def _training_samples(cfg: PipelineConfig) -> list[TrainingSample]:
    graph_dir = os.path.join(cfg.workdir, "graphs")
    manifest_path = os.path.join(graph_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        cmd_generate(cfg)
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    samples = []
    for entry in manifest["graphs"]:
        path = os.path.join(graph_dir, entry["file"])
        truth, _ = cmd_ground_truth(path, cfg.cache_path, pruned=True, threads=cfg.threads)
        g = prune(load_graph(path)).reduced
        target = align_scores(g, truth)
        samples.append(TrainingSample(g, target, graph_inputs(g, cfg.hop_order)))
    return samples


def _model_path(cfg: PipelineConfig, seed: int) -> str:
    return os.path.join(cfg.workdir, "models", f"seed_{seed}.json")


def cmd_train(cfg: PipelineConfig, samples: list[TrainingSample] | None = None) -> list[str]:
    """Train one model per seed; writes checkpoints and per-epoch CSV logs."""
    if samples is None:
        samples = _training_samples(cfg)
    hp = cfg.hyperparams()
    os.makedirs(os.path.join(cfg.workdir, "models"), exist_ok=True)
    paths = []
    for seed in cfg.seeds:
        state = AdamState(lr=cfg.lr)
        params, history = train(samples, hp, cfg.train_config(seed), state=state)
        path = _model_path(cfg, seed)
        optimizer = {
            "step": state.step, "lr": state.lr, "beta1": state.beta1,
            "beta2": state.beta2, "eps": state.eps,
            "m": {k: v.ravel().tolist() for k, v in state.m.items()},
            "v": {k: v.ravel().tolist() for k, v in state.v.items()},
        }
        save_model(path, params, hp, extra={"seed": seed, "optimizer": optimizer})
        save_training_log(os.path.join(cfg.workdir, "models", f"seed_{seed}_log.csv"), history)
        log.info("seed %d: final mean loss %.5f", seed, history[-1].mean_loss if history else float("nan"))
        paths.append(path)
    return paths


# infer / evaluate -------------------------------------------------------------

def cmd_infer(model_path: str, graph_path: str, out_path: str | None = None,
              directed: bool = False, use_prune: bool = True) -> tuple[np.ndarray, InferenceTiming]:
    """Scores for every node of a graph file; timing excludes file I/O."""
    if not os.path.exists(model_path):
        raise FileNotFoundError(f"model checkpoint not found: {model_path}")
    params, hp = load_model(model_path)
    g = load_graph(graph_path, directed)
    scores, timing = infer_scores(g, params, hp, use_prune)
    if out_path:
        save_scores(out_path, g.node_labels(), scores)
    log.info("inference on %s: prune %.4fs, features %.4fs, forward %.4fs",
             graph_path, timing.prune, timing.features, timing.forward)
    return scores, timing


def cmd_evaluate(model_path: str, graph_path: str, truth_path: str, out_csv: str | None = None,
                 directed: bool = False) -> tuple[RankingReport, InferenceTiming]:
    if not os.path.exists(truth_path):
        raise FileNotFoundError(f"truth file not found: {truth_path}")
    scores, timing = cmd_infer(model_path, graph_path, None, directed)
    g = load_graph(graph_path, directed)
    truth = align_scores(g, truth_path)
    report = export_ranking_report(truth, scores, out_csv, node_ids=g.node_labels())
    return report, timing


# pipeline ------------------------------------------------------------------

@dataclass
class SummaryRow:
    graph: str
    n_seeds: int
    mean_tau_b: float
    std_tau_b: float
    degree_tau_b: float


def _graph_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


def cmd_pipeline(cfg: PipelineConfig) -> list[SummaryRow]:
    """Generate, label, train every seed and evaluate on each test graph.

    Writes ``summary.csv`` (tau-b mean and sample std across seeds, plus the
    degree-ranking baseline) and ``timings.csv`` (wall-clock inference per
    seed, kept apart so the summary is reproducible byte for byte).
    """
    os.makedirs(cfg.workdir, exist_ok=True)
    _atomic_write_text(os.path.join(cfg.workdir, "config.ini"), format_config(cfg))
    cmd_generate(cfg)
    samples = _training_samples(cfg)
    model_paths = cmd_train(cfg, samples)

    rows, timing_rows = [], []
    for graph_path in cfg.test_graphs:
        name = _graph_name(graph_path)
        truth_path, _ = cmd_ground_truth(graph_path, cfg.cache_path, cfg.test_directed,
                                         pruned=False, threads=cfg.threads)
        g = load_graph(graph_path, cfg.test_directed)
        truth = align_scores(g, truth_path)
        taus = []
        for seed, model_path in zip(cfg.seeds, model_paths):
            out_dir = os.path.join(cfg.workdir, "reports", f"seed_{seed}")
            os.makedirs(out_dir, exist_ok=True)
            params, hp = load_model(model_path)
            scores, timing = infer_scores(g, params, hp)
            report = export_ranking_report(truth, scores, os.path.join(out_dir, f"{name}.csv"),
                                           node_ids=g.node_labels())
            taus.append(np.nan if report.tau_b is None else report.tau_b)
            timing_rows.append([name, seed, timing.prune, timing.features, timing.forward, timing.total])
            log.info("%s seed %d: tau_b %.4f", name, seed, taus[-1])
        taus = np.array(taus)
        std = float(np.std(taus, ddof=1)) if len(taus) > 1 else 0.0
        deg_tau = kendall_tau_b(truth, g.out_degree()) if g.n >= 2 else None
        rows.append(SummaryRow(name, len(taus), float(np.mean(taus)), std,
                               np.nan if deg_tau is None else deg_tau))

    with open(os.path.join(cfg.workdir, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["graph", "n_seeds", "mean_tau_b", "std_tau_b", "degree_tau_b"])
        for r in rows:
            w.writerow([r.graph, r.n_seeds, _fmt(r.mean_tau_b), _fmt(r.std_tau_b), _fmt(r.degree_tau_b)])
    with open(os.path.join(cfg.workdir, "timings.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["graph", "seed", "prune_seconds", "features_seconds", "forward_seconds", "total_seconds"])
        for r in timing_rows:
            w.writerow([r[0], r[1]] + [f"{x:.6f}" for x in r[2:]])
        for name in dict.fromkeys(r[0] for r in timing_rows):
            mean = np.mean([r[5] for r in timing_rows if r[0] == name])
            w.writerow([name, "mean", "", "", "", f"{mean:.6f}"])
    return rows


# argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file with [section] key = value lines")
    common.add_argument("--seed", type=int, help="run a single seed (overrides 'seeds')")
    common.add_argument("-v", "--verbose", action="store_true")
    cfg_group = common.add_argument_group("config overrides")
    for name in field_names():
        cfg_group.add_argument(f"--{name.replace('_', '-')}", dest=f"cfg_{name}", metavar="VALUE")

    parser = argparse.ArgumentParser(prog="brava", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write synthetic training graphs")

    p = sub.add_parser("ground-truth", parents=[common], help="exact betweenness of a graph file")
    p.add_argument("graph")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--no-prune", action="store_true", help="score every node of the unpruned graph")
    p.add_argument("--out", help="copy the cached scores here")

    sub.add_parser("train", parents=[common], help="train one model per seed")

    p = sub.add_parser("infer", parents=[common], help="score the nodes of a graph")
    p.add_argument("model")
    p.add_argument("graph")
    p.add_argument("--out")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--no-prune", action="store_true")

    p = sub.add_parser("evaluate", parents=[common], help="compare predictions with exact scores")
    p.add_argument("model")
    p.add_argument("graph")
    p.add_argument("truth")
    p.add_argument("--out", help="report CSV path (a .json summary is written next to it)")
    p.add_argument("--directed", action="store_true")

    sub.add_parser("pipeline", parents=[common], help="generate, train, evaluate for every seed")
    return parser


def _config_from_args(args) -> PipelineConfig:
    overrides = {name: getattr(args, f"cfg_{name}") for name in field_names()}
    if args.seed is not None:
        overrides["seeds"] = str(args.seed)
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
        if args.command == "generate":
            manifest = cmd_generate(cfg)
            print(f"{len(manifest['graphs'])} graphs written to {os.path.join(cfg.workdir, 'graphs')}")
        elif args.command == "ground-truth":
            path, hit = cmd_ground_truth(args.graph, cfg.cache_path, args.directed,
                                         not args.no_prune, cfg.threads)
            if args.out:
                ids, vals = load_scores(path)
                save_scores(args.out, ids, vals)
            print(f"{path}{' (cached)' if hit else ''}")
        elif args.command == "train":
            for p in cmd_train(cfg):
                print(p)
        elif args.command == "infer":
            _, t = cmd_infer(args.model, args.graph, args.out, args.directed, not args.no_prune)
            print(json.dumps({"prune_seconds": t.prune, "features_seconds": t.features,
                              "forward_seconds": t.forward, "total_seconds": t.total}))
        elif args.command == "evaluate":
            report, _ = cmd_evaluate(args.model, args.graph, args.truth, args.out, args.directed)
            print(json.dumps(report.summary()))
        elif args.command == "pipeline":
            rows = cmd_pipeline(cfg)
            for r in rows:
                print(f"{r.graph}: tau_b {r.mean_tau_b:.4f} +/- {r.std_tau_b:.4f} "
                      f"(degree {r.degree_tau_b:.4f}, {r.n_seeds} seeds)")
            print(f"summary: {os.path.join(cfg.workdir, 'summary.csv')}")
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
