import csv
import json
import logging

import networkx as nx
import numpy as np
import pytest

from brava.centrality import brandes_betweenness, brute_force_betweenness
from brava.cli import cmd_ground_truth, cmd_infer, main
from brava.config import PipelineConfig, format_config, load_config
from brava.graph import load_graph, load_scores, save_edge_list
from brava.metrics import RankingReport

from conftest import random_graph


def write_graph(path, edges):
    path.write_text("".join(f"{u} {v}\n" for u, v in edges))
    return str(path)


@pytest.fixture
def karate_file(tmp_path):
    return write_graph(tmp_path / "karate.txt", nx.karate_club_graph().edges())


def small_args(workdir, *extra):
    return ["--workdir", str(workdir), "--n-nodes", "200", "--n-scale-free", "1",
            "--n-hyperbolic", "1", "--epochs", "2", *extra]


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[recipe]\nn_nodes = 500\n[model]\nmlp_hidden = 16, 16\n[train]\nseeds = 3 4\n")
    cfg = load_config(p, {"depth": "3", "dropout": None})
    assert (cfg.n_nodes, cfg.mlp_hidden, cfg.seeds, cfg.depth) == (500, (16, 16), (3, 4), 3)
    assert load_config(None, {}) == PipelineConfig()
    p.write_text(format_config(cfg))
    assert load_config(p) == cfg


def test_config_rejects_bad_values(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[recipe]\nbogus = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_config(p)
    with pytest.raises(ValueError):
        PipelineConfig(n_scale_free=0, n_hyperbolic=0)
    with pytest.raises(ValueError):
        PipelineConfig(train_mix="both")


def test_train_mix_keeps_total():
    assert PipelineConfig(train_mix="sf").recipe_counts() == (6, 0)
    assert PipelineConfig(train_mix="hrg").recipe_counts() == (0, 6)
    assert PipelineConfig().recipe_counts() == (3, 3)


def test_generate_writes_files_and_manifest(tmp_path):
    wd = tmp_path / "w"
    assert main(["generate", *small_args(wd, "--n-nodes", "500")]) == 0
    manifest = json.loads((wd / "graphs" / "manifest.json").read_text())
    assert len(manifest["graphs"]) == 2
    files = sorted(p.name for p in (wd / "graphs").glob("*.txt"))
    assert files == ["hrg_000.txt", "sf_000.txt"]
    hrg = [e for e in manifest["graphs"] if e["generator"] == "hyperbolic"][0]
    assert 0 < hrg["params"]["temperature"] < 0.5 and hrg["params"]["gamma"] > 2
    first = {p.name: p.read_bytes() for p in (wd / "graphs").iterdir()}
    assert main(["generate", *small_args(wd, "--n-nodes", "500")]) == 0
    assert first == {p.name: p.read_bytes() for p in (wd / "graphs").iterdir()}


def test_ground_truth_cache(tmp_path, karate_file, caplog):
    with caplog.at_level(logging.INFO, logger="brava"):
        path, hit = cmd_ground_truth(karate_file, str(tmp_path / "cache"))
        assert not hit
        path2, hit2 = cmd_ground_truth(karate_file, str(tmp_path / "cache"))
    assert hit2 and path2 == path
    assert "cache hit" in caplog.text
    full, _ = cmd_ground_truth(karate_file, str(tmp_path / "cache"), pruned=False)
    assert full != path
    g = load_graph(karate_file)
    ids, vals = load_scores(full)
    np.testing.assert_allclose(vals, brandes_betweenness(g))


def test_ground_truth_p3(tmp_path):
    f = write_graph(tmp_path / "p3.txt", [(0, 1), (1, 2)])
    path, _ = cmd_ground_truth(f, str(tmp_path / "c"))
    ids, vals = load_scores(path)
    assert ids.tolist() == [1] and vals.tolist() == [0.0]


def test_ground_truth_matches_oracle(tmp_path, rng):
    for i in range(10):
        g = random_graph(rng, int(rng.integers(3, 30)), 0.25, False)
        if g.n_arcs == 0:
            continue
        f = tmp_path / f"g{i}.txt"
        save_edge_list(f, g)
        h = load_graph(f)
        path, _ = cmd_ground_truth(str(f), str(tmp_path / "c"), pruned=False)
        np.testing.assert_allclose(load_scores(path)[1], brute_force_betweenness(h), atol=1e-9)


def test_train_infer_evaluate(tmp_path, karate_file):
    wd = tmp_path / "w"
    assert main(["train", *small_args(wd, "--seed", "3")]) == 0
    model = wd / "models" / "seed_3.json"
    doc = json.loads(model.read_text())
    assert doc["optimizer"]["step"] == 2 * 2
    assert (wd / "models" / "seed_3_log.csv").read_text().count("\n") == 3

    out = tmp_path / "pred.tsv"
    assert main(["infer", str(model), karate_file, "--out", str(out), *small_args(wd)]) == 0
    ids, scores = load_scores(out)
    assert len(ids) == 34

    truth = tmp_path / "truth.tsv"
    assert main(["ground-truth", karate_file, "--no-prune", "--out", str(truth), *small_args(wd)]) == 0
    report_path = tmp_path / "rep.csv"
    assert main(["evaluate", str(model), karate_file, str(truth), "--out", str(report_path),
                 *small_args(wd)]) == 0
    rep = RankingReport.from_csv(report_path)
    assert rep.n == 34 and -1 <= rep.tau_b <= 1


def test_evaluate_truth_against_itself(tmp_path, karate_file):
    from brava.metrics import export_ranking_report
    g = load_graph(karate_file)
    bc = brandes_betweenness(g)
    assert export_ranking_report(bc, bc).tau_b == 1.0


def test_infer_single_node_graph(tmp_path):
    wd = tmp_path / "w"
    main(["train", *small_args(wd, "--seed", "0", "--epochs", "1")])
    f = write_graph(tmp_path / "one.txt", [(5, 5)])
    scores, timing = cmd_infer(str(wd / "models" / "seed_0.json"), f)
    assert scores.shape == (1,)


def test_missing_inputs_give_nonzero_exit(tmp_path, karate_file, capsys):
    assert main(["infer", str(tmp_path / "nope.json"), karate_file]) != 0
    assert "not found" in capsys.readouterr().err
    assert main(["ground-truth", str(tmp_path / "nope.txt")]) != 0
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 x\n")
    assert main(["ground-truth", str(bad)]) != 0
    assert ":2:" in capsys.readouterr().err
    assert main(["generate", "--config", str(tmp_path / "none.ini")]) != 0


def test_pipeline_two_seeds(tmp_path, karate_file):
    wd = tmp_path / "w"
    args = small_args(wd, "--seeds", "0,1", "--test-graphs", karate_file)
    assert main(["pipeline", *args]) == 0
    with open(wd / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["graph"] == "karate"
    taus = [RankingReport.from_csv(wd / "reports" / f"seed_{s}" / "karate.csv").tau_b for s in (0, 1)]
    assert int(rows[0]["n_seeds"]) == 2
    assert float(rows[0]["mean_tau_b"]) == pytest.approx(np.mean(taus))
    assert float(rows[0]["std_tau_b"]) == pytest.approx(np.std(taus, ddof=1))
    timings = (wd / "timings.csv").read_text().splitlines()
    assert timings[0].startswith("graph,seed,prune_seconds")
    assert timings[-1].startswith("karate,mean,")
