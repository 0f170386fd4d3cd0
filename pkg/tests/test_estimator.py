import networkx as nx
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from brava.centrality import brandes_betweenness
from brava.estimator import BravaRanker, check_graphs, infer_scores
from brava.generators import generate_scale_free
from brava.graph import build_graph, from_arrays
from brava.model import Hyperparams, init_params


@pytest.fixture(scope="module")
def fitted():
    graphs = [generate_scale_free(150, 2, seed=s) for s in range(2)]
    return BravaRanker(epochs=3, random_state=1).fit(graphs)


def karate():
    return build_graph(list(nx.karate_club_graph().edges()))


def test_get_params_and_clone():
    est = BravaRanker(hidden=8, depth=3)
    params = est.get_params()
    assert params["hidden"] == 8 and params["depth"] == 3 and params["prune"] is True
    c = clone(est)
    assert c.get_params() == params and c is not est
    est.set_params(dropout=0.1)
    assert est.dropout == 0.1


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        BravaRanker().predict(karate())


def test_check_graphs():
    with pytest.raises(TypeError):
        check_graphs([[(0, 1)]])
    with pytest.raises(ValueError):
        check_graphs([])


def test_fit_predict_shapes(fitted):
    g = karate()
    scores = fitted.predict(g)
    assert scores.shape == (g.n,)
    assert len(fitted.predict([g, g])) == 2
    assert len(fitted.history_) == 3


def test_score_is_tau(fitted):
    g = karate()
    tau = fitted.score(g, brandes_betweenness(g))
    assert -1 <= tau <= 1


def test_fit_with_targets_matches_computed():
    graphs = [generate_scale_free(150, 2, seed=s) for s in range(2)]
    y = [brandes_betweenness(g) for g in graphs]
    a = BravaRanker(epochs=3, prune=False, random_state=1).fit(graphs, y)
    b = BravaRanker(epochs=3, prune=False, random_state=1).fit(graphs)
    assert all(np.array_equal(a.params_[k], b.params_[k]) for k in a.params_)


def test_fit_target_length_mismatch():
    with pytest.raises(ValueError):
        BravaRanker(epochs=1).fit([karate()], [np.zeros(3)])


def test_save_load(tmp_path, fitted):
    fitted.save(tmp_path / "m.json")
    back = BravaRanker.load(tmp_path / "m.json")
    g = karate()
    assert np.array_equal(back.predict(g), fitted.predict(g))


def test_infer_single_node_and_tiny():
    hp = Hyperparams()
    p = init_params(hp)
    scores, timing = infer_scores(from_arrays(1, [], []), p, hp)
    np.testing.assert_array_equal(scores, [0.0])
    assert timing.total >= 0
    scores, _ = infer_scores(build_graph([(0, 1), (1, 2)]), p, hp)
    assert scores[0] == scores[2] < scores[1]
