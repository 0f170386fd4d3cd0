"""scikit-learn style wrapper: fit on graphs, predict betweenness-ranking scores."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .graph import Graph
from .metrics import kendall_tau_b
from .model import Hyperparams, Params, forward_inputs, graph_inputs, load_model, save_model
from .preprocess import prune, reinsert_scores
from .training import AdamState, TrainConfig, make_sample, train


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a brava Graph, got {type(g).__name__}")
    return g


def check_graphs(X) -> list[Graph]:
    if isinstance(X, Graph):
        return [X]
    X = list(X)
    if not X:
        raise ValueError("need at least one graph")
    return [check_graph(g) for g in X]


@dataclass
class InferenceTiming:
    prune: float = 0.0
    features: float = 0.0
    forward: float = 0.0

    @property
    def total(self) -> float:
        return self.prune + self.features + self.forward


def infer_scores(g: Graph, params: Params, hp: Hyperparams,
                 use_prune: bool = True) -> tuple[np.ndarray, InferenceTiming]:
    """Eval-mode scores for every node of ``g``, with a timing breakdown."""
    timing = InferenceTiming()
    t = time.perf_counter()
    pr = prune(g) if use_prune else None
    work = pr.reduced if pr is not None else g
    timing.prune = time.perf_counter() - t
    if work.n == 0:
        scores = np.zeros(0)
    else:
        t = time.perf_counter()
        gi = graph_inputs(work, hp.hop_order)
        timing.features = time.perf_counter() - t
        t = time.perf_counter()
        scores = forward_inputs(gi, params, hp).scores
        timing.forward = time.perf_counter() - t
    if pr is not None:
        scores = reinsert_scores(pr, scores)
    return scores, timing


class BravaRanker(BaseEstimator):
    """Learned betweenness-centrality ranking.

    ``fit`` takes a list of graphs and, optionally, their exact betweenness
    vectors (computed with Brandes' algorithm on the pruned graphs when
    omitted). ``predict`` returns one score per node; larger means more
    central. ``score`` is the mean Kendall tau-b against given truths.
    """

    def __init__(self, hop_order=6, hidden=12, depth=2, mlp_hidden=(24, 24), dropout=0.3,
                 mlp_on_embedding=False, epochs=10, learning_rate=5e-3, pairs_per_node=20,
                 batch_pairs=None, prune=True, random_state=0):
        self.hop_order = hop_order
        self.hidden = hidden
        self.depth = depth
        self.mlp_hidden = mlp_hidden
        self.dropout = dropout
        self.mlp_on_embedding = mlp_on_embedding
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.pairs_per_node = pairs_per_node
        self.batch_pairs = batch_pairs
        self.prune = prune
        self.random_state = random_state

    def _hyperparams(self) -> Hyperparams:
        return Hyperparams(hop_order=self.hop_order, hidden=self.hidden, depth=self.depth,
                           mlp_hidden=tuple(self.mlp_hidden), dropout=self.dropout,
                           mlp_on_embedding=self.mlp_on_embedding)

    def fit(self, X, y=None):
        graphs = check_graphs(X)
        if y is not None:
            y = [np.asarray(v, dtype=np.float64) for v in y]
            if len(y) != len(graphs):
                raise ValueError("need one target vector per graph")
        hp = self._hyperparams()
        samples = []
        for i, g in enumerate(graphs):
            target = None
            if y is not None:
                if len(y[i]) != g.n:
                    raise ValueError(f"target {i} has length {len(y[i])}, graph has {g.n} nodes")
                target = y[i][prune(g).kept] if self.prune else y[i]
            samples.append(make_sample(g, hp.hop_order, target, pruned=self.prune))
        cfg = TrainConfig(epochs=self.epochs, lr=self.learning_rate,
                          pairs_per_node=self.pairs_per_node, batch_pairs=self.batch_pairs,
                          seed=self.random_state)
        state = AdamState(lr=self.learning_rate)
        self.params_, self.history_ = train(samples, hp, cfg, state=state)
        self.optimizer_state_ = state
        self.hyperparams_ = hp
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        if isinstance(X, Graph):
            return infer_scores(X, self.params_, self.hyperparams_, self.prune)[0]
        return [infer_scores(g, self.params_, self.hyperparams_, self.prune)[0]
                for g in check_graphs(X)]

    def score(self, X, y):
        graphs = check_graphs(X)
        truths = [y] if isinstance(X, Graph) else list(y)
        taus = []
        for g, t in zip(graphs, truths, strict=True):
            pred = infer_scores(g, self.params_, self.hyperparams_, self.prune)[0]
            tau = kendall_tau_b(np.asarray(t, dtype=np.float64), pred)
            taus.append(np.nan if tau is None else tau)
        return float(np.mean(taus))

    def save(self, path) -> None:
        check_is_fitted(self, "params_")
        save_model(path, self.params_, self.hyperparams_)

    @classmethod
    def load(cls, path) -> BravaRanker:
        params, hp = load_model(path)
        est = cls(hop_order=hp.hop_order, hidden=hp.hidden, depth=hp.depth,
                  mlp_hidden=hp.mlp_hidden, dropout=hp.dropout,
                  mlp_on_embedding=hp.mlp_on_embedding)
        est.params_, est.hyperparams_, est.history_ = params, hp, []
        return est
