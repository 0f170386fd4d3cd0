"""Pairwise margin-ranking training with Adam."""

from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .centrality import brandes_betweenness
from .graph import Graph
from .model import (
    GraphInputs,
    Hyperparams,
    Params,
    backward,
    forward_inputs,
    graph_inputs,
    init_params,
)
from .preprocess import prune

log = logging.getLogger(__name__)


class UnrankableSampleError(ValueError):
    pass


@dataclass
class TrainingSample:
    graph: Graph
    target: np.ndarray
    inputs: GraphInputs

    def __post_init__(self):
        if len(self.target) != self.graph.n:
            raise ValueError("target length must equal the node count")


def make_sample(g: Graph, hop_order: int, target=None, pruned: bool = True) -> TrainingSample:
    """Prune ``g`` (unless ``pruned=False``) and pair it with exact betweenness.

    A supplied ``target`` must already be aligned with the graph that is
    trained on.
    """
    if pruned:
        g = prune(g).reduced
    if target is None:
        target = brandes_betweenness(g)
    return TrainingSample(g, np.asarray(target, dtype=np.float64), graph_inputs(g, hop_order))


@dataclass(frozen=True)
class NodePairs:
    u: np.ndarray
    v: np.ndarray
    y: np.ndarray  # +1 when target[u] > target[v], else -1

    def __len__(self) -> int:
        return len(self.u)


def sample_pairs(target, count: int, rng: np.random.Generator) -> NodePairs:
    """``count`` pairs of distinct nodes drawn uniformly, ties in ``target`` rejected."""
    target = np.asarray(target, dtype=np.float64)
    n = len(target)
    if n < 2 or target.min() == target.max():
        raise UnrankableSampleError("unrankable sample: all targets are equal")
    us, vs = [], []
    have = 0
    while have < count:
        batch = max(2 * (count - have), 16)
        u = rng.integers(0, n, size=batch)
        v = rng.integers(0, n - 1, size=batch)
        v = v + (v >= u)
        keep = target[u] != target[v]
        u, v = u[keep], v[keep]
        us.append(u)
        vs.append(v)
        have += len(u)
    u = np.concatenate(us)[:count]
    v = np.concatenate(vs)[:count]
    y = np.where(target[u] > target[v], 1.0, -1.0)
    return NodePairs(u, v, y)


def margin_ranking_loss(s_u, s_v, y):
    """Mean of max(0, 1 - y (s_u - s_v))."""
    s_u, s_v, y = (np.asarray(a, dtype=np.float64) for a in (s_u, s_v, y))
    return float(np.mean(np.maximum(0.0, 1.0 - y * (s_u - s_v))))


def loss_and_gradients(sample: TrainingSample, pairs: NodePairs, params: Params,
                       hp: Hyperparams, rng: np.random.Generator | None = None):
    """Mean margin loss over ``pairs`` and its exact gradient.

    One train-mode forward on the sample graph; dropout masks come from
    ``rng``.
    """
    trace = forward_inputs(sample.inputs, params, hp, train=True, rng=rng)
    s = trace.scores
    margin = 1.0 - pairs.y * (s[pairs.u] - s[pairs.v])
    loss = float(np.mean(np.maximum(0.0, margin)))
    active = margin > 0
    coef = np.where(active, pairs.y, 0.0) / len(pairs)
    ds = np.zeros(sample.inputs.n)
    np.add.at(ds, pairs.u, -coef)
    np.add.at(ds, pairs.v, coef)
    return loss, backward(sample.inputs, trace, ds, params, hp)


@dataclass
class AdamState:
    lr: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState) -> Params:
    """One bias-corrected Adam update; returns new parameter arrays."""
    bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
    if bad:
        raise FloatingPointError(f"non-finite gradient at step {state.step + 1} in {bad}")
    state.step += 1
    t = state.step
    out = {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"{k}: gradient shape {g.shape} != parameter shape {p.shape}")
        m = state.m.get(k, np.zeros_like(p))
        v = state.v.get(k, np.zeros_like(p))
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        state.m[k], state.v[k] = m, v
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        out[k] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 5e-3
    pairs_per_node: int = 20
    batch_pairs: int | None = None   # None: one update per graph per epoch
    seed: int = 0


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    wall_seconds: float


def train(samples: list[TrainingSample], hp: Hyperparams, cfg: TrainConfig | None = None,
          params: Params | None = None,
          state: AdamState | None = None) -> tuple[Params, list[EpochRecord]]:
    """Train for ``cfg.epochs`` passes over ``samples`` in seeded shuffled order.

    Per graph and epoch, ``pairs_per_node * n`` pairs are drawn; they feed a
    single Adam step, or several when ``batch_pairs`` splits them. A passed
    ``state`` is updated in place, which is how checkpoints capture it.
    """
    cfg = cfg or TrainConfig()
    if not samples:
        raise ValueError("need at least one training sample")
    init_rng, order_rng, pair_rng, drop_rng = np.random.default_rng(cfg.seed).spawn(4)
    if params is None:
        params = init_params(hp, init_rng)
    if state is None:
        state = AdamState(lr=cfg.lr)
    history = []
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        losses, weights = [], []
        for idx in order_rng.permutation(len(samples)):
            sample = samples[idx]
            pairs = sample_pairs(sample.target, cfg.pairs_per_node * sample.graph.n, pair_rng)
            step = len(pairs) if cfg.batch_pairs is None else cfg.batch_pairs
            for start in range(0, len(pairs), step):
                chunk = NodePairs(pairs.u[start:start + step], pairs.v[start:start + step],
                                  pairs.y[start:start + step])
                loss, grads = loss_and_gradients(sample, chunk, params, hp, drop_rng)
                params = adam_step(params, grads, state)
                losses.append(loss)
                weights.append(len(chunk))
        rec = EpochRecord(epoch + 1, float(np.average(losses, weights=weights)),
                          time.perf_counter() - t0)
        log.info("epoch %d mean loss %.5f (%.1fs)", rec.epoch, rec.mean_loss, rec.wall_seconds)
        history.append(rec)
    return params, history


def save_training_log(path: str | os.PathLike, history: list[EpochRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss", "wall_seconds"])
        for r in history:
            w.writerow([r.epoch, repr(r.mean_loss), f"{r.wall_seconds:.3f}"])
