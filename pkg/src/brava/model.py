"""Dual-direction message-passing ranker over degree-mass features.

Forward pass, per direction (A for the "in" encoder, A^T for "out"):

    H0      = ReLU(norm(masses) W_e + b_e)
    H_{l+1} = rownorm(ReLU(A H_l W_l + b_l))
    y      += MLP(H_{l+1})

and the node score is y_in * y_out. Message-passing weights and the MLP are
shared by both directions and the MLP is shared across layers.

Gradients are computed by hand; every op keeps what its backward needs.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .centrality import DegreeMassMatrix, degree_mass
from .graph import Graph, transpose

MODEL_FORMAT = "brava-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    hop_order: int = 6
    hidden: int = 12
    depth: int = 2
    mlp_hidden: tuple[int, ...] = (24, 24)
    dropout: float = 0.3
    mlp_on_embedding: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mlp_hidden", tuple(int(w) for w in self.mlp_hidden))
        if self.hop_order < 1:
            raise ValueError("hop_order must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if any(w < 1 for w in self.mlp_hidden):
            raise ValueError("MLP widths must be positive")

    @property
    def mlp_widths(self) -> tuple[int, ...]:
        return (self.hidden, *self.mlp_hidden, 1)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        out = {"embed.W": (self.hop_order, self.hidden), "embed.b": (self.hidden,)}
        for l in range(self.depth):
            out[f"mp{l}.W"] = (self.hidden, self.hidden)
            out[f"mp{l}.b"] = (self.hidden,)
        widths = self.mlp_widths
        for i in range(len(widths) - 1):
            out[f"mlp{i}.W"] = (widths[i], widths[i + 1])
            out[f"mlp{i}.b"] = (widths[i + 1],)
        return out

    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes().values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mlp_hidden"] = list(self.mlp_hidden)
        return d


Params = dict[str, np.ndarray]


def init_params(hp: Hyperparams, seed: int | np.random.Generator = 0) -> Params:
    """Glorot-uniform weights, zero biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = {}
    for name, shape in hp.shapes().items():
        if name.endswith(".W"):
            a = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-a, a, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


def param_count(params: Params) -> int:
    return sum(int(p.size) for p in params.values())


def normalize_columns(values: np.ndarray) -> np.ndarray:
    """Divide every column by its maximum; all-zero columns stay zero."""
    top = values.max(axis=0) if len(values) else np.zeros(values.shape[1])
    scale = np.where(top > 0, top, 1.0)
    return values / scale


def embed(masses: DegreeMassMatrix | np.ndarray, params: Params) -> np.ndarray:
    values = masses.values if isinstance(masses, DegreeMassMatrix) else np.asarray(masses)
    W = params["embed.W"]
    if values.ndim != 2 or values.shape[1] != W.shape[0]:
        raise ValueError(f"expected {W.shape[0]} mass columns, got shape {values.shape}")
    return np.maximum(normalize_columns(values) @ W + params["embed.b"], 0.0)


@dataclass
class GraphInputs:
    """Everything the forward pass needs from one graph."""

    A: sp.csr_matrix
    AT: sp.csr_matrix
    x_in: np.ndarray    # normalized masses of A
    x_out: np.ndarray   # normalized masses of A^T

    @property
    def n(self) -> int:
        return self.A.shape[0]


def graph_inputs(g: Graph, hop_order: int) -> GraphInputs:
    gt = transpose(g)
    x_in = normalize_columns(degree_mass(g, hop_order).values)
    x_out = normalize_columns(degree_mass(gt, hop_order).values) if g.directed else x_in
    return GraphInputs(g.adjacency(), gt.adjacency(), x_in, x_out)


@dataclass
class DirectionTrace:
    x: np.ndarray
    z0: np.ndarray
    h: list = field(default_factory=list)        # H_0 .. H_L
    mp: list = field(default_factory=list)       # per layer: (agg, z, r, norm)
    mlp: list = field(default_factory=list)      # per MLP call: list of (inp, pre, mask)
    y: np.ndarray | None = None


@dataclass
class ForwardTrace:
    inp: DirectionTrace
    out: DirectionTrace
    y_in: np.ndarray
    y_out: np.ndarray
    scores: np.ndarray


def _mlp_forward(h, params, hp, n_layers, rng, train):
    steps = []
    x = h
    for i in range(n_layers):
        pre = x @ params[f"mlp{i}.W"] + params[f"mlp{i}.b"]
        if i == n_layers - 1:
            steps.append((x, pre, None))
            return pre[:, 0], steps
        act = np.maximum(pre, 0.0)
        mask = None
        if train and hp.dropout > 0:
            mask = (rng.random(act.shape) >= hp.dropout) / (1.0 - hp.dropout)
            act = act * mask
        steps.append((x, pre, mask))
        x = act


def _mlp_backward(dy, steps, params, grads):
    g = dy[:, None]
    for i in range(len(steps) - 1, -1, -1):
        x, pre, mask = steps[i]
        if i != len(steps) - 1:
            if mask is not None:
                g = g * mask
            g = g * (pre > 0)
        grads[f"mlp{i}.W"] += x.T @ g
        grads[f"mlp{i}.b"] += g.sum(axis=0)
        g = g @ params[f"mlp{i}.W"].T
    return g


def _direction_forward(A, x, params, hp, rng, train) -> DirectionTrace:
    n_mlp = len(hp.mlp_widths) - 1
    z0 = x @ params["embed.W"] + params["embed.b"]
    h = np.maximum(z0, 0.0)
    tr = DirectionTrace(x=x, z0=z0, h=[h])
    y = np.zeros(x.shape[0])
    for l in range(hp.depth):
        agg = A @ h
        z = agg @ params[f"mp{l}.W"] + params[f"mp{l}.b"]
        r = np.maximum(z, 0.0)
        norm = np.sqrt((r * r).sum(axis=1))
        safe = np.where(norm > 0, norm, 1.0)
        h = r / safe[:, None]
        tr.mp.append((agg, z, r, norm))
        tr.h.append(h)
        out, steps = _mlp_forward(h, params, hp, n_mlp, rng, train)
        tr.mlp.append(steps)
        y = y + out
    if hp.depth == 0 and hp.mlp_on_embedding:
        out, steps = _mlp_forward(h, params, hp, n_mlp, rng, train)
        tr.mlp.append(steps)
        y = y + out
    tr.y = y
    return tr


def _direction_backward(AT, tr: DirectionTrace, dy, params, hp, grads):
    L = hp.depth
    if L == 0:
        if hp.mlp_on_embedding:
            dh = _mlp_backward(dy, tr.mlp[0], params, grads)
        else:
            return
    else:
        dh = np.zeros_like(tr.h[-1])
        for l in range(L - 1, -1, -1):
            dh = dh + _mlp_backward(dy, tr.mlp[l], params, grads)
            agg, z, r, norm = tr.mp[l]
            h = tr.h[l + 1]
            safe = np.where(norm > 0, norm, 1.0)
            # d(r/|r|) = (dh - h <h, dh>) / |r|; zero rows pass no gradient
            dr = (dh - h * (h * dh).sum(axis=1, keepdims=True)) / safe[:, None]
            dr[norm == 0] = 0.0
            dz = dr * (z > 0)
            grads[f"mp{l}.W"] += agg.T @ dz
            grads[f"mp{l}.b"] += dz.sum(axis=0)
            dh = AT @ (dz @ params[f"mp{l}.W"].T)
    dz0 = dh * (tr.z0 > 0)
    grads["embed.W"] += tr.x.T @ dz0
    grads["embed.b"] += dz0.sum(axis=0)


def forward_inputs(gi: GraphInputs, params: Params, hp: Hyperparams,
                   train: bool = False, rng: np.random.Generator | None = None) -> ForwardTrace:
    if train and hp.dropout > 0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")
    t_in = _direction_forward(gi.A, gi.x_in, params, hp, rng, train)
    t_out = _direction_forward(gi.AT, gi.x_out, params, hp, rng, train)
    return ForwardTrace(t_in, t_out, t_in.y, t_out.y, t_in.y * t_out.y)


def backward(gi: GraphInputs, trace: ForwardTrace, dscores: np.ndarray,
             params: Params, hp: Hyperparams) -> Params:
    """Gradients of sum(dscores * scores) with respect to every parameter."""
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    _direction_backward(gi.AT, trace.inp, dscores * trace.y_out, params, hp, grads)
    _direction_backward(gi.A, trace.out, dscores * trace.y_in, params, hp, grads)
    return grads


def forward(g: Graph, params: Params, hp: Hyperparams, mode: str = "eval",
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Node scores for ``g``. ``mode`` is "eval" or "train" (dropout on)."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    check_params(params, hp)
    gi = graph_inputs(g, hp.hop_order)
    return forward_inputs(gi, params, hp, train=mode == "train", rng=rng).scores


def check_params(params: Params, hp: Hyperparams) -> None:
    shapes = hp.shapes()
    if set(shapes) != set(params):
        raise ValueError("parameter names do not match hyperparameters")
    for k, s in shapes.items():
        if params[k].shape != s:
            raise ValueError(f"{k}: expected shape {s}, got {params[k].shape}")


def save_model(path: str | os.PathLike, params: Params, hp: Hyperparams,
               extra: dict | None = None) -> None:
    """JSON with hyperparameters and row-major parameter tensors."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "hyperparams": hp.to_dict(),
        "param_count": param_count(params),
        "params": [
            {"name": k, "shape": list(v.shape), "data": v.ravel().tolist()}
            for k, v in params.items()
        ],
    }
    if extra:
        doc.update(extra)
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_model(path: str | os.PathLike) -> tuple[Params, Hyperparams]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    hp = Hyperparams(**doc["hyperparams"])
    params = {
        p["name"]: np.asarray(p["data"], dtype=np.float64).reshape(p["shape"])
        for p in doc["params"]
    }
    check_params(params, hp)
    if param_count(params) != doc["param_count"] or doc["param_count"] != hp.n_params():
        raise ValueError(f"{path}: parameter count mismatch")
    return params, hp
