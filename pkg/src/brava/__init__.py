"""Learned betweenness-centrality ranking on sparse graphs."""

from .centrality import brandes_betweenness, brute_force_betweenness, degree_mass
from .estimator import BravaRanker, infer_scores
from .generators import HyperbolicConfig, generate_hyperbolic, generate_scale_free
from .graph import Graph, build_graph, load_graph, transpose
from .metrics import estimate_gamma, export_ranking_report, kendall_tau_b, min_rank
from .model import Hyperparams, forward, init_params, load_model, save_model
from .preprocess import prune, reinsert_scores

__version__ = "0.1.0"

__all__ = [
    "BravaRanker", "Graph", "HyperbolicConfig", "Hyperparams",
    "brandes_betweenness", "brute_force_betweenness", "build_graph", "degree_mass",
    "estimate_gamma", "export_ranking_report", "forward", "generate_hyperbolic",
    "generate_scale_free", "infer_scores", "init_params", "kendall_tau_b", "load_graph",
    "load_model", "min_rank", "prune", "reinsert_scores", "save_model", "transpose",
]
