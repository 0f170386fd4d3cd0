"""Removal of nodes that can lie on no shortest path, and score reinsertion."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .graph import Graph, induced_subgraph

LEAF = "leaf"
CLIQUE = "clique-neighborhood"


@dataclass(frozen=True)
class PruneResult:
    original_n: int
    reduced: Graph
    kept: np.ndarray      # reduced index -> original index
    removed: np.ndarray   # original indices
    reasons: np.ndarray   # one of LEAF / CLIQUE per removed node

    def removal_report(self, labels: np.ndarray | None = None) -> list[tuple[int, str]]:
        ids = self.removed if labels is None else np.asarray(labels)[self.removed]
        return [(int(i), str(r)) for i, r in zip(ids, self.reasons)]

    def save_report(self, path: str | os.PathLike, labels: np.ndarray | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "reason"])
            w.writerows(self.removal_report(labels))


def prune(g: Graph) -> PruneResult:
    """One pass over the original graph.

    A node is removed when it has fewer than two distinct neighbors (in- and
    out-neighbors pooled), or when every 2-hop path x -> v -> y (x != y)
    through it is short-cut by an arc x -> y. For undirected graphs the
    second rule says the neighborhood is a clique.
    """
    n = g.n
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return PruneResult(0, g, empty, empty, np.zeros(0, dtype=object))
    A = g.adjacency()
    AT = A.T.tocsr()
    out_deg = np.asarray(A.sum(axis=1)).ravel()
    in_deg = np.asarray(AT.sum(axis=1)).ravel()
    mutual = np.asarray(A.multiply(AT).sum(axis=1)).ravel()
    n_neighbors = in_deg + out_deg - mutual
    # closed[v] = #{(x, y): x -> v -> y, x -> y}, i.e. diag(A^T A A^T)
    closed = np.asarray((AT @ A).multiply(A).sum(axis=1)).ravel()
    two_paths = in_deg * out_deg - mutual

    leaf = n_neighbors < 2
    clique = ~leaf & (closed == two_paths)
    drop = leaf | clique
    kept = np.flatnonzero(~drop)
    removed = np.flatnonzero(drop)
    reasons = np.where(leaf[removed], LEAF, CLIQUE).astype(object)
    reduced, _ = induced_subgraph(g, kept)
    return PruneResult(n, reduced, kept, removed, reasons)


def reinsert_scores(pr: PruneResult, reduced_scores) -> np.ndarray:
    """Scores for the original node set.

    Pruned nodes share the sentinel ``min(reduced_scores) - 1`` so they rank
    jointly last; with nothing kept the sentinel is 0.
    """
    reduced_scores = np.asarray(reduced_scores, dtype=np.float64).ravel()
    if len(reduced_scores) != len(pr.kept):
        raise ValueError(
            f"expected {len(pr.kept)} reduced scores, got {len(reduced_scores)}"
        )
    sentinel = reduced_scores.min() - 1.0 if len(reduced_scores) else 0.0
    full = np.full(pr.original_n, sentinel)
    full[pr.kept] = reduced_scores
    return full
