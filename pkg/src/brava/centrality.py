"""Exact betweenness centrality and multi-hop degree-mass features.

Betweenness follows the ordered-pair convention: every ordered (s, t) with
s != v != t contributes sigma_st(v) / sigma_st, without normalization. On
undirected graphs each unordered pair is therefore counted twice.

Path counts are held in float64. They can exceed 2**53 on large graphs, in
which case the ratios are approximate.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import Graph

BRUTE_FORCE_MAX_NODES = 64


def _brandes_batch(A, AT, sources: np.ndarray, n: int) -> np.ndarray:
    B = len(sources)
    cols = np.arange(B)
    sigma = np.zeros((n, B))
    dist = np.full((n, B), -1, dtype=np.int32)
    sigma[sources, cols] = 1.0
    dist[sources, cols] = 0
    frontier = sigma.copy()
    depth = 0
    # Level-synchronous BFS for all sources in the batch at once.
    while True:
        reach = AT @ frontier
        new = (reach > 0) & (dist < 0)
        if not new.any():
            break
        depth += 1
        dist[new] = depth
        sigma[new] = reach[new]
        frontier = np.where(new, reach, 0.0)

    delta = np.zeros((n, B))
    for d in range(depth, 0, -1):
        at_d = dist == d
        coef = np.zeros((n, B))
        coef[at_d] = (1.0 + delta[at_d]) / sigma[at_d]
        pulled = A @ coef
        prev = dist == d - 1
        delta[prev] += sigma[prev] * pulled[prev]
    delta[sources, cols] = 0.0
    return delta.sum(axis=1)


def brandes_betweenness(g: Graph, batch_size: int = 256, n_jobs: int = 1) -> np.ndarray:
    """Exact betweenness via Brandes' dependency accumulation.

    Sources are processed in batches: one BFS per source expressed as sparse
    matrix products over an ``n x batch`` block, followed by the reverse
    dependency sweep level by level. Batches can run on ``n_jobs`` threads;
    partial sums are reduced in batch order so results do not depend on
    the thread count.
    """
    n = g.n
    if n == 0:
        return np.zeros(0)
    A = g.adjacency()
    AT = A.T.tocsr()
    batches = [np.arange(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]
    if n_jobs > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda s: _brandes_batch(A, AT, s, n), batches))
    else:
        parts = [_brandes_batch(A, AT, s, n) for s in batches]
    bc = np.zeros(n)
    for p in parts:
        bc += p
    return bc


def _bfs_counts(g: Graph, s: int) -> tuple[list[float], list[float]]:
    dist = [float("inf")] * g.n
    sigma = [0.0] * g.n
    dist[s] = 0.0
    sigma[s] = 1.0
    queue = deque([s])
    offsets, targets = g.row_offsets, g.col_indices
    while queue:
        v = queue.popleft()
        for w in targets[offsets[v]:offsets[v + 1]]:
            w = int(w)
            if dist[w] == float("inf"):
                dist[w] = dist[v] + 1
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
    return dist, sigma


def brute_force_betweenness(g: Graph) -> np.ndarray:
    """Reference betweenness for small graphs (n <= 64).

    Counts shortest paths through v directly as sigma_sv * sigma_vt whenever
    dist(s, v) + dist(v, t) == dist(s, t). Shares no code with
    :func:`brandes_betweenness`.
    """
    n = g.n
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force oracle refuses n={n} > {BRUTE_FORCE_MAX_NODES}")
    D = np.empty((n, n))
    S = np.empty((n, n))
    for s in range(n):
        D[s], S[s] = _bfs_counts(g, s)
    bc = np.zeros(n)
    idx = np.arange(n)
    for s in range(n):
        for t in range(n):
            if t == s or not np.isfinite(D[s, t]):
                continue
            on_path = D[s] + D[:, t] == D[s, t]
            on_path &= (idx != s) & (idx != t)
            bc[on_path] += S[s, on_path] * S[on_path, t] / S[s, t]
    return bc


@dataclass(frozen=True)
class DegreeMassMatrix:
    values: np.ndarray  # (n, m); column j holds the order-(j+1) mass
    degree: np.ndarray

    @property
    def order(self) -> int:
        return self.values.shape[1]


def degree_mass(g: Graph, m: int) -> DegreeMassMatrix:
    """Degree masses of orders 1..m for the adjacency of ``g``.

    With d the out-degree vector, order j is sum_{k=0..j} A^k d, built by
    repeated sparse products. Pass ``transpose(g)`` for the A^T masses.
    """
    if m < 1:
        raise ValueError("hop order must be >= 1")
    A = g.adjacency()
    d = g.out_degree().astype(np.float64)
    walk = d
    acc = d.copy()
    out = np.empty((g.n, m))
    for j in range(m):
        walk = A @ walk
        acc = acc + walk
        out[:, j] = acc
    return DegreeMassMatrix(out, d)
