"""Immutable CSR graphs and plain edge-list I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class EdgeListParseError(ValueError):
    """Raised for malformed edge-list input; carries the offending line."""

    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        super().__init__(f"{where}{message}")
        self.lineno = lineno
        self.path = path


@dataclass(frozen=True)
class EdgeList:
    edges: np.ndarray  # (k, 2) int64
    directed: bool = False

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class Graph:
    """Compressed sparse row adjacency.

    Undirected graphs store both orientations of every edge, so the same
    row traversal serves both cases. ``labels[i]`` is the external id of
    compact node ``i``.
    """

    n: int
    directed: bool
    row_offsets: np.ndarray
    col_indices: np.ndarray
    labels: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.row_offsets.setflags(write=False)
        self.col_indices.setflags(write=False)

    @property
    def n_arcs(self) -> int:
        return int(self.row_offsets[-1])

    @property
    def n_edges(self) -> int:
        return self.n_arcs if self.directed else self.n_arcs // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[u]:self.row_offsets[u + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def arcs(self) -> np.ndarray:
        """All stored arcs as an (|E_stored|, 2) array, row-major order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree())
        return np.column_stack([src, self.col_indices.astype(np.int64)])

    def node_labels(self) -> np.ndarray:
        if self.labels is None:
            return np.arange(self.n, dtype=np.int64)
        return self.labels

    def adjacency(self) -> sp.csr_matrix:
        """0/1 adjacency as a float64 scipy CSR matrix (cached)."""
        if "adj" not in self._cache:
            data = np.ones(self.n_arcs, dtype=np.float64)
            self._cache["adj"] = sp.csr_matrix(
                (data, self.col_indices, self.row_offsets), shape=(self.n, self.n)
            )
        return self._cache["adj"]

    def transpose(self) -> Graph:
        return transpose(self)

    def same_arcs(self, other: Graph) -> bool:
        return (
            self.n == other.n
            and self.directed == other.directed
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, edges={self.n_edges}, {kind})"


def _from_arcs(n: int, src: np.ndarray, dst: np.ndarray, directed: bool,
               labels: np.ndarray | None = None) -> Graph:
    # Caller guarantees ids in [0, n); removes loops and duplicates here.
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keep = src != dst
    src, dst = src[keep], dst[keep]
    if not directed:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    key = np.unique(src * max(n, 1) + dst)
    src, dst = key // max(n, 1), key % max(n, 1)
    counts = np.bincount(src, minlength=n) if n else np.zeros(0, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Graph(n, directed, offsets, dst.astype(np.int64), labels)


def build_graph(edges: EdgeList | Sequence[tuple[int, int]] | np.ndarray,
                directed: bool | None = None) -> Graph:
    """Build a graph from raw id pairs.

    Ids are compacted to ``[0, n)`` in order of first appearance, self-loops
    are dropped, duplicate arcs are merged and undirected input is
    symmetrized.
    """
    if isinstance(edges, EdgeList):
        if directed is None:
            directed = edges.directed
        arr = edges.edges
    else:
        arr = edges
    directed = bool(directed)
    arr = np.asarray(arr, dtype=np.int64).reshape(-1, 2) if len(arr) else np.zeros((0, 2), np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("node ids must be non-negative")
    flat = arr.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    compact = rank[inverse].reshape(-1, 2)
    labels = uniq[order]
    return _from_arcs(len(uniq), compact[:, 0], compact[:, 1], directed, labels)


def from_arrays(n: int, src, dst, directed: bool = False) -> Graph:
    """Build a graph on nodes ``0..n-1`` without relabeling (isolated nodes kept)."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
        raise ValueError("arc endpoint out of range")
    return _from_arcs(n, src, dst, directed)


def transpose(g: Graph) -> Graph:
    """Reverse every arc. Undirected graphs are returned unchanged."""
    if not g.directed:
        return g
    if "T" not in g._cache:
        arcs = g.arcs()
        t = _from_arcs(g.n, arcs[:, 1], arcs[:, 0], True, g.labels)
        t._cache["T"] = g
        g._cache["T"] = t
    return g._cache["T"]


def induced_subgraph(g: Graph, nodes: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` (kept in the given order).

    Returns the subgraph and an old->new index map with -1 for dropped nodes.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    mapping = np.full(g.n, -1, dtype=np.int64)
    mapping[nodes] = np.arange(len(nodes))
    arcs = g.arcs()
    keep = (mapping[arcs[:, 0]] >= 0) & (mapping[arcs[:, 1]] >= 0)
    arcs = arcs[keep]
    labels = g.node_labels()[nodes]
    sub = _from_arcs(len(nodes), mapping[arcs[:, 0]], mapping[arcs[:, 1]], True, labels)
    if not g.directed:
        sub = Graph(sub.n, False, sub.row_offsets, sub.col_indices, labels)
    return sub, mapping


def largest_component(g: Graph, mode: str = "weak") -> tuple[Graph, np.ndarray]:
    """Induced subgraph on the largest weakly or strongly connected node set.

    Size ties go to the component holding the smallest node label.
    ``mode="strong"`` on an undirected graph behaves like ``"weak"``.
    """
    if mode not in ("weak", "strong"):
        raise ValueError(f"unknown component mode {mode!r}")
    if g.n < 1:
        raise ValueError("graph has no nodes")
    connection = "strong" if (mode == "strong" and g.directed) else "weak"
    _, comp = csgraph.connected_components(g.adjacency(), directed=True, connection=connection)
    sizes = np.bincount(comp)
    min_label = np.full(len(sizes), np.iinfo(np.int64).max)
    np.minimum.at(min_label, comp, g.node_labels())
    candidates = np.flatnonzero(sizes == sizes.max())
    winner = candidates[np.argmin(min_label[candidates])]
    nodes = np.flatnonzero(comp == winner)
    return induced_subgraph(g, nodes)


def parse_edge_lines(lines: Iterable[str], directed: bool = False,
                     path: str | None = None) -> EdgeList:
    pairs = []
    matrix_market = False
    size_line_pending = False
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if lineno == 1 and s.startswith("%%MatrixMarket"):
            matrix_market = size_line_pending = True
            continue
        if not s or s.startswith("#") or s.startswith("%"):
            continue
        if size_line_pending:
            # "rows cols entries" header of a MatrixMarket coordinate file
            size_line_pending = False
            continue
        tokens = s.split()
        if len(tokens) < 2:
            raise EdgeListParseError(f"expected two node ids, got {s!r}", lineno, path)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(f"non-integer node id in {s!r}", lineno, path) from None
        if u < 0 or v < 0:
            raise EdgeListParseError(f"negative node id in {s!r}", lineno, path)
        pairs.append((u, v))
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if matrix_market:
        arr = arr - 1  # MatrixMarket ids are 1-based
        if arr.size and arr.min() < 0:
            raise EdgeListParseError("MatrixMarket ids must be >= 1", None, path)
    return EdgeList(arr, directed)


def load_edge_list(path: str | os.PathLike, directed: bool = False) -> EdgeList:
    """Read whitespace-separated integer pairs; '#' lines are comments.

    Extra columns (e.g. weights) after the first two are ignored. Files
    starting with a ``%%MatrixMarket`` banner (Network Repository ``.mtx``)
    are read as 1-based coordinate lists.
    """
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_edge_lines(fh, directed, path)
    except OSError as exc:
        raise EdgeListParseError(f"cannot read edge list: {exc}", None, path) from exc


def load_graph(path: str | os.PathLike, directed: bool = False) -> Graph:
    return build_graph(load_edge_list(path, directed))


def save_edge_list(path: str | os.PathLike, g: Graph | EdgeList, header: str | None = None) -> None:
    if isinstance(g, Graph):
        arcs = g.arcs()
        if not g.directed:
            arcs = arcs[arcs[:, 0] < arcs[:, 1]]
        labels = g.node_labels()
        arcs = labels[arcs]
    else:
        arcs = g.edges
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v in arcs:
            fh.write(f"{u} {v}\n")


def save_scores(path: str | os.PathLike, node_ids, scores) -> None:
    """Write ``id<TAB>score`` lines; ``repr`` keeps full float precision."""
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        for i, s in zip(node_ids, scores):
            fh.write(f"{int(i)}\t{float(s)!r}\n")
    os.replace(tmp, path)


def load_scores(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    ids, values = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise EdgeListParseError(f"expected 'id score', got {s!r}", lineno, os.fspath(path))
            try:
                ids.append(int(parts[0]))
                values.append(float(parts[1]))
            except ValueError:
                raise EdgeListParseError(f"bad score line {s!r}", lineno, os.fspath(path)) from None
    return np.array(ids, dtype=np.int64), np.array(values, dtype=np.float64)
