"""Ranking metrics and report exports."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np


def _tied_pairs(sorted_values: np.ndarray) -> int:
    """Number of tied pairs in an already-sorted 1-d array."""
    if len(sorted_values) == 0:
        return 0
    change = np.flatnonzero(np.diff(sorted_values) != 0) + 1
    runs = np.diff(np.concatenate([[0], change, [len(sorted_values)]]))
    return int((runs * (runs - 1) // 2).sum())


def _dense_ranks(values: np.ndarray) -> np.ndarray:
    return np.unique(values, return_inverse=True)[1].astype(np.int64)


def count_inversions(seq) -> int:
    """Pairs i < j with seq[i] > seq[j] (strict), via bottom-up merging.

    Each level merges adjacent sorted blocks with one stable sort keyed on
    (block pair, value); left elements precede equal right elements, so the
    count of left elements ahead of a right element is the number that are
    not greater than it.
    """
    ranks = _dense_ranks(np.asarray(seq))
    n = len(ranks)
    total = 0
    pos = np.arange(n)
    width = 1
    while width < n:
        pair = pos // (2 * width)
        is_right = (pos // width) % 2 == 1
        order = np.argsort(pair * n + ranks, kind="stable")
        ranks, pair, is_right = ranks[order], pair[order], is_right[order]
        left_seen = np.cumsum(~is_right)
        pair_start = np.searchsorted(pair, pair, side="left")
        before = left_seen - np.where(pair_start > 0, left_seen[pair_start - 1], 0)
        left_size = np.minimum(width, n - pair * 2 * width)
        total += int((left_size - before)[is_right].sum())
        width *= 2
    return total


@dataclass(frozen=True)
class TauCounts:
    n_pairs: int
    ties_x: int      # pairs tied in x (including joint ties)
    ties_y: int
    ties_joint: int
    discordant: int

    @property
    def concordant(self) -> int:
        return self.n_pairs - self.ties_x - self.ties_y + self.ties_joint - self.discordant


def tau_counts(x, y) -> TauCounts:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(x)
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(xs)
    # joint ties: runs equal in both coordinates after lexsort
    joint = np.concatenate([[True], (np.diff(xs) != 0) | (np.diff(ys) != 0)]) if n else np.zeros(0, bool)
    starts = np.flatnonzero(joint)
    runs = np.diff(np.concatenate([starts, [n]]))
    n3 = int((runs * (runs - 1) // 2).sum())
    n2 = _tied_pairs(np.sort(ys))
    # inversions of y after sorting by (x, y): discordant pairs, x-ties excluded
    discordant = count_inversions(ys)
    return TauCounts(n0, n1, n2, n3, discordant)


def kendall_tau_b(x, y) -> float | None:
    """Tie-adjusted Kendall correlation in O(n log n).

    Returns None when either input is constant (the coefficient is
    undefined there).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    c = tau_counts(x, y)
    denom_x = c.n_pairs - c.ties_x
    denom_y = c.n_pairs - c.ties_y
    if denom_x == 0 or denom_y == 0:
        return None
    numer = c.n_pairs - c.ties_x - c.ties_y + c.ties_joint - 2 * c.discordant
    return numer / math.sqrt(denom_x * denom_y)


def pearson(x, y) -> float | None:
    """Sample Pearson correlation; None for constant input."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length vectors of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = np.dot(xc, xc)
    syy = np.dot(yc, yc)
    if sxx == 0 or syy == 0:
        return None
    r = np.dot(xc, yc) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def min_rank(scores, descending: bool = True) -> np.ndarray:
    """Minimum-rank tie scheme: ascending [10, 20, 20, 40] -> [1, 2, 2, 4].

    With ``descending`` the largest score gets rank 1.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    key = -s if descending else s
    order = np.argsort(key, kind="stable")
    sk = key[order]
    first = np.concatenate([[True], sk[1:] != sk[:-1]]) if len(s) else np.zeros(0, bool)
    block_start = np.maximum.accumulate(np.where(first, np.arange(len(s)), 0))
    ranks = np.empty(len(s), dtype=np.int64)
    ranks[order] = block_start + 1
    return ranks


class InsufficientTailError(ValueError):
    pass


def estimate_gamma(degrees, k_min: int | None = None) -> float:
    """Power-law exponent of a degree sequence by maximum likelihood.

    Uses the continuous estimator with the usual half-integer shift for
    discrete data: 1 + n / sum(ln(k / (k_min - 0.5))) over degrees >= k_min.
    ``k_min`` defaults to max(2, ceil(mean degree)).
    """
    k = np.asarray(degrees, dtype=np.float64).ravel()
    if k_min is None:
        k_min = max(2, int(math.ceil(k.mean()))) if len(k) else 2
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    tail = k[k >= k_min]
    if len(tail) < 50:
        raise InsufficientTailError(f"insufficient tail: {len(tail)} degrees >= {k_min}")
    if tail.min() == tail.max():
        raise InsufficientTailError("degenerate tail: all tail degrees are equal")
    log_sum = np.log(tail / (k_min - 0.5)).sum()
    return float(1.0 + len(tail) / log_sum)


@dataclass
class RankingReport:
    node: np.ndarray
    true_score: np.ndarray
    pred_score: np.ndarray
    true_rank: np.ndarray
    pred_rank: np.ndarray
    tau_b: float | None
    ties_true: int
    ties_pred: int

    @property
    def delta(self) -> np.ndarray:
        return self.pred_rank - self.true_rank

    @property
    def n(self) -> int:
        return len(self.node)

    def summary(self) -> dict:
        return {"tau_b": self.tau_b, "n": self.n,
                "ties_pred": self.ties_pred, "ties_true": self.ties_true}

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "true_score", "pred_score", "true_rank", "pred_rank", "delta"])
            for row in zip(self.node, self.true_score, self.pred_score,
                           self.true_rank, self.pred_rank, self.delta):
                w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])),
                            int(row[3]), int(row[4]), int(row[5])])
            w.writerow(["tau_b", "" if self.tau_b is None else repr(self.tau_b), "", "", "", ""])

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> RankingReport:
        rows, tau = [], None
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            for r in reader:
                if r[0] == "tau_b":
                    tau = float(r[1]) if r[1] else None
                    continue
                rows.append(r)
        cols = list(zip(*rows)) if rows else [()] * 6
        true_score = np.array(cols[1], dtype=np.float64)
        pred_score = np.array(cols[2], dtype=np.float64)
        return cls(
            node=np.array(cols[0], dtype=np.int64),
            true_score=true_score,
            pred_score=pred_score,
            true_rank=np.array(cols[3], dtype=np.int64),
            pred_rank=np.array(cols[4], dtype=np.int64),
            tau_b=tau,
            ties_true=_tied_pairs(np.sort(true_score)),
            ties_pred=_tied_pairs(np.sort(pred_score)),
        )

    def save_summary(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)


def ranking_report(true_scores, predicted_scores, node_ids=None) -> RankingReport:
    t = np.asarray(true_scores, dtype=np.float64).ravel()
    p = np.asarray(predicted_scores, dtype=np.float64).ravel()
    if len(t) != len(p):
        raise ValueError("score vectors differ in length")
    node = np.arange(len(t)) if node_ids is None else np.asarray(node_ids, dtype=np.int64)
    tau = kendall_tau_b(t, p) if len(t) >= 2 else None
    return RankingReport(node, t, p, min_rank(t), min_rank(p), tau,
                         _tied_pairs(np.sort(t)), _tied_pairs(np.sort(p)))


def export_ranking_report(true_scores, predicted_scores, path=None, node_ids=None) -> RankingReport:
    """Build the report and, when ``path`` is given, write the CSV plus a
    JSON summary next to it (same stem, ``.json``)."""
    report = ranking_report(true_scores, predicted_scores, node_ids)
    if path is not None:
        report.to_csv(path)
        report.save_summary(os.path.splitext(os.fspath(path))[0] + ".json")
    return report
