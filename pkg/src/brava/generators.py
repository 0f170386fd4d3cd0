"""Synthetic training graphs: hyperbolic random graphs and preferential attachment."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .graph import Graph, from_arrays

CALIBRATION_SUBSAMPLE = 2000
_ROW_BLOCK = 512
_EDGE_STREAM = 0xED6E


class GeneratorConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HyperbolicConfig:
    n: int
    gamma: float
    avg_degree: float
    temperature: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise GeneratorConfigError("n must be >= 0")
        if not self.gamma > 2:
            raise GeneratorConfigError(f"gamma must exceed 2, got {self.gamma}")
        if not self.avg_degree > 0:
            raise GeneratorConfigError("avg_degree must be positive")
        if not 0 <= self.temperature < 1:
            raise GeneratorConfigError("temperature must lie in [0, 1)")

    @property
    def alpha(self) -> float:
        # curvature fixed to 1, so gamma = 2 * alpha + 1
        return (self.gamma - 1.0) / 2.0

    def to_dict(self) -> dict:
        return asdict(self)


def sample_radial(alpha: float, R: float, u):
    """Inverse CDF of the radial density alpha sinh(alpha r) / (cosh(alpha R) - 1)."""
    u = np.asarray(u, dtype=np.float64)
    return np.arccosh(1.0 + u * (np.cosh(alpha * R) - 1.0)) / alpha


def hyperbolic_distance(p, q, zeta: float = 1.0):
    """Distance between polar points (r, theta) on the hyperbolic plane of curvature -zeta**2."""
    ru, tu = p
    rv, tv = q
    ru, tu, rv, tv = (np.asarray(a, dtype=np.float64) for a in (ru, tu, rv, tv))
    dtheta = np.pi - np.abs(np.pi - np.abs(tu - tv))
    arg = (np.cosh(zeta * ru) * np.cosh(zeta * rv)
           - np.sinh(zeta * ru) * np.sinh(zeta * rv) * np.cos(dtheta))
    return np.arccosh(np.maximum(arg, 1.0)) / zeta


def connection_probability(dist, R: float, temperature: float):
    """Fermi-Dirac connection rule; a hard threshold d < R when temperature is 0."""
    dist = np.asarray(dist, dtype=np.float64)
    if temperature == 0:
        return (dist < R).astype(np.float64)
    return expit(-(dist - R) / (2.0 * temperature))


def _row_block_probs(r_rows, t_rows, r_all, t_all, R: float, temperature: float):
    dtheta = np.abs(t_rows[:, None] - t_all[None, :])
    dtheta = np.pi - np.abs(np.pi - dtheta)
    arg = (np.cosh(r_rows)[:, None] * np.cosh(r_all)[None, :]
           - np.sinh(r_rows)[:, None] * np.sinh(r_all)[None, :] * np.cos(dtheta))
    if temperature == 0:
        return (arg < math.cosh(R)).astype(np.float64)
    d = np.arccosh(np.maximum(arg, 1.0))
    return expit(-(d - R) / (2.0 * temperature))


def expected_mean_degree(alpha: float, R: float, u, theta, temperature: float,
                         rows: np.ndarray | None = None) -> float:
    """Mean over ``rows`` of each node's expected degree against all nodes.

    ``u`` are radial quantiles, so radii follow the radial law for any R.
    """
    u = np.asarray(u, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    rows = np.arange(len(u)) if rows is None else np.asarray(rows)
    r = sample_radial(alpha, R, u)
    self_prob = float(connection_probability(0.0, R, temperature))
    total = 0.0
    for start in range(0, len(rows), _ROW_BLOCK):
        idx = rows[start:start + _ROW_BLOCK]
        P = _row_block_probs(r[idx], theta[idx], r, theta, R, temperature)
        total += P.sum() - self_prob * len(idx)
    return total / len(rows)


def calibrate_radius(u, theta, alpha: float, target_avg_degree: float,
                     temperature: float, tol: float = 0.05, rng=None) -> float:
    """Disk radius whose expected mean degree matches the target within ``tol``.

    Nodes are given by their radial quantiles ``u`` and angles, so every
    candidate radius sees the same quantiles. The root is bracketed in
    [1, 4 ln n]; the expected degree is evaluated for a uniform subsample of
    at most 2,000 nodes against every node.
    """
    u = np.asarray(u, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    n = len(u)
    if n < 2:
        raise GeneratorConfigError("need at least two positions to calibrate")
    rows = None
    if n > CALIBRATION_SUBSAMPLE:
        rng = np.random.default_rng(0) if rng is None else rng
        rows = np.sort(rng.choice(n, CALIBRATION_SUBSAMPLE, replace=False))

    seen: dict[float, float] = {}

    def mean_deg(R):
        if R not in seen:
            seen[R] = expected_mean_degree(alpha, R, u, theta, temperature, rows)
        return seen[R]

    lo, hi = 1.0, max(4.0 * math.log(n), 1.0 + 1e-9)
    k_lo, k_hi = mean_deg(lo), mean_deg(hi)
    if not (k_hi <= target_avg_degree <= k_lo):
        raise GeneratorConfigError(
            f"target mean degree {target_avg_degree} unreachable: radius bracket "
            f"[{lo:.3f}, {hi:.3f}] gives mean degrees [{k_hi:.3f}, {k_lo:.3f}]"
        )
    # log mean degree falls roughly linearly in R; Brent keeps the bisection
    # bracket while converging much faster
    R = brentq(lambda x: math.log(max(mean_deg(x), 1e-300) / target_avg_degree), lo, hi, xtol=1e-3)
    achieved = mean_deg(R)
    if abs(achieved - target_avg_degree) > tol * target_avg_degree:
        raise GeneratorConfigError(
            f"calibration residual too large: mean degree {achieved:.3f} vs target {target_avg_degree}"
        )
    return R


def hyperbolic_positions(cfg: HyperbolicConfig):
    """Radial quantiles, angles and the calibrated radius for ``cfg``."""
    ss = np.random.SeedSequence(cfg.seed)
    pos_seed, cal_seed = ss.spawn(2)
    rng = np.random.default_rng(pos_seed)
    u = rng.random(cfg.n)
    theta = rng.uniform(0.0, 2.0 * np.pi, cfg.n)
    R = calibrate_radius(u, theta, cfg.alpha, cfg.avg_degree, cfg.temperature,
                         rng=np.random.default_rng(cal_seed))
    return sample_radial(cfg.alpha, R, u), theta, R


def generate_hyperbolic(cfg: HyperbolicConfig) -> Graph:
    """Undirected hyperbolic random graph with O(n^2) pair evaluation.

    For temperature 0 two nodes are joined iff their distance is below R;
    otherwise each pair is joined independently with the Fermi-Dirac
    probability. Pair coin flips come from one generator per row block, so
    the result depends only on the seed.
    """
    n = cfg.n
    if n < 2:
        return from_arrays(n, [], [], directed=False)
    r, theta, R = hyperbolic_positions(cfg)
    src, dst = [], []
    for b, start in enumerate(range(0, n, _ROW_BLOCK)):
        rows = slice(start, min(start + _ROW_BLOCK, n))
        P = _row_block_probs(r[rows], theta[rows], r[start:], theta[start:], R, cfg.temperature)
        upper = np.arange(rows.start, rows.stop)[:, None] < np.arange(start, n)[None, :]
        if cfg.temperature == 0:
            hit = (P > 0) & upper
        else:
            coins = np.random.default_rng([cfg.seed, _EDGE_STREAM, b]).random(P.shape)
            hit = (coins < P) & upper
        i, j = np.nonzero(hit)
        src.append(i + start)
        dst.append(j + start)
    return from_arrays(n, np.concatenate(src), np.concatenate(dst), directed=False)


def generate_scale_free(n: int, attach_m: int = 4, seed: int = 0) -> Graph:
    """Barabasi-Albert graph grown from a star on ``attach_m + 1`` nodes.

    Every new node links to ``attach_m`` distinct existing nodes picked with
    probability proportional to their current degree.
    """
    if not (attach_m >= 1 and n > attach_m):
        raise GeneratorConfigError(f"need n > attach_m >= 1, got n={n}, attach_m={attach_m}")
    rng = np.random.default_rng(seed)
    src = [0] * attach_m
    dst = list(range(1, attach_m + 1))
    # every edge endpoint once: sampling from it is degree-proportional
    endpoints = src + dst
    for v in range(attach_m + 1, n):
        chosen: set[int] = set()
        while len(chosen) < attach_m:
            draws = rng.integers(0, len(endpoints), size=2 * attach_m)
            for k in draws:
                chosen.add(endpoints[k])
                if len(chosen) == attach_m:
                    break
        targets = sorted(chosen)
        src.extend([v] * attach_m)
        dst.extend(targets)
        endpoints.extend(targets)
        endpoints.extend([v] * attach_m)
    return from_arrays(n, src, dst, directed=False)


def load_param_table(path: str | os.PathLike | None = None) -> np.ndarray:
    """(avg_degree, gamma) rows; the bundled table unless ``path`` is given."""
    if path is None:
        text = resources.files("brava.data").joinpath("empirical_params.csv").read_text()
        lines = text.splitlines()
    else:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"avg_degree", "gamma"} <= set(reader.fieldnames):
        raise ValueError("parameter table needs header 'avg_degree,gamma'")
    rows = [(float(r["avg_degree"]), float(r["gamma"])) for r in reader]
    table = np.array(rows, dtype=np.float64).reshape(-1, 2)
    if len(table) == 0:
        raise ValueError("parameter table is empty")
    if np.any(table[:, 1] <= 2) or np.any(table[:, 0] <= 0):
        raise ValueError("table rows need avg_degree > 0 and gamma > 2")
    return table


def sample_training_config(table: np.ndarray, rng: np.random.Generator, n: int,
                           max_temperature: float = 0.5) -> HyperbolicConfig:
    """Temperature uniform on (0, max_temperature); (avg_degree, gamma) as one table row."""
    table = np.asarray(table, dtype=np.float64)
    if len(table) == 0:
        raise ValueError("parameter table is empty")
    row = table[rng.integers(len(table))]
    t = 0.0
    while t == 0.0:
        t = float(rng.uniform(0.0, max_temperature))
    seed = int(rng.integers(2**31 - 1))
    return HyperbolicConfig(n=n, gamma=float(row[1]), avg_degree=float(row[0]),
                            temperature=t, seed=seed)
