import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from brava.metrics import (
    InsufficientTailError,
    RankingReport,
    count_inversions,
    estimate_gamma,
    export_ranking_report,
    kendall_tau_b,
    min_rank,
    pearson,
)


def tau_b_pairs(x, y):
    """O(n^2) pair classification."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    i, j = np.triu_indices(len(x), 1)
    sx, sy = np.sign(x[i] - x[j]), np.sign(y[i] - y[j])
    conc = int(np.sum(sx * sy > 0))
    disc = int(np.sum(sx * sy < 0))
    only_x = int(np.sum((sx == 0) & (sy != 0)))
    only_y = int(np.sum((sy == 0) & (sx != 0)))
    denom = (conc + disc + only_x) * (conc + disc + only_y)
    return None if denom == 0 else (conc - disc) / math.sqrt(denom)


def tied_vector(rng, n):
    return rng.integers(0, max(1, n // int(rng.integers(1, 6))), size=n).astype(float)


def test_tau_examples():
    assert kendall_tau_b([1, 2, 3], [1, 2, 3]) == 1.0
    assert kendall_tau_b([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau_b([1, 1, 2], [1, 2, 2]) == pytest.approx(0.5, abs=1e-15)


def test_tau_undefined_for_constant_input():
    assert kendall_tau_b([1, 1, 1], [1, 2, 3]) is None
    assert kendall_tau_b([1, 2, 3], [4, 4, 4]) is None


def test_tau_errors():
    with pytest.raises(ValueError):
        kendall_tau_b([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau_b([1], [1])


def test_tau_matches_pair_classification(rng):
    for _ in range(300):
        n = int(rng.integers(2, 120))
        x, y = tied_vector(rng, n), tied_vector(rng, n)
        ref = tau_b_pairs(x, y)
        got = kendall_tau_b(x, y)
        if ref is None:
            assert got is None
        else:
            assert abs(got - ref) <= 1e-12


def test_tau_matches_scipy(rng):
    x, y = tied_vector(rng, 500), tied_vector(rng, 500)
    assert kendall_tau_b(x, y) == pytest.approx(stats.kendalltau(x, y, variant="b").statistic, abs=1e-12)


def test_count_inversions_brute(rng):
    for _ in range(50):
        s = rng.integers(0, 10, size=int(rng.integers(0, 60)))
        ref = sum(1 for i in range(len(s)) for j in range(i + 1, len(s)) if s[i] > s[j])
        assert count_inversions(s) == ref


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=40), st.data())
def test_tau_invariances(xs, data):
    ys = data.draw(st.lists(st.integers(-5, 5), min_size=len(xs), max_size=len(xs)))
    x, y = np.array(xs, float), np.array(ys, float)
    t = kendall_tau_b(x, y)
    assert t == kendall_tau_b(y, x)
    monotone = kendall_tau_b(np.exp(x), 3 * y + 1)
    assert (t is None and monotone is None) or abs(t - monotone) < 1e-12
    if len(set(xs)) > 1:
        assert kendall_tau_b(x, x) == pytest.approx(1.0)


def test_pearson_examples(rng):
    x = rng.normal(size=100)
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, -2 * x + 7) == pytest.approx(-1.0)
    assert pearson([1, 1, 1], [1, 2, 3]) is None


def test_pearson_two_pass_formula(rng):
    x, y = rng.normal(size=1000), rng.normal(size=1000)
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    assert abs(pearson(x, y) - num / den) < 1e-12


def test_min_rank_examples():
    np.testing.assert_array_equal(min_rank([10, 20, 20, 40], descending=False), [1, 2, 2, 4])
    np.testing.assert_array_equal(min_rank([10, 20, 20, 40]), [4, 2, 2, 1])
    np.testing.assert_array_equal(min_rank([3, 3, 3]), [1, 1, 1])
    np.testing.assert_array_equal(min_rank([5, 4, 3, 2]), [1, 2, 3, 4])


def test_min_rank_matches_scipy(rng):
    x = rng.integers(0, 20, size=300).astype(float)
    np.testing.assert_array_equal(min_rank(x, descending=False), stats.rankdata(x, method="min"))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=30))
def test_min_rank_monotone_invariance(xs):
    x = np.array(xs) / 8.0
    np.testing.assert_array_equal(min_rank(x), min_rank(np.arctan(x) * 5 + 2))


def discrete_power_law(rng, gamma, k_min, size, k_max=10**6):
    k = np.arange(k_min, k_max + 1)
    p = k ** -gamma
    return rng.choice(k, size=size, p=p / p.sum())


def test_gamma_mle_recovers_exponent():
    rng = np.random.default_rng(7)
    deg = discrete_power_law(rng, 2.5, 5, 100_000)
    assert 2.4 <= estimate_gamma(deg, k_min=5) <= 2.6


def test_gamma_permutation_invariant(rng):
    deg = discrete_power_law(rng, 2.8, 3, 2000)
    assert estimate_gamma(deg, 3) == pytest.approx(estimate_gamma(rng.permutation(deg), 3), rel=1e-12)


def test_gamma_degenerate_tail():
    with pytest.raises(InsufficientTailError):
        estimate_gamma(np.full(500, 4), k_min=4)


def test_gamma_short_tail():
    with pytest.raises(InsufficientTailError, match="insufficient tail"):
        estimate_gamma(np.arange(1, 40), k_min=1)


def test_report_identical_scores(tmp_path):
    s = np.array([3.0, 1.0, 2.0, 5.0])
    rep = export_ranking_report(s, s, tmp_path / "r.csv")
    assert rep.tau_b == 1.0
    assert np.all(rep.delta == 0)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "node,true_score,pred_score,true_rank,pred_rank,delta"
    assert lines[-1].startswith("tau_b,1.0")
    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary == {"tau_b": 1.0, "n": 4, "ties_pred": 0, "ties_true": 0}


def test_report_reversed():
    s = np.arange(7, dtype=float)
    rep = export_ranking_report(s, -s)
    assert rep.tau_b == -1.0
    np.testing.assert_array_equal(rep.delta, -rep.delta[::-1])


def test_report_round_trip(tmp_path, rng):
    t = rng.integers(0, 5, 50).astype(float)
    p = rng.normal(size=50)
    rep = export_ranking_report(t, p, tmp_path / "r.csv", node_ids=np.arange(100, 150))
    back = RankingReport.from_csv(tmp_path / "r.csv")
    for name in ("node", "true_score", "pred_score", "true_rank", "pred_rank"):
        np.testing.assert_array_equal(getattr(back, name), getattr(rep, name))
    assert back.tau_b == rep.tau_b
    assert (back.ties_true, back.ties_pred) == (rep.ties_true, rep.ties_pred)


def test_report_length_mismatch():
    with pytest.raises(ValueError):
        export_ranking_report([1, 2], [1, 2, 3])
