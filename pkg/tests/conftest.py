import numpy as np
import pytest

from brava.graph import from_arrays


def random_graph(rng, n, p, directed):
    mask = rng.random((n, n)) < p
    if not directed:
        mask = np.triu(mask, 1)
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return from_arrays(n, src, dst, directed)


def dense(g):
    A = np.zeros((g.n, g.n))
    arcs = g.arcs()
    A[arcs[:, 0], arcs[:, 1]] = 1.0
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gradient_check(seed, directed, n=12, step=1e-5):
    """Worst relative error between analytic and central-difference gradients.

    Dropout is off. Relative error uses max(|analytic|, |numeric|, 1e-6) as
    denominator so exactly-zero gradients do not divide by zero.
    """
    from brava.model import Hyperparams, forward_inputs, init_params
    from brava.training import loss_and_gradients, make_sample, margin_ranking_loss, sample_pairs

    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.3, directed)
    hp = Hyperparams(dropout=0.0)
    sample = make_sample(g, hp.hop_order, pruned=False)
    params = init_params(hp, seed)
    for k in params:
        if k.endswith(".b"):
            params[k] = rng.normal(0, 0.1, params[k].shape)
    pairs = sample_pairs(sample.target, 200, rng)
    _, grads = loss_and_gradients(sample, pairs, params, hp)

    def loss(p):
        s = forward_inputs(sample.inputs, p, hp).scores
        return margin_ranking_loss(s[pairs.u], s[pairs.v], pairs.y)

    worst = 0.0
    for k, v in params.items():
        for idx in np.ndindex(v.shape):
            orig = v[idx]
            v[idx] = orig + step
            up = loss(params)
            v[idx] = orig - step
            down = loss(params)
            v[idx] = orig
            num = (up - down) / (2 * step)
            ana = grads[k][idx]
            worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-6))
    return worst


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
