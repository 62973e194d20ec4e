import math

import numpy as np
import pytest

from diamondnet.channel import build_paper_example, dmc_from_matrix
from diamondnet.errors import InvalidArgument
from diamondnet.optimize import (OptimizerConfig, _Problem, baselines, maximize_rate,
                                 penalized_objective, simplex_embed)
from diamondnet.prob import ConditionalKernel, JointPmf
from diamondnet.region import DiamondDistribution, cut_set_bound, evaluate_bounds

from conftest import random_distribution

LN2 = math.log(2)
FAST = dict(restarts=6, max_iterations=300, card_u=2, card_z=2)


def test_simplex_embed_uniform():
    np.testing.assert_allclose(simplex_embed(np.zeros(3)).probs, 0.25, atol=1e-15)


def test_simplex_embed_saturation():
    p = simplex_embed([30.0]).probs
    assert abs(p[1] - 1) < 1e-12 and p[0] < 1e-12


def test_simplex_embed_random(rng):
    for _ in range(50):
        p = simplex_embed(rng.normal(scale=5, size=rng.integers(1, 8))).probs
        assert abs(p.sum() - 1) < 1e-12 and np.all(p > 0)
    # huge logits do not overflow
    assert np.isfinite(simplex_embed([1e4, -1e4]).probs).all()


def degenerate_uniform():
    ch = build_paper_example()
    return DiamondDistribution(JointPmf(np.array([[0.5, 0.5]])), ch,
                               ConditionalKernel(np.ones((2, 1))))


def test_penalized_plugin():
    d = degenerate_uniform()
    assert penalized_objective(d, LN2, LN2, 10.0) == pytest.approx(LN2, abs=1e-15)
    assert penalized_objective(d, LN2, 0.5 * LN2, 10.0) == \
        pytest.approx(LN2 - 10.0 * 0.5 * LN2, abs=1e-12)
    with pytest.raises(InvalidArgument):
        penalized_objective(d, 1, 1, 0)


def test_penalized_feasible_random(rng):
    for _ in range(30):
        d = random_distribution(rng, 3, 3)
        e = evaluate_bounds(d)
        r1, r2 = e.b2 + rng.uniform(0, 1), e.b3 + rng.uniform(0, 1)
        assert penalized_objective(d, r1, r2, 10.0) == min(e.b1, r1 + r2 - e.b4)


def test_gradients_match_finite_differences(rng):
    prob = _Problem(build_paper_example(), 2, 3, 0.2, 0.3)
    theta = rng.normal(size=prob.dim)
    out = dict(prob._eval(theta))
    h = 1e-6
    for name, (_, grad) in out.items():
        num = np.array([(prob._eval(theta + h * e)[name][0]
                         - prob._eval(theta - h * e)[name][0]) / (2 * h)
                        for e in np.eye(prob.dim)])
        np.testing.assert_allclose(grad, num, atol=1e-7)


def test_noiseless_binary():
    ch = dmc_from_matrix([[1, 0], [0, 1]])
    res = maximize_rate(ch, 0.5 * LN2, 0.5 * LN2, OptimizerConfig(**FAST))
    assert abs(res.best_rate - LN2) < 1e-3
    assert res.feasible


def test_zero_link_rates():
    res = maximize_rate(build_paper_example(), 0, 0, OptimizerConfig(**FAST))
    assert res.best_rate == 0.0


def test_result_invariants():
    ch = build_paper_example()
    r1 = r2 = 0.5 * LN2
    res = maximize_rate(ch, r1, r2, OptimizerConfig(**FAST, seed=5))
    assert res.best_rate == max(res.per_restart_rates)
    assert len(res.per_restart_rates) == 6
    e = evaluate_bounds(res.best_dist)
    assert e.b2 <= r1 + 1e-6 and e.b3 <= r2 + 1e-6
    assert min(e.b1, r1 + r2 - e.b4) == pytest.approx(res.best_rate, abs=1e-9)
    assert res.iterations_used > 0


@pytest.mark.parametrize("rows,r1,r2", [
    ([[0.9, 0.1], [0.2, 0.8]], 0.2, 0.3),
    ([[0.9, 0.1], [0.2, 0.8]], 0.5, 0.05),
    ([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]], 0.3, 0.3),
])
def test_baselines_and_cut_set(rows, r1, r2):
    ch = dmc_from_matrix(rows)
    res = maximize_rate(ch, r1, r2, OptimizerConfig(restarts=6, max_iterations=200,
                                                    card_u=2, card_z=3))
    assert res.best_rate >= max(baselines(ch, r1, r2)) - 1e-3
    assert res.best_rate <= cut_set_bound(ch, r1, r2) + 1e-6


def test_baselines_half_bit():
    routing, daf = baselines(build_paper_example(), 0.5 * LN2, 0.5 * LN2)
    assert routing == pytest.approx(0.5 * LN2)
    assert daf == pytest.approx(0.5 * LN2, abs=1e-12)


def test_reproducible():
    ch = build_paper_example()
    a = maximize_rate(ch, 0.3, 0.3, OptimizerConfig(**FAST, seed=11))
    b = maximize_rate(ch, 0.3, 0.3, OptimizerConfig(**FAST, seed=11))
    assert a.best_rate == b.best_rate
    assert a.per_restart_rates == b.per_restart_rates
    np.testing.assert_array_equal(a.best_dist.p_ux.probs, b.best_dist.p_ux.probs)


def test_parallel_matches_serial():
    ch = build_paper_example()
    a = maximize_rate(ch, 0.3, 0.3, OptimizerConfig(**FAST, seed=2))
    b = maximize_rate(ch, 0.3, 0.3, OptimizerConfig(**FAST, seed=2, n_jobs=2))
    assert a.per_restart_rates == b.per_restart_rates


def test_cardinality_bounds():
    ch = build_paper_example()
    assert OptimizerConfig().resolved_cards(ch) == (6, 15)
    with pytest.raises(InvalidArgument):
        OptimizerConfig(card_u=7).resolved_cards(ch)
    with pytest.raises(InvalidArgument):
        OptimizerConfig(card_u=2, card_z=8).resolved_cards(ch)
    assert OptimizerConfig(card_u=7, card_z=20, unsafe=True).resolved_cards(ch) == (7, 20)


def test_invalid_config():
    ch = build_paper_example()
    with pytest.raises(InvalidArgument):
        maximize_rate(ch, 0.1, 0.1, OptimizerConfig(restarts=0))
    with pytest.raises(InvalidArgument):
        maximize_rate(ch, -0.1, 0.1, OptimizerConfig(**FAST))
