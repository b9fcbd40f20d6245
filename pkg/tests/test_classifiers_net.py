import numpy as np
import pytest

from perfprint.classifiers import train_net
from perfprint.classifiers.net import (
    autoencoder_grads,
    autoencoder_loss,
    descend,
    estimate_memory_mb,
    softmax,
    stack_grads,
    stack_loss,
)
from perfprint.errors import ConfigError

from helpers import random_dataset
from oracles import finite_difference_grads


def _relative_errors(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def test_stack_gradients_match_finite_differences():
    # full fine-tune stack on a 4 -> 3 -> 2 net with a 2-way softmax head
    rng = np.random.default_rng(42)
    X = rng.normal(size=(7, 4))
    y = rng.integers(0, 2, size=7)
    onehot = np.zeros((7, 2))
    onehot[np.arange(7), y] = 1.0
    params = [
        rng.normal(scale=0.5, size=shape)
        for shape in [(4, 3), (3,), (3, 2), (2,), (2, 2), (2,)]
    ]
    analytic = stack_grads(params, X, onehot, 0.001)
    numeric = finite_difference_grads(lambda p: stack_loss(p, X, onehot, 0.001), params)
    assert _relative_errors(analytic, numeric) < 1e-4


def test_autoencoder_gradients_match_finite_differences():
    rng = np.random.default_rng(43)
    X = rng.normal(size=(6, 4))
    params = [
        rng.normal(scale=0.5, size=shape) for shape in [(4, 3), (3,), (3, 4), (4,)]
    ]
    analytic = autoencoder_grads(params, X, 0.001)
    numeric = finite_difference_grads(lambda p: autoencoder_loss(p, X, 0.001), params)
    assert _relative_errors(analytic, numeric) < 1e-4


def test_hidden_sizes_follow_class_count():
    rng = np.random.default_rng(44)
    d = random_dataset(rng, 2, 4, 10)
    model = train_net(d, seed=0, max_iterations=2)
    assert model.weights["w1"].shape == (10, 200)
    assert model.weights["w2"].shape == (200, 20)
    assert model.weights["ws"].shape == (20, 2)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(45)
    z = rng.normal(scale=30.0, size=(40, 7))
    sums = softmax(z).sum(axis=1)
    assert np.abs(sums - 1.0).max() < 1e-6

    d = random_dataset(rng, 3, 4, 6)
    model = train_net(d, seed=1, max_iterations=5)
    probs = model.probabilities(rng.normal(size=(9, 6)))
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6


def test_finetune_loss_decreases_on_synthetic_five_class_set():
    rng = np.random.default_rng(46)
    d = random_dataset(rng, 5, 8, 12, spread=5.0)
    model = train_net(d, seed=7, max_iterations=50)
    finetune = model.loss_history["finetune"]
    assert len(finetune) >= 2
    assert finetune[-1] < finetune[0]


def test_loss_histories_never_increase():
    rng = np.random.default_rng(47)
    d = random_dataset(rng, 3, 6, 8)
    model = train_net(d, seed=3, max_iterations=30)
    for stage, history in model.loss_history.items():
        diffs = np.diff(history)
        assert (diffs <= 1e-15).all(), f"{stage} loss increased"


def test_descend_rejecting_step_keeps_loss():
    # a quadratic with a deliberately huge rate: first steps must be rejected
    params = [np.array([10.0])]
    out, history = descend(
        params,
        lambda p: float(p[0][0] ** 2),
        lambda p: [2.0 * p[0]],
        max_iterations=50,
        learning_rate=100.0,
    )
    assert history == sorted(history, reverse=True)
    assert float(out[0][0] ** 2) < 100.0


def test_training_is_deterministic():
    rng = np.random.default_rng(48)
    d = random_dataset(rng, 3, 5, 6)
    a = train_net(d, seed=11, max_iterations=10)
    b = train_net(d, seed=11, max_iterations=10)
    for key in a.weights:
        assert np.array_equal(a.weights[key], b.weights[key])
    queries = rng.normal(size=(5, 6))
    assert a.predict_many(queries) == b.predict_many(queries)


def test_different_seed_changes_weights():
    rng = np.random.default_rng(49)
    d = random_dataset(rng, 2, 5, 6)
    a = train_net(d, seed=1, max_iterations=3)
    b = train_net(d, seed=2, max_iterations=3)
    assert not np.array_equal(a.weights["w1"], b.weights["w1"])


def test_memory_budget_error_advises_downsampling():
    rng = np.random.default_rng(50)
    d = random_dataset(rng, 3, 4, 50)
    with pytest.raises(ConfigError, match="downsample"):
        train_net(d, seed=0, memory_budget_mb=0.01)
    assert estimate_memory_mb(12, 50, 300, 30, 3) > 0.01


def test_prediction_is_pure():
    rng = np.random.default_rng(51)
    d = random_dataset(rng, 3, 5, 6)
    model = train_net(d, seed=5, max_iterations=10)
    q = rng.normal(size=6)
    assert model.predict(q) == model.predict(q)
    assert model.predict_topk(q, 3) == model.predict_topk(q, 3)
