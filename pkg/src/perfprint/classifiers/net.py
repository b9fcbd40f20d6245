"""Stacked-autoencoder network with a softmax head.

Three-stage training: two sigmoid autoencoders pretrained layerwise on
reconstruction loss, a softmax layer trained on the second hidden
representation, then end-to-end fine-tuning of the whole stack by
backpropagation. All stages run full-batch gradient descent with a
halving-on-increase learning-rate schedule, so the recorded loss history is
non-increasing and training is bit-reproducible from the seed.
"""

from __future__ import annotations

import time

import numpy as np

from ..errors import ConfigError
from .base import Model, check_trainable, rank_by_score

DEFAULT_MAX_ITERATIONS = 400
DEFAULT_L2_WEIGHT = 0.001
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_MEMORY_BUDGET_MB = 2048.0
_MIN_LEARNING_RATE = 1e-15


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=-1, keepdims=True)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def autoencoder_loss(params, X, l2):
    """Mean squared reconstruction error over all entries plus L2 on both
    weight matrices (biases unregularized). Sigmoid encoder, linear decoder."""
    we, be, wd, bd = params
    h = sigmoid(X @ we + be)
    xhat = h @ wd + bd
    err = xhat - X
    # zero-width inputs (access-denied datasets) have nothing to reconstruct
    mse = 0.5 * float((err * err).mean()) if err.size else 0.0
    reg = 0.5 * l2 * (float((we * we).sum()) + float((wd * wd).sum()))
    return mse + reg


def autoencoder_grads(params, X, l2):
    we, be, wd, bd = params
    h = sigmoid(X @ we + be)
    xhat = h @ wd + bd
    scale = 1.0 / X.size if X.size else 0.0
    d_out = (xhat - X) * scale
    g_wd = h.T @ d_out + l2 * wd
    g_bd = d_out.sum(axis=0)
    d_h = (d_out @ wd.T) * h * (1.0 - h)
    g_we = X.T @ d_h + l2 * we
    g_be = d_h.sum(axis=0)
    return [g_we, g_be, g_wd, g_bd]


def softmax_loss(params, H, y_onehot, l2):
    ws, bs = params
    p = softmax(H @ ws + bs)
    ce = -float(np.log(np.clip((p * y_onehot).sum(axis=1), 1e-300, None)).mean())
    return ce + 0.5 * l2 * float((ws * ws).sum())


def softmax_grads(params, H, y_onehot, l2):
    ws, bs = params
    p = softmax(H @ ws + bs)
    d_z = (p - y_onehot) / H.shape[0]
    return [H.T @ d_z + l2 * ws, d_z.sum(axis=0)]


def stack_loss(params, X, y_onehot, l2):
    """Cross-entropy of the full encoder stack plus L2 on all three weight
    matrices. `params` is (W1, b1, W2, b2, Ws, bs)."""
    w1, b1, w2, b2, ws, bs = params
    h1 = sigmoid(X @ w1 + b1)
    h2 = sigmoid(h1 @ w2 + b2)
    p = softmax(h2 @ ws + bs)
    ce = -float(np.log(np.clip((p * y_onehot).sum(axis=1), 1e-300, None)).mean())
    reg = 0.5 * l2 * (
        float((w1 * w1).sum()) + float((w2 * w2).sum()) + float((ws * ws).sum())
    )
    return ce + reg


def stack_grads(params, X, y_onehot, l2):
    w1, b1, w2, b2, ws, bs = params
    n = X.shape[0]
    h1 = sigmoid(X @ w1 + b1)
    h2 = sigmoid(h1 @ w2 + b2)
    p = softmax(h2 @ ws + bs)
    d_z3 = (p - y_onehot) / n
    g_ws = h2.T @ d_z3 + l2 * ws
    g_bs = d_z3.sum(axis=0)
    d_h2 = (d_z3 @ ws.T) * h2 * (1.0 - h2)
    g_w2 = h1.T @ d_h2 + l2 * w2
    g_b2 = d_h2.sum(axis=0)
    d_h1 = (d_h2 @ w2.T) * h1 * (1.0 - h1)
    g_w1 = X.T @ d_h1 + l2 * w1
    g_b1 = d_h1.sum(axis=0)
    return [g_w1, g_b1, g_w2, g_b2, g_ws, g_bs]


def descend(params, loss_fn, grad_fn, max_iterations, learning_rate):
    """Full-batch gradient descent with halving on loss increase.

    A step that would raise the loss is rejected and the rate halved, so the
    returned history is non-increasing. Stops early once the rate underflows.
    """
    params = [p.copy() for p in params]
    lr = learning_rate
    loss = loss_fn(params)
    history = [loss]
    for _ in range(max_iterations):
        grads = grad_fn(params)
        trial = [p - lr * g for p, g in zip(params, grads)]
        new_loss = loss_fn(trial)
        if new_loss <= loss:
            params, loss = trial, new_loss
        else:
            lr *= 0.5
            if lr < _MIN_LEARNING_RATE:
                break
        history.append(loss)
    return params, history


class AutoencoderNetModel(Model):
    kind = "net"

    def __init__(
        self, classes, weights, hyperparams=None, seed=None, train_seconds=0.0
    ):
        super().__init__(
            classes, seed=seed, hyperparams=hyperparams, train_seconds=train_seconds
        )
        # weights: dict with w1, b1, w2, b2, ws, bs
        self.weights = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
        self.loss_history: dict[str, list[float]] = {}

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        w = self.weights
        h1 = sigmoid(X @ w["w1"] + w["b1"])
        h2 = sigmoid(h1 @ w["w2"] + w["b2"])
        return softmax(h2 @ w["ws"] + w["bs"])

    def rank_classes(self, x: np.ndarray) -> np.ndarray:
        return rank_by_score(self.probabilities(x)[0])

    def rank_classes_many(self, X: np.ndarray) -> np.ndarray:
        return rank_by_score(self.probabilities(X))


def estimate_memory_mb(n_samples, n_features, hidden1, hidden2, n_classes) -> float:
    weight_floats = 2 * n_features * hidden1 + 2 * hidden1 * hidden2 + hidden2 * n_classes
    activation_floats = n_samples * (n_features + hidden1 + hidden2 + n_classes)
    return 8.0 * (weight_floats + activation_floats) / 1e6


def train_net(
    train,
    seed: int = 0,
    hidden1: int | None = None,
    hidden2: int | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    finetune_iterations: int | None = None,
    softmax_iterations: int | None = None,
    l2_weight: float = DEFAULT_L2_WEIGHT,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    memory_budget_mb: float = DEFAULT_MEMORY_BUDGET_MB,
) -> AutoencoderNetModel:
    """Pretrain two autoencoders, train the softmax head, fine-tune the stack.

    Hidden sizes default to 100*N and 10*N. The iteration cap applies to the
    autoencoder stages; the softmax and fine-tuning stages default to the
    same cap but have their own knobs.
    """
    check_trainable(train, min_classes=2)
    if max_iterations < 1:
        raise ConfigError(f"max_iterations must be >= 1, got {max_iterations}")
    t0 = time.perf_counter()
    classes = train.classes
    n_classes = len(classes)
    h1 = 100 * n_classes if hidden1 is None else hidden1
    h2 = 10 * n_classes if hidden2 is None else hidden2
    if h1 < 1 or h2 < 1:
        raise ConfigError("hidden layer sizes must be >= 1")
    X = train.feature_matrix()
    y = train.label_indices(classes)
    n, d = X.shape

    needed = estimate_memory_mb(n, d, h1, h2, n_classes)
    if needed > memory_budget_mb:
        raise ConfigError(
            f"network needs ~{needed:.0f} MB, budget is {memory_budget_mb:.0f} MB; "
            "downsample the input data to shrink the feature vectors"
        )

    softmax_iterations = max_iterations if softmax_iterations is None else softmax_iterations
    finetune_iterations = max_iterations if finetune_iterations is None else finetune_iterations

    rng = np.random.default_rng(seed)
    we1 = glorot_uniform(rng, d, h1)
    wd1 = glorot_uniform(rng, h1, d)
    we2 = glorot_uniform(rng, h1, h2)
    wd2 = glorot_uniform(rng, h2, h1)
    ws = glorot_uniform(rng, h2, n_classes)

    ae1, hist1 = descend(
        [we1, np.zeros(h1), wd1, np.zeros(d)],
        lambda p: autoencoder_loss(p, X, l2_weight),
        lambda p: autoencoder_grads(p, X, l2_weight),
        max_iterations,
        learning_rate,
    )
    h1_act = sigmoid(X @ ae1[0] + ae1[1])

    ae2, hist2 = descend(
        [we2, np.zeros(h2), wd2, np.zeros(h1)],
        lambda p: autoencoder_loss(p, h1_act, l2_weight),
        lambda p: autoencoder_grads(p, h1_act, l2_weight),
        max_iterations,
        learning_rate,
    )
    h2_act = sigmoid(h1_act @ ae2[0] + ae2[1])

    y_onehot = np.zeros((n, n_classes))
    y_onehot[np.arange(n), y] = 1.0
    sm, hist3 = descend(
        [ws, np.zeros(n_classes)],
        lambda p: softmax_loss(p, h2_act, y_onehot, l2_weight),
        lambda p: softmax_grads(p, h2_act, y_onehot, l2_weight),
        softmax_iterations,
        learning_rate,
    )

    stack, hist4 = descend(
        [ae1[0], ae1[1], ae2[0], ae2[1], sm[0], sm[1]],
        lambda p: stack_loss(p, X, y_onehot, l2_weight),
        lambda p: stack_grads(p, X, y_onehot, l2_weight),
        finetune_iterations,
        learning_rate,
    )

    model = AutoencoderNetModel(
        classes=classes,
        weights={
            "w1": stack[0],
            "b1": stack[1],
            "w2": stack[2],
            "b2": stack[3],
            "ws": stack[4],
            "bs": stack[5],
        },
        hyperparams={
            "hidden1": int(h1),
            "hidden2": int(h2),
            "max_iterations": int(max_iterations),
            "softmax_iterations": int(softmax_iterations),
            "finetune_iterations": int(finetune_iterations),
            "l2_weight": float(l2_weight),
            "learning_rate": float(learning_rate),
        },
        seed=seed,
        train_seconds=time.perf_counter() - t0,
    )
    model.loss_history = {
        "autoencoder1": hist1,
        "autoencoder2": hist2,
        "softmax": hist3,
        "finetune": hist4,
    }
    return model
