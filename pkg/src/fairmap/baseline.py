"""Conventional reference classifier: full-batch gradient descent + k-fold CV.

Exists purely as an accuracy yardstick for the evolved archives: same
network, same forward pass, trained the ordinary way on binary cross
entropy with stratified cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RunError
from .ingest import Dataset
from .mlp import Architecture, genome_length, probabilities

_INITS = ("glorot", "zeros")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 500
    folds: int = 10
    seed: int = 0
    init: str = "glorot"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.init not in _INITS:
            raise ConfigError(f"init must be one of {_INITS}, got {self.init!r}")


def stratified_folds(labels, k: int, seed: int = 0) -> list[np.ndarray]:
    """Split indices into k folds with per-fold class counts within 1 of even."""
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if k > min(n_pos, n_neg):
        raise ConfigError(
            f"cannot build {k} stratified folds from {n_pos} positives / {n_neg} negatives")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (1, 0):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for pos, i in enumerate(idx):
            folds[pos % k].append(int(i))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _init_genome(arch: Architecture, rng: np.random.Generator, kind: str) -> np.ndarray:
    if kind == "zeros":
        return np.zeros(genome_length(arch))
    parts = []
    sizes = arch.layer_sizes
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        r = math.sqrt(6.0 / (nin + nout))
        parts.append(rng.uniform(-r, r, nin * nout))
        parts.append(np.zeros(nout))
    return np.concatenate(parts)


def _unpack(genome: np.ndarray, sizes):
    ofs = 0
    layers = []
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        w = genome[ofs:ofs + nin * nout].reshape(nout, nin)
        ofs += nin * nout
        b = genome[ofs:ofs + nout]
        ofs += nout
        layers.append((w, b))
    return layers


def loss_and_grad(genome: np.ndarray, arch: Architecture, features: np.ndarray,
                  labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy (from logits, so it never overflows) and its
    gradient with respect to every weight and bias."""
    sizes = arch.layer_sizes
    layers = _unpack(genome, sizes)
    y = labels.astype(np.float64)
    n = features.shape[0]

    acts = [features]
    zs = []
    a = features
    for li, (w, b) in enumerate(layers):
        z = a @ w.T + b
        zs.append(z)
        if li < len(layers) - 1:
            a = np.where(z >= 0.0, z, arch.alpha * z)
            acts.append(a)
    z_out = zs[-1][:, 0]
    # softplus(z) - y*z == -[y log p + (1-y) log(1-p)] for p = sigmoid(z)
    loss = float(np.mean(np.maximum(z_out, 0.0)
                         + np.log1p(np.exp(-np.abs(z_out))) - y * z_out))

    p = np.empty_like(z_out)
    pos = z_out >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z_out[pos]))
    ez = np.exp(z_out[~pos])
    p[~pos] = ez / (1.0 + ez)
    dz = ((p - y) / n)[:, None]

    grads = [None] * len(layers)
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        a_in = acts[li]
        gw = dz.T @ a_in
        gb = dz.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            da = dz @ w
            dz = da * np.where(zs[li - 1] >= 0.0, 1.0, arch.alpha)
    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return loss, flat


def fit(features: np.ndarray, labels: np.ndarray, arch: Architecture,
        config: TrainConfig, rng: np.random.Generator) -> tuple[np.ndarray, list[float]]:
    """Full-batch gradient descent; returns the genome and per-epoch losses."""
    genome = _init_genome(arch, rng, config.init)
    history = []
    for epoch in range(config.epochs):
        loss, grad = loss_and_grad(genome, arch, features, labels)
        if not math.isfinite(loss):
            raise RunError(f"training diverged at epoch {epoch}")
        history.append(loss)
        genome = genome - config.learning_rate * grad
    return genome, history


def _accuracy(genome, arch: Architecture, features, labels) -> float:
    probs = probabilities(genome, arch.layer_sizes, features, arch.alpha)
    preds = probs > arch.threshold
    return float(np.mean(preds == (labels == 1)))


def train(dataset: Dataset, arch: Architecture,
          config: TrainConfig) -> tuple[np.ndarray, float]:
    """K-fold cross-validated accuracy plus a final genome fit on all data."""
    if arch.n_inputs != dataset.n_features:
        raise ConfigError(
            f"architecture expects {arch.n_inputs} inputs, dataset has "
            f"{dataset.n_features} features")
    folds = stratified_folds(dataset.labels, config.folds, config.seed)
    x, y = dataset.features, dataset.labels
    accs = []
    for f, held_out in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(dataset.n_cases), held_out)
        rng = np.random.default_rng([config.seed, f])
        genome, _ = fit(x[train_idx], y[train_idx], arch, config, rng)
        accs.append(_accuracy(genome, arch, x[held_out], y[held_out]))
    cv_accuracy = float(np.mean(accs))
    rng = np.random.default_rng([config.seed, config.folds])
    final_genome, _ = fit(x, y, arch, config, rng)
    return final_genome, cv_accuracy
