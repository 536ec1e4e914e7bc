"""Feed-forward binary classifier whose weights come in as one flat vector.

The network is forward-only here: hidden layers use leaky ReLU, the single
output unit a logistic sigmoid, and a strict probability threshold turns the
sigmoid into a 0/1 prediction. Training lives elsewhere (gradient descent in
``baseline``, weight evolution in ``cmame``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

# Saturated sigmoids are clamped onto the open interval (0, 1).
PROB_MIN = float(np.finfo(np.float64).tiny)
PROB_MAX = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class Architecture:
    """Layer sizes [n_in, h1, ..., hk, 1] plus the fixed activation constants."""

    layer_sizes: tuple[int, ...]
    alpha: float = 0.01      # leaky-ReLU negative slope
    threshold: float = 0.5   # predict 1 iff probability > threshold (strict)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ConfigError("architecture needs at least input and output layers")
        if any(s < 1 for s in sizes):
            raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
        if sizes[-1] != 1:
            raise ConfigError(f"output layer must have size 1, got {sizes[-1]}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must be in (0, 1), got {self.threshold}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]


def genome_length(arch: Architecture) -> int:
    """Number of reals a flat weight vector must carry for ``arch``.

    Layout convention, fixed for all serialization: layer by layer, the
    (out x in) weight matrix in row-major order, then the out biases.
    """
    sizes = arch.layer_sizes
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def as_genome(values, arch: Architecture) -> np.ndarray:
    """Validate and return ``values`` as a float64 genome for ``arch``."""
    g = np.ascontiguousarray(np.asarray(values, dtype=np.float64).ravel())
    want = genome_length(arch)
    if g.size != want:
        raise DataError(f"genome has {g.size} values, architecture needs {want}")
    if not np.all(np.isfinite(g)):
        raise DataError("genome contains non-finite values")
    return g


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows; clamp keeps the open interval.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, PROB_MIN, PROB_MAX)


def probabilities(genome: np.ndarray, layer_sizes, features: np.ndarray,
                  alpha: float) -> np.ndarray:
    """Vectorized forward pass; returns the sigmoid output per row.

    ``genome`` and ``features`` are trusted here (hot path); use ``forward``
    for the validated entry point.
    """
    a = features
    ofs = 0
    last = len(layer_sizes) - 2
    for li in range(len(layer_sizes) - 1):
        nin, nout = layer_sizes[li], layer_sizes[li + 1]
        w = genome[ofs:ofs + nin * nout].reshape(nout, nin)
        ofs += nin * nout
        b = genome[ofs:ofs + nout]
        ofs += nout
        z = a @ w.T + b
        if li < last:
            a = np.where(z >= 0.0, z, alpha * z)
    return _sigmoid(z[:, 0])


def forward(genome, arch: Architecture, features) -> tuple[np.ndarray, np.ndarray]:
    """Run the classifier over all rows of ``features``.

    Returns (probabilities in (0,1), predictions in {0,1}); prediction is 1
    iff probability is strictly above the architecture threshold.
    """
    g = as_genome(genome, arch)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != arch.n_inputs:
        raise DataError(
            f"features must be (n, {arch.n_inputs}), got {x.shape}")
    probs = probabilities(g, arch.layer_sizes, x, arch.alpha)
    preds = (probs > arch.threshold).astype(np.int8)
    return probs, preds


def save_genome(path, genome) -> None:
    """Write a genome as one CSV row of full-precision decimal reals."""
    g = np.asarray(genome, dtype=np.float64).ravel()
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(repr(float(v)) for v in g)


def load_genome(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) != 1:
        raise DataError(f"{path}: expected exactly one CSV row, got {len(rows)}")
    try:
        return np.array([float(c) for c in rows[0]], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: bad genome value ({exc})") from None
