"""Scoring a weight vector on a dataset: accuracy plus two group-rate ratios.

The objective is plain accuracy over the whole dataset. The two descriptors
are ratios of positive-prediction rates between the groups of each protected
attribute; an epsilon in the denominator keeps them finite when a group gets
no positive predictions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, mlp
from .errors import ConfigError, DataError
from .ingest import Dataset
from .mlp import Architecture

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class Evaluation:
    """Result of scoring one genome: objective, descriptors and raw rates."""

    accuracy: float
    ratio_x: float
    ratio_y: float
    mean_xa: float
    mean_xb: float
    mean_ya: float
    mean_yb: float

    @property
    def descriptors(self) -> tuple[float, float]:
        return (self.ratio_x, self.ratio_y)


def evaluate(genome, arch: Architecture, dataset: Dataset,
             epsilon: float = DEFAULT_EPSILON, impl: str | None = None) -> Evaluation:
    """One fused forward pass over all cases; pure function of its inputs."""
    if epsilon <= 0.0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    g = mlp.as_genome(genome, arch)
    if dataset.n_features != arch.n_inputs:
        raise DataError(
            f"dataset has {dataset.n_features} features, architecture expects {arch.n_inputs}")
    sizes = np.asarray(arch.layer_sizes, dtype=np.int64)
    correct, pxa, pxb, pya, pyb = kernels.genome_counts(
        g, sizes, dataset.features, dataset.labels_pos,
        dataset.mask_xa, dataset.mask_xb, dataset.mask_ya, dataset.mask_yb,
        arch.alpha, arch.threshold, impl=impl)
    n = dataset.n_cases
    mean_xa = pxa / int(dataset.mask_xa.sum())
    mean_xb = pxb / int(dataset.mask_xb.sum())
    mean_ya = pya / int(dataset.mask_ya.sum())
    mean_yb = pyb / int(dataset.mask_yb.sum())
    return Evaluation(
        accuracy=correct / n,
        ratio_x=mean_xa / (mean_xb + epsilon),
        ratio_y=mean_ya / (mean_yb + epsilon),
        mean_xa=mean_xa, mean_xb=mean_xb, mean_ya=mean_ya, mean_yb=mean_yb,
    )


def evaluate_batch(genomes, arch: Architecture, dataset: Dataset,
                   epsilon: float = DEFAULT_EPSILON, workers: int = 1,
                   impl: str | None = None) -> list[Evaluation]:
    """Score a batch of genomes, preserving order.

    With ``workers > 1`` the evaluations fan out over a thread pool; every
    evaluation is independent, so results are identical for any worker count.
    """
    batch = [np.asarray(g, dtype=np.float64) for g in genomes]
    if workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(
                lambda g: evaluate(g, arch, dataset, epsilon, impl=impl), batch))
    return [evaluate(g, arch, dataset, epsilon, impl=impl) for g in batch]
