"""Archive-driven evolution strategy: CMA-ES emitters ranked by archive gain.

A small population of emitters takes turns generating candidate batches.
Each candidate is scored, offered to the archive, and the batch is then
ranked by what it did for the archive: candidates that opened a new cell
rank first (by objective), then candidates that improved their cell (by the
size of the improvement), then everything else (by objective). The top half
recombines into the usual CMA-ES mean/step-size/covariance update, so the
emitter is pulled toward regions that keep paying off. Emitters that stall
restart from a random elite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .archive import Archive, GridSpec, IMPROVED, NEW_CELL
from .errors import ConfigError, DataError
from .fitness import DEFAULT_EPSILON, evaluate_batch
from .ingest import Dataset
from .mlp import Architecture, genome_length

_COND_LIMIT = 1e14


def batch_size(dim: int) -> int:
    """Default population size per generation for an emitter."""
    return 4 + int(math.floor(3.0 * math.log(dim)))


@dataclass
class RunConfig:
    """Everything a search run needs besides the dataset itself."""

    n_evaluations: int = 100_000
    emitter_count: int = 5
    sigma0: float = 0.5
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    arch: Architecture | None = None
    epsilon: float = DEFAULT_EPSILON
    patience: int = 5            # stale batches before an emitter restarts
    sigma_max_factor: float = 1e6
    workers: int = 1

    def __post_init__(self):
        if self.emitter_count < 1:
            raise ConfigError(f"emitter_count must be >= 1, got {self.emitter_count}")
        if self.sigma0 <= 0:
            raise ConfigError(f"sigma0 must be > 0, got {self.sigma0}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


class _FactorizationError(Exception):
    pass


class Emitter:
    """One CMA-ES instance: mean, step size, covariance and evolution paths."""

    def __init__(self, dim: int, sigma0: float, patience: int = 5,
                 sigma_max_factor: float = 1e6, lam: int | None = None):
        self.dim = dim
        self.sigma0 = float(sigma0)
        self.sigma_max = sigma_max_factor * self.sigma0
        self.patience = patience
        self.lam = lam if lam is not None else batch_size(dim)
        self.mu = self.lam // 2
        # log-rank recombination weights over the top mu, summing to 1
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = float(1.0 / (self.weights @ self.weights))
        n = float(dim)
        self.cc = (4.0 + self.mueff / n) / (n + 4.0 + 2.0 * self.mueff / n)
        self.cs = (self.mueff + 2.0) / (n + self.mueff + 5.0)
        self.c1 = 2.0 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1.0 - self.c1,
                       2.0 * (self.mueff - 2.0 + 1.0 / self.mueff)
                       / ((n + 2.0) ** 2 + self.mueff))
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((self.mueff - 1.0) / (n + 1.0)) - 1.0) + self.cs
        self.chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
        # refresh the eigendecomposition about this often (in evaluations)
        self.decomp_gap = 0.5 * self.lam / ((self.c1 + self.cmu) * n)
        self.generation = 0
        self.solutions_generated = 0
        self._reset_state(np.zeros(dim))

    def _reset_state(self, mean: np.ndarray) -> None:
        self.mean = np.array(mean, dtype=np.float64, copy=True)
        self.sigma = self.sigma0
        self.C = np.eye(self.dim)
        self.p_sigma = np.zeros(self.dim)
        self.p_c = np.zeros(self.dim)
        self._eigen_basis = np.eye(self.dim)
        self._eigen_sqrt = np.ones(self.dim)
        self._evals_at_decomp = self.solutions_generated
        self._cov_dirty = False
        self.stale_batches = 0

    def restart(self, archive: Archive, rng: np.random.Generator) -> None:
        """Re-seed at a uniformly random elite (or the origin if none)."""
        elites = archive.elites()
        if elites:
            mean = elites[rng.integers(len(elites))].genome
        else:
            mean = np.zeros(self.dim)
        self._reset_state(mean)

    def _decompose(self) -> None:
        vals, vecs = np.linalg.eigh(self.C)
        if (not np.all(np.isfinite(vals)) or vals[0] <= 0.0
                or vals[-1] / vals[0] > _COND_LIMIT):
            raise _FactorizationError
        self._eigen_basis = vecs
        self._eigen_sqrt = np.sqrt(vals)
        self._evals_at_decomp = self.solutions_generated
        self._cov_dirty = False

    def _refresh_factorization(self, archive: Archive, rng: np.random.Generator) -> None:
        if not self._cov_dirty:
            return
        if self.solutions_generated - self._evals_at_decomp < self.decomp_gap:
            return
        try:
            self._decompose()
        except _FactorizationError:
            self.restart(archive, rng)

    def ask(self, rng: np.random.Generator, count: int | None = None,
            archive: Archive | None = None) -> np.ndarray:
        """Sample ``count`` (default lam) candidates around the current mean."""
        k = self.lam if count is None else count
        if archive is not None:
            self._refresh_factorization(archive, rng)
        z = rng.standard_normal((k, self.dim))
        candidates = self.mean + self.sigma * ((z * self._eigen_sqrt)
                                               @ self._eigen_basis.T)
        self.solutions_generated += k
        return candidates

    def _rank(self, objectives, outcomes) -> list[int]:
        def key(i):
            oc = outcomes[i]
            if oc.kind == NEW_CELL:
                return (0, -objectives[i])
            if oc.kind == IMPROVED:
                return (1, -oc.delta)
            return (2, -objectives[i])

        return sorted(range(len(outcomes)), key=key)

    def tell(self, candidates: np.ndarray, objectives, outcomes,
             archive: Archive, rng: np.random.Generator) -> None:
        """Fold one evaluated batch back into the emitter state."""
        n = len(candidates)
        if len(objectives) != n or len(outcomes) != n:
            raise DataError("candidate/outcome count mismatch")
        self.generation += 1
        if any(oc.improved_archive for oc in outcomes):
            self.stale_batches = 0
        else:
            self.stale_batches += 1
            if self.stale_batches >= self.patience:
                self.restart(archive, rng)
                return
        if n < self.lam:
            # truncated final batch: archive already updated, no CMA update
            return

        order = self._rank(objectives, outcomes)
        sel = np.asarray(candidates)[order[: self.mu]]
        xold = self.mean
        self.mean = self.weights @ sel
        delta = (self.mean - xold) / self.sigma

        # cumulative step-size adaptation path (whitened by C^-1/2)
        basis, sqrts = self._eigen_basis, self._eigen_sqrt
        whitened = basis @ ((basis.T @ delta) / sqrts)
        self.p_sigma = ((1.0 - self.cs) * self.p_sigma
                        + math.sqrt(self.cs * (2.0 - self.cs) * self.mueff) * whitened)
        ps_sq = float(self.p_sigma @ self.p_sigma)
        h_sig = (ps_sq / self.dim
                 / (1.0 - (1.0 - self.cs) ** (2.0 * self.solutions_generated / self.lam))
                 < 2.0 + 4.0 / (self.dim + 1.0))
        self.p_c = ((1.0 - self.cc) * self.p_c
                    + h_sig * math.sqrt(self.cc * (2.0 - self.cc) * self.mueff) * delta)

        # covariance: rank-one on p_c plus rank-mu on the selected steps
        c1a = self.c1 * (1.0 - (1.0 - h_sig ** 2) * self.cc * (2.0 - self.cc))
        steps = (sel - xold) / self.sigma
        self.C *= 1.0 - c1a - self.cmu
        self.C += self.c1 * np.outer(self.p_c, self.p_c)
        self.C += self.cmu * (steps.T @ (self.weights[:, None] * steps))
        self.C = (self.C + self.C.T) / 2.0
        self._cov_dirty = True

        self.sigma *= math.exp(min(
            1.0, (self.cs / self.damps) * (math.sqrt(ps_sq) / self.chi_n - 1.0)))
        if (not math.isfinite(self.sigma) or self.sigma <= 0.0
                or self.sigma > self.sigma_max
                or not np.all(np.isfinite(self.mean))):
            self.restart(archive, rng)


def init_emitters(config: RunConfig, dim: int) -> list[Emitter]:
    return [Emitter(dim, config.sigma0, config.patience, config.sigma_max_factor)
            for _ in range(config.emitter_count)]


def select_emitter(emitters: list[Emitter]) -> Emitter:
    """The emitter that has generated the fewest solutions; ties -> lowest index."""
    if not emitters:
        raise ConfigError("no emitters")
    best = emitters[0]
    for em in emitters[1:]:
        if em.solutions_generated < best.solutions_generated:
            best = em
    return best


def search(dim: int, eval_batch_fn, config: RunConfig, meta: dict | None = None,
           log=None) -> Archive:
    """Generic search loop over any batch evaluator.

    ``eval_batch_fn`` maps an (k, dim) candidate array to a list of
    (objective, descriptor_1, descriptor_2) triples in candidate order.
    Fully deterministic for a fixed config regardless of evaluation
    parallelism: candidates are generated and inserted sequentially.
    """
    rng = np.random.default_rng(config.seed)
    lam = batch_size(dim)
    if config.n_evaluations < lam:
        raise ConfigError(f"evals must be >= batch size ({lam})")
    emitters = init_emitters(config, dim)
    arch = Archive(config.grid, meta)
    done = 0
    generation = 0
    while done < config.n_evaluations:
        em = select_emitter(emitters)
        k = min(em.lam, config.n_evaluations - done)
        candidates = em.ask(rng, k, arch)
        results = eval_batch_fn(candidates)
        if len(results) != k:
            raise DataError(f"evaluator returned {len(results)} results for {k} candidates")
        objectives = []
        outcomes = []
        for cand, (obj, d1, d2) in zip(candidates, results):
            objectives.append(float(obj))
            outcomes.append(arch.try_insert(cand, obj, (d1, d2)))
        em.tell(candidates, objectives, outcomes, arch, rng)
        done += k
        generation += 1
        if log is not None:
            best = arch.best()
            log(f"gen={generation} evals={done} archive={len(arch)} "
                f"best={best.accuracy:.4f}")
    return arch


def run(config: RunConfig, dataset: Dataset, log=None) -> Archive:
    """Search classifier weight space for one dataset; returns the archive."""
    if config.arch is None:
        raise ConfigError("run needs an architecture")
    if config.arch.n_inputs != dataset.n_features:
        raise ConfigError(
            f"architecture expects {config.arch.n_inputs} inputs, dataset has "
            f"{dataset.n_features} features")
    dim = genome_length(config.arch)
    meta = {
        "layers": ",".join(str(s) for s in config.arch.layer_sizes),
        "alpha": repr(config.arch.alpha),
        "threshold": repr(config.arch.threshold),
        "names_x": f"{dataset.name_xa}/{dataset.name_xb}",
        "names_y": f"{dataset.name_ya}/{dataset.name_yb}",
    }

    def eval_batch_fn(candidates):
        evals = evaluate_batch(candidates, config.arch, dataset,
                               epsilon=config.epsilon, workers=config.workers)
        return [(e.accuracy, e.ratio_x, e.ratio_y) for e in evals]

    return search(dim, eval_batch_fn, config, meta=meta, log=log)
