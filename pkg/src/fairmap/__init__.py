"""Map the accuracy/fairness trade-off of small binary classifiers.

Evolves the weights of a fixed feed-forward network with archive-driven
CMA-ES emitters; every candidate lands in a 2-D grid keyed by its two
group positive-rate ratios, each cell keeping the most accurate model seen.
The finished archive shows where accuracy lives in bias space and what the
best model satisfying the four-fifths rule costs relative to the best
model overall.
"""

__version__ = "0.1.0"

from .analysis import (FairZone, TradeoffReport, deviation, heatmap_export,
                       in_fair_zone, tradeoff, tradeoff_correlation)
from .archive import Archive, Elite, GridSpec, InsertOutcome, bin_index
from .baseline import TrainConfig, stratified_folds, train
from .cmame import Emitter, RunConfig, batch_size, init_emitters, run, search, select_emitter
from .errors import ConfigError, DataError, FairmapError, RunError
from .fitness import DEFAULT_EPSILON, Evaluation, evaluate, evaluate_batch
from .ingest import (Dataset, RawTable, SchemaSpec, encode, feature_count_check,
                     load_csv, load_dataset, load_schema, save_dataset)
from .kernels import active_backend
from .mlp import Architecture, forward, genome_length, load_genome, save_genome
from .sampler import (BUILTIN_SCENARIOS, SampleReport, ScenarioSpec,
                      StratifiedSpec, audit, build_scenario, load_scenario,
                      stratified_sample)
from .synth import adult_table, promotion_table

__all__ = [name for name in dir() if not name.startswith("_")]
