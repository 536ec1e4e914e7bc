"""Build bias scenarios by sampling a source dataset with target group rates.

A scenario fixes, for each of the four joint cells (attribute-X group x
attribute-Y group), how many cases to draw and which fraction of them must
be labeled positive. Sampling is without replacement and deterministic for
a given seed. ``stratified_sample`` instead reproduces the source's own
joint distribution at a smaller size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DataError
from .ingest import Dataset

CELL_KEYS = (("a", "a"), ("a", "b"), ("b", "a"), ("b", "b"))


@dataclass(frozen=True)
class CellTarget:
    count: int
    rate: float

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError(f"cell count must be >= 0, got {self.count}")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"cell rate must be in [0, 1], got {self.rate}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Per-cell targets; cells keyed by (x group, y group) in {a, b}^2."""

    name: str
    cells: dict
    seed: int = 0

    def __post_init__(self):
        cells = {k: v for k, v in self.cells.items()}
        for key in CELL_KEYS:
            if key not in cells:
                raise ConfigError(f"scenario {self.name!r}: missing cell {key}")
        if all(cells[k].count == 0 for k in CELL_KEYS):
            raise ConfigError(f"scenario {self.name!r}: all cells empty")
        object.__setattr__(self, "cells", cells)

    @property
    def total(self) -> int:
        return sum(self.cells[k].count for k in CELL_KEYS)


@dataclass(frozen=True)
class StratifiedSpec:
    """Proportional-to-source sampling at a fixed total size."""

    name: str
    total: int
    seed: int = 0


@dataclass(frozen=True)
class GroupStat:
    name: str
    cases: int
    positives: int

    @property
    def rate(self) -> float:
        return self.positives / self.cases if self.cases else 0.0

    @property
    def rate_2dp(self) -> str:
        """Exact half-up rounding of positives/cases to two decimals."""
        if self.cases == 0:
            return "-"
        q = (200 * self.positives + self.cases) // (2 * self.cases)
        return f"{q // 100}.{q % 100:02d}"


@dataclass(frozen=True)
class SampleReport:
    """Achieved counts and positive rates for All, X-A, X-B, Y-A, Y-B."""

    groups: tuple[GroupStat, ...]

    def __getitem__(self, name: str) -> GroupStat:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)

    def format_table(self) -> str:
        w = max(len(g.name) for g in self.groups)
        lines = [f"{'group':<{w}}  {'cases':>7}  {'positives':>9}  rate"]
        for g in self.groups:
            lines.append(f"{g.name:<{w}}  {g.cases:>7}  {g.positives:>9}  {g.rate_2dp}")
        return "\n".join(lines)

    def csv_rows(self) -> list[list[str]]:
        rows = [["group", "cases", "positives", "rate"]]
        for g in self.groups:
            rows.append([g.name, str(g.cases), str(g.positives), repr(g.rate)])
        return rows


def audit(dataset: Dataset) -> SampleReport:
    """Exact group counts and positive rates of a dataset."""
    y = dataset.labels

    def stat(name, mask=None):
        if mask is None:
            return GroupStat(name, dataset.n_cases, int(y.sum()))
        return GroupStat(name, int(mask.sum()), int(y[mask].sum()))

    return SampleReport(groups=(
        stat("all"),
        stat(dataset.name_xa, dataset.mask_xa),
        stat(dataset.name_xb, dataset.mask_xb),
        stat(dataset.name_ya, dataset.mask_ya),
        stat(dataset.name_yb, dataset.mask_yb),
    ))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _cell_masks(source: Dataset) -> dict:
    mx = {"a": source.mask_xa, "b": source.mask_xb}
    my = {"a": source.mask_ya, "b": source.mask_yb}
    return {(x, y): mx[x] & my[y] for x, y in CELL_KEYS}


def _cell_label(source: Dataset, key) -> str:
    nx = source.name_xa if key[0] == "a" else source.name_xb
    ny = source.name_ya if key[1] == "a" else source.name_yb
    return f"{nx}&{ny}"


def _draw(stratum: np.ndarray, k: int, rng: np.random.Generator,
          what: str) -> np.ndarray:
    if k > stratum.size:
        raise DataError(
            f"stratum exhausted: {what}: need {k}, have {stratum.size}")
    return rng.permutation(stratum)[:k]


def build_scenario(source: Dataset, spec: ScenarioSpec,
                   seed: int | None = None) -> tuple[Dataset, SampleReport]:
    """Draw the scenario's per-cell case counts and positive rates.

    Target positives per cell round half-up; sampling is without
    replacement; deterministic for a given seed (the spec's unless
    overridden).
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    masks = _cell_masks(source)
    pos = source.labels == 1
    picked = []
    for key in CELL_KEYS:
        target = spec.cells[key]
        if target.count == 0:
            continue
        n_pos = _round_half_up(target.count * target.rate)
        n_neg = target.count - n_pos
        cell = masks[key]
        label = _cell_label(source, key)
        picked.append(_draw(np.flatnonzero(cell & pos), n_pos, rng,
                            f"{label} positives"))
        picked.append(_draw(np.flatnonzero(cell & ~pos), n_neg, rng,
                            f"{label} negatives"))
    idx = rng.permutation(np.concatenate(picked))
    out = source.subset(idx)
    return out, audit(out)


def stratified_sample(source: Dataset, total: int,
                      seed: int = 0) -> tuple[Dataset, SampleReport]:
    """Sample ``total`` cases keeping each (cell, label) stratum proportional.

    Stratum quotas use largest-remainder rounding (exact rational
    arithmetic), so the sample size is hit exactly and each stratum is
    within one case of proportionality.
    """
    if total <= 0:
        raise ConfigError(f"total must be > 0, got {total}")
    if total > source.n_cases:
        raise ConfigError(
            f"total {total} exceeds source size {source.n_cases}")
    masks = _cell_masks(source)
    pos = source.labels == 1
    strata = []
    for key in CELL_KEYS:
        for want_pos in (True, False):
            sel = masks[key] & (pos if want_pos else ~pos)
            strata.append((key, want_pos, np.flatnonzero(sel)))
    n = source.n_cases
    quotas = [Fraction(total * s[2].size, n) for s in strata]
    base = [int(q) for q in quotas]
    shortfall = total - sum(base)
    order = sorted(range(len(strata)), key=lambda i: (quotas[i] - base[i]), reverse=True)
    for i in order[:shortfall]:
        base[i] += 1
    rng = np.random.default_rng(seed)
    picked = [_draw(s[2], k, rng, f"{_cell_label(source, s[0])} "
                    f"{'positives' if s[1] else 'negatives'}")
              for s, k in zip(strata, base)]
    idx = rng.permutation(np.concatenate(picked))
    out = source.subset(idx)
    return out, audit(out)


def _cells(counts_rates) -> dict:
    return {key: CellTarget(count=c, rate=r)
            for key, (c, r) in zip(CELL_KEYS, counts_rates)}


# Shipped scenario definitions. Cells are listed (x=a,y=a), (a,b), (b,a),
# (b,b); for the promotion schema group a of X is female and group a of Y is
# young, so e.g. male-favoring rates sit on the (b, *) cells.
BUILTIN_SCENARIOS: dict = {
    "unbiased": ScenarioSpec(
        name="unbiased", seed=101,
        cells=_cells([(1432, 0.50)] * 4)),
    "male_biased": ScenarioSpec(
        name="male_biased", seed=102,
        cells=_cells([(1096, 0.35), (1096, 0.35), (1096, 0.65), (1096, 0.65)])),
    "higher_male_sample": ScenarioSpec(
        name="higher_male_sample", seed=103,
        cells=_cells([(1096, 0.35), (1096, 0.35), (2192, 0.67), (2192, 0.67)])),
    "cross_biased": ScenarioSpec(
        name="cross_biased", seed=104,
        cells=_cells([(1127, 0.33), (1127, 0.67), (1127, 0.67), (1127, 0.33)])),
    "adult_unbiased": ScenarioSpec(
        name="adult_unbiased", seed=105,
        cells=_cells([(420, 0.50)] * 4)),
    "adult_stratified": StratifiedSpec(
        name="adult_stratified", total=13565, seed=106),
}


def scenario_from_dict(cfg: dict):
    name = cfg.get("name", "scenario")
    seed = int(cfg.get("seed", 0))
    if "stratified" in cfg:
        return StratifiedSpec(name=name, total=int(cfg["stratified"]["total"]),
                              seed=seed)
    try:
        cells = {}
        for key_txt, target in cfg["cells"].items():
            x, y = key_txt.split(".")
            cells[(x, y)] = CellTarget(count=int(target["count"]),
                                       rate=float(target["rate"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad scenario config: {exc}") from None
    return ScenarioSpec(name=name, cells=cells, seed=seed)


def load_scenario(name_or_path):
    """Resolve a built-in scenario name or read a scenario JSON file."""
    key = str(name_or_path)
    if key in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[key]
    try:
        with open(key, encoding="utf-8") as fh:
            return scenario_from_dict(json.load(fh))
    except OSError:
        known = ", ".join(sorted(BUILTIN_SCENARIOS))
        raise ConfigError(
            f"unknown scenario {key!r}: not a readable file and not one of: {known}"
        ) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{key}: not valid JSON ({exc})") from None


def apply_scenario(source: Dataset, spec, seed: int | None = None):
    """Dispatch a scenario spec of either kind against a source dataset."""
    if isinstance(spec, StratifiedSpec):
        return stratified_sample(source, spec.total,
                                 spec.seed if seed is None else seed)
    return build_scenario(source, spec, seed=seed)
