"""Synthetic stand-ins for the promotion and census source tables.

The original tables are not bundled, so these generators produce raw CSVs
with the same shape: a label column, a handful of numeric and categorical
feature columns (encoding to 14 and 55 features under the shipped schemas),
and two protected attributes per table. Labels are assigned by ranking a
noisy latent score inside each joint demographic cell, so the per-cell
positive counts are hit exactly while the features stay predictive.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ConfigError
from .ingest import RawTable

PROMOTION_SCHEMA = {
    "label": {"column": "promoted", "positive": "1"},
    "numeric": ["age", "tenure", "training_score", "rating"],
    "categorical": ["department", "education", "gender"],
    "protected_x": {"column": "gender", "equals": "f",
                    "name_a": "female", "name_b": "male"},
    "protected_y": {"column": "age", "threshold": True,
                    "name_a": "young", "name_b": "old"},
    "age_threshold": 34,
}

ADULT_SCHEMA = {
    "label": {"column": "income", "positive": ">50K"},
    "numeric": ["age", "education_num", "hours_per_week", "capital_gain",
                "capital_loss", "fnlwgt"],
    "categorical": ["workclass", "education", "marital_status", "occupation",
                    "race", "sex"],
    "protected_x": {"column": "sex", "equals": "f",
                    "name_a": "female", "name_b": "male"},
    "protected_y": {"column": "race", "equals": "white",
                    "name_a": "white", "name_b": "other"},
    "age_threshold": 34,
}

_DEPARTMENTS = ("analytics", "hr", "operations", "sales", "technology")
_DEPT_EFFECT = {"analytics": 0.15, "hr": -0.2, "operations": -0.05,
                "sales": 0.0, "technology": 0.1}
_EDUCATION3 = ("bachelors", "masters", "secondary")
_EDU3_EFFECT = {"bachelors": 0.0, "masters": 0.15, "secondary": -0.15}

_WORKCLASS = ("federal", "local", "private", "self_inc", "self_not_inc",
              "state", "unemployed")
_EDUCATION16 = ("preschool", "grade_1_4", "grade_5_6", "grade_7_8", "grade_9",
                "grade_10", "grade_11", "grade_12", "hs_grad", "some_college",
                "assoc_voc", "assoc_acdm", "bachelors", "masters",
                "prof_school", "doctorate")
_MARITAL = ("divorced", "married", "never_married", "separated", "widowed")
_OCCUPATION = ("admin", "armed_forces", "craft_repair", "exec_managerial",
               "farming_fishing", "handlers_cleaners", "machine_op",
               "other_service", "priv_house_serv", "prof_specialty",
               "protective_serv", "sales", "tech_support", "transport_moving")
_OCC_EFFECT = (0.0, 0.1, 0.0, 0.4, -0.25, -0.3, -0.15, -0.3, -0.3, 0.35,
               0.1, 0.1, 0.2, -0.1)
_RACES_OTHER = ("amer_indian", "asian_pac", "black", "other")

# Joint (sex, race) cell weights mirroring the census table's composition:
# white-male, other-male, white-female, other-female, with per-cell positive
# rates that reproduce its published subgroup income rates while keeping
# every cell rich enough for the balanced 420-cases-per-cell scenario.
_ADULT_CELLS = (("m", True, 28985, 0.3234), ("m", False, 4227, 0.208),
                ("f", True, 13020, 0.119), ("f", False, 2610, 0.0824))
_ADULT_BASE_TOTAL = 48842


def _label_by_cell_rank(score: np.ndarray, cell_masks, rates) -> np.ndarray:
    """Within each cell, label the top round(rate * size) scores positive."""
    labels = np.zeros(score.size, dtype=np.int8)
    for mask, rate in zip(cell_masks, rates):
        idx = np.flatnonzero(mask)
        n_pos = int(np.floor(rate * idx.size + 0.5))
        top = idx[np.argsort(-score[idx], kind="stable")[:n_pos]]
        labels[top] = 1
    return labels


def promotion_table(n_rows: int = 54808, seed: int = 11,
                    noise: float = 2.6) -> RawTable:
    """Promotion-style table: 14 encoded features under PROMOTION_SCHEMA."""
    if n_rows < 100:
        raise ConfigError("promotion table needs at least 100 rows")
    rng = np.random.default_rng(seed)
    gender_f = rng.integers(0, 2, n_rows).astype(bool)
    age = rng.integers(20, 60, n_rows)
    tenure = rng.integers(1, 21, n_rows)
    training = rng.integers(40, 100, n_rows)
    rating = rng.integers(1, 6, n_rows)
    dept = rng.choice(len(_DEPARTMENTS), n_rows,
                      p=[0.15, 0.10, 0.30, 0.30, 0.15])
    edu = rng.choice(len(_EDUCATION3), n_rows, p=[0.45, 0.25, 0.30])

    score = (1.1 * (training - 69.5) / 17.32
             + 0.6 * (rating - 3.0) / 1.414
             + 0.35 * (tenure - 10.5) / 5.766
             + np.array([_DEPT_EFFECT[_DEPARTMENTS[d]] for d in dept])
             + np.array([_EDU3_EFFECT[_EDUCATION3[e]] for e in edu])
             + noise * rng.standard_normal(n_rows))

    young = age <= 34
    cells = [gender_f & young, gender_f & ~young, ~gender_f & young,
             ~gender_f & ~young]
    labels = _label_by_cell_rank(score, cells, [0.45, 0.45, 0.55, 0.55])

    rows = []
    for i in range(n_rows):
        rows.append((
            _DEPARTMENTS[dept[i]], _EDUCATION3[edu[i]],
            "f" if gender_f[i] else "m", str(age[i]), str(tenure[i]),
            str(training[i]), str(rating[i]), str(labels[i]),
        ))
    return RawTable(
        column_names=("department", "education", "gender", "age", "tenure",
                      "training_score", "rating", "promoted"),
        rows=tuple(rows))


def adult_table(n_rows: int = _ADULT_BASE_TOTAL, seed: int = 13,
                noise: float = 0.75) -> RawTable:
    """Census-style table: 55 encoded features under ADULT_SCHEMA."""
    if n_rows < 400:
        raise ConfigError("adult table needs at least 400 rows")
    rng = np.random.default_rng(seed)
    # proportional cell sizes, largest remainder on the base composition
    raw = [n_rows * c / _ADULT_BASE_TOTAL for _, _, c, _ in _ADULT_CELLS]
    sizes = [int(np.floor(v)) for v in raw]
    order = sorted(range(4), key=lambda i: raw[i] - sizes[i], reverse=True)
    for i in order[: n_rows - sum(sizes)]:
        sizes[i] += 1

    sex = []
    white = []
    for (s, w, _, _), k in zip(_ADULT_CELLS, sizes):
        sex.extend([s] * k)
        white.extend([w] * k)
    sex = np.array(sex)
    white = np.array(white, dtype=bool)
    perm = rng.permutation(n_rows)
    sex, white = sex[perm], white[perm]

    age = rng.integers(17, 81, n_rows)
    hours = rng.integers(20, 81, n_rows)
    edu_p = np.array([0.005, 0.01, 0.01, 0.02, 0.02, 0.03, 0.04, 0.015, 0.32,
                      0.22, 0.05, 0.03, 0.16, 0.05, 0.01, 0.01])
    edu = rng.choice(16, n_rows, p=edu_p / edu_p.sum())
    edu_num = edu + 1
    workclass = rng.choice(len(_WORKCLASS), n_rows,
                           p=[0.03, 0.06, 0.70, 0.04, 0.08, 0.04, 0.05])
    marital = rng.choice(len(_MARITAL), n_rows,
                         p=[0.14, 0.46, 0.32, 0.03, 0.05])
    occ_p = np.array([0.125, 0.004, 0.13, 0.13, 0.03, 0.045, 0.065, 0.105,
                      0.005, 0.13, 0.021, 0.115, 0.03, 0.065])
    occupation = rng.choice(len(_OCCUPATION), n_rows, p=occ_p / occ_p.sum())
    has_gain = rng.random(n_rows) < 0.10
    capital_gain = np.where(
        has_gain, np.exp(rng.normal(8.3, 0.9, n_rows)).astype(np.int64), 0)
    has_loss = rng.random(n_rows) < 0.05
    capital_loss = np.where(
        has_loss, rng.normal(1900.0, 300.0, n_rows).astype(np.int64), 0)
    fnlwgt = rng.integers(12000, 500001, n_rows)
    race = np.where(white, "white",
                    rng.choice(_RACES_OTHER, n_rows))

    score = (1.2 * (edu_num - 8.5) / 4.61
             + 0.7 * (hours - 50.0) / 17.58
             + 0.3 * (age - 48.5) / 18.47
             + 1.2 * has_gain
             + np.array([_OCC_EFFECT[o] for o in occupation])
             + noise * rng.standard_normal(n_rows))

    cells = []
    rates = []
    for s, w, _, rate in _ADULT_CELLS:
        cells.append((sex == s) & (white == w))
        rates.append(rate)
    labels = _label_by_cell_rank(score, cells, rates)

    rows = []
    for i in range(n_rows):
        rows.append((
            str(age[i]), _WORKCLASS[workclass[i]], _EDUCATION16[edu[i]],
            str(edu_num[i]), _MARITAL[marital[i]], _OCCUPATION[occupation[i]],
            str(race[i]), sex[i], str(hours[i]), str(capital_gain[i]),
            str(capital_loss[i]), str(fnlwgt[i]),
            ">50K" if labels[i] else "<=50K",
        ))
    return RawTable(
        column_names=("age", "workclass", "education", "education_num",
                      "marital_status", "occupation", "race", "sex",
                      "hours_per_week", "capital_gain", "capital_loss",
                      "fnlwgt", "income"),
        rows=tuple(rows))


def write_table_csv(table: RawTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.column_names)
        writer.writerows(table.rows)


GENERATORS = {"promotion": promotion_table, "adult": adult_table}
