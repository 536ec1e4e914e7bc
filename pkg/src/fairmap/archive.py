"""2-D elite archive: a bins x bins grid over descriptor space.

Each cell keeps the single best-accuracy genome whose descriptors fall in
that cell. Out-of-range descriptors are clamped into the edge bins (and
counted, so reports can flag how often it happened) rather than discarded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, RunError

_ARCHIVE_MAGIC = "# fairmap-archive"

NEW_CELL = "new_cell"
IMPROVED = "improved"
REJECTED = "rejected"


@dataclass(frozen=True)
class GridSpec:
    bins: int = 30
    lo: float = 0.0
    hi: float = 2.0

    def __post_init__(self):
        if self.bins < 1:
            raise ConfigError(f"bins must be >= 1, got {self.bins}")
        if not self.lo < self.hi:
            raise ConfigError(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class InsertOutcome:
    kind: str                 # NEW_CELL | IMPROVED | REJECTED
    delta: float = 0.0        # accuracy gain, > 0 only for IMPROVED

    @property
    def improved_archive(self) -> bool:
        return self.kind != REJECTED


@dataclass
class Elite:
    genome: np.ndarray
    accuracy: float
    ratio_x: float
    ratio_y: float
    cell: tuple[int, int]

    @property
    def descriptors(self) -> tuple[float, float]:
        return (self.ratio_x, self.ratio_y)


def bin_index(descriptors, spec: GridSpec) -> tuple[int, int]:
    """Map a descriptor pair to grid coordinates, clamping out-of-range values."""
    out = []
    width = (spec.hi - spec.lo) / spec.bins
    for d in descriptors:
        d = float(d)
        if not math.isfinite(d):
            raise DataError(f"non-finite descriptor {d}")
        clamped = min(max(d, spec.lo), spec.hi)
        i = int(math.floor((clamped - spec.lo) / width))
        out.append(min(max(i, 0), spec.bins - 1))
    return (out[0], out[1])


def _deviation(rx: float, ry: float) -> float:
    return math.hypot(rx - 1.0, ry - 1.0)


class Archive:
    """Grid of elites plus run metadata (architecture, group names)."""

    def __init__(self, spec: GridSpec | None = None, meta: dict | None = None):
        self.spec = spec or GridSpec()
        self.meta = dict(meta or {})
        self.cells: dict[tuple[int, int], Elite] = {}
        self.clamped_inserts = 0

    def __len__(self) -> int:
        return len(self.cells)

    def elites(self) -> list[Elite]:
        """All elites in deterministic (cell-sorted) order."""
        return [self.cells[k] for k in sorted(self.cells)]

    def try_insert(self, genome, accuracy: float, descriptors) -> InsertOutcome:
        """Store the candidate if it opens or improves its cell."""
        rx, ry = float(descriptors[0]), float(descriptors[1])
        accuracy = float(accuracy)
        if not (math.isfinite(accuracy) and math.isfinite(rx) and math.isfinite(ry)):
            raise DataError("non-finite evaluation passed to archive")
        cell = bin_index((rx, ry), self.spec)
        incumbent = self.cells.get(cell)
        if incumbent is not None and accuracy <= incumbent.accuracy:
            return InsertOutcome(REJECTED)
        clamped = not (self.spec.lo <= rx <= self.spec.hi
                       and self.spec.lo <= ry <= self.spec.hi)
        if clamped:
            self.clamped_inserts += 1
        g = np.array(genome, dtype=np.float64, copy=True)
        g.setflags(write=False)
        self.cells[cell] = Elite(genome=g, accuracy=accuracy,
                                 ratio_x=rx, ratio_y=ry, cell=cell)
        if incumbent is None:
            return InsertOutcome(NEW_CELL)
        return InsertOutcome(IMPROVED, delta=accuracy - incumbent.accuracy)

    @staticmethod
    def _rank_key(e: Elite):
        # max accuracy; ties -> smaller deviation from (1,1), then lower cell
        return (e.accuracy, -_deviation(e.ratio_x, e.ratio_y),
                -e.cell[0], -e.cell[1])

    def best(self) -> Elite:
        if not self.cells:
            raise RunError("empty archive")
        return max(self.elites(), key=self._rank_key)

    def best_in_region(self, predicate) -> Elite | None:
        """Best elite whose descriptors satisfy ``predicate(rx, ry)``, or None."""
        eligible = [e for e in self.elites() if predicate(e.ratio_x, e.ratio_y)]
        if not eligible:
            return None
        return max(eligible, key=self._rank_key)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Archive):
            return NotImplemented
        if (self.spec != other.spec or self.meta != other.meta
                or self.clamped_inserts != other.clamped_inserts
                or sorted(self.cells) != sorted(other.cells)):
            return False
        for key, e in self.cells.items():
            o = other.cells[key]
            if (e.accuracy != o.accuracy or e.ratio_x != o.ratio_x
                    or e.ratio_y != o.ratio_y
                    or not np.array_equal(e.genome, o.genome)):
                return False
        return True

    def save(self, path) -> None:
        """Write the archive as CSV: metadata line, header, one row per elite."""
        parts = [f"bins={self.spec.bins}", f"lo={self.spec.lo!r}",
                 f"hi={self.spec.hi!r}", f"clamped={self.clamped_inserts}"]
        for key in ("layers", "alpha", "threshold", "names_x", "names_y"):
            if key in self.meta:
                parts.append(f"{key}={self.meta[key]}")
        genome_len = len(next(iter(self.cells.values())).genome) if self.cells else 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"{_ARCHIVE_MAGIC} {' '.join(parts)}\n")
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "ratio_x", "ratio_y", "accuracy"]
                            + [f"w{k}" for k in range(genome_len)])
            for e in self.elites():
                writer.writerow(
                    [str(e.cell[0]), str(e.cell[1]), repr(e.ratio_x),
                     repr(e.ratio_y), repr(e.accuracy)]
                    + [repr(float(v)) for v in e.genome])

    @classmethod
    def load(cls, path) -> "Archive":
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                meta_line = fh.readline()
                if not meta_line.startswith(_ARCHIVE_MAGIC):
                    raise DataError(f"{path}: line 1: not an archive file")
                kv = dict(p.split("=", 1) for p in meta_line.split()[2:] if "=" in p)
                try:
                    spec = GridSpec(bins=int(kv["bins"]), lo=float(kv["lo"]),
                                    hi=float(kv["hi"]))
                except (KeyError, ValueError) as exc:
                    raise DataError(f"{path}: line 1: bad grid metadata ({exc})") from None
                meta = {k: v for k, v in kv.items()
                        if k in ("layers", "alpha", "threshold", "names_x", "names_y")}
                arch = cls(spec, meta)
                arch.clamped_inserts = int(kv.get("clamped", 0))
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None or header[:5] != ["i", "j", "ratio_x", "ratio_y", "accuracy"]:
                    raise DataError(f"{path}: line 2: bad archive header")
                genome_len = len(header) - 5
                for lineno, row in enumerate(reader, start=3):
                    if not row:
                        continue
                    if len(row) != genome_len + 5:
                        raise DataError(
                            f"{path}: line {lineno}: expected {genome_len + 5} cells, "
                            f"got {len(row)}")
                    try:
                        i, j = int(row[0]), int(row[1])
                        rx, ry = float(row[2]), float(row[3])
                        acc = float(row[4])
                        genome = np.array([float(c) for c in row[5:]], dtype=np.float64)
                    except ValueError as exc:
                        raise DataError(f"{path}: line {lineno}: {exc}") from None
                    if (i, j) != bin_index((rx, ry), spec):
                        raise DataError(
                            f"{path}: line {lineno}: cell ({i},{j}) does not match "
                            f"descriptors ({rx}, {ry})")
                    if (i, j) in arch.cells:
                        raise DataError(f"{path}: line {lineno}: duplicate cell ({i},{j})")
                    genome.setflags(write=False)
                    arch.cells[(i, j)] = Elite(genome=genome, accuracy=acc,
                                               ratio_x=rx, ratio_y=ry, cell=(i, j))
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from None
        return arch
