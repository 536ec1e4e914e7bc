"""Fair-zone predicate, trade-off reports, heatmap export, correlation.

The fair zone is the square of descriptor space where both group ratios stay
within [lower, upper]; the defaults 0.8 and 1.25 = 1/0.8 accept exactly the
models that satisfy the four-fifths selection-rate rule in either direction.
Deviation measures bias as the Euclidean distance of a model's descriptor
pair from (1,1), the point of equal positive rates on both attributes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .archive import Archive
from .errors import ConfigError, DataError, RunError


@dataclass(frozen=True)
class FairZone:
    lower: float = 0.8
    upper: float = 1.25

    def __post_init__(self):
        if not 0.0 < self.lower <= 1.0 <= self.upper:
            raise ConfigError(
                f"fair zone needs 0 < lower <= 1 <= upper, got [{self.lower}, {self.upper}]")


def deviation(ratio_x: float, ratio_y: float) -> float:
    """Euclidean distance of a descriptor pair from (1, 1)."""
    return math.hypot(ratio_x - 1.0, ratio_y - 1.0)


def in_fair_zone(ratio_x: float, ratio_y: float, zone: FairZone = FairZone()) -> bool:
    """Both ratios within the zone bounds, inclusive on both edges."""
    return (zone.lower <= ratio_x <= zone.upper
            and zone.lower <= ratio_y <= zone.upper)


@dataclass(frozen=True)
class ModelPoint:
    accuracy: float
    ratio_x: float
    ratio_y: float

    @property
    def deviation(self) -> float:
        return deviation(self.ratio_x, self.ratio_y)


@dataclass(frozen=True)
class TradeoffReport:
    """Best model vs best model inside the fair zone (if any)."""

    best: ModelPoint
    best_fair: ModelPoint | None
    zone: FairZone
    clamped_inserts: int = 0

    @property
    def accuracy_gap(self) -> float | None:
        if self.best_fair is None:
            return None
        return self.best.accuracy - self.best_fair.accuracy

    @property
    def deviation_reduction(self) -> float | None:
        if self.best_fair is None:
            return None
        return self.best.deviation - self.best_fair.deviation


def tradeoff(arch: Archive, zone: FairZone = FairZone()) -> TradeoffReport:
    """Compare the overall best elite with the best fair-zone elite."""
    best = arch.best()  # raises RunError when empty
    fair = arch.best_in_region(lambda rx, ry: in_fair_zone(rx, ry, zone))
    to_point = lambda e: ModelPoint(e.accuracy, e.ratio_x, e.ratio_y)
    return TradeoffReport(
        best=to_point(best),
        best_fair=to_point(fair) if fair is not None else None,
        zone=zone,
        clamped_inserts=arch.clamped_inserts,
    )


def format_tradeoff(report: TradeoffReport, name_x: str = "ratio_x",
                    name_y: str = "ratio_y") -> str:
    """Aligned text table in the best/best-fair layout."""
    rows = [("", "best model", "best fair")]
    fair = report.best_fair

    def cell(v):
        return f"{v:.4f}" if v is not None else "-"

    rows.append(("accuracy", cell(report.best.accuracy),
                 cell(fair.accuracy if fair else None)))
    rows.append((name_x, cell(report.best.ratio_x),
                 cell(fair.ratio_x if fair else None)))
    rows.append((name_y, cell(report.best.ratio_y),
                 cell(fair.ratio_y if fair else None)))
    rows.append(("deviation", cell(report.best.deviation),
                 cell(fair.deviation if fair else None)))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    w2 = max(len(r[2]) for r in rows)
    lines = [f"{a:<{w0}}  {b:>{w1}}  {c:>{w2}}" for a, b, c in rows]
    if fair is None:
        lines.append(f"no elite inside fair zone [{report.zone.lower}, {report.zone.upper}]")
    else:
        lines.append(f"accuracy gap         {report.accuracy_gap:.4f}")
        lines.append(f"deviation reduction  {report.deviation_reduction:.4f}")
    if report.clamped_inserts:
        lines.append(f"note: {report.clamped_inserts} stored elites had descriptors "
                     "clamped into edge bins")
    return "\n".join(lines)


def write_tradeoff_csv(report: TradeoffReport, path) -> None:
    fair = report.best_fair
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "best", "best_fair"])
        rows = [
            ("accuracy", report.best.accuracy, fair.accuracy if fair else None),
            ("ratio_x", report.best.ratio_x, fair.ratio_x if fair else None),
            ("ratio_y", report.best.ratio_y, fair.ratio_y if fair else None),
            ("deviation", report.best.deviation, fair.deviation if fair else None),
            ("accuracy_gap", report.accuracy_gap, None),
            ("deviation_reduction", report.deviation_reduction, None),
            ("clamped_inserts", report.clamped_inserts, None),
        ]
        for name, a, b in rows:
            writer.writerow([name,
                             "" if a is None else repr(float(a)),
                             "" if b is None else repr(float(b))])


def read_tradeoff_csv(path) -> TradeoffReport:
    """Rebuild a report from ``write_tradeoff_csv`` output (for correlation)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = {r[0]: r[1:] for r in csv.reader(fh) if r}
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    try:
        best = ModelPoint(float(rows["accuracy"][0]), float(rows["ratio_x"][0]),
                          float(rows["ratio_y"][0]))
        fair = None
        if rows["accuracy"][1] != "":
            fair = ModelPoint(float(rows["accuracy"][1]), float(rows["ratio_x"][1]),
                              float(rows["ratio_y"][1]))
        clamped = int(float(rows.get("clamped_inserts", ["0"])[0] or 0))
    except (KeyError, ValueError, IndexError) as exc:
        raise DataError(f"{path}: not a trade-off report CSV ({exc})") from None
    return TradeoffReport(best=best, best_fair=fair, zone=FairZone(),
                          clamped_inserts=clamped)


def tradeoff_correlation(reports: list[TradeoffReport]) -> float:
    """Pearson correlation of accuracy gap vs deviation reduction."""
    pairs = [(r.accuracy_gap, r.deviation_reduction)
             for r in reports if r.best_fair is not None]
    if len(pairs) < 2:
        raise DataError(f"need at least 2 reports with a fair-zone model, got {len(pairs)}")
    gaps = np.array([p[0] for p in pairs])
    reds = np.array([p[1] for p in pairs])
    if np.ptp(gaps) == 0.0 or np.ptp(reds) == 0.0:
        raise DataError("zero variance in trade-off pairs")
    return float(np.corrcoef(gaps, reds)[0, 1])


# Heatmap rendering: a monotone two-color ramp, dark slate at accuracy 0 up
# to bright yellow at 1; unfilled cells near-black; zone outline in red.
_RAMP_LO = (40, 26, 64)
_RAMP_HI = (250, 230, 85)
_EMPTY_RGB = (18, 18, 18)
_ZONE_RGB = (255, 80, 80)
_CELL_PX = 16


def heatmap_grid(arch: Archive) -> list[list[float | None]]:
    """bins x bins accuracy grid; grid[i][j] = cell (ratio_y bin i, ratio_x bin j)."""
    b = arch.spec.bins
    grid: list[list[float | None]] = [[None] * b for _ in range(b)]
    for e in arch.elites():
        xb, yb = e.cell
        grid[yb][xb] = e.accuracy
    return grid


def heatmap_export(arch: Archive, prefix, zone: FairZone = FairZone()) -> tuple[str, str]:
    """Write ``<prefix>.csv`` (accuracy matrix) and ``<prefix>.ppm`` (rendering).

    CSV rows run over ratio_y bins ascending, columns over ratio_x bins;
    empty cells stay empty. The PPM puts high ratio_y at the top and draws
    the fair-zone rectangle.
    """
    grid = heatmap_grid(arch)
    csv_path = f"{prefix}.csv"
    ppm_path = f"{prefix}.ppm"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in grid:
            writer.writerow(["" if v is None else repr(v) for v in row])
    _write_ppm(arch, grid, ppm_path, zone)
    return csv_path, ppm_path


def _ramp(a: float) -> tuple[int, int, int]:
    a = min(max(a, 0.0), 1.0)
    return tuple(int(round(lo + a * (hi - lo)))
                 for lo, hi in zip(_RAMP_LO, _RAMP_HI))


def _write_ppm(arch: Archive, grid, path, zone: FairZone) -> None:
    b = arch.spec.bins
    size = b * _CELL_PX
    img = np.zeros((size, size, 3), dtype=np.uint8)
    img[:, :] = _EMPTY_RGB
    for i in range(b):          # ratio_y bin
        for j in range(b):      # ratio_x bin
            v = grid[i][j]
            if v is None:
                continue
            r0 = size - (i + 1) * _CELL_PX   # y ascends upward in the image
            c0 = j * _CELL_PX
            img[r0:r0 + _CELL_PX, c0:c0 + _CELL_PX] = _ramp(v)

    span = arch.spec.hi - arch.spec.lo
    to_px = lambda v: int(round((min(max(v, arch.spec.lo), arch.spec.hi)
                                 - arch.spec.lo) / span * size))
    x0, x1 = to_px(zone.lower), to_px(zone.upper)
    y0, y1 = size - to_px(zone.upper), size - to_px(zone.lower)
    x0, x1 = max(x0, 0), min(x1, size - 1)
    y0, y1 = max(y0, 0), min(y1, size - 1)
    img[y0:y0 + 2, x0:x1 + 1] = _ZONE_RGB
    img[max(y1 - 1, 0):y1 + 1, x0:x1 + 1] = _ZONE_RGB
    img[y0:y1 + 1, x0:x0 + 2] = _ZONE_RGB
    img[y0:y1 + 1, max(x1 - 1, 0):x1 + 1] = _ZONE_RGB

    with open(path, "wb") as fh:
        fh.write(f"P6\n{size} {size}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
