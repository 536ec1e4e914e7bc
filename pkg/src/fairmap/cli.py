"""Command-line pipeline: synth | sample | run | report | heatmap | baseline | correlate.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import __version__
from .analysis import (FairZone, format_tradeoff, heatmap_export,
                       read_tradeoff_csv, tradeoff, tradeoff_correlation,
                       write_tradeoff_csv)
from .archive import Archive, GridSpec
from .baseline import TrainConfig, train
from .cmame import RunConfig, run
from .errors import ConfigError, FairmapError
from .fitness import DEFAULT_EPSILON
from .ingest import (Dataset, encode, feature_count_check, is_encoded_dataset,
                     load_csv, load_dataset, load_schema, save_dataset)
from .kernels import active_backend
from .mlp import Architecture, save_genome
from .sampler import BUILTIN_SCENARIOS, apply_scenario, load_scenario
from .synth import GENERATORS, write_table_csv

_DEFAULT_HIDDEN = (35, 15)


def _parse_arch(text: str | None, n_features: int) -> Architecture:
    if text is None:
        sizes = (n_features, *_DEFAULT_HIDDEN, 1)
    else:
        try:
            sizes = tuple(int(p) for p in text.split(","))
        except ValueError:
            raise ConfigError(f"--arch must be comma-separated integers, got {text!r}") from None
    arch = Architecture(layer_sizes=sizes)
    if arch.n_inputs != n_features:
        raise ConfigError(
            f"--arch input size {arch.n_inputs} does not match the dataset's "
            f"{n_features} features")
    return arch


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError(f"{flag} must look like LO:HI, got {text!r}") from None
    return lo, hi


def _load_input(data_path: str, schema_path: str | None) -> Dataset:
    if is_encoded_dataset(data_path):
        return load_dataset(data_path)
    if schema_path is None:
        raise ConfigError(f"{data_path} is a raw CSV; pass --schema to encode it")
    return encode(load_csv(data_path), load_schema(schema_path))


def cmd_synth(args) -> int:
    try:
        generator = GENERATORS[args.dataset]
    except KeyError:
        raise ConfigError(
            f"unknown dataset {args.dataset!r}; known: {', '.join(sorted(GENERATORS))}"
        ) from None
    kwargs = {"seed": args.seed}
    if args.rows is not None:
        kwargs["n_rows"] = args.rows
    table = generator(**kwargs)
    write_table_csv(table, args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def cmd_sample(args) -> int:
    source = _load_input(args.data, args.schema)
    spec = load_scenario(args.scenario)
    sampled, report = apply_scenario(source, spec, seed=args.seed)
    save_dataset(sampled, args.out)
    print(report.format_table())
    if args.report_csv:
        with open(args.report_csv, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(report.csv_rows())
    return 0


def cmd_run(args) -> int:
    dataset = _load_input(args.data, args.schema)
    arch = _parse_arch(args.arch, dataset.n_features)
    if args.expect_features is not None:
        check = feature_count_check(dataset, args.expect_features)
        print(check.message, file=sys.stderr)
    lo, hi = _parse_pair(args.range, "--range")
    config = RunConfig(
        n_evaluations=args.evals, emitter_count=args.emitters,
        sigma0=args.sigma0, seed=args.seed,
        grid=GridSpec(bins=args.bins, lo=lo, hi=hi), arch=arch,
        epsilon=args.epsilon, patience=args.patience, workers=args.workers)
    log = (lambda line: print(line, file=sys.stderr)) if not args.quiet else None
    print(f"backend: {active_backend()}", file=sys.stderr)
    archive = run(config, dataset, log=log)
    archive.save(args.out)
    best = archive.best()
    print(f"archive: {len(archive)} elites, best accuracy {best.accuracy:.4f} "
          f"at ({best.ratio_x:.4f}, {best.ratio_y:.4f}); saved to {args.out}")
    return 0


def _zone(args) -> FairZone:
    lo, hi = _parse_pair(args.zone, "--zone")
    return FairZone(lower=lo, upper=hi)


def cmd_report(args) -> int:
    archive = Archive.load(args.archive)
    report = tradeoff(archive, _zone(args))
    name_x = archive.meta.get("names_x", "ratio_x")
    name_y = archive.meta.get("names_y", "ratio_y")
    print(format_tradeoff(report, name_x, name_y))
    if args.csv:
        write_tradeoff_csv(report, args.csv)
    return 0


def cmd_heatmap(args) -> int:
    archive = Archive.load(args.archive)
    csv_path, ppm_path = heatmap_export(archive, args.out, _zone(args))
    print(f"wrote {csv_path} and {ppm_path}")
    return 0


def cmd_baseline(args) -> int:
    dataset = _load_input(args.data, args.schema)
    arch = _parse_arch(args.arch, dataset.n_features)
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                         folds=args.folds, seed=args.seed)
    genome, cv_accuracy = train(dataset, arch, config)
    print(f"cv accuracy: {cv_accuracy:.4f}")
    if args.out:
        save_genome(args.out, genome)
        print(f"genome saved to {args.out}")
    return 0


def cmd_correlate(args) -> int:
    reports = [read_tradeoff_csv(p) for p in args.reports]
    value = tradeoff_correlation(reports)
    print(f"pearson: {value:.4f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairmap",
        description="Map the accuracy/fairness trade-off of small classifiers "
                    "with archive-driven weight evolution.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic source table")
    p.add_argument("--dataset", required=True, choices=sorted(GENERATORS))
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="build a bias scenario from a source table")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--scenario", required=True,
                   help="built-in name or scenario JSON path")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario's own seed")
    p.add_argument("--out", required=True)
    p.add_argument("--report-csv", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="evolve classifier weights into an archive")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--arch", default=None,
                   help="comma-separated layer sizes incl. input and output, "
                        "e.g. 14,35,15,1")
    p.add_argument("--evals", type=int, default=100_000)
    p.add_argument("--emitters", type=int, default=5)
    p.add_argument("--sigma0", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--range", default="0:2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--expect-features", type=int, default=None,
                   help="advisory check of the encoded feature count")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="best vs best-fair trade-off of an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--zone", default="0.8:1.25")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("heatmap", help="export an archive as CSV + PPM heatmap")
    p.add_argument("--archive", required=True)
    p.add_argument("--zone", default="0.8:1.25")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("baseline", help="train the reference classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--arch", default=None)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="save the final genome CSV here")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("correlate",
                       help="Pearson of accuracy gap vs deviation reduction")
    p.add_argument("--reports", nargs="+", required=True)
    p.set_defaults(func=cmd_correlate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FairmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
