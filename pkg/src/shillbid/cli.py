"""Command-line front end.

Subcommands cover the full chain: synth makes a raw corpus, preprocess
cleans it, features turns the cleaned table into per-bidder metric
rows, stats summarizes a feature dataset, validate re-checks any
output file.

Exit codes: 0 success, 1 I/O failure, 2 bad input or configuration,
3 broken invariant or out-of-range metric.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .dataset import build_sb_dataset, format_stats_table, pattern_stats
from .errors import (
    ConfigError,
    DataConsistencyError,
    EmptyDatasetError,
    InvariantError,
    ParseError,
    SchemaError,
)
from .ingest import (
    RawScanner,
    check_sb_dataset,
    load_raw_schema,
    read_preprocessed,
    read_sb_dataset,
    write_preprocessed,
    write_rejects,
    write_sb_dataset,
)
from .metrics import compute_global_aggregates, load_weights, weighted_score
from .model import (
    PREPROCESSED_COLUMNS,
    SB_COLUMNS,
    validate_dataset,
    winner_of,
)
from .preprocess import (
    DEFAULT_TZ_OFFSET_HOURS,
    REFERENCE_EPOCH,
    PipelineConfig,
    run_pipeline,
    run_pipeline_records,
)
from .synth import SynthConfig, write_corpus

log = logging.getLogger(__name__)


def _sniff_header(path: str) -> tuple[str, ...]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        try:
            return tuple(next(csv.reader(handle)))
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None


def _write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _parse_epoch(text: str) -> datetime:
    try:
        return datetime.strptime(text, "%Y-%m-%d %H:%M:%S")
    except ValueError:
        raise ConfigError(
            f"epoch must look like 'YYYY-MM-DD HH:MM:SS', got {text!r}"
        ) from None


def _parse_price(text: str) -> Decimal:
    try:
        return Decimal(text)
    except InvalidOperation:
        raise ConfigError(f"price floor is not a number: {text!r}") from None


def cmd_preprocess(args: argparse.Namespace) -> int:
    schema = load_raw_schema(args.schema) if args.schema else None
    config = PipelineConfig(
        **({"schema": schema} if schema else {}),
        reference_epoch=_parse_epoch(args.epoch),
        tz_offset_hours=args.tz_offset,
        min_bids=args.min_bids,
        min_winning_price=(
            _parse_price(args.min_winning_price)
            if args.min_winning_price is not None
            else None
        ),
    )
    config.validate()

    header = _sniff_header(args.input)
    scanner = None
    if header == PREPROCESSED_COLUMNS:
        # Already-cleaned input: re-run the stages on typed records.
        log.info("input is in preprocessed layout, re-cleansing")
        records, report = run_pipeline_records(
            read_preprocessed(args.input), config
        )
    else:
        scanner = RawScanner(args.input, config.schema)
        records, report = run_pipeline(scanner, config)

    # run_pipeline validated this exact list as its final self-check
    write_preprocessed(records, args.out, validate=False)
    payload = {"cleansing": report.to_dict()}
    if scanner is not None:
        payload["ingest"] = scanner.report.to_dict()
        if scanner.report.rejections:
            rejects_path = args.out + ".rejects.csv"
            write_rejects(scanner.report, rejects_path)
            payload["ingest"]["rejects_file"] = rejects_path
    _write_json(payload, args.report or args.out + ".report.json")
    print(
        f"kept {report.after.records} rows across {report.after.auctions} "
        f"auctions -> {args.out}"
    )
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    records = read_preprocessed(args.input)
    auctions = validate_dataset(records)
    aggregates = compute_global_aggregates(auctions)
    instances = build_sb_dataset(auctions, aggregates, jobs=args.jobs)
    write_sb_dataset(instances, args.out)

    weights = load_weights(args.weights) if args.weights else None
    if args.scores:
        pairs = sorted(instances, key=lambda i: (i.auction_id, i.bidder_id))
        with open(args.scores, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["auction_id", "bidder_id", "weighted_score"])
            for inst in pairs:
                writer.writerow(
                    [
                        inst.auction_id,
                        inst.bidder_id,
                        f"{weighted_score(inst, weights):.6f}",
                    ]
                )

    winners = {a.auction_id: winner_of(a).bidder_id for a in auctions}
    stats = pattern_stats(instances, threshold=args.threshold, winners=winners)
    _write_json(stats.to_dict(), args.report or args.out + ".report.json")
    print(
        f"wrote {len(instances)} instances across {stats.total_auctions} "
        f"auctions -> {args.out}"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed,
        num_auctions=args.auctions,
        shill_fraction=args.shill_fraction,
        shill_run_length=args.run_length,
        duplicate_row_rate=args.dup_rate,
        missing_bidder_rate=args.missing_rate,
        thin_auction_rate=args.thin_rate,
        inconsistent_auction_rate=args.inconsistent_rate,
    )
    out = Path(args.out)
    truth = args.truth or str(out.with_name(out.stem + ".truth.csv"))
    defects = args.defects or str(out.with_name(out.stem + ".defects.json"))
    rows, manifest = write_corpus(config, args.out, truth, defects)
    print(
        f"wrote {rows} raw rows for {args.auctions} auctions -> {args.out}\n"
        f"labels -> {truth}\n"
        f"defects -> {defects} (dups {manifest.duplicate_rows}, "
        f"blank bidders {manifest.missing_bidder_rows}, "
        f"thin {manifest.thin_auctions}, "
        f"inconsistent {manifest.inconsistent_auctions})"
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    instances = read_sb_dataset(args.input)
    winners = None
    if args.preprocessed:
        records = read_preprocessed(args.preprocessed)
        winners = {
            a.auction_id: winner_of(a).bidder_id
            for a in validate_dataset(records)
        }
    stats = pattern_stats(instances, threshold=args.threshold, winners=winners)
    print(format_stats_table(stats))
    if args.report:
        _write_json(stats.to_dict(), args.report)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    header = _sniff_header(args.input)
    if header == PREPROCESSED_COLUMNS:
        records = read_preprocessed(args.input)
        auctions = validate_dataset(records)
        print(f"ok: {len(records)} rows, {len(auctions)} auctions pass all checks")
    elif header == SB_COLUMNS:
        instances = read_sb_dataset(args.input)
        check_sb_dataset(instances)
        print(f"ok: {len(instances)} instances pass all checks")
    else:
        raise SchemaError(
            f"{args.input}: header matches neither the preprocessed nor the "
            "feature dataset layout"
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shillbid",
        description="Clean scraped auction data and build shill-bidding features.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log progress to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="cleanse a raw scrape into a bid table")
    p.add_argument("--in", dest="input", required=True, help="raw scrape CSV")
    p.add_argument("--out", required=True, help="cleaned bid table CSV")
    p.add_argument("--report", help="cleansing report JSON (default <out>.report.json)")
    p.add_argument("--schema", help="key=value file mapping logical fields to headers")
    p.add_argument(
        "--epoch",
        default=REFERENCE_EPOCH.strftime("%Y-%m-%d %H:%M:%S"),
        help="countdown reference time, 'YYYY-MM-DD HH:MM:SS'",
    )
    p.add_argument(
        "--tz-offset",
        type=float,
        default=DEFAULT_TZ_OFFSET_HOURS,
        help="UTC offset in hours recorded for the scrape's clock",
    )
    p.add_argument(
        "--min-bids", type=int, default=5, help="drop auctions with fewer bids"
    )
    p.add_argument(
        "--min-winning-price",
        help="drop rows whose auction sold at or below this price",
    )
    p.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="accepted for interface symmetry; the cleanse is one ordered pass",
    )
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="build the per-bidder feature dataset")
    p.add_argument("--in", dest="input", required=True, help="cleaned bid table CSV")
    p.add_argument("--out", required=True, help="feature dataset CSV")
    p.add_argument("--report", help="statistics JSON (default <out>.report.json)")
    p.add_argument("--weights", help="key=value file overriding score weights")
    p.add_argument("--scores", help="also write weighted scores to this CSV")
    p.add_argument(
        "--threshold",
        type=float,
        default=0.7,
        help="high-value cutoff used by the statistics report",
    )
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("synth", help="generate a synthetic raw corpus")
    p.add_argument("--out", required=True, help="raw corpus CSV")
    p.add_argument("--truth", help="label CSV (default <out stem>.truth.csv)")
    p.add_argument("--defects", help="defect manifest JSON (default <out stem>.defects.json)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--auctions", type=int, default=200)
    p.add_argument(
        "--shill-fraction",
        type=float,
        default=0.10,
        help="fraction of auctions that get a planted accomplice",
    )
    p.add_argument(
        "--run-length",
        type=int,
        default=4,
        help="consecutive bids in each accomplice streak",
    )
    p.add_argument("--dup-rate", type=float, default=0.0, help="duplicate row rate")
    p.add_argument(
        "--missing-rate", type=float, default=0.0, help="blank bidder id rate"
    )
    p.add_argument(
        "--thin-rate",
        type=float,
        default=0.0,
        help="fraction of auctions left under the activity floor",
    )
    p.add_argument(
        "--inconsistent-rate",
        type=float,
        default=0.0,
        help="fraction of auctions given contradictory prices",
    )
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="summarize a feature dataset")
    p.add_argument("--in", dest="input", required=True, help="feature dataset CSV")
    p.add_argument("--report", help="also write the summary as JSON")
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument(
        "--preprocessed",
        help="matching bid table; enables the winner-behavior buckets",
    )
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="re-check a preprocessed or feature CSV")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        SchemaError,
        ParseError,
        DataConsistencyError,
        ConfigError,
        EmptyDatasetError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
