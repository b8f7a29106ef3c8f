#!/usr/bin/env python3
"""Regenerate the golden fixture under tests/golden/.

The raw corpus comes from the synthetic generator. The expected
preprocessed table is produced by the package pipeline and then
reviewed by hand. The expected feature table is computed from that
preprocessed CSV by the brute-force oracle in tests/_oracle.py using
nothing but the csv module, so a pipeline bug and an oracle bug would
have to agree to slip through the byte comparison.

Run from the repository root:  python3 tools/make_golden.py
"""
import csv
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))
sys.path.insert(0, str(ROOT / "src"))

from shillbid.ingest import RawScanner, write_preprocessed  # noqa: E402
from shillbid.preprocess import run_pipeline  # noqa: E402
from shillbid.synth import SynthConfig, write_corpus  # noqa: E402

from tests import _oracle  # noqa: E402

GOLD = ROOT / "tests" / "golden"

METRICS = [
    "bidder_tendency",
    "early_bidding",
    "bidding_ratio",
    "last_bidding",
    "auction_starting_price",
    "successive_outbidding",
    "winning_ratio",
    "auction_bids",
]


def load_plain_auctions(path: Path) -> list[dict]:
    auctions: dict[int, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            auction_id = int(row["auction_id"])
            auction = auctions.setdefault(
                auction_id,
                {
                    "auction_id": auction_id,
                    "seller": row["seller_id"],
                    "starting_price": float(row["starting_price"]),
                    "duration": int(row["auction_duration_sec"]),
                    "start": int(row["start_time_sec"]),
                    "end": int(row["end_time_sec"]),
                    "bids": [],
                },
            )
            auction["bids"].append(
                (
                    row["bidder_id"],
                    float(row["bid_amount"]),
                    int(row["bid_submit_time_sec"]),
                )
            )
    return [auctions[k] for k in sorted(auctions)]


def main() -> None:
    GOLD.mkdir(exist_ok=True)
    config = SynthConfig(
        seed=23,
        num_auctions=20,
        duplicate_row_rate=0.05,
        missing_bidder_rate=0.04,
        thin_auction_rate=0.10,
        inconsistent_auction_rate=0.10,
    )
    rows, manifest = write_corpus(
        config,
        GOLD / "raw_corpus.csv",
        GOLD / "truth.csv",
        GOLD / "defects.json",
    )

    scanner = RawScanner(GOLD / "raw_corpus.csv")
    records, report = run_pipeline(scanner)
    write_preprocessed(records, GOLD / "preprocessed.csv")

    plain = load_plain_auctions(GOLD / "preprocessed.csv")
    with open(GOLD / "features.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["auction_id", "bidder_id"] + METRICS)
        for auction in plain:
            for bidder in _oracle.bidders_of(auction):
                values = _oracle.all_metrics(plain, auction, bidder)
                writer.writerow(
                    [auction["auction_id"], bidder]
                    + [f"{values[name]:.6f}" for name in METRICS]
                )

    print(f"raw rows:      {rows}")
    print(f"kept rows:     {report.after.records}")
    print(f"kept auctions: {report.after.auctions}")
    print(f"defects:       {manifest.to_dict()}")
    print(f"instances:     {sum(len(_oracle.bidders_of(a)) for a in plain)}")


if __name__ == "__main__":
    main()
