"""Cleansing pipeline: raw scrape rows to a validated bid table.

Stage order is fixed: drop irrelevant columns, collapse exact
duplicates, drop rows with a blank bidder id, merge date/time text,
parse money, convert durations and timestamps, group into auctions,
reconcile scraped counts against actual rows, drop low-activity
auctions, drop price-inconsistent auctions, assign dense identifiers.

run_pipeline fuses the row-wise stages into one streaming pass so a
million-row corpus never holds its raw width in memory twice; the
result is exactly the composition of the individual operations, which
the test suite checks.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
import re
from typing import Iterable, Mapping, Sequence

from .errors import (
    ConfigError,
    DataConsistencyError,
    InvariantError,
    ParseError,
    SchemaError,
)
from .ingest import DEFAULT_RAW_SCHEMA, LOGICAL_FIELDS, RawRecord
from .model import BidRecord, validate_dataset

logger = logging.getLogger(__name__)

# Midnight at the start of the day the scrape was handed over,
# expressed in the site's fixed-offset local time.
REFERENCE_EPOCH = datetime(2017, 7, 7, 0, 0, 0)
DEFAULT_TZ_OFFSET_HOURS = -7.0

STANDARD_DURATIONS_DAYS = (1, 3, 5, 7, 10)

SECONDS_PER_DAY = 86400

_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}

_NUMBER = re.compile(r"\d+(?:\.\d+)?")

_CENT = Decimal("0.01")


def merge_datetime(date_text: str, time_text: str) -> datetime:
    """Combine a MON-DD-YY date and a HH:MM:SS clock into one datetime.

    A trailing timezone token on the clock ("PDT") is consumed; all
    clock values are read in the single configured fixed-offset zone.
    Two-digit years mean 2000 + yy.
    """
    parts = date_text.strip().split("-")
    if len(parts) != 3:
        raise ParseError(f"date {date_text!r}: expected MON-DD-YY")
    month_text, day_text, year_text = parts
    month = _MONTHS.get(month_text.strip().lower())
    if month is None:
        raise ParseError(f"date {date_text!r}: unknown month name {month_text!r}")
    try:
        day = int(day_text)
        year = int(year_text)
    except ValueError:
        raise ParseError(f"date {date_text!r}: day/year are not integers") from None
    if 0 <= year < 100:
        year += 2000
    clock_tokens = time_text.split()
    if not clock_tokens:
        raise ParseError(f"time {time_text!r}: no clock value")
    hms = clock_tokens[0].split(":")
    if len(hms) != 3:
        raise ParseError(f"time {time_text!r}: expected HH:MM:SS")
    try:
        hour, minute, second = (int(x) for x in hms)
    except ValueError:
        raise ParseError(f"time {time_text!r}: clock parts are not integers") from None
    try:
        return datetime(year, month, day, hour, minute, second)
    except ValueError as exc:
        raise ParseError(f"{date_text!r} {time_text!r}: {exc}") from None


def parse_money(text: str) -> Decimal:
    """Extract the single decimal number from free-form money text.

    Currency symbols, letters and thousands separators are stripped;
    the result is a fixed-point amount with two fractional digits.
    """
    cleaned = text.replace(",", "")
    numbers = _NUMBER.findall(cleaned)
    if not numbers:
        raise ParseError(f"money {text!r}: no number found")
    if len(numbers) > 1:
        raise ParseError(f"money {text!r}: more than one number found")
    return Decimal(numbers[0]).quantize(_CENT, rounding=ROUND_HALF_UP)


def duration_days_to_seconds(days: int) -> int:
    """Turn a whole-day listing duration into seconds."""
    if days <= 0:
        raise ParseError(f"duration {days!r}: must be a positive day count")
    if days not in STANDARD_DURATIONS_DAYS:
        logger.warning("non-standard auction duration: %d days", days)
    return days * SECONDS_PER_DAY


def to_countdown_seconds(event: datetime, reference: datetime) -> int:
    """Whole seconds from event up to the reference moment.

    Later events produce smaller values. Both datetimes are read in the
    same fixed-offset zone, so the offset cancels out of the result.
    """
    if event.microsecond or reference.microsecond:
        raise ParseError("countdown timestamps must be whole seconds")
    delta = reference - event
    seconds = delta.days * SECONDS_PER_DAY + delta.seconds
    if seconds < 0:
        raise ParseError(
            f"event {event.isoformat()} is after the reference epoch "
            f"{reference.isoformat()}"
        )
    return seconds


def drop_irrelevant_columns(
    records: Iterable[Mapping[str, str]], keep: Sequence[str]
) -> list[dict[str, str]]:
    """Project every record onto the keep-list, in keep-list order."""
    keep = tuple(keep)
    out: list[dict[str, str]] = []
    for n, rec in enumerate(records, 1):
        try:
            out.append({name: rec[name] for name in keep})
        except KeyError as exc:
            raise SchemaError(
                f"record {n}: keep-list column {exc.args[0]!r} is absent"
            ) from None
    return out


def dedup_records(records: Iterable[Mapping[str, str]]) -> list[Mapping[str, str]]:
    """Collapse exact duplicates, keeping each first occurrence."""
    seen: set = set()
    out: list[Mapping[str, str]] = []
    for rec in records:
        key = tuple(sorted(rec.items()))
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


def drop_missing_bidder(
    records: Iterable[Mapping[str, str]],
    bidder_column: str = DEFAULT_RAW_SCHEMA["bidder_id"],
) -> list[Mapping[str, str]]:
    """Drop rows whose bidder id is empty or whitespace-only."""
    out: list[Mapping[str, str]] = []
    for n, rec in enumerate(records, 1):
        try:
            bidder = rec[bidder_column]
        except KeyError:
            raise SchemaError(
                f"record {n}: bidder column {bidder_column!r} is absent"
            ) from None
        if not bidder or bidder.isspace():
            continue
        out.append(rec)
    return out


@dataclass(frozen=True, slots=True)
class ParsedBid:
    bidder_id: str
    bid_amount: Decimal
    bid_submit_time_sec: int


@dataclass(slots=True)
class ParsedAuction:
    """One auction mid-pipeline, before identifiers exist."""

    key: str | int
    seller_id: str
    start_time_sec: int
    end_time_sec: int
    duration_sec: int
    starting_price: Decimal
    winning_bid: Decimal
    num_bids: int
    num_bidders: int
    bids: list[ParsedBid] = field(default_factory=list)


def reconcile_counts(auctions: Iterable[ParsedAuction]) -> tuple[int, int]:
    """Overwrite scraped bid/bidder counts that contradict the rows.

    Returns how many auctions had each count fixed. The rows are the
    ground truth; the scraped numbers may predate row-level cleansing
    or simply be corrupt.
    """
    bids_fixed = 0
    bidders_fixed = 0
    for auction in auctions:
        actual_bids = len(auction.bids)
        actual_bidders = len({b.bidder_id for b in auction.bids})
        if auction.num_bids != actual_bids:
            auction.num_bids = actual_bids
            bids_fixed += 1
        if auction.num_bidders != actual_bidders:
            auction.num_bidders = actual_bidders
            bidders_fixed += 1
    return bids_fixed, bidders_fixed


def filter_low_activity_auctions(
    auctions: Iterable[ParsedAuction], min_bids: int = 5
) -> tuple[list[ParsedAuction], list[ParsedAuction]]:
    """Split auctions into (kept, removed) by actual bid count."""
    kept: list[ParsedAuction] = []
    removed: list[ParsedAuction] = []
    for auction in auctions:
        (kept if len(auction.bids) >= min_bids else removed).append(auction)
    return kept, removed


def _chronological_last(bids: Sequence[ParsedBid]) -> ParsedBid:
    # Smallest countdown is latest; a same-second tie goes to the
    # higher amount, matching the canonical bid order.
    return max(bids, key=lambda b: (-b.bid_submit_time_sec, b.bid_amount))


def filter_inconsistent_auctions(
    auctions: Iterable[ParsedAuction],
) -> tuple[list[ParsedAuction], list[ParsedAuction]]:
    """Drop auctions whose prices contradict their own bid rows.

    An auction is inconsistent when its last bid exceeds the winning
    price, or its starting price does (both strictly).
    """
    kept: list[ParsedAuction] = []
    removed: list[ParsedAuction] = []
    for auction in auctions:
        last = _chronological_last(auction.bids)
        if last.bid_amount > auction.winning_bid or auction.starting_price > auction.winning_bid:
            removed.append(auction)
        else:
            kept.append(auction)
    return kept, removed


def assign_identifiers(auctions: Iterable[ParsedAuction]) -> list[BidRecord]:
    """Assign dense auction and record ids and flatten to records.

    Auctions are numbered 1..N from the earliest start (largest start
    countdown), ties broken by key. Records are numbered 1..M over the
    canonical global row order, so both numberings depend only on row
    content, never on input order.
    """
    ordered = sorted(auctions, key=lambda a: (-a.start_time_sec, a.key))
    records: list[BidRecord] = []
    record_id = 0
    for auction_id, auction in enumerate(ordered, 1):
        bids = sorted(
            auction.bids,
            key=lambda b: (-b.bid_submit_time_sec, b.bid_amount, b.bidder_id),
        )
        for bid in bids:
            record_id += 1
            records.append(
                BidRecord(
                    record_id=record_id,
                    auction_id=auction_id,
                    seller_id=auction.seller_id,
                    bidder_id=bid.bidder_id,
                    bid_amount=bid.bid_amount,
                    bid_submit_time_sec=bid.bid_submit_time_sec,
                    num_bidders=auction.num_bidders,
                    num_bids=auction.num_bids,
                    starting_price=auction.starting_price,
                    winning_bid=auction.winning_bid,
                    auction_duration_sec=auction.duration_sec,
                    start_time_sec=auction.start_time_sec,
                    end_time_sec=auction.end_time_sec,
                )
            )
    return records


@dataclass(frozen=True, slots=True)
class Totals:
    """Dataset-shape numbers for one side of the cleansing."""

    auctions: int
    records: int
    bidder_ids: int
    seller_ids: int
    attributes: int
    duration_days_mean: float | None = None
    duration_days_mode: float | int | None = None
    avg_winning_price: float | None = None

    def to_dict(self) -> dict:
        return {
            "auctions": self.auctions,
            "records": self.records,
            "bidder_ids": self.bidder_ids,
            "seller_ids": self.seller_ids,
            "attributes": self.attributes,
            "duration_days_mean": self.duration_days_mean,
            "duration_days_mode": self.duration_days_mode,
            "avg_winning_price": self.avg_winning_price,
        }


@dataclass(frozen=True, slots=True)
class CleansingReport:
    """Counts removed per rule, counts fixed, and before/after totals.

    Conservation holds exactly: after.records equals before.records
    minus duplicates, missing-bidder rows, and the rows of removed
    auctions; likewise for auctions.
    """

    irrelevant_columns_dropped: int
    duplicate_records_removed: int
    missing_bidder_rows_removed: int
    low_bid_auctions_removed: int
    low_bid_rows_removed: int
    inconsistent_auctions_removed: int
    inconsistent_rows_removed: int
    num_bids_reconciled: int
    num_bidders_reconciled: int
    price_filtered_rows: int
    before: Totals
    after: Totals

    def to_dict(self) -> dict:
        return {
            "removed": {
                "irrelevant_columns_dropped": self.irrelevant_columns_dropped,
                "duplicate_records_removed": self.duplicate_records_removed,
                "missing_bidder_rows_removed": self.missing_bidder_rows_removed,
                "low_bid_auctions_removed": self.low_bid_auctions_removed,
                "low_bid_rows_removed": self.low_bid_rows_removed,
                "inconsistent_auctions_removed": self.inconsistent_auctions_removed,
                "inconsistent_rows_removed": self.inconsistent_rows_removed,
            },
            "reconciled": {
                "num_bids": self.num_bids_reconciled,
                "num_bidders": self.num_bidders_reconciled,
            },
            "price_filtered_rows": self.price_filtered_rows,
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
        }


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run."""

    schema: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_RAW_SCHEMA))
    reference_epoch: datetime = REFERENCE_EPOCH
    tz_offset_hours: float = DEFAULT_TZ_OFFSET_HOURS
    min_bids: int = 5
    min_winning_price: Decimal | None = None

    def validate(self) -> None:
        if set(self.schema) != set(LOGICAL_FIELDS):
            missing = sorted(set(LOGICAL_FIELDS) - set(self.schema))
            extra = sorted(set(self.schema) - set(LOGICAL_FIELDS))
            raise ConfigError(
                f"schema must map exactly the logical fields"
                f"{'; missing ' + ', '.join(missing) if missing else ''}"
                f"{'; unexpected ' + ', '.join(extra) if extra else ''}"
            )
        if self.min_bids < 1:
            raise ConfigError(f"min_bids must be >= 1, got {self.min_bids}")
        if self.reference_epoch.microsecond:
            raise ConfigError("reference epoch must be a whole second")


# Positions inside the projected logical tuple.
_F = {name: i for i, name in enumerate(LOGICAL_FIELDS)}


def _dedup_key(cells: tuple[str, ...]):
    key = "\x1f".join(cells)
    # A cell embedding the separator would make the join ambiguous;
    # fall back to the exact tuple for those rows.
    if key.count("\x1f") != len(cells) - 1:
        return cells
    return key


def _parse_auction_level(cells: tuple[str, ...], key, config: PipelineConfig) -> ParsedAuction:
    where = f"auction {key!r}"
    start_dt = merge_datetime(cells[_F["start_date"]], cells[_F["start_time"]])
    end_dt = merge_datetime(cells[_F["end_date"]], cells[_F["end_time"]])
    try:
        days = int(cells[_F["duration_days"]])
    except ValueError:
        raise ParseError(
            f"{where}: duration is not an integer: {cells[_F['duration_days']]!r}"
        ) from None
    duration_sec = duration_days_to_seconds(days)
    try:
        num_bids = int(cells[_F["num_bids"]])
        num_bidders = int(cells[_F["num_bidders"]])
    except ValueError:
        raise ParseError(f"{where}: bid/bidder counts are not integers") from None
    return ParsedAuction(
        key=key,
        seller_id=cells[_F["seller_id"]],
        start_time_sec=to_countdown_seconds(start_dt, config.reference_epoch),
        end_time_sec=to_countdown_seconds(end_dt, config.reference_epoch),
        duration_sec=duration_sec,
        starting_price=parse_money(cells[_F["starting_price"]]),
        winning_bid=parse_money(cells[_F["winning_price"]]),
        num_bids=num_bids,
        num_bidders=num_bidders,
    )


@dataclass
class _Counters:
    columns_dropped: int = 0
    duplicates: int = 0
    missing_bidder: int = 0
    price_filtered: int = 0


def _finish(
    groups: dict,
    vanished_auctions: int,
    before: Totals,
    counters: _Counters,
    config: PipelineConfig,
) -> tuple[list[BidRecord], CleansingReport]:
    auctions = list(groups.values())
    bids_fixed, bidders_fixed = reconcile_counts(auctions)
    kept, thin = filter_low_activity_auctions(auctions, config.min_bids)
    kept, inconsistent = filter_inconsistent_auctions(kept)

    records = assign_identifiers(kept)
    validate_dataset(records)

    thin_rows = sum(len(a.bids) for a in thin)
    inconsistent_rows = sum(len(a.bids) for a in inconsistent)

    if kept:
        durations = [a.duration_sec for a in kept]
        mean_days = sum(durations) / len(durations) / SECONDS_PER_DAY
        counts = Counter(durations)
        top = max(counts.values())
        mode_sec = min(sec for sec, cnt in counts.items() if cnt == top)
        mode_days: float | int = (
            mode_sec // SECONDS_PER_DAY
            if mode_sec % SECONDS_PER_DAY == 0
            else mode_sec / SECONDS_PER_DAY
        )
        avg_win = float(sum(a.winning_bid for a in kept)) / len(kept)
    else:
        mean_days = None
        mode_days = None
        avg_win = None

    after = Totals(
        auctions=len(kept),
        records=len(records),
        bidder_ids=len({r.bidder_id for r in records}),
        seller_ids=len({r.seller_id for r in records}),
        attributes=13,
        duration_days_mean=mean_days,
        duration_days_mode=mode_days,
        avg_winning_price=avg_win,
    )
    report = CleansingReport(
        irrelevant_columns_dropped=counters.columns_dropped,
        duplicate_records_removed=counters.duplicates,
        missing_bidder_rows_removed=counters.missing_bidder,
        low_bid_auctions_removed=len(thin) + vanished_auctions,
        low_bid_rows_removed=thin_rows,
        inconsistent_auctions_removed=len(inconsistent),
        inconsistent_rows_removed=inconsistent_rows,
        num_bids_reconciled=bids_fixed,
        num_bidders_reconciled=bidders_fixed,
        price_filtered_rows=counters.price_filtered,
        before=before,
        after=after,
    )
    lost_rows = (
        counters.duplicates
        + counters.missing_bidder
        + thin_rows
        + inconsistent_rows
    )
    if after.records != before.records - lost_rows:
        raise InvariantError(
            "row accounting broke: "
            f"{before.records} - {lost_rows} != {after.records}"
        )
    lost_auctions = report.low_bid_auctions_removed + report.inconsistent_auctions_removed
    if after.auctions != before.auctions - lost_auctions:
        raise InvariantError(
            "auction accounting broke: "
            f"{before.auctions} - {lost_auctions} != {after.auctions}"
        )
    return records, report


def run_pipeline(
    records: Iterable[Mapping[str, str]], config: PipelineConfig | None = None
) -> tuple[list[BidRecord], CleansingReport]:
    """Run the whole cleansing chain over raw records.

    Accepts any iterable of column-name -> text mappings and streams
    it, so a generator (for instance a RawScanner) keeps peak memory at
    the projected row width.
    """
    config = config or PipelineConfig()
    config.validate()
    schema = config.schema
    raw_names = tuple(schema[name] for name in LOGICAL_FIELDS)
    epoch = config.reference_epoch
    min_price = config.min_winning_price

    counters = _Counters()
    seen_keys: set = set()
    urls_seen: set[str] = set()
    bidders_seen: set[str] = set()
    sellers_seen: set[str] = set()
    rows_before = 0
    raw_width = 0

    groups: dict[str, ParsedAuction] = {}
    level_text: dict[str, tuple[str, ...]] = {}
    win_cache: dict[str, Decimal] = {}

    positions: tuple[int, ...] | None = None
    positions_for: int | None = None

    for rec in records:
        if isinstance(rec, RawRecord):
            index = rec.index
            if positions_for != id(index):
                try:
                    positions = tuple(index[name] for name in raw_names)
                except KeyError as exc:
                    raise SchemaError(f"missing required column {exc.args[0]!r}") from None
                positions_for = id(index)
            cells = rec.project(positions)
        else:
            try:
                cells = tuple(rec[name] for name in raw_names)
            except KeyError as exc:
                raise SchemaError(f"missing required column {exc.args[0]!r}") from None
        if not raw_width:
            raw_width = len(rec)

        if min_price is not None:
            win_text = cells[_F["winning_price"]]
            win = win_cache.get(win_text)
            if win is None:
                win_cache[win_text] = win = parse_money(win_text)
            if win <= min_price:
                counters.price_filtered += 1
                continue

        url = cells[0]
        rows_before += 1
        urls_seen.add(url)
        sellers_seen.add(cells[_F["seller_id"]])
        bidder = cells[_F["bidder_id"]]
        if bidder and not bidder.isspace():
            bidders_seen.add(bidder)

        key = _dedup_key(cells)
        if key in seen_keys:
            counters.duplicates += 1
            continue
        seen_keys.add(key)

        if not bidder or bidder.isspace():
            counters.missing_bidder += 1
            continue

        group = groups.get(url)
        if group is None:
            groups[url] = group = _parse_auction_level(cells, url, config)
            level_text[url] = cells[1:2] + cells[_F["start_date"]:]
        elif level_text[url] != cells[1:2] + cells[_F["start_date"]:]:
            raise DataConsistencyError(
                f"auction {url!r}: rows disagree on auction-level fields"
            )

        bid_dt = merge_datetime(cells[_F["bid_date"]], cells[_F["bid_time"]])
        group.bids.append(
            ParsedBid(
                bidder_id=bidder,
                bid_amount=parse_money(cells[_F["bid_amount"]]),
                bid_submit_time_sec=to_countdown_seconds(bid_dt, epoch),
            )
        )

    counters.columns_dropped = max(0, raw_width - len(LOGICAL_FIELDS))
    before = Totals(
        auctions=len(urls_seen),
        records=rows_before,
        bidder_ids=len(bidders_seen),
        seller_ids=len(sellers_seen),
        attributes=raw_width,
    )
    vanished = len(urls_seen) - len(groups)
    return _finish(groups, vanished, before, counters, config)


def run_pipeline_records(
    records: Iterable[BidRecord], config: PipelineConfig | None = None
) -> tuple[list[BidRecord], CleansingReport]:
    """Re-run the cleansing stages over already-typed records.

    Cleansing is idempotent: feeding the pipeline its own output
    reproduces it exactly and reports zero removals. Duplicate
    detection here ignores record_id, since ids are re-assigned anyway.
    """
    config = config or PipelineConfig()
    config.validate()
    min_price = config.min_winning_price

    counters = _Counters()
    seen: set = set()
    ids_seen: set[int] = set()
    bidders_seen: set[str] = set()
    sellers_seen: set[str] = set()
    rows_before = 0

    groups: dict[int, ParsedAuction] = {}
    level: dict[int, tuple] = {}

    for rec in records:
        if min_price is not None and rec.winning_bid <= min_price:
            counters.price_filtered += 1
            continue
        rows_before += 1
        ids_seen.add(rec.auction_id)
        sellers_seen.add(rec.seller_id)
        if rec.bidder_id and not rec.bidder_id.isspace():
            bidders_seen.add(rec.bidder_id)

        key = (
            rec.auction_id, rec.seller_id, rec.bidder_id, rec.bid_amount,
            rec.bid_submit_time_sec, rec.num_bidders, rec.num_bids,
            rec.starting_price, rec.winning_bid, rec.auction_duration_sec,
            rec.start_time_sec, rec.end_time_sec,
        )
        if key in seen:
            counters.duplicates += 1
            continue
        seen.add(key)

        if not rec.bidder_id or rec.bidder_id.isspace():
            counters.missing_bidder += 1
            continue

        group = groups.get(rec.auction_id)
        auction_level = key[1:2] + key[5:]
        if group is None:
            groups[rec.auction_id] = group = ParsedAuction(
                key=rec.auction_id,
                seller_id=rec.seller_id,
                start_time_sec=rec.start_time_sec,
                end_time_sec=rec.end_time_sec,
                duration_sec=rec.auction_duration_sec,
                starting_price=rec.starting_price,
                winning_bid=rec.winning_bid,
                num_bids=rec.num_bids,
                num_bidders=rec.num_bidders,
            )
            level[rec.auction_id] = auction_level
        elif level[rec.auction_id] != auction_level:
            raise DataConsistencyError(
                f"auction {rec.auction_id}: records disagree on auction-level fields"
            )
        group.bids.append(
            ParsedBid(rec.bidder_id, rec.bid_amount, rec.bid_submit_time_sec)
        )

    before = Totals(
        auctions=len(ids_seen),
        records=rows_before,
        bidder_ids=len(bidders_seen),
        seller_ids=len(sellers_seen),
        attributes=13,
    )
    vanished = len(ids_seen) - len(groups)
    return _finish(groups, vanished, before, counters, config)
