"""Feature-dataset assembly and descriptive statistics.

build_sb_dataset turns auction views plus global aggregates into one
SBInstance per (auction, bidder) pair; pattern_stats summarizes a
finished dataset the way a fraud analyst would eyeball it.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, OutlierError
from .metrics import (
    GlobalAggregates,
    _bid_volume_value,
    _early_value,
    _last_value,
    _run_band,
    _starting_price_value,
    bidder_tendency,
    participation_map,
    winning_ratio,
)
from .model import METRIC_COLUMNS, AuctionView, SBInstance

# An instance is "aggressive" when the bidder kept outbidding in
# streaks and held a real share of the auction's bids.
AGGRESSIVE_SOB_FLOOR = 0.5
AGGRESSIVE_BR_FLOOR = 0.1
EARLY_FLOOR = 0.7


def _instances_for(
    auctions: Sequence[AuctionView], aggregates: GlobalAggregates
) -> list[SBInstance]:
    out: list[SBInstance] = []
    for auction in auctions:
        asp = _starting_price_value(
            float(auction.starting_price), aggregates.avg_auctions_start_price
        )
        ab = _bid_volume_value(auction.num_bids, aggregates.avg_bid_all_auctions)
        parts = participation_map(auction)
        for bidder in sorted(parts):
            part = parts[bidder]
            out.append(
                SBInstance(
                    auction_id=auction.auction_id,
                    bidder_id=bidder,
                    bidder_tendency=bidder_tendency(
                        bidder, auction.seller_id, aggregates
                    ),
                    early_bidding=_early_value(
                        part.first_bid_time_sec,
                        auction.start_time_sec,
                        auction.auction_duration_sec,
                    ),
                    bidding_ratio=part.bid_count / auction.num_bids,
                    last_bidding=_last_value(
                        part.last_bid_time_sec,
                        auction.end_time_sec,
                        auction.auction_duration_sec,
                    ),
                    auction_starting_price=asp,
                    successive_outbidding=_run_band(part.longest_run),
                    winning_ratio=winning_ratio(bidder, aggregates),
                    auction_bids=ab,
                )
            )
    return out


def _chunk_worker(args: tuple[Sequence[AuctionView], GlobalAggregates]) -> list[SBInstance]:
    auctions, aggregates = args
    return _instances_for(auctions, aggregates)


@dataclass(frozen=True, slots=True)
class OutlierRecord:
    auction_id: int
    bidder_id: str
    metric: str
    value: float


def scan_outliers(instances: Iterable[SBInstance]) -> list[OutlierRecord]:
    """List every metric value outside [0, 1], with no tolerance."""
    bad: list[OutlierRecord] = []
    for inst in instances:
        for name, value in inst.metric_items():
            if value < 0.0 or value > 1.0:
                bad.append(OutlierRecord(inst.auction_id, inst.bidder_id, name, value))
    return bad


def build_sb_dataset(
    auctions: Iterable[AuctionView],
    aggregates: GlobalAggregates,
    jobs: int = 1,
) -> list[SBInstance]:
    """One SBInstance per (auction, bidder) pair, outlier-guarded.

    jobs > 1 splits the auctions over worker processes; chunk results
    are concatenated in submission order, so the output is identical
    for every jobs value.
    """
    auctions = list(auctions)
    if jobs > 1 and len(auctions) > 1:
        chunk_count = min(len(auctions), jobs * 4)
        size = (len(auctions) + chunk_count - 1) // chunk_count
        chunks = [auctions[i : i + size] for i in range(0, len(auctions), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_worker, ((c, aggregates) for c in chunks)))
        instances = [inst for part in parts for inst in part]
    else:
        instances = _instances_for(auctions, aggregates)
    bad = scan_outliers(instances)
    if bad:
        worst = bad[0]
        raise OutlierError(
            f"{len(bad)} metric value(s) left [0, 1]; first: auction "
            f"{worst.auction_id}, bidder {worst.bidder_id!r}, "
            f"{worst.metric}={worst.value!r}"
        )
    return instances


@dataclass(frozen=True, slots=True)
class BucketCounts:
    """Winner/aggression cross-counts over instances."""

    winners_not_aggressive: int
    winners_aggressive: int
    non_winners_aggressive: int
    non_winners_not_aggressive: int
    early_aggressive_non_winners: int


@dataclass(frozen=True, slots=True)
class PatternStats:
    """Descriptive statistics over a finished feature dataset.

    Percentages are always relative to the instance count. Buckets are
    None when no winner mapping was available to classify instances.
    """

    total_instances: int
    total_auctions: int
    total_bidders: int
    high_value_threshold: float
    high_values: dict[str, int]
    buckets: BucketCounts | None
    low_start_auctions: int
    regular_start_auctions: int
    avg_bidders_low_start: float | None
    avg_bidders_regular_start: float | None

    def _pct(self, count: int) -> float:
        if self.total_instances == 0:
            return 0.0
        return 100.0 * count / self.total_instances

    def to_dict(self) -> dict:
        def with_pct(count: int | None):
            if count is None:
                return None
            return {"count": count, "pct_of_instances": self._pct(count)}

        buckets = self.buckets
        return {
            "total_instances": self.total_instances,
            "total_auctions": self.total_auctions,
            "total_bidders": self.total_bidders,
            "high_value_threshold": self.high_value_threshold,
            "high_values": {
                name: with_pct(self.high_values[name]) for name in METRIC_COLUMNS
            },
            "behavior_buckets": {
                "winners_not_aggressive": with_pct(
                    buckets.winners_not_aggressive if buckets else None
                ),
                "winners_aggressive": with_pct(
                    buckets.winners_aggressive if buckets else None
                ),
                "non_winners_aggressive": with_pct(
                    buckets.non_winners_aggressive if buckets else None
                ),
                "non_winners_not_aggressive": with_pct(
                    buckets.non_winners_not_aggressive if buckets else None
                ),
                "early_aggressive_non_winners": with_pct(
                    buckets.early_aggressive_non_winners if buckets else None
                ),
            },
            "starting_price": {
                "low_start_auctions": self.low_start_auctions,
                "regular_start_auctions": self.regular_start_auctions,
                "avg_bidders_low_start": self.avg_bidders_low_start,
                "avg_bidders_regular_start": self.avg_bidders_regular_start,
            },
            "percentage_base": "instances",
        }


def pattern_stats(
    instances: Iterable[SBInstance],
    threshold: float = 0.7,
    winners: Mapping[int, str] | None = None,
    sob_floor: float = AGGRESSIVE_SOB_FLOOR,
    br_floor: float = AGGRESSIVE_BR_FLOOR,
    early_floor: float = EARLY_FLOOR,
) -> PatternStats:
    """Summarize a dataset: high-value counts, buckets, price split.

    winners maps auction_id to the winning bidder_id; without it the
    winner-dependent buckets cannot be computed and come back None.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    instances = list(instances)

    high = dict.fromkeys(METRIC_COLUMNS, 0)
    for inst in instances:
        for name, value in inst.metric_items():
            if value > threshold:
                high[name] += 1

    auction_ids: set[int] = set()
    bidder_ids: set[str] = set()
    bidders_per_auction: dict[int, int] = {}
    low_start_auction: dict[int, bool] = {}
    for inst in instances:
        auction_ids.add(inst.auction_id)
        bidder_ids.add(inst.bidder_id)
        bidders_per_auction[inst.auction_id] = (
            bidders_per_auction.get(inst.auction_id, 0) + 1
        )
        low_start_auction[inst.auction_id] = inst.auction_starting_price > 0.0

    low = [a for a, is_low in low_start_auction.items() if is_low]
    regular = [a for a, is_low in low_start_auction.items() if not is_low]

    def avg_bidders(ids: list[int]) -> float | None:
        if not ids:
            return None
        return sum(bidders_per_auction[a] for a in ids) / len(ids)

    buckets: BucketCounts | None = None
    if winners is not None:
        w_aggr = w_calm = l_aggr = l_calm = early_aggr_lost = 0
        for inst in instances:
            aggressive = (
                inst.successive_outbidding >= sob_floor
                and inst.bidding_ratio > br_floor
            )
            is_winner = winners.get(inst.auction_id) == inst.bidder_id
            if is_winner:
                if aggressive:
                    w_aggr += 1
                else:
                    w_calm += 1
            else:
                if aggressive:
                    l_aggr += 1
                    if inst.early_bidding > early_floor:
                        early_aggr_lost += 1
                else:
                    l_calm += 1
        buckets = BucketCounts(
            winners_not_aggressive=w_calm,
            winners_aggressive=w_aggr,
            non_winners_aggressive=l_aggr,
            non_winners_not_aggressive=l_calm,
            early_aggressive_non_winners=early_aggr_lost,
        )

    return PatternStats(
        total_instances=len(instances),
        total_auctions=len(auction_ids),
        total_bidders=len(bidder_ids),
        high_value_threshold=threshold,
        high_values=high,
        buckets=buckets,
        low_start_auctions=len(low),
        regular_start_auctions=len(regular),
        avg_bidders_low_start=avg_bidders(low),
        avg_bidders_regular_start=avg_bidders(regular),
    )


def format_stats_table(stats: PatternStats) -> str:
    """Render PatternStats as an aligned plain-text table."""

    def num(value: float | None, digits: int = 2) -> str:
        if value is None:
            return "n/a"
        return f"{value:.{digits}f}"

    rows: list[tuple[str, str, str]] = [
        ("Instances", str(stats.total_instances), ""),
        ("Auctions", str(stats.total_auctions), ""),
        ("Bidder ids", str(stats.total_bidders), ""),
    ]
    b = stats.buckets
    bucket_rows = [
        ("Winners, not aggressive", "winners_not_aggressive"),
        ("Winners, aggressive", "winners_aggressive"),
        ("Non-winners, aggressive", "non_winners_aggressive"),
        ("Non-winners, not aggressive", "non_winners_not_aggressive"),
        ("Early aggressive non-winners", "early_aggressive_non_winners"),
    ]
    for label, attr in bucket_rows:
        if b is None:
            rows.append((label, "n/a", ""))
        else:
            count = getattr(b, attr)
            rows.append((label, str(count), f"{stats._pct(count):.2f}%"))
    rows.extend(
        [
            ("Low-start auctions", str(stats.low_start_auctions), ""),
            ("Regular-start auctions", str(stats.regular_start_auctions), ""),
            ("Avg bidders, low start", num(stats.avg_bidders_low_start), ""),
            ("Avg bidders, regular start", num(stats.avg_bidders_regular_start), ""),
        ]
    )
    for name in METRIC_COLUMNS:
        count = stats.high_values[name]
        rows.append(
            (
                f"{name} > {stats.high_value_threshold:g}",
                str(count),
                f"{stats._pct(count):.2f}%",
            )
        )

    label_width = max(len(r[0]) for r in rows)
    count_width = max(len(r[1]) for r in rows)
    pct_width = max(len(r[2]) for r in rows)
    lines = ["Feature dataset statistics", "=" * 26]
    for label, count, pct in rows:
        line = f"{label:<{label_width}}  {count:>{count_width}}"
        if pct:
            line += f"  {pct:>{pct_width}}"
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"
