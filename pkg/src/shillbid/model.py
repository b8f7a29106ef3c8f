"""Core domain types: bid records, auction views, feature instances.

Time is stored as countdown seconds: whole seconds remaining until a
fixed reference moment, so later events carry smaller values. All money
is fixed-point decimal with exactly two fractional digits.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, EmptyDatasetError, InvariantError

CENT = Decimal("0.01")

PREPROCESSED_COLUMNS = (
    "record_id",
    "auction_id",
    "seller_id",
    "bidder_id",
    "bid_amount",
    "bid_submit_time_sec",
    "num_bidders",
    "num_bids",
    "starting_price",
    "winning_bid",
    "auction_duration_sec",
    "start_time_sec",
    "end_time_sec",
)

METRIC_COLUMNS = (
    "bidder_tendency",
    "early_bidding",
    "bidding_ratio",
    "last_bidding",
    "auction_starting_price",
    "successive_outbidding",
    "winning_ratio",
    "auction_bids",
)

SB_COLUMNS = ("auction_id", "bidder_id") + METRIC_COLUMNS

DEFAULT_WEIGHTS: dict[str, float] = {
    "bidder_tendency": 0.5,
    "early_bidding": 0.3,
    "bidding_ratio": 0.7,
    "last_bidding": 0.5,
    "auction_starting_price": 0.3,
    "successive_outbidding": 0.7,
    "winning_ratio": 0.7,
    "auction_bids": 0.3,
}


@dataclass(frozen=True, slots=True)
class BidRecord:
    """One retained bid, flattened with its auction-level context."""

    record_id: int
    auction_id: int
    seller_id: str
    bidder_id: str
    bid_amount: Decimal
    bid_submit_time_sec: int
    num_bidders: int
    num_bids: int
    starting_price: Decimal
    winning_bid: Decimal
    auction_duration_sec: int
    start_time_sec: int
    end_time_sec: int


@dataclass(frozen=True, slots=True)
class Bid:
    """A single bid inside an auction view."""

    bidder_id: str
    bid_amount: Decimal
    bid_submit_time_sec: int
    record_id: int


@dataclass(frozen=True, slots=True)
class AuctionView:
    """One auction with its bids in canonical chronological order.

    Bids are sorted by descending bid_submit_time_sec (earliest first,
    since time counts down), ties by ascending bid_amount, then by
    record_id. The last element is therefore the chronologically last,
    highest bid.
    """

    auction_id: int
    seller_id: str
    num_bidders: int
    num_bids: int
    starting_price: Decimal
    winning_bid: Decimal
    auction_duration_sec: int
    start_time_sec: int
    end_time_sec: int
    bids: tuple[Bid, ...]


def bid_sort_key(bid: Bid) -> tuple[int, Decimal, int]:
    return (-bid.bid_submit_time_sec, bid.bid_amount, bid.record_id)


def winner_of(auction: AuctionView) -> Bid:
    """Return the winning bid: the chronologically last one.

    Two bids in the same second are settled by amount, so the higher
    amount wins the tie.
    """
    if not auction.bids:
        raise EmptyDatasetError(f"auction {auction.auction_id} has no bids")
    return auction.bids[-1]


_AUCTION_LEVEL = (
    "seller_id",
    "num_bidders",
    "num_bids",
    "starting_price",
    "winning_bid",
    "auction_duration_sec",
    "start_time_sec",
    "end_time_sec",
)


def group_bid_records(records: Iterable[BidRecord]) -> list[AuctionView]:
    """Group flat records into auction views, validating agreement.

    Every record of an auction must agree on each auction-level field,
    and the stored counts must match the grouped rows.
    """
    by_auction: dict[int, list[BidRecord]] = {}
    for rec in records:
        by_auction.setdefault(rec.auction_id, []).append(rec)

    views: list[AuctionView] = []
    for auction_id in sorted(by_auction):
        rows = by_auction[auction_id]
        head = rows[0]
        for row in rows[1:]:
            for name in _AUCTION_LEVEL:
                if getattr(row, name) != getattr(head, name):
                    raise InvariantError(
                        f"auction {auction_id}: records disagree on {name}"
                    )
        bids = sorted(
            (
                Bid(r.bidder_id, r.bid_amount, r.bid_submit_time_sec, r.record_id)
                for r in rows
            ),
            key=bid_sort_key,
        )
        if len(bids) != head.num_bids:
            raise InvariantError(
                f"auction {auction_id}: num_bids={head.num_bids} but {len(bids)} rows"
            )
        distinct = len({b.bidder_id for b in bids})
        if distinct != head.num_bidders:
            raise InvariantError(
                f"auction {auction_id}: num_bidders={head.num_bidders} "
                f"but {distinct} distinct bidders"
            )
        views.append(
            AuctionView(
                auction_id=auction_id,
                seller_id=head.seller_id,
                num_bidders=head.num_bidders,
                num_bids=head.num_bids,
                starting_price=head.starting_price,
                winning_bid=head.winning_bid,
                auction_duration_sec=head.auction_duration_sec,
                start_time_sec=head.start_time_sec,
                end_time_sec=head.end_time_sec,
                bids=tuple(bids),
            )
        )
    return views


def validate_bid_record(rec: BidRecord) -> list[str]:
    """Return human-readable violations for a single record."""
    bad: list[str] = []
    if rec.record_id < 1:
        bad.append(f"record_id {rec.record_id} is not positive")
    if rec.auction_id < 1:
        bad.append(f"auction_id {rec.auction_id} is not positive")
    if not rec.bidder_id or rec.bidder_id.isspace():
        bad.append("bidder_id is blank")
    if not rec.seller_id or rec.seller_id.isspace():
        bad.append("seller_id is blank")
    # Compare exponents, not values: Decimal("650.5") == Decimal("650.50")
    # numerically, but only the latter serializes with two digits.
    if not rec.bid_amount.is_finite() or rec.bid_amount.as_tuple().exponent != -2:
        bad.append(f"bid_amount {rec.bid_amount} is not a 2-digit fixed-point amount")
    if (
        not rec.starting_price.is_finite()
        or rec.starting_price.as_tuple().exponent != -2
    ):
        bad.append(
            f"starting_price {rec.starting_price} is not a 2-digit fixed-point amount"
        )
    if not rec.winning_bid.is_finite() or rec.winning_bid.as_tuple().exponent != -2:
        bad.append(f"winning_bid {rec.winning_bid} is not a 2-digit fixed-point amount")
    if not 1 <= rec.num_bidders <= rec.num_bids:
        bad.append(f"counts out of order: num_bidders={rec.num_bidders} num_bids={rec.num_bids}")
    if rec.winning_bid <= 0:
        bad.append(f"winning_bid {rec.winning_bid} is not positive")
    if not 0 <= rec.starting_price <= rec.winning_bid:
        bad.append(
            f"starting_price {rec.starting_price} outside [0, winning_bid={rec.winning_bid}]"
        )
    if rec.bid_amount > rec.winning_bid:
        bad.append(f"bid_amount {rec.bid_amount} above winning_bid {rec.winning_bid}")
    if rec.auction_duration_sec <= 0:
        bad.append(f"auction_duration_sec {rec.auction_duration_sec} is not positive")
    if rec.start_time_sec - rec.end_time_sec != rec.auction_duration_sec:
        bad.append(
            f"duration mismatch: start-end={rec.start_time_sec - rec.end_time_sec} "
            f"!= {rec.auction_duration_sec}"
        )
    if rec.end_time_sec < 0:
        bad.append(f"end_time_sec {rec.end_time_sec} is negative")
    if not rec.end_time_sec <= rec.bid_submit_time_sec <= rec.start_time_sec:
        bad.append(
            f"bid time {rec.bid_submit_time_sec} outside auction window "
            f"[{rec.end_time_sec}, {rec.start_time_sec}]"
        )
    return bad


def validate_dataset(records: Sequence[BidRecord]) -> list[AuctionView]:
    """Check every record plus the dataset-wide identifier invariants.

    Raises InvariantError with the first few violations; passing means
    ids are dense 1..N / 1..M and all per-record and cross-record rules
    hold. Returns the grouped auction views, which the grouping check
    produces anyway, so callers need not group a second time.
    """
    violations: list[str] = []
    seen_record_ids: set[int] = set()
    auction_ids: set[int] = set()
    for rec in records:
        for msg in validate_bid_record(rec):
            violations.append(f"record {rec.record_id}: {msg}")
        if rec.record_id in seen_record_ids:
            violations.append(f"record_id {rec.record_id} appears more than once")
        seen_record_ids.add(rec.record_id)
        auction_ids.add(rec.auction_id)
        if len(violations) >= 20:
            break
    if not violations:
        if records and seen_record_ids != set(range(1, len(records) + 1)):
            violations.append("record_id values are not dense 1..M")
        if auction_ids and auction_ids != set(range(1, len(auction_ids) + 1)):
            violations.append("auction_id values are not dense 1..N")
    views: list[AuctionView] = []
    if not violations:
        try:
            views = group_bid_records(records)
        except InvariantError as exc:
            violations.append(str(exc))
    if violations:
        head = "; ".join(violations[:5])
        more = len(violations) - 5
        if more > 0:
            head += f" (+{more} more)"
        raise InvariantError(head)
    return views


@dataclass(frozen=True, slots=True)
class SBInstance:
    """Eight behavior metrics for one (auction, bidder) pair.

    Every metric lies in [0, 1]; successive_outbidding only takes the
    values 0, 0.5 and 1.
    """

    auction_id: int
    bidder_id: str
    bidder_tendency: float
    early_bidding: float
    bidding_ratio: float
    last_bidding: float
    auction_starting_price: float
    successive_outbidding: float
    winning_ratio: float
    auction_bids: float

    def metric_values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in METRIC_COLUMNS)

    def metric_items(self) -> list[tuple[str, float]]:
        return [(name, getattr(self, name)) for name in METRIC_COLUMNS]


def validate_weights(weights: Mapping[str, float]) -> None:
    """Reject weight tables with unknown names or out-of-range values."""
    for name in weights:
        if name not in METRIC_COLUMNS:
            raise ConfigError(f"unknown metric name in weight table: {name!r}")
    for name in METRIC_COLUMNS:
        if name not in weights:
            raise ConfigError(f"weight table is missing {name!r}")
        value = weights[name]
        if not isinstance(value, (int, float)) or not 0 < value <= 1:
            raise ConfigError(f"weight for {name!r} must be in (0, 1], got {value!r}")


_BID_RECORD_FIELDS = tuple(f.name for f in fields(BidRecord))
