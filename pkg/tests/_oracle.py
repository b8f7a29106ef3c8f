"""Brute-force reference implementations used to cross-check the package.

Everything here is written the slow, obvious way: full rescans, no
shared aggregates, no caching. Auctions are plain dicts:

    {
        "auction_id": int,
        "seller": str,
        "starting_price": float,
        "duration": int,        # seconds
        "start": int,           # countdown seconds (larger = earlier)
        "end": int,             # countdown seconds
        "bids": [(bidder, amount, time), ...],   # any order
    }

Keep this file independent of the package internals; it may only
import public dataclasses to convert views into plain dicts.
"""
from __future__ import annotations


def clamp(value: float) -> float:
    return max(0.0, min(1.0, value))


def chronological(auction: dict) -> list[tuple]:
    # Time counts down, so earliest first means descending time. Ties
    # go to the smaller amount first, then the lexically smaller name.
    return sorted(auction["bids"], key=lambda b: (-b[2], b[1], b[0]))


def winner(auction: dict) -> str:
    return chronological(auction)[-1][0]


def longest_run(sequence: list[str], target: str) -> int:
    longest = 0
    run = 0
    prev = None
    for item in sequence:
        run = run + 1 if item == prev else 1
        prev = item
        if item == target and run > longest:
            longest = run
    return longest


def bidders_of(auction: dict) -> list[str]:
    return sorted({b[0] for b in auction["bids"]})


def entered(auctions: list[dict], bidder: str) -> list[dict]:
    return [a for a in auctions if any(b[0] == bidder for b in a["bids"])]


def bidder_tendency(auctions: list[dict], bidder: str, seller: str) -> float:
    mine = entered(auctions, bidder)
    if len(mine) <= 1:
        return 0.0
    same_seller = [a for a in mine if a["seller"] == seller]
    return len(same_seller) / len(mine)


def early_bidding(auction: dict, bidder: str) -> float:
    first = max(t for (b, _, t) in auction["bids"] if b == bidder)
    return clamp(1.0 - (auction["start"] - first) / auction["duration"])


def bidding_ratio(auction: dict, bidder: str) -> float:
    mine = sum(1 for b in auction["bids"] if b[0] == bidder)
    return mine / len(auction["bids"])


def last_bidding(auction: dict, bidder: str) -> float:
    last = min(t for (b, _, t) in auction["bids"] if b == bidder)
    return clamp((last - auction["end"]) / auction["duration"])


def auction_starting_price(auctions: list[dict], auction: dict) -> float:
    average = sum(a["starting_price"] for a in auctions) / len(auctions)
    price = auction["starting_price"]
    if price >= average:
        return 0.0
    return 1.0 - price / average


def successive_outbidding(auction: dict, bidder: str) -> float:
    run = longest_run([b[0] for b in chronological(auction)], bidder)
    if run >= 4:
        return 1.0
    if run == 3:
        return 0.5
    return 0.0


def winning_ratio(auctions: list[dict], bidder: str) -> float:
    heavy = [
        a for a in entered(auctions, bidder) if bidding_ratio(a, bidder) > 0.1
    ]
    if not heavy:
        return 0.0
    wins = sum(1 for a in heavy if winner(a) == bidder)
    return clamp(1.0 - wins / len(heavy))


def auction_bids(auctions: list[dict], auction: dict) -> float:
    average = sum(len(a["bids"]) for a in auctions) / len(auctions)
    count = len(auction["bids"])
    if count <= average:
        return 0.0
    return 1.0 - average / count


def all_metrics(auctions: list[dict], auction: dict, bidder: str) -> dict[str, float]:
    return {
        "bidder_tendency": bidder_tendency(auctions, bidder, auction["seller"]),
        "early_bidding": early_bidding(auction, bidder),
        "bidding_ratio": bidding_ratio(auction, bidder),
        "last_bidding": last_bidding(auction, bidder),
        "auction_starting_price": auction_starting_price(auctions, auction),
        "successive_outbidding": successive_outbidding(auction, bidder),
        "winning_ratio": winning_ratio(auctions, bidder),
        "auction_bids": auction_bids(auctions, auction),
    }


def weighted(metric_values: dict[str, float], weights: dict[str, float]) -> float:
    total = sum(weights.values())
    return sum(weights[name] * metric_values[name] for name in metric_values) / total


def countdown(event, reference) -> int:
    # Whole seconds from the event up to the reference moment.
    return int(round((reference - event).total_seconds()))


def from_view(view) -> dict:
    """Flatten a package AuctionView into the plain-dict shape above."""
    return {
        "auction_id": view.auction_id,
        "seller": view.seller_id,
        "starting_price": float(view.starting_price),
        "duration": view.auction_duration_sec,
        "start": view.start_time_sec,
        "end": view.end_time_sec,
        "bids": [
            (b.bidder_id, float(b.bid_amount), b.bid_submit_time_sec)
            for b in view.bids
        ],
    }
