"""Parsing helpers and the cleansing pipeline."""
import logging
import random
from datetime import datetime
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shillbid.errors import (
    ConfigError,
    DataConsistencyError,
    InvariantError,
    ParseError,
    SchemaError,
)
from shillbid.ingest import DEFAULT_RAW_SCHEMA
from shillbid.model import group_bid_records, validate_dataset
from shillbid.preprocess import (
    REFERENCE_EPOCH,
    SECONDS_PER_DAY,
    ParsedAuction,
    ParsedBid,
    PipelineConfig,
    assign_identifiers,
    dedup_records,
    drop_irrelevant_columns,
    drop_missing_bidder,
    duration_days_to_seconds,
    filter_inconsistent_auctions,
    filter_low_activity_auctions,
    merge_datetime,
    parse_money,
    reconcile_counts,
    run_pipeline,
    run_pipeline_records,
    to_countdown_seconds,
)

from . import _oracle


# --- scalar parsing ---------------------------------------------------------

@pytest.mark.parametrize(
    "date_text, time_text, expected",
    [
        ("Jun-01-17", "19:24:55 PDT", datetime(2017, 6, 1, 19, 24, 55)),
        ("Jun-03-17", "19:24:55 PDT", datetime(2017, 6, 3, 19, 24, 55)),
        ("Jun-02-17", "08:20:50 PDT", datetime(2017, 6, 2, 8, 20, 50)),
        ("JUN-02-17", "08:20:50", datetime(2017, 6, 2, 8, 20, 50)),
        ("dec-31-16", "00:00:00 PST", datetime(2016, 12, 31, 0, 0, 0)),
    ],
)
def test_merge_datetime(date_text, time_text, expected):
    assert merge_datetime(date_text, time_text) == expected


@pytest.mark.parametrize(
    "date_text, time_text",
    [
        ("Junk-01-17", "19:24:55"),
        ("Jun-01", "19:24:55"),
        ("Jun-01-17", "19:24"),
        ("Jun-32-17", "19:24:55"),
        ("", "19:24:55"),
        ("Jun-01-17", ""),
        ("Jun-01-17", "25:00:00"),
    ],
)
def test_merge_datetime_rejects_malformed(date_text, time_text):
    with pytest.raises(ParseError):
        merge_datetime(date_text, time_text)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("650.50 $", "650.50"),
        ("US $1,299.99", "1299.99"),
        ("1299", "1299.00"),
        ("0.05 $", "0.05"),
        ("EUR 7,000", "7000.00"),
        ("3.999", "4.00"),   # round half up on the third digit
        ("3.994", "3.99"),
        ("3.995", "4.00"),
    ],
)
def test_parse_money(text, expected):
    assert parse_money(text) == Decimal(expected)
    assert str(parse_money(text)) == expected


@pytest.mark.parametrize("text", ["", "free", "$", "12 to 34", "1.2.3 4"])
def test_parse_money_rejects(text):
    with pytest.raises(ParseError):
        parse_money(text)


def test_duration_days_to_seconds():
    assert duration_days_to_seconds(5) == 432_000
    assert duration_days_to_seconds(1) == 86_400
    assert duration_days_to_seconds(10) == 864_000
    with pytest.raises(ParseError):
        duration_days_to_seconds(0)
    with pytest.raises(ParseError):
        duration_days_to_seconds(-3)


def test_duration_days_warns_on_unusual_values(caplog):
    with caplog.at_level(logging.WARNING):
        assert duration_days_to_seconds(4) == 4 * 86_400
    assert any("4" in r.message for r in caplog.records)


def test_countdown_reference_value():
    event = datetime(2017, 6, 24, 20, 11, 19)
    assert to_countdown_seconds(event, REFERENCE_EPOCH) == 1_050_521
    assert to_countdown_seconds(event, REFERENCE_EPOCH) == _oracle.countdown(
        event, REFERENCE_EPOCH
    )


def test_countdown_orders_later_events_smaller():
    earlier = datetime(2017, 6, 1, 0, 0, 0)
    later = datetime(2017, 6, 2, 0, 0, 0)
    assert to_countdown_seconds(later, REFERENCE_EPOCH) < to_countdown_seconds(
        earlier, REFERENCE_EPOCH
    )
    assert to_countdown_seconds(REFERENCE_EPOCH, REFERENCE_EPOCH) == 0


def test_countdown_rejects_events_after_reference_and_subseconds():
    with pytest.raises(ParseError):
        to_countdown_seconds(datetime(2017, 7, 7, 0, 0, 1), REFERENCE_EPOCH)
    with pytest.raises(ParseError):
        to_countdown_seconds(datetime(2017, 6, 1, 0, 0, 0, 500), REFERENCE_EPOCH)


@given(st.integers(min_value=0, max_value=10**7))
def test_countdown_matches_oracle_everywhere(offset):
    event = datetime.fromtimestamp(
        REFERENCE_EPOCH.timestamp() - offset
    )
    assert to_countdown_seconds(event, REFERENCE_EPOCH) == _oracle.countdown(
        event, REFERENCE_EPOCH
    )


# --- record-list stages -----------------------------------------------------

def test_drop_irrelevant_columns():
    rows = [{"a": "1", "b": "2", "c": "3"}]
    assert drop_irrelevant_columns(rows, ["a", "c"]) == [{"a": "1", "c": "3"}]
    with pytest.raises(SchemaError):
        drop_irrelevant_columns(rows, ["a", "nope"])


def test_dedup_records_keeps_first_and_ignores_key_order():
    rows = [{"a": "1", "b": "2"}, {"b": "2", "a": "1"}, {"a": "1", "b": "3"}]
    assert dedup_records(rows) == [rows[0], rows[2]]


def test_drop_missing_bidder():
    name = DEFAULT_RAW_SCHEMA["bidder_id"]
    rows = [{name: "x"}, {name: ""}, {name: "  "}, {name: "y"}]
    assert drop_missing_bidder(rows) == [rows[0], rows[3]]


def parsed_auction(key="u1", n_bids=5, seller="s1", **overrides):
    bids = [
        ParsedBid(f"b{i % 2}", Decimal(f"{10 + i}.00"), 500_000 - i * 1000)
        for i in range(n_bids)
    ]
    fields = dict(
        key=key,
        seller_id=seller,
        start_time_sec=600_000,
        end_time_sec=600_000 - 5 * 86400 + 0,
        duration_sec=5 * 86400,
        starting_price=Decimal("5.00"),
        winning_bid=Decimal(f"{10 + n_bids - 1}.00"),
        num_bids=n_bids,
        num_bidders=2,
    )
    fields.update(overrides)
    auction = ParsedAuction(**fields, bids=bids)
    return auction


def test_parsed_auction_helper_is_consistent():
    auction = parsed_auction()
    assert auction.start_time_sec - auction.end_time_sec == auction.duration_sec


def test_reconcile_counts_fixes_stored_counts():
    a = parsed_auction(num_bids=99, num_bidders=1)
    b = parsed_auction(key="u2")
    fixed_bids, fixed_bidders = reconcile_counts([a, b])
    assert (fixed_bids, fixed_bidders) == (1, 1)
    assert a.num_bids == 5 and a.num_bidders == 2
    assert b.num_bids == 5 and b.num_bidders == 2


def test_filter_low_activity_boundary():
    four = parsed_auction(key="u1", n_bids=4)
    five = parsed_auction(key="u2", n_bids=5)
    kept, removed = filter_low_activity_auctions([four, five], 5)
    assert kept == [five] and removed == [four]


def test_filter_inconsistent_is_strict():
    ok = parsed_auction(key="u1")
    start_high = parsed_auction(key="u2", starting_price=Decimal("14.01"))
    last_high = parsed_auction(key="u3", winning_bid=Decimal("13.99"))
    boundary = parsed_auction(
        key="u4", starting_price=Decimal("14.00")
    )  # equal start and winning price stays
    kept, removed = filter_inconsistent_auctions(
        [ok, start_high, last_high, boundary]
    )
    assert kept == [ok, boundary]
    assert removed == [start_high, last_high]


def test_assign_identifiers_orders_and_numbers_densely():
    older = parsed_auction(key="zzz", start_time_sec=700_000,
                           end_time_sec=700_000 - 5 * 86400)
    newer = parsed_auction(key="aaa")
    records = assign_identifiers([newer, older])
    # Larger start countdown = older start, so "zzz" comes first.
    assert [r.auction_id for r in records] == [1] * 5 + [2] * 5
    assert [r.record_id for r in records] == list(range(1, 11))
    validate_dataset(records)
    by_key = {records[0].seller_id}
    assert by_key == {"s1"}


def test_assign_identifiers_breaks_start_ties_by_key():
    a = parsed_auction(key="b")
    b = parsed_auction(key="a")
    records = assign_identifiers([a, b])
    first_auction_rows = [r for r in records if r.auction_id == 1]
    assert len(first_auction_rows) == 5
    # Same start second: the lexically smaller key gets the smaller id.
    assert records[0].auction_id == 1


# --- full pipeline over dict rows ------------------------------------------

def raw_row(
    url="https://x.example/itm/1",
    seller="s1",
    bidder="alice",
    amount="20.00 $",
    bid_date="Jun-02-17",
    bid_time="08:20:50 PDT",
    start_date="Jun-01-17",
    start_time="19:24:55 PDT",
    end_date="Jun-06-17",
    end_time="19:24:55 PDT",
    duration="5",
    starting_price="5.00 $",
    winning="30.00 $",
    num_bids="1",
    num_bidders="1",
    junk="filler",
):
    s = DEFAULT_RAW_SCHEMA
    return {
        s["auction_url"]: url,
        s["seller_id"]: seller,
        s["bidder_id"]: bidder,
        s["bid_amount"]: amount,
        s["bid_date"]: bid_date,
        s["bid_time"]: bid_time,
        s["start_date"]: start_date,
        s["start_time"]: start_time,
        s["end_date"]: end_date,
        s["end_time"]: end_time,
        s["duration_days"]: duration,
        s["starting_price"]: starting_price,
        s["winning_price"]: winning,
        s["num_bids"]: num_bids,
        s["num_bidders"]: num_bidders,
        "Irrelevant": junk,
    }


def five_bid_auction(url="https://x.example/itm/1", seller="s1", base_amount=20):
    rows = []
    for i in range(5):
        rows.append(
            raw_row(
                url=url,
                seller=seller,
                bidder=f"bidder{i % 3}",
                amount=f"{base_amount + i}.00 $",
                bid_time=f"08:2{i}:50 PDT",
            )
        )
    return rows


def test_run_pipeline_happy_path():
    records, report = run_pipeline(five_bid_auction())
    assert len(records) == 5
    validate_dataset(records)
    (view,) = group_bid_records(records)
    assert view.num_bids == 5
    assert view.num_bidders == 3
    assert view.auction_duration_sec == 432_000
    assert view.start_time_sec - view.end_time_sec == 432_000
    assert report.after.records == 5
    assert report.irrelevant_columns_dropped == 1
    assert report.before.attributes == 16


def test_run_pipeline_counts_duplicates_and_blanks():
    rows = five_bid_auction()
    rows.insert(2, dict(rows[1]))          # exact duplicate
    rows.append(raw_row(bidder="", amount="26.00 $", bid_time="09:00:00 PDT"))
    records, report = run_pipeline(rows)
    assert report.duplicate_records_removed == 1
    assert report.missing_bidder_rows_removed == 1
    assert len(records) == 5
    assert report.before.records == 7
    assert report.after.records == 5


def test_run_pipeline_drops_thin_and_inconsistent_auctions():
    rows = five_bid_auction()
    rows += five_bid_auction(url="https://x.example/itm/2", seller="s2")[:3]
    bad = five_bid_auction(url="https://x.example/itm/3", seller="s3")
    for row in bad:
        row[DEFAULT_RAW_SCHEMA["starting_price"]] = "44.00 $"
    rows += bad
    records, report = run_pipeline(rows)
    assert report.low_bid_auctions_removed == 1
    assert report.low_bid_rows_removed == 3
    assert report.inconsistent_auctions_removed == 1
    assert report.inconsistent_rows_removed == 5
    assert {r.auction_id for r in records} == {1}


def test_run_pipeline_counts_vanished_auctions_as_low_bid():
    rows = five_bid_auction()
    rows.append(raw_row(url="https://x.example/itm/9", bidder=""))
    records, report = run_pipeline(rows)
    assert report.missing_bidder_rows_removed == 1
    # The blank-bidder auction lost its only row before grouping.
    assert report.low_bid_auctions_removed == 1
    assert report.before.auctions == 2
    assert report.after.auctions == 1


def test_run_pipeline_rejects_auction_level_disagreement():
    rows = five_bid_auction()
    rows[3][DEFAULT_RAW_SCHEMA["winning_price"]] = "31.00 $"
    with pytest.raises(DataConsistencyError):
        run_pipeline(rows)


def test_run_pipeline_price_floor_is_counted_separately():
    rows = five_bid_auction()  # winning price 30.00
    config = PipelineConfig(min_winning_price=Decimal("30.00"))
    records, report = run_pipeline(rows, config)
    assert records == []
    assert report.price_filtered_rows == 5
    assert report.before.records == 0

    config = PipelineConfig(min_winning_price=Decimal("29.99"))
    records, report = run_pipeline(rows, config)
    assert len(records) == 5
    assert report.price_filtered_rows == 0


def test_run_pipeline_missing_column_is_schema_error():
    rows = [{"Bidder ID": "x"}]
    with pytest.raises(SchemaError):
        run_pipeline(rows)


def test_run_pipeline_is_permutation_invariant():
    corpus = (
        five_bid_auction()
        + five_bid_auction(url="https://x.example/itm/2", seller="s2", base_amount=40)
        + five_bid_auction(url="https://x.example/itm/3", seller="s1", base_amount=9)
    )
    base_records, base_report = run_pipeline(list(corpus))
    rng = random.Random(5)
    for _ in range(5):
        shuffled = list(corpus)
        rng.shuffle(shuffled)
        records, report = run_pipeline(shuffled)
        assert records == base_records
        assert report == base_report


def test_run_pipeline_records_is_idempotent():
    corpus = (
        five_bid_auction()
        + five_bid_auction(url="https://x.example/itm/2", seller="s2", base_amount=40)
    )
    once, _ = run_pipeline(corpus)
    twice, report = run_pipeline_records(once)
    assert twice == once
    removed = report.to_dict()["removed"]
    assert all(
        count == 0 for name, count in removed.items()
        if name != "irrelevant_columns_dropped"
    )
    assert report.num_bids_reconciled == 0
    assert report.num_bidders_reconciled == 0


def test_pipeline_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(min_bids=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(schema={"bidder_id": "Bidder ID"}).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(
            reference_epoch=datetime(2017, 7, 7, 0, 0, 0, 1)
        ).validate()
    PipelineConfig().validate()


def test_custom_epoch_shifts_all_times_equally():
    rows = five_bid_auction()
    default_records, _ = run_pipeline(rows)
    late = PipelineConfig(reference_epoch=datetime(2017, 7, 8))
    shifted_records, _ = run_pipeline(rows, late)
    for a, b in zip(default_records, shifted_records):
        assert b.bid_submit_time_sec - a.bid_submit_time_sec == 86400
        assert b.start_time_sec - a.start_time_sec == 86400
        assert b.end_time_sec - a.end_time_sec == 86400
        assert b.auction_duration_sec == a.auction_duration_sec
