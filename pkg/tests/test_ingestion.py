import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from sarimakit.errors import (
    DuplicateMonth, EmptySeries, GapInCalendar, NetworkError, ParseError, SchemaError,
)
from sarimakit.ingestion import (
    ColumnSpec, SourceConfig, cache_paths, fetch_sgs, load_csv, parse_number, read_csv_text,
    sgs_records_to_series, sgs_url, write_csv,
)
from sarimakit.series import MonthStamp, TimeSeries


def test_two_row_headerless_file(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("2000-01,100.0\n2000-02,101.5\n")
    s = load_csv(p)
    assert s.start == MonthStamp(2000, 1)
    assert s.values.tolist() == [100.0, 101.5]


def test_header_and_sorting():
    s = read_csv_text("date,value\n2000-03,3\n2000-01,1\n2000-02,2\n")
    assert s.values.tolist() == [1.0, 2.0, 3.0]


def test_gap_in_calendar():
    with pytest.raises(GapInCalendar) as err:
        read_csv_text("2000-01,1\n2000-02,2\n2000-04,4\n")
    assert err.value.month == "2000-03"


def test_duplicate_month():
    with pytest.raises(DuplicateMonth):
        read_csv_text("2000-01,1\n2000-01-15,2\n")


def test_parse_error_reports_row():
    with pytest.raises(ParseError) as err:
        read_csv_text("date,value\n2000-01,1\n2000-02,abc\n")
    assert err.value.row == 3


def test_brazilian_number_format():
    assert parse_number("1.234.567,89", decimal=",", thousands=".") == 1234567.89
    s = read_csv_text("data;valor\n01/2000;1.234.567,89\n02/2000;2,5\n",
                      ColumnSpec(delimiter=";", decimal=",", thousands="."))
    assert s.values.tolist() == [1234567.89, 2.5]


def test_round_trip(tmp_path, rng):
    s = TimeSeries(MonthStamp(1999, 11), rng.normal(size=40) * 1e9)
    write_csv(s, tmp_path / "x.csv")
    assert load_csv(tmp_path / "x.csv") == s


def test_daily_aggregation_last_observation():
    records = [
        {"data": "03/01/2000", "valor": "10"},
        {"data": "31/01/2000", "valor": "11"},
        {"data": "15/01/2000", "valor": "99"},
        {"data": "01/02/2000", "valor": "20"},
        {"data": "28/02/2000", "valor": "21,5"},
    ]
    s, aggregated = sgs_records_to_series(records)
    assert aggregated
    assert s == TimeSeries(MonthStamp(2000, 1), [11.0, 21.5])


def test_schema_errors():
    with pytest.raises(SchemaError):
        sgs_records_to_series({"data": "x"})
    with pytest.raises(SchemaError):
        sgs_records_to_series([{"date": "01/01/2000"}])
    with pytest.raises(EmptySeries):
        sgs_records_to_series([])


def test_url_layout():
    cfg = SourceConfig("sgs", series_code=1234, base_url="http://h/",
                       date_range=(MonthStamp(2000, 1), MonthStamp(2020, 2)))
    assert sgs_url(cfg) == ("http://h/dados/serie/bcdata.sgs.1234/dados?formato=json"
                            "&dataInicial=01/01/2000&dataFinal=29/02/2020")


class MockSGS:
    """Local HTTP server standing in for the SGS endpoint."""

    def __init__(self):
        self.status = 200
        self.payload = []
        self.requests = []
        owner = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                owner.requests.append(self.path)
                body = json.dumps(owner.payload).encode()
                self.send_response(owner.status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def sgs(tmp_path):
    server = MockSGS()
    server.payload = [
        {"data": "01/01/2020", "valor": "100,5"},
        {"data": "01/02/2020", "valor": "0,00"},
        {"data": "01/03/2020", "valor": "1.234,25"},
    ]
    yield server, SourceConfig("sgs", series_code=27789, base_url=server.url, cache_dir=tmp_path / "cache")
    server.close()


def test_fetch_three_records(sgs):
    server, cfg = sgs
    s = fetch_sgs(cfg)
    assert len(s) == 3
    assert s.values.tolist() == [100.5, 0.0, 1234.25]
    q = parse_qs(urlparse(server.requests[0]).query)
    assert q["formato"] == ["json"]
    csv_path, meta_path = cache_paths(cfg)
    assert csv_path.exists()
    meta = json.loads(meta_path.read_text())
    assert meta["series_code"] == 27789 and meta["n_records"] == 3


def test_warm_cache_is_idempotent(sgs):
    server, cfg = sgs
    a = fetch_sgs(cfg)
    b = fetch_sgs(cfg)
    assert a == b
    assert len(server.requests) == 1


def test_server_error_falls_back_to_cache(sgs, caplog):
    server, cfg = sgs
    first = fetch_sgs(cfg)
    server.status = 500
    with caplog.at_level(logging.WARNING):
        again = fetch_sgs(cfg, refresh=True)
    assert again == first
    assert len(server.requests) == 2
    assert any("cached copy" in r.message for r in caplog.records)


def test_server_error_without_cache(sgs):
    server, cfg = sgs
    server.status = 500
    with pytest.raises(NetworkError) as err:
        fetch_sgs(cfg)
    assert err.value.status == 500


def test_corrupt_cache_is_refetched(sgs):
    server, cfg = sgs
    csv_path, _ = cache_paths(cfg)
    csv_path.parent.mkdir(parents=True)
    csv_path.write_text("garbage\n")
    assert len(fetch_sgs(cfg)) == 3
    assert len(server.requests) == 1
