"""Command-line front end.

Commands: search, fit, diagnose, forecast, impact, fetch. Each writes its
data files plus a ``manifest.json`` into ``--out``. Exit codes: 0 success,
1 usage, 2 data, 3 numerical.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import math
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from . import __version__
from .counterfactual import impact, impact_summary_table, summary_csv, summary_json
from .diagnostics import acf, pacf, residual_report, residuals_of
from .errors import DataError, SarimaError
from .estimation import FitConfig, FitResult, fit
from .forecasting import Forecast, forecast
from .ingestion import ColumnSpec, SourceConfig, load_source, to_csv_text
from .kernel import ModelOrder
from .plots import line_chart_svg
from .search import SearchConfig, SearchSpace, grid_search, in_sample_accuracy, select_final
from .series import MonthStamp, TimeSeries, split

log = logging.getLogger("sarimakit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# formatting and file output
# ---------------------------------------------------------------------------

def make_formatter(precision: int):
    """Round-half-even to ``precision`` significant digits; 0 keeps full precision."""
    def fmt(x: float) -> str:
        x = float(x)
        if not math.isfinite(x) or precision <= 0:
            return repr(x)
        if x == 0.0:
            return "0"
        d = Decimal(repr(x))
        q = d.quantize(Decimal(1).scaleb(d.adjusted() - precision + 1), rounding=ROUND_HALF_EVEN)
        return format(q.normalize(), "f")
    return fmt


class Output:
    def __init__(self, out_dir: Path, svg: bool):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.svg = svg
        self.written: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        self.written[name] = hashlib.sha256(text.encode()).hexdigest()

    def write_json(self, name: str, doc) -> None:
        self.write(name, json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (MonthStamp, Path)):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_manifest(out: Output, command: str, args: argparse.Namespace, data_hash: str | None, started: str) -> None:
    path = out.dir / "manifest.json"
    manifest = {"tool": "sarimakit", "version": __version__, "commands": {}}
    if path.exists():
        try:
            prev = json.loads(path.read_text())
            manifest["commands"] = prev.get("commands", {})
        except ValueError:
            pass
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    manifest["commands"][command] = {
        "config": json.loads(json.dumps(config, default=_json_default)),
        "input_sha256": data_hash,
        "started": started,
        "finished": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": {name: {"path": str(out.dir / name), "sha256": h} for name, h in sorted(out.written.items())},
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _csv(header: list[str], rows, fmt) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, (float, np.floating)):
                cells.append(fmt(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------

def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, quotes are optional.

    Keys are flag names without the leading dashes (``train-end`` or
    ``train_end``). ``true``/``false`` become booleans and integers are
    converted.
    """
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        val = val.strip().strip('"').strip("'")
        if val.lower() in ("true", "false"):
            out[key] = val.lower() == "true"
        else:
            try:
                out[key] = int(val)
            except ValueError:
                out[key] = val
    return out


# ---------------------------------------------------------------------------
# shared pipeline steps
# ---------------------------------------------------------------------------

def _month(text: str) -> MonthStamp:
    try:
        return MonthStamp.parse(text)
    except DataError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load(args) -> tuple[TimeSeries, str]:
    if bool(args.csv) == bool(args.sgs):
        raise UsageError("exactly one of --csv or --sgs is required")
    date_range = None
    if args.start or args.end:
        if not (args.start and args.end):
            raise UsageError("--start and --end must be given together")
        date_range = (args.start, args.end)
    if args.csv:
        source = SourceConfig("csv", path=args.csv, date_range=date_range)
    else:
        source = SourceConfig("sgs", series_code=args.sgs, base_url=args.sgs_base_url,
                              cache_dir=Path(args.cache_dir), date_range=date_range)
    spec = ColumnSpec(delimiter=args.delimiter, decimal=args.decimal, thousands=args.thousands)
    series = load_source(source, spec, refresh=args.refresh)
    digest = hashlib.sha256(to_csv_text(series).encode()).hexdigest()
    return series, digest


def _splits(args, series: TimeSeries):
    if args.train_end is None:
        return split(series, series.end, 0)
    return split(series, args.train_end, args.test_len)


def _fit_config(args) -> FitConfig:
    return FitConfig(tol=args.tol, max_iter=args.max_iter)


def _obtain_fit(args, training: TimeSeries) -> FitResult:
    if getattr(args, "fit", None):
        try:
            return FitResult.from_dict(json.loads(Path(args.fit).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise DataError(f"cannot read fit file {args.fit}: {exc}") from None
    if not args.order:
        raise UsageError("--order or --fit is required")
    return fit(ModelOrder.parse(args.order, s=args.period), training, _fit_config(args))


def _maybe(values, i):
    return float(values[i]) if values is not None and 0 <= i < len(values) else None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fetch(args, out: Output, fmt):
    series, digest = _load(args)
    out.write("series.csv", to_csv_text(series))
    return digest


def _series_plot(out: Output, series: TimeSeries, fmt):
    out.write("series.csv", _csv(["date", "value"], ((m, v) for m, v in series), fmt))
    if out.svg:
        out.write("series.svg", line_chart_svg({"observed": list(series.values)},
                                               [str(m) for m in series.months()], "Observed series"))


def cmd_fit(args, out: Output, fmt):
    series, digest = _load(args)
    sp = _splits(args, series)
    result = _obtain_fit(args, sp.training)
    out.write_json("fit.json", result.to_dict())
    _series_plot(out, series, fmt)
    o = result.order
    resid = residuals_of(result, sp.training)
    y = sp.training.values
    fitted = [None] * o.n_diff + list(y[o.n_diff:] - resid)
    rows = [(m, y[i], fitted[i]) for i, m in enumerate(sp.training.months())]
    out.write("fit_overlay.csv", _csv(["date", "actual", "fitted"], rows, fmt))
    if out.svg:
        out.write("fit_overlay.svg", line_chart_svg(
            {"actual": list(y), "fitted": fitted}, [str(m) for m in sp.training.months()],
            f"{o} fit on the training window"))
    ins = in_sample_accuracy(result, sp.training)
    print(f"{o}: loglik={result.loglik:.2f} aic={result.aic:.3f} sigma2={result.sigma2:.6g} "
          f"rmse={ins.rmse:.6g} mape={ins.mape:.4f}% converged={result.converged}")
    return digest


def cmd_diagnose(args, out: Output, fmt):
    series, digest = _load(args)
    sp = _splits(args, series)
    result = _obtain_fit(args, sp.training)
    report = residual_report(result, sp.training, h=args.lags, fitdf=args.fitdf,
                             adf_regression=args.adf_regression)
    out.write_json("residual_report.json", report.to_dict())
    resid = residuals_of(result, sp.training)
    max_lag = min(args.max_lag, resid.size - 1)
    r = acf(resid, max_lag)
    pr = pacf(resid, max_lag)
    bound = 1.959963985 / math.sqrt(resid.size)
    rows = [(k, r[k], pr[k - 1] if k else None, bound) for k in range(max_lag + 1)]
    out.write("acf_pacf.csv", _csv(["lag", "acf", "pacf", "bound95"], rows, fmt))
    if out.svg:
        labels = [str(k) for k in range(max_lag + 1)]
        out.write("acf_pacf.svg", line_chart_svg(
            {"acf": list(r), "pacf": [None] + list(pr), "+bound": [bound] * (max_lag + 1),
             "-bound": [-bound] * (max_lag + 1)}, labels, "Residual ACF and PACF"))
    print(report.table())
    return digest


def _band_rows(fc: Forecast, series: TimeSeries):
    rows = []
    for m, mean, se, lo80, hi80, lo95, hi95 in fc.rows():
        i = series.start.months_until(m)
        rows.append((m, _maybe(series.values, i), mean, lo80, hi80, lo95, hi95))
    return rows


def cmd_forecast(args, out: Output, fmt):
    series, digest = _load(args)
    sp = _splits(args, series)
    result = _obtain_fit(args, sp.training)
    h = args.h if args.h is not None else max(1, args.test_len)
    fc = forecast(result, sp.training, h)
    out.write("forecast.csv", fc.to_csv(fmt))
    rows = _band_rows(fc, series)
    out.write("forecast_bands.csv", _csv(["date", "actual", "mean", "lo80", "hi80", "lo95", "hi95"], rows, fmt))
    if len(sp.test):
        from .metrics import accuracy
        k = min(len(sp.test), h)
        acc = accuracy(sp.test.values[:k], fc.mean[:k])
        out.write_json("test_accuracy.json", {"order": str(result.order), "horizon": k, **acc.to_dict()})
        print(f"test window: rmse={acc.rmse:.6g} mape={acc.mape:.4f}%")
    if out.svg:
        out.write("forecast_bands.svg", _band_svg(rows, f"{result.order} forecast"))
    return digest


def _band_svg(rows, title):
    labels = [str(r[0]) for r in rows]
    col = list(zip(*[r[1:] for r in rows]))
    return line_chart_svg({"actual": list(col[0]), "forecast": list(col[1])}, labels, title,
                          bands=[(list(col[4]), list(col[5]), "#1f5fbf"), (list(col[2]), list(col[3]), "#1f5fbf")])


def cmd_impact(args, out: Output, fmt):
    series, digest = _load(args)
    if args.forecast:
        try:
            fc = Forecast.from_csv(Path(args.forecast).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read forecast file: {exc}") from None
        first, last = fc.start, fc.end
    else:
        if args.train_end is None:
            raise UsageError("impact without --forecast needs --train-end and --order/--fit")
        sp = _splits(args, series)
        if len(sp.comparison) == 0:
            raise DataError("comparison window is empty; nothing to compare")
        result = _obtain_fit(args, sp.training)
        fc = forecast(result, sp.training, len(sp.test) + len(sp.comparison))
        first, last = sp.comparison.start, sp.comparison.end
    if args.window:
        a, _, b = args.window.partition("..")
        first, last = MonthStamp.parse(a), MonthStamp.parse(b or a)
    last = min(last, series.end, fc.end)
    first = max(first, series.start, fc.start)
    observed = series.window(first, last)
    proj = fc.slice(first, last)
    report = impact(observed, proj)
    rows = impact_summary_table(report)
    out.write("impact.csv", report.to_csv(fmt))
    out.write("impact_summary.csv", summary_csv(rows, fmt))
    out.write("impact_summary.json", summary_json(rows, report))
    overlay = _band_rows(fc, series)
    out.write("comparison_overlay.csv",
              _csv(["date", "actual", "mean", "lo80", "hi80", "lo95", "hi95"], overlay, fmt))
    if out.svg:
        out.write("comparison_overlay.svg", _band_svg(overlay, "Observed versus projected"))
    for r in rows:
        print(f"{r['type']:<24} {fmt(r['nominal']):>20} {fmt(r['percent']):>10}%")
    return digest


def cmd_search(args, out: Output, fmt):
    series, digest = _load(args)
    if args.train_end is None:
        args.train_end = series.end.shift(-args.test_len)
    sp = _splits(args, series)
    space = SearchSpace.parse(args.space, s=args.period) if args.space else SearchSpace(s=args.period)
    config = SearchConfig(fit=_fit_config(args), shortlist_size=args.shortlist, jobs=args.jobs,
                          time_budget=args.time_budget)
    board = grid_search(sp, space, config)
    order, rationale = select_final(board)
    out.write("leaderboard.csv", board.to_csv(fmt))
    out.write("candidates.csv", board.candidates_csv(fmt))
    out.write_json("leaderboard.json", board.to_dict())
    out.write_json("selection.json", {"partial": board.partial, "failures": len(board.failures), **rationale})
    print(f"{len(board.entries)} of {board.n_cells} cells fitted, {len(board.failures)} failed"
          + (" (partial: time budget exhausted)" if board.partial else ""))
    print(f"selected {order}")
    return digest


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("data source")
    g.add_argument("--config", metavar="PATH", help="key = value file mirroring these flags; flags win")
    g.add_argument("--csv", metavar="PATH", help="monthly series as CSV (date,value)")
    g.add_argument("--sgs", metavar="CODE", type=int, help="BCB SGS series code to fetch")
    g.add_argument("--sgs-base-url", default="https://api.bcb.gov.br", metavar="URL", help="SGS API base URL")
    g.add_argument("--cache-dir", default=".sgs-cache", metavar="DIR", help="SGS download cache")
    g.add_argument("--refresh", action="store_true", help="query SGS even when a cached copy exists")
    g.add_argument("--delimiter", default=",", help="CSV field delimiter")
    g.add_argument("--decimal", default=".", help="decimal separator of CSV values")
    g.add_argument("--thousands", default=None, help="thousands separator of CSV values")
    g.add_argument("--start", type=_month, metavar="YYYY-MM", help="first month to use")
    g.add_argument("--end", type=_month, metavar="YYYY-MM", help="last month to use")
    g = common.add_argument_group("split and model")
    g.add_argument("--train-end", type=_month, metavar="YYYY-MM", help="last training month")
    g.add_argument("--test-len", type=int, default=12, metavar="N", help="test window length (default 12)")
    g.add_argument("--period", type=int, default=12, metavar="S", help="seasonal period (default 12)")
    g.add_argument("--tol", type=float, default=1e-8, help="relative log-likelihood tolerance")
    g.add_argument("--max-iter", type=int, default=2000, metavar="N", help="simplex iterations per start")
    g = common.add_argument_group("output")
    g.add_argument("--out", default="out", metavar="DIR", help="output directory (default out)")
    g.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes; results do not depend on it")
    g.add_argument("--seed", type=int, default=0, metavar="N", help="seed for any randomized step")
    g.add_argument("--svg", action="store_true", help="also render SVG charts")
    g.add_argument("--precision", type=int, default=6, metavar="N",
                   help="significant digits in CSV tables, 0 for full precision (default 6)")
    g.add_argument("--log-level", default="WARNING", help="logging level")

    parser = _Parser(prog="sarimakit", description="Seasonal ARIMA search, diagnostics and counterfactual impact.")
    parser.add_argument("--version", action="version", version=f"sarimakit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def model_args(p, with_fit_file=True):
        p.add_argument("--order", metavar="p,d,q,P,D,Q[,s]", help="model order")
        if with_fit_file:
            p.add_argument("--fit", metavar="PATH", help="fit.json from a previous `fit` run")

    p = sub.add_parser("search", parents=[common], help="exhaustive order search")
    p.add_argument("--space", metavar="SPEC", help="e.g. p=0..5,d=0..1,q=0..5,P=0..5,D=0..1,Q=0..5")
    p.add_argument("--shortlist", type=int, default=10, metavar="N", help="entries kept for selection")
    p.add_argument("--time-budget", type=float, default=None, metavar="SECONDS", help="stop and flag partial results")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("fit", parents=[common], help="fit one model on the training window")
    model_args(p, with_fit_file=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", parents=[common], help="residual tests and ACF/PACF")
    model_args(p)
    p.add_argument("--lags", type=int, default=24, metavar="H", help="portmanteau lags (default 24)")
    p.add_argument("--fitdf", type=int, default=None, metavar="N", help="degrees of freedom removed (default p+q+P+Q)")
    p.add_argument("--adf-regression", choices=("none", "drift", "trend"), default="trend", help="ADF form")
    p.add_argument("--max-lag", type=int, default=36, metavar="K", help="ACF/PACF lags to emit")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("forecast", parents=[common], help="forecast from the end of the training window")
    model_args(p)
    p.add_argument("--h", type=int, default=None, metavar="N", help="horizon (default --test-len)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("impact", parents=[common], help="observed versus projected deviations")
    model_args(p)
    p.add_argument("--forecast", metavar="PATH", help="forecast.csv to compare against")
    p.add_argument("--window", metavar="YYYY-MM..YYYY-MM", help="months to compare")
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("fetch", parents=[common], help="download and cache a series")
    p.set_defaults(func=cmd_fetch)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config(args.config)
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, val in values.items():
            action = known[key]
            if action.type is not None and isinstance(val, (str, int)) and not isinstance(val, bool):
                values[key] = action.type(str(val))
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    try:
        args = _parse(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        out = Output(Path(args.out), args.svg)
        fmt = make_formatter(args.precision)
        digest = args.func(args, out, fmt)
        _write_manifest(out, args.command, args, digest, started)
        return 0
    except UsageError as exc:
        _report_error("UsageError", str(exc), 1)
        return 1
    except SarimaError as exc:
        _report_error(type(exc).__name__, str(exc), exc.exit_code)
        return exc.exit_code
    except OSError as exc:
        _report_error("IoError", str(exc), 2)
        return 2


def _report_error(kind: str, message: str, code: int) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
