"""Deviation of observed values from a counterfactual projection.

For each month with observed value ``R`` and projected value ``Rhat`` the
nominal impact is ``R - Rhat`` and the percentage impact is
``100 * (R - Rhat) / Rhat``. The same pair is computed against each interval
bound, with the bound taking the place of ``Rhat``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyReport, RangeMismatch, ZeroProjection
from .forecasting import Forecast
from .series import MonthStamp, TimeSeries

BOUNDS = ("lo80", "hi80", "lo95", "hi95")

PER_PERIOD_HEADER = (
    "date", "actual", "predicted", "nominal", "percent",
    "nominal_lo80", "nominal_hi80", "nominal_lo95", "nominal_hi95",
    "percent_lo80", "percent_hi80", "percent_lo95", "percent_hi95",
)

SUMMARY_ROWS = (
    ("Point Estimate (Mean)", "point"),
    ("80% Lower Limit", "lo80"),
    ("80% Upper Limit", "hi80"),
    ("95% Lower Limit", "lo95"),
    ("95% Upper Limit", "hi95"),
)


@dataclass(frozen=True)
class ImpactReport:
    start: MonthStamp
    actual: np.ndarray
    predicted: np.ndarray
    nominal: dict  # "point" and each bound name -> array
    percent: dict

    def __len__(self) -> int:
        return self.actual.size

    def months(self) -> list[MonthStamp]:
        return [self.start.shift(i) for i in range(len(self))]

    def means(self) -> dict:
        out = {}
        for key in ("point",) + BOUNDS:
            out[f"nominal_{key}"] = float(np.mean(self.nominal[key]))
            out[f"percent_{key}"] = float(np.mean(self.percent[key]))
        return out

    def per_period_rows(self):
        for i, m in enumerate(self.months()):
            yield [m, self.actual[i], self.predicted[i], self.nominal["point"][i], self.percent["point"][i]] \
                + [self.nominal[b][i] for b in BOUNDS] + [self.percent[b][i] for b in BOUNDS]

    def to_csv(self, fmt=repr) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PER_PERIOD_HEADER)
        for m, *vals in self.per_period_rows():
            w.writerow([str(m)] + [fmt(float(v)) for v in vals])
        return buf.getvalue()


def impact(observed: TimeSeries, projection: Forecast) -> ImpactReport:
    """Nominal and percentage deviations of ``observed`` from ``projection``."""
    if observed.start != projection.start or len(observed) != len(projection):
        raise RangeMismatch(
            f"observed {observed.start}..{observed.end} and projection "
            f"{projection.start}..{projection.end} cover different months"
        )
    R = observed.values
    refs = {"point": projection.mean}
    refs.update({b: getattr(projection, b) for b in BOUNDS})
    for name, ref in refs.items():
        if np.any(ref == 0):
            raise ZeroProjection(f"projection '{name}' has a zero value; percentage impact undefined")
    nominal = {k: R - ref for k, ref in refs.items()}
    percent = {k: 100.0 * (R - ref) / ref for k, ref in refs.items()}
    return ImpactReport(observed.start, R.copy(), projection.mean.copy(), nominal, percent)


def impact_summary_table(report: ImpactReport) -> list[dict]:
    """Five rows: point estimate, then lower/upper limits of the 80% and 95% bands."""
    if len(report) == 0:
        raise EmptyReport("impact report has no periods")
    means = report.means()
    return [
        {"type": label, "nominal": means[f"nominal_{key}"], "percent": means[f"percent_{key}"]}
        for label, key in SUMMARY_ROWS
    ]


def summary_csv(rows: list[dict], fmt=repr) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("type", "nominal", "percent"))
    for r in rows:
        w.writerow((r["type"], fmt(r["nominal"]), fmt(r["percent"])))
    return buf.getvalue()


def summary_json(rows: list[dict], report: ImpactReport) -> str:
    doc = {"window": {"start": str(report.start), "end": str(report.start.shift(len(report) - 1)),
                      "periods": len(report)},
           "rows": rows}
    return json.dumps(doc, indent=2)
