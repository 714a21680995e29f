"""Exhaustive SARIMA order search and final model selection."""

from __future__ import annotations

import itertools
import json
import logging
import re
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .errors import AllCellsFailed, DataError, EmptySearchSpace, EmptyShortlist, SarimaError
from .estimation import FitConfig, FitResult, fit
from .forecasting import forecast
from .kernel import ModelOrder, innovations
from .metrics import AccuracyReport, accuracy
from .series import DataSplits, TimeSeries, difference

log = logging.getLogger(__name__)

_RANGE_RE = re.compile(r"^\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$")


@dataclass(frozen=True)
class SearchSpace:
    p_range: tuple[int, int] = (0, 5)
    d_range: tuple[int, int] = (0, 1)
    q_range: tuple[int, int] = (0, 5)
    P_range: tuple[int, int] = (0, 5)
    D_range: tuple[int, int] = (0, 1)
    Q_range: tuple[int, int] = (0, 5)
    s: int = 12

    def __post_init__(self):
        for name in ("p_range", "d_range", "q_range", "P_range", "D_range", "Q_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise EmptySearchSpace(f"{name}={lo}..{hi} is empty or negative")

    @classmethod
    def parse(cls, text: str, s: int = 12) -> "SearchSpace":
        """Parse ``"p=0..1,q=0..1,d=1,D=1,P=0,Q=0"``; omitted keys keep defaults."""
        kw = {}
        for part in filter(None, (x.strip() for x in text.split(","))):
            key, _, val = part.partition("=")
            key = key.strip()
            if key == "s":
                s = int(val)
                continue
            if key not in ("p", "d", "q", "P", "D", "Q"):
                raise DataError(f"unknown search-space key {key!r}")
            m = _RANGE_RE.match(val)
            if not m:
                raise DataError(f"bad range {val!r} for {key}")
            lo = int(m.group(1))
            hi = int(m.group(2)) if m.group(2) is not None else lo
            kw[f"{key}_range"] = (lo, hi)
        return cls(s=s, **kw)

    def cells(self) -> list[ModelOrder]:
        ranges = [range(lo, hi + 1) for lo, hi in
                  (self.p_range, self.d_range, self.q_range, self.P_range, self.D_range, self.Q_range)]
        return [ModelOrder(*c, s=self.s) for c in itertools.product(*ranges)]

    def __len__(self) -> int:
        n = 1
        for lo, hi in (self.p_range, self.d_range, self.q_range, self.P_range, self.D_range, self.Q_range):
            n *= hi - lo + 1
        return n

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in
                ("p_range", "d_range", "q_range", "P_range", "D_range", "Q_range")} | {"s": self.s}


@dataclass(frozen=True)
class SearchConfig:
    fit: FitConfig = FitConfig()
    shortlist_size: int = 10
    jobs: int = 1
    time_budget: float | None = None  # seconds


@dataclass
class LeaderboardEntry:
    order: ModelOrder
    aic: float
    test: AccuracyReport
    in_sample: AccuracyReport
    fit: FitResult | None = None

    @property
    def rmse(self) -> float:
        return self.in_sample.rmse

    @property
    def mape(self) -> float:
        return self.in_sample.mape

    def to_dict(self) -> dict:
        return {
            "order": self.order.to_dict(),
            "aic": self.aic,
            "test": self.test.to_dict(),
            "in_sample": self.in_sample.to_dict(),
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


@dataclass
class CellFailure:
    order: ModelOrder
    error: str

    def to_dict(self) -> dict:
        return {"order": self.order.to_dict(), "error": self.error}


@dataclass
class Leaderboard:
    entries: list[LeaderboardEntry]
    shortlist_size: int = 10
    failures: list[CellFailure] = field(default_factory=list)
    n_cells: int = 0
    partial: bool = False

    @property
    def shortlist(self) -> list[LeaderboardEntry]:
        return self.entries[:self.shortlist_size]

    def to_csv(self, fmt=repr) -> str:
        """Shortlist rows with columns p,d,q,P,D,Q,rmse,mape,aic."""
        lines = ["p,d,q,P,D,Q,rmse,mape,aic"]
        for e in self.shortlist:
            o = e.order
            lines.append(",".join([str(v) for v in o.as_tuple()] + [fmt(e.rmse), fmt(e.mape), fmt(e.aic)]))
        return "\n".join(lines) + "\n"

    def candidates_csv(self, fmt=repr) -> str:
        lines = ["p,d,q,P,D,Q,rank,test_mse,test_rmse,test_mape,rmse,mape,aic,status"]
        for rank, e in enumerate(self.entries, start=1):
            lines.append(",".join(
                [str(v) for v in e.order.as_tuple()] + [str(rank)]
                + [fmt(v) for v in (e.test.mse, e.test.rmse, e.test.mape, e.rmse, e.mape, e.aic)] + ["ok"]))
        for f in self.failures:
            lines.append(",".join([str(v) for v in f.order.as_tuple()] + [""] * 7 + [_csv_safe(f.error)]))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "partial": self.partial,
            "shortlist_size": self.shortlist_size,
            "entries": [e.to_dict() for e in self.entries],
            "failures": [f.to_dict() for f in self.failures],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _csv_safe(text: str) -> str:
    return '"' + text.replace('"', "'").replace("\n", " ") + '"'


def in_sample_accuracy(result: FitResult, training: TimeSeries) -> AccuracyReport:
    """One-step-ahead in-sample accuracy on the level scale.

    The fitted level is the observation minus its one-step innovation; the
    first ``d + D*s`` observations have no fitted value.
    """
    o = result.order
    w = difference(training, o.d, o.D, o.s)
    v, _ = innovations(o, result.params, w)
    actual = training.values[o.n_diff:]
    return accuracy(actual, actual - v)


def evaluate_cell(order: ModelOrder, training: TimeSeries, test: TimeSeries, config: FitConfig):
    """Fit one grid cell and score it; returns an entry or a failure record."""
    try:
        result = fit(order, training, config)
        if not result.converged:
            return CellFailure(order, f"NoConvergence: simplex stopped after {result.iterations} iterations")
        fc = forecast(result, training, len(test))
        test_acc = accuracy(test.values, fc.mean)
        ins = in_sample_accuracy(result, training)
    except SarimaError as exc:
        return CellFailure(order, f"{type(exc).__name__}: {exc}")
    return LeaderboardEntry(order, result.aic, test_acc, ins, result)


def _rank_key(e: LeaderboardEntry):
    return (e.test.mse, e.order.as_tuple())


def grid_search(splits: DataSplits, space: SearchSpace, config: SearchConfig = SearchConfig()) -> Leaderboard:
    """Fit every cell of ``space`` and rank by test-window MSE.

    Results do not depend on ``config.jobs``: cells are evaluated
    independently and merged in cell order before ranking.
    """
    cells = space.cells()
    if not cells:
        raise EmptySearchSpace("search space has no cells")
    if len(splits.test) == 0:
        raise DataError("grid search needs a non-empty test window")
    deadline = None if config.time_budget is None else time.monotonic() + config.time_budget
    jobs = max(1, int(config.jobs))
    # with a budget, cells run in small batches; the first batch always runs
    chunk = jobs * 4 if deadline is not None else len(cells)

    results = []
    partial = False
    with Parallel(n_jobs=jobs) as pool:
        for i in range(0, len(cells), chunk):
            if deadline is not None and i > 0 and time.monotonic() > deadline:
                partial = True
                log.warning("time budget exhausted after %d of %d cells", len(results), len(cells))
                break
            batch = cells[i:i + chunk]
            if jobs == 1:
                results.extend(evaluate_cell(o, splits.training, splits.test, config.fit) for o in batch)
            else:
                results.extend(pool(delayed(evaluate_cell)(o, splits.training, splits.test, config.fit)
                                    for o in batch))

    entries = sorted((r for r in results if isinstance(r, LeaderboardEntry)), key=_rank_key)
    failures = [r for r in results if isinstance(r, CellFailure)]
    for f in failures:
        log.info("cell %s failed: %s", f.order, f.error)
    if not entries:
        raise AllCellsFailed(f"all {len(results)} evaluated cells failed")
    return Leaderboard(entries, config.shortlist_size, failures, len(cells), partial)


def _selection_key(e: LeaderboardEntry):
    return (e.aic, e.mape, e.rmse, e.order.as_tuple())


_KEY_NAMES = ("aic", "mape", "rmse", "order")


def select_final(board: Leaderboard | list[LeaderboardEntry]) -> tuple[ModelOrder, dict]:
    """Pick the shortlist entry with the lowest AIC.

    Ties are broken by in-sample MAPE, then RMSE, then the smallest order tuple.
    """
    shortlist = board.shortlist if isinstance(board, Leaderboard) else list(board)
    if not shortlist:
        raise EmptyShortlist("cannot select from an empty shortlist")
    ranked = sorted(shortlist, key=_selection_key)
    winner = ranked[0]
    wk = _selection_key(winner)
    comparisons = []
    for e in ranked[1:]:
        ek = _selection_key(e)
        decided = next(i for i in range(4) if ek[i] != wk[i])
        comparisons.append({
            "candidate": str(e.order),
            "decided_by": _KEY_NAMES[decided],
            "winner_value": wk[decided] if decided < 3 else list(wk[3]),
            "candidate_value": ek[decided] if decided < 3 else list(ek[3]),
        })
    rationale = {
        "rule": "minimum AIC, then MAPE, then RMSE, then smallest order",
        "selected": str(winner.order),
        "order": winner.order.to_dict(),
        "aic": winner.aic,
        "mape": winner.mape,
        "rmse": winner.rmse,
        "comparisons": comparisons,
    }
    return winner.order, rationale
