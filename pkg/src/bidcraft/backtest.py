"""Benchmarks, bid-offset fitting and the walk-forward harness.

The harness only exposes past prices to a strategy through
:class:`PriceHistory`, which refuses any read at or after the first slot
of the day being bid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Union

import numpy as np

from .data import BLOCKS_PER_DAY, MarketSeries, ProductSlot, build_supervised, slot_key
from .errors import BidcraftError, EmptyInput, HistoryError, LeakageError, RunError
from .evaluation import MetricsBundle, evaluate, revenue
from .models import ModelSpec, fit, predict
from .tuning import kfold_indices


class Window(Enum):
    DAY = 6
    WEEK = 42
    MONTH = 180

    @property
    def slots(self) -> int:
        return self.value


class Retrain(Enum):
    FIXED = None
    WEEKLY = 7
    MONTHLY = 30

    @property
    def period_days(self) -> int | None:
        return self.value


@dataclass(frozen=True)
class FixedBid:
    window: Window
    rolling: bool = True

    @property
    def id(self) -> str:
        return f"fixed_{self.window.name.lower()}" + ("" if self.rolling else "_once")


@dataclass(frozen=True)
class Lagged:
    lag: int

    def __post_init__(self):
        if self.lag not in (6, 42):
            raise ValueError(f"lag must be 6 or 42, got {self.lag}")

    @property
    def id(self) -> str:
        return f"lagged_{self.lag}"


@dataclass(frozen=True)
class OffsetConfig:
    enabled: bool = True
    refit_with_retrain: bool = True
    floor: float = 0.0
    folds: int = 5

    def __post_init__(self):
        if self.floor < 0:
            raise ValueError("bid floor must be non-negative")


@dataclass(frozen=True)
class ModelStrategy:
    spec: ModelSpec
    offset: OffsetConfig = OffsetConfig()
    name: str | None = None

    @property
    def id(self) -> str:
        return self.name or self.spec.label


Strategy = Union[FixedBid, Lagged, ModelStrategy]


def is_benchmark(strategy: Strategy) -> bool:
    return not isinstance(strategy, ModelStrategy)


# -- benchmarks -------------------------------------------------------------


def fixed_bid(history, window: Window | int | None = None) -> float:
    """Constant bid maximising ``c * #{y >= c}`` over the trailing window.

    The objective is piecewise linear in ``c`` with jumps at the window's
    prices, so only those prices are candidates; ties go to the larger bid.
    """
    prices = np.asarray(history, dtype=float).ravel()
    if window is not None:
        n = window.slots if isinstance(window, Window) else int(window)
        if len(prices) < n:
            raise HistoryError(f"need {n} slots of history, have {len(prices)}")
        prices = prices[len(prices) - n:]
    if not prices.size:
        raise EmptyInput("fixed bid over an empty window")
    ordered = np.sort(prices)
    candidates = np.unique(ordered[ordered >= 0])
    if not candidates.size:
        return 0.0
    counts = len(ordered) - np.searchsorted(ordered, candidates, side="left")
    gains = candidates * counts
    best = len(gains) - 1 - int(np.argmax(gains[::-1]))
    return float(candidates[best])


def lagged_forecast(series: MarketSeries, lag: int, span: tuple[ProductSlot, ProductSlot]) -> np.ndarray:
    """Bids for every slot of ``span`` (inclusive): the price ``lag`` slots earlier."""
    if lag not in (6, 42):
        raise ValueError(f"lag must be 6 or 42, got {lag}")
    keys = np.arange(span[0].key, span[1].key + 1) - lag
    pos = np.searchsorted(series.keys, keys)
    ok = (pos < len(series)) & (series.keys[np.minimum(pos, len(series) - 1)] == keys)
    if not ok.all():
        missing = ProductSlot.from_key(int(keys[~ok][0]), series.market)
        raise HistoryError(f"no price for {missing.date} block {missing.block}")
    return series.prices[pos].copy()


# -- offset -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OffsetFit:
    delta_star: float
    revenue: float
    revenue_at_zero: float
    deltas: np.ndarray
    revenues: np.ndarray
    reference_span: tuple | None = None

    @property
    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.deltas.tolist(), self.revenues.tolist()))


def shifted_bids(y_hat, delta: float, floor: float = 0.0) -> np.ndarray:
    return np.maximum(floor, np.asarray(y_hat, dtype=float) + delta)


def breakpoints(y, y_hat) -> np.ndarray:
    """Offsets at which slot ``i`` is still just awarded (``y_hat_i + d <= y_i``)."""
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    d = y - y_hat
    # rounding can push y_hat + d above y; step down until the award holds
    bad = y_hat + d > y
    while bad.any():
        d[bad] = np.nextafter(d[bad], -np.inf)
        bad = y_hat + d > y
    return np.unique(d)


def fit_offset(y_ref, y_hat_ref, floor: float = 0.0, reference_span=None) -> OffsetFit:
    """Exact revenue-maximising shift of the forecasts.

    Between consecutive breakpoints the award set is fixed and revenue grows
    with the shift, so the maximum sits on a breakpoint.  Ties resolve to
    the largest shift.
    """
    y = np.asarray(y_ref, dtype=float).ravel()
    y_hat = np.asarray(y_hat_ref, dtype=float).ravel()
    if y.shape != y_hat.shape or not y.size:
        raise ValueError("fit_offset needs equal-length, non-empty vectors")
    deltas = np.union1d(breakpoints(y, y_hat), [0.0])
    revenues = np.array([revenue(y, shifted_bids(y_hat, d, floor)) for d in deltas])
    best = len(revenues) - 1 - int(np.argmax(revenues[::-1]))
    zero = int(np.searchsorted(deltas, 0.0))
    return OffsetFit(float(deltas[best]), float(revenues[best]), float(revenues[zero]), deltas, revenues,
                     reference_span)


def out_of_fold_predictions(spec: ModelSpec, data, k: int = 5, n_jobs: int | None = None) -> np.ndarray:
    """Predictions for every sample from models that never saw its fold."""
    out = np.empty_like(np.asarray(data.Y, dtype=float))
    folds = kfold_indices(len(data), k)
    for i, held in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = fit(spec, data.subset(train), n_jobs=n_jobs)
        out[held] = predict(model, data.X[held])
    return out


# -- walk-forward ---------------------------------------------------------------


class PriceHistory:
    """Read-only view of past prices with a movable cutoff.

    While ``cursor`` is set, every read must end strictly before it;
    otherwise :class:`LeakageError` is raised.  All reads are logged as
    ``(cursor, first_key, last_key)``.
    """

    def __init__(self, series: MarketSeries):
        self.market = series.market
        self.keys = series.keys
        self.prices = series.prices
        self.cursor: int | None = None
        self.reads: list[tuple[int | None, int, int]] = []

    def _guard(self, lo: int, hi: int) -> None:
        self.reads.append((self.cursor, lo, hi))
        if self.cursor is not None and hi >= self.cursor:
            raise LeakageError(f"read of slot key {hi} at or after cutoff {self.cursor}")

    def at(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        self._guard(int(keys.min()), int(keys.max()))
        pos = np.searchsorted(self.keys, keys)
        ok = (pos < len(self.keys)) & (self.keys[np.minimum(pos, len(self.keys) - 1)] == keys)
        if not ok.all():
            missing = ProductSlot.from_key(int(keys[~ok][0]), self.market)
            raise HistoryError(f"no price for {missing.date} block {missing.block}")
        return self.prices[pos]

    def window(self, end_key: int, length: int) -> np.ndarray:
        """Prices of the ``length`` slots ending just before ``end_key``."""
        return self.at(np.arange(end_key - length, end_key))

    def before(self, end_key: int) -> MarketSeries:
        n = int(np.searchsorted(self.keys, end_key))
        if n == 0:
            raise HistoryError("no history before the cutoff")
        self._guard(int(self.keys[0]), int(self.keys[n - 1]))
        return MarketSeries(self.market, _slots(self.keys[:n], self.market), self.prices[:n])


def _slots(keys, market):
    return tuple(ProductSlot.from_key(k, market) for k in keys)


@dataclass
class RetrainEvent:
    date: date
    n_samples: int
    delta: float | None = None


@dataclass(eq=False)
class BacktestResult:
    market: object
    strategy_id: str
    benchmark: bool
    slots: tuple
    y: np.ndarray
    y_hat: np.ndarray
    bids: np.ndarray
    metrics_pre: MetricsBundle | None = None
    metrics_post: MetricsBundle | None = None
    retrain_log: list = field(default_factory=list)
    description: dict = field(default_factory=dict)

    @property
    def awarded(self) -> np.ndarray:
        return self.bids <= self.y

    @property
    def revenue_contrib(self) -> np.ndarray:
        return np.where(self.awarded, self.bids, 0.0)

    @property
    def days(self) -> list[date]:
        return sorted({s.date for s in self.slots})

    def summary(self) -> dict:
        days = self.days
        return {
            "market": getattr(self.market, "value", self.market),
            "strategy": self.strategy_id,
            "benchmark": self.benchmark,
            "description": self.description,
            "test_start": days[0].isoformat() if days else None,
            "test_end": days[-1].isoformat() if days else None,
            "n_days": len(days),
            "n_slots": len(self.slots),
            "metrics_pre": self.metrics_pre.as_dict() if self.metrics_pre else None,
            "metrics_post": self.metrics_post.as_dict() if self.metrics_post else None,
            "retrain_log": [
                {"date": e.date.isoformat(), "n_samples": e.n_samples, "delta": e.delta} for e in self.retrain_log
            ],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "block", "y", "y_hat", "bid", "awarded", "revenue_contrib"])
            for s, y, yh, b, a, r in zip(self.slots, self.y, self.y_hat, self.bids, self.awarded,
                                         self.revenue_contrib):
                w.writerow([s.date.isoformat(), s.block, repr(float(y)), repr(float(yh)), repr(float(b)),
                            int(a), repr(float(r))])

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)


def describe(strategy: Strategy) -> dict:
    if isinstance(strategy, FixedBid):
        return {"type": "fixed_bid", "window": strategy.window.name, "rolling": strategy.rolling}
    if isinstance(strategy, Lagged):
        return {"type": "lagged", "lag": strategy.lag}
    o = strategy.offset
    return {
        "type": "model",
        "spec": strategy.spec.to_dict(),
        "offset": {"enabled": o.enabled, "refit_with_retrain": o.refit_with_retrain, "floor": o.floor,
                   "folds": o.folds},
    }


def _retrain_due(day: date, start: date, retrain: Retrain) -> bool:
    if day == start:
        return True
    return retrain.period_days is not None and (day - start).days % retrain.period_days == 0


def walk_forward(train: MarketSeries, test: MarketSeries, strategy: Strategy, retrain: Retrain = Retrain.FIXED,
                 *, input_len: int = 42, n_jobs: int | None = None,
                 history_factory=PriceHistory) -> BacktestResult:
    """Bid every test day in order, using only prices published before it."""
    if train.market != test.market:
        raise ValueError("train and test belong to different markets")
    if not len(test):
        raise EmptyInput("empty test span")
    if len(train) and test.keys[0] != train.keys[-1] + 1:
        raise ValueError("test must follow train without a gap")
    retrain = Retrain(retrain) if not isinstance(retrain, Retrain) else retrain
    full = MarketSeries(train.market, train.slots + test.slots, np.concatenate([train.prices, test.prices]))
    history = history_factory(full)

    floor = strategy.offset.floor if isinstance(strategy, ModelStrategy) else 0.0
    test_days = test.days()
    start = test_days[0]
    slots_done: list = []
    y_done, raw_done, bid_done = [], [], []
    log: list[RetrainEvent] = []
    model, delta, once_bid = None, 0.0, None

    def partial(message):
        return RunError(message, _assemble(test.market, strategy, slots_done, y_done, raw_done, bid_done, log, floor))

    for day in test_days:
        k0 = slot_key(day, 0)
        day_mask = (test.keys >= k0) & (test.keys < k0 + BLOCKS_PER_DAY)
        keys = test.keys[day_mask]
        history.cursor = k0
        try:
            if isinstance(strategy, Lagged):
                raw = history.at(keys - strategy.lag)
            elif isinstance(strategy, FixedBid):
                if strategy.rolling or once_bid is None:
                    once_bid = fixed_bid(history.window(k0, strategy.window.slots))
                raw = np.full(len(keys), once_bid)
            else:
                if _retrain_due(day, start, retrain):
                    try:
                        data = build_supervised(history.before(k0), input_len, BLOCKS_PER_DAY)
                        model = fit(strategy.spec, data, n_jobs=n_jobs)
                        event = RetrainEvent(day, len(data))
                        off = strategy.offset
                        if off.enabled and (not log or off.refit_with_retrain):
                            oof = out_of_fold_predictions(strategy.spec, data, off.folds, n_jobs)
                            span = (data.anchors[0], ProductSlot.from_key(data.anchors[-1].key + 5, test.market))
                            delta = fit_offset(data.Y, oof, off.floor, span).delta_star
                            event.delta = delta
                        log.append(event)
                    except LeakageError:
                        raise
                    except BidcraftError as exc:
                        raise partial(f"model fit failed on {day}: {exc}") from exc
                    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                        raise partial(f"model fit failed on {day}: {exc}") from exc
                forecast = predict(model, history.window(k0, input_len))[0]
                raw = forecast[(keys - k0).astype(int)]
        finally:
            history.cursor = None
        bids = shifted_bids(raw, delta if isinstance(strategy, ModelStrategy) and strategy.offset.enabled else 0.0,
                            floor)
        slots_done.extend(_slots(keys, test.market))
        y_done.append(test.prices[day_mask])
        raw_done.append(np.asarray(raw, dtype=float))
        bid_done.append(bids)

    return _assemble(test.market, strategy, slots_done, y_done, raw_done, bid_done, log, floor)


def _assemble(market, strategy, slots, ys, raws, bids, log, floor) -> BacktestResult:
    result = BacktestResult(
        market=market,
        strategy_id=strategy.id,
        benchmark=is_benchmark(strategy),
        slots=tuple(slots),
        y=np.concatenate(ys) if ys else np.empty(0),
        y_hat=np.concatenate(raws) if raws else np.empty(0),
        bids=np.concatenate(bids) if bids else np.empty(0),
        retrain_log=list(log),
        description=describe(strategy),
    )
    if len(result.y):
        result.metrics_pre = evaluate(result.y, result.y_hat, np.maximum(floor, result.y_hat))
        result.metrics_post = evaluate(result.y, result.bids)
    return result


def yearly_factor(first_day: date, n_days: int) -> float:
    """Scale a test-span total to a yearly figure for the test's calendar year."""
    year = first_day.year
    days_in_year = (date(year + 1, 1, 1) - date(year, 1, 1)).days
    return days_in_year / n_days
