"""Capacity-price series: ingestion, validation, statistics and windowing.

Slots are addressed by an integer key ``date.toordinal() * 6 + block`` so
that slot arithmetic (lags, windows, gaps) is plain integer arithmetic.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    ConflictError,
    DegenerateSeries,
    EmptyInput,
    MappingError,
    RowError,
    SplitError,
    WindowGapError,
)

BLOCKS_PER_DAY = 6
CANONICAL_HEADER = ("date", "block", "market", "capacity_price_eur_mw")


class Market(str, Enum):
    AFRR_POS = "AFRR_POS"
    AFRR_NEG = "AFRR_NEG"
    MFRR_POS = "MFRR_POS"
    MFRR_NEG = "MFRR_NEG"

    @classmethod
    def parse(cls, label: str) -> "Market":
        key = label.strip()
        if key in _MARKET_ALIASES:
            return _MARKET_ALIASES[key]
        return cls(key.upper())


_MARKET_ALIASES = {
    "aFRR+": Market.AFRR_POS,
    "aFRR-": Market.AFRR_NEG,
    "mFRR+": Market.MFRR_POS,
    "mFRR-": Market.MFRR_NEG,
}


def slot_key(day: date, block: int) -> int:
    return day.toordinal() * BLOCKS_PER_DAY + block


@dataclass(frozen=True, order=True)
class ProductSlot:
    """One 4-hour delivery block; ``block`` 0 starts at 00:00."""

    date: date
    block: int
    market: Market

    def __post_init__(self):
        if not 0 <= self.block < BLOCKS_PER_DAY:
            raise ValueError(f"block must be in 0..5, got {self.block}")

    @property
    def key(self) -> int:
        return slot_key(self.date, self.block)

    @classmethod
    def from_key(cls, key: int, market: Market) -> "ProductSlot":
        return cls(date.fromordinal(int(key) // BLOCKS_PER_DAY), int(key) % BLOCKS_PER_DAY, market)


@dataclass(frozen=True, eq=False)
class MarketSeries:
    """Ordered per-slot capacity prices (€/MW) for a single market."""

    market: Market
    slots: tuple
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) != len(prices):
            raise ValueError("slots and prices differ in length")
        if any(s.market != self.market for s in self.slots):
            raise ValueError(f"series of {self.market.value} holds slots of another market")
        keys = np.fromiter((s.key for s in self.slots), dtype=np.int64, count=len(self.slots))
        if np.any(np.diff(keys) <= 0):
            raise ValueError("slots must be strictly increasing without duplicates")
        keys.setflags(write=False)
        object.__setattr__(self, "keys", keys)

    @classmethod
    def from_keys(cls, market: Market, keys: Iterable[int], prices) -> "MarketSeries":
        slots = tuple(ProductSlot.from_key(k, market) for k in keys)
        return cls(market, slots, prices)

    @classmethod
    def from_days(cls, market: Market, start: date, prices) -> "MarketSeries":
        """Gapless series starting at ``start`` block 0."""
        k0 = slot_key(start, 0)
        return cls.from_keys(market, range(k0, k0 + len(prices)), prices)

    def __len__(self) -> int:
        return len(self.prices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarketSeries):
            return NotImplemented
        return (
            self.market == other.market
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.prices, other.prices)
        )

    def __repr__(self) -> str:
        if not len(self):
            return f"MarketSeries({self.market.value}, empty)"
        return f"MarketSeries({self.market.value}, {len(self)} slots, {self.slots[0].date}..{self.slots[-1].date})"

    def select(self, mask) -> "MarketSeries":
        mask = np.asarray(mask, dtype=bool)
        return MarketSeries(
            self.market, tuple(s for s, m in zip(self.slots, mask) if m), self.prices[mask]
        )

    def days(self) -> list[date]:
        return sorted({s.date for s in self.slots})


# -- ingestion --------------------------------------------------------------


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the source columns and how to parse them.

    Either ``block`` (0..5) or ``period_start`` (``HH:MM`` local start time
    of the 4-hour product) must be given.
    """

    date: str = "date"
    block: str | None = "block"
    market: str = "market"
    price: str = "capacity_price_eur_mw"
    period_start: str | None = None
    date_format: str = "%Y-%m-%d"
    decimal: str = "."
    delimiter: str = ","
    market_labels: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ColumnMapping":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise MappingError(f"unknown mapping keys: {sorted(unknown)}")
        return cls(**d)

    def required_columns(self) -> list[str]:
        time_col = self.block if self.block else self.period_start
        if not time_col:
            raise MappingError("mapping needs a block or period_start column")
        return [self.date, time_col, self.market, self.price]


def _parse_block(raw: str, mapping: ColumnMapping) -> int:
    if mapping.block:
        block = int(raw)
    else:
        hour, _, minute = raw.strip().partition(":")
        if int(minute or 0) != 0 or int(hour) % 4:
            raise ValueError(f"period start {raw!r} is not on a 4-hour boundary")
        block = int(hour) // 4
    if not 0 <= block < BLOCKS_PER_DAY:
        raise ValueError(f"block {block} out of range")
    return block


def _parse_price(raw: str, decimal: str) -> float:
    text = raw.strip()
    if decimal != ".":
        text = text.replace(".", "").replace(decimal, ".")
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"non-finite price {raw!r}")
    return value


def _read_rows(path, mapping: ColumnMapping) -> dict[Market, dict[ProductSlot, float]]:
    out: dict[Market, dict[ProductSlot, float]] = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=mapping.delimiter)
        header = reader.fieldnames or []
        missing = [c for c in mapping.required_columns() if c not in header]
        if missing:
            raise MappingError(f"{path}: missing column(s) {missing}")
        time_col = mapping.block or mapping.period_start
        for row in reader:
            line = reader.line_num
            label = row[mapping.market]
            label = mapping.market_labels.get(label, label)
            try:
                market = Market.parse(label)
            except (ValueError, AttributeError):
                raise RowError(line, f"unknown market label {label!r}") from None
            try:
                day = datetime.strptime(row[mapping.date].strip(), mapping.date_format).date()
                block = _parse_block(row[time_col], mapping)
                price = _parse_price(row[mapping.price], mapping.decimal)
            except (ValueError, TypeError, AttributeError) as exc:
                raise RowError(line, str(exc)) from None
            slot = ProductSlot(day, block, market)
            seen = out.setdefault(market, {})
            if slot in seen and seen[slot] != price:
                raise ConflictError(slot, {seen[slot], price})
            seen[slot] = price
    return out


def _to_series(market: Market, rows: Mapping[ProductSlot, float]) -> MarketSeries:
    slots = sorted(rows)
    return MarketSeries(market, tuple(slots), [rows[s] for s in slots])


def ingest_csv(path, mapping: ColumnMapping | Mapping | None = None, market=None) -> MarketSeries:
    """Read one market's prices from a CSV export.

    Rows belonging to other markets are dropped.  If ``market`` is omitted
    the file must contain exactly one market.
    """
    if mapping is None:
        mapping = ColumnMapping()
    elif not isinstance(mapping, ColumnMapping):
        mapping = ColumnMapping.from_dict(mapping)
    by_market = _read_rows(path, mapping)
    if market is None:
        if len(by_market) > 1:
            names = sorted(m.value for m in by_market)
            raise MappingError(f"{path} holds several markets {names}; choose one")
        if not by_market:
            raise EmptyInput(f"{path} holds no rows")
        market = next(iter(by_market))
    market = Market.parse(market) if isinstance(market, str) else market
    return _to_series(market, by_market.get(market, {}))


def read_canonical(path) -> dict[Market, MarketSeries]:
    """All markets of a canonical CSV file, keyed by market."""
    by_market = _read_rows(path, ColumnMapping())
    return {m: _to_series(m, rows) for m, rows in sorted(by_market.items())}


def write_csv(series: MarketSeries | Iterable[MarketSeries], path) -> None:
    if isinstance(series, MarketSeries):
        series = [series]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CANONICAL_HEADER)
        for s in series:
            for slot, price in zip(s.slots, s.prices):
                w.writerow([slot.date.isoformat(), slot.block, s.market.value, repr(float(price))])


# -- checks and statistics ----------------------------------------------------


@dataclass
class ValidationReport:
    n_slots: int
    gaps: list = field(default_factory=list)
    negatives: int = 0
    zeros: int = 0

    @property
    def ok(self) -> bool:
        return not self.gaps and not self.negatives

    def summary(self) -> str:
        return f"{self.n_slots} slots, {len(self.gaps)} gaps, {self.negatives} negatives, {self.zeros} zero prices"


def validate(series: MarketSeries) -> ValidationReport:
    report = ValidationReport(n_slots=len(series))
    if len(series):
        present = set(series.keys.tolist())
        report.gaps = [
            (date.fromordinal(k // BLOCKS_PER_DAY), k % BLOCKS_PER_DAY)
            for k in range(int(series.keys[0]), int(series.keys[-1]) + 1)
            if k not in present
        ]
    report.negatives = int(np.sum(series.prices < 0))
    report.zeros = int(np.sum(series.prices == 0))
    return report


def split(series: MarketSeries, train_end: date, test_end: date) -> tuple[MarketSeries, MarketSeries]:
    """Train = dates up to ``train_end``; test = (train_end, test_end]."""
    if train_end >= test_end:
        raise SplitError(f"train_end {train_end} must precede test_end {test_end}")
    dates = np.array([s.date for s in series.slots], dtype=object)
    train = series.select(dates <= train_end)
    test = series.select((dates > train_end) & (dates <= test_end))
    if len(series) and not len(train):
        warnings.warn(f"train_end {train_end} precedes the first date; train split is empty", stacklevel=2)
    return train, test


@dataclass(frozen=True)
class StatsTable:
    mean: float
    std: float
    min: float
    max: float
    q25: float
    median: float
    q75: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("mean", "std", "min", "max", "q25", "median", "q75")}


def summary_stats(series) -> StatsTable:
    x = _values(series)
    if not len(x):
        raise EmptyInput("summary statistics of an empty series")
    q25, median, q75 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    return StatsTable(
        mean=float(np.mean(x)),
        std=float(np.std(x, ddof=1)) if len(x) > 1 else 0.0,
        min=float(np.min(x)),
        max=float(np.max(x)),
        q25=float(q25),
        median=float(median),
        q75=float(q75),
    )


def acf(series, max_lag: int) -> list[tuple[int, float]]:
    """Sample autocorrelation for lags ``0..max_lag`` (biased normalisation)."""
    x = _values(series)
    if len(x) <= max_lag:
        raise ValueError(f"series of length {len(x)} too short for max_lag {max_lag}")
    if np.all(x == x[0]):
        raise DegenerateSeries("autocorrelation of a constant series is undefined")
    d = x - x.mean()
    denom = np.dot(d, d)
    out = [(0, 1.0)]
    for k in range(1, max_lag + 1):
        out.append((k, float(np.dot(d[:-k], d[k:]) / denom)))
    return out


def _values(series) -> np.ndarray:
    if isinstance(series, MarketSeries):
        return np.asarray(series.prices, dtype=float)
    return np.asarray(series, dtype=float).ravel()


# -- supervised windows -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupervisedSet:
    """Lagged design matrix ``X`` (n, input_len) and targets ``Y`` (n, horizon).

    ``anchors[i]`` is block 0 of the target day of row ``i``.
    """

    X: np.ndarray
    Y: np.ndarray
    anchors: tuple

    def __len__(self) -> int:
        return len(self.X)

    def subset(self, idx) -> "SupervisedSet":
        idx = np.asarray(idx, dtype=int)
        return SupervisedSet(self.X[idx], self.Y[idx], tuple(self.anchors[i] for i in idx))


def build_supervised(series: MarketSeries, input_len: int = 42, horizon: int = 6) -> SupervisedSet:
    """One sample per target day: the ``input_len`` slots ending at the
    previous day's last block, and the ``horizon`` slots from block 0 on."""
    if len(series) < input_len + horizon:
        raise ValueError(f"need at least {input_len + horizon} slots, got {len(series)}")
    keys = series.keys
    first, last = int(keys[0]), int(keys[-1])
    # first anchor: block 0 with a full input window available
    a0 = -(-(first + input_len) // BLOCKS_PER_DAY) * BLOCKS_PER_DAY
    anchors = np.arange(a0, last - horizon + 2, BLOCKS_PER_DAY)
    index = np.full(last - first + 1, -1, dtype=np.int64)
    index[keys - first] = np.arange(len(keys))
    X = np.empty((len(anchors), input_len))
    Y = np.empty((len(anchors), horizon))
    for i, a in enumerate(anchors):
        pos = index[a - input_len - first : a + horizon - first]
        if np.any(pos < 0):
            raise WindowGapError(date.fromordinal(int(a) // BLOCKS_PER_DAY))
        X[i] = series.prices[pos[:input_len]]
        Y[i] = series.prices[pos[input_len:]]
    return SupervisedSet(X, Y, tuple(ProductSlot.from_key(a, series.market) for a in anchors))
