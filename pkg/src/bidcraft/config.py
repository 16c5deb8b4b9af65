"""Run configuration: one JSON file, overridable from the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from datetime import date

from .backtest import FixedBid, Lagged, ModelStrategy, OffsetConfig, Retrain, Window
from .data import Market
from .errors import SpecError
from .models import ModelKind, ModelSpec
from .tuning import Scoring

DEFAULT_STRATEGIES = ["fixed:day", "fixed:week", "fixed:month", "lagged:6", "lagged:42", "model:svr"]

_MODEL_ALIASES = {
    "knn": ModelKind.KNN,
    "cart": ModelKind.CART,
    "tree": ModelKind.CART,
    "rf": ModelKind.RANDOM_FOREST,
    "random_forest": ModelKind.RANDOM_FOREST,
    "gb": ModelKind.GB_LEVELWISE,
    "gb_levelwise": ModelKind.GB_LEVELWISE,
    "xgb": ModelKind.GB_SECOND_ORDER,
    "gb_second_order": ModelKind.GB_SECOND_ORDER,
    "lgbm": ModelKind.GB_LEAFWISE,
    "gb_leafwise": ModelKind.GB_LEAFWISE,
    "svr": ModelKind.SVR,
    "ridge": ModelKind.RIDGE,
    "lasso": ModelKind.LASSO,
    "elastic_net": ModelKind.ELASTIC_NET,
    "enet": ModelKind.ELASTIC_NET,
}


@dataclass
class RunConfig:
    market: str = Market.AFRR_POS.value
    data: str | None = None
    train_end: str = "2023-12-31"
    test_end: str = "2024-06-30"
    strategies: list = field(default_factory=lambda: list(DEFAULT_STRATEGIES))
    retrain: str = "fixed"
    scoring: str = "mae"
    k: int = 5
    seed: int = 0
    offset: str = "on"
    floor: float = 0.0
    out: str = "runs"

    def __post_init__(self):
        try:
            Market.parse(self.market)
            date.fromisoformat(self.train_end)
            date.fromisoformat(self.test_end)
            Scoring(self.scoring)
        except ValueError as exc:
            raise SpecError(f"invalid configuration: {exc}") from None
        if self.retrain not in ("fixed", "weekly", "monthly"):
            raise SpecError(f"retrain must be fixed, weekly or monthly, got {self.retrain!r}")
        if self.offset not in ("on", "off"):
            raise SpecError(f"offset must be on or off, got {self.offset!r}")
        if self.k < 2:
            raise SpecError("k must be at least 2")

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def override(self, **values) -> "RunConfig":
        merged = {**asdict(self), **{k: v for k, v in values.items() if v is not None}}
        return RunConfig(**merged)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @property
    def market_id(self) -> Market:
        return Market.parse(self.market)

    @property
    def retrain_mode(self) -> Retrain:
        return Retrain[self.retrain.upper()]

    def offset_config(self) -> OffsetConfig:
        return OffsetConfig(enabled=self.offset == "on", floor=self.floor)

    def parsed_strategies(self) -> list[tuple[object, bool]]:
        return [parse_strategy(s, self) for s in self.strategies]


def parse_strategy(entry, config: RunConfig):
    """``(strategy, tuned)`` from ``fixed:<day|week|month>``, ``lagged:<6|42>``,
    ``model:<kind>[:tuned]`` or a dict ``{"model": kind, "hyperparameters": {...},
    "tuned": bool, "name": str}``."""
    if isinstance(entry, dict):
        kind = _model_kind(entry.get("model", ""))
        spec = ModelSpec(kind, dict(entry.get("hyperparameters", {})), config.seed)
        return ModelStrategy(spec, config.offset_config(), entry.get("name")), bool(entry.get("tuned", False))
    parts = str(entry).strip().split(":")
    head = parts[0].lower()
    try:
        if head == "fixed" and len(parts) == 2:
            return FixedBid(Window[parts[1].upper()]), False
        if head == "lagged" and len(parts) == 2:
            return Lagged(int(parts[1])), False
        if head == "model" and len(parts) in (2, 3):
            tuned = len(parts) == 3
            if tuned and parts[2] != "tuned":
                raise ValueError(parts[2])
            spec = ModelSpec(_model_kind(parts[1]), {}, config.seed)
            return ModelStrategy(spec, config.offset_config()), tuned
    except (KeyError, ValueError):
        pass
    raise SpecError(f"cannot parse strategy {entry!r}")


def _model_kind(name: str) -> ModelKind:
    key = str(name).lower()
    if key in _MODEL_ALIASES:
        return _MODEL_ALIASES[key]
    try:
        return ModelKind(str(name).upper())
    except ValueError:
        raise SpecError(f"unknown model {name!r}") from None
