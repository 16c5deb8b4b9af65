"""Forecast errors and pay-as-bid revenue."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ShapeError


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.size} actuals vs {y_hat.size} forecasts")
    return y, y_hat


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if not y.size:
        raise ShapeError("mae of empty vectors")
    return float(np.mean(np.abs(y_hat - y)))


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if not y.size:
        raise ShapeError("mse of empty vectors")
    return float(np.mean((y_hat - y) ** 2))


def mape(y, y_hat) -> float | None:
    """Mean absolute percentage error as a fraction.

    Zero-price slots are skipped; ``None`` when every slot is zero-priced.
    """
    y, y_hat = _pair(y, y_hat)
    keep = y > 0
    if not keep.any():
        return None
    return float(np.mean(np.abs(y_hat[keep] - y[keep]) / y[keep]))


def awarded(y, bids) -> np.ndarray:
    y, bids = _pair(y, bids)
    return bids <= y


def revenue(y, bids) -> float:
    """Pay-as-bid revenue: each bid at or below the realised price is paid in full."""
    y, bids = _pair(y, bids)
    if np.any(bids < 0):
        raise DomainError("bids must be non-negative")
    return float(np.sum(np.where(bids <= y, bids, 0.0)))


@dataclass(frozen=True)
class MetricsBundle:
    mae: float
    mse: float
    mape: float | None
    revenue: float
    n_awarded: int
    n_slots: int
    mape_excluded: int

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(y, y_hat, bids=None) -> MetricsBundle:
    """Error metrics of ``y_hat`` and revenue of ``bids`` (defaults to ``y_hat``).

    Splitting the two lets a raw forecast be scored while revenue is
    computed on the floored bid that would actually be submitted.
    """
    y, y_hat = _pair(y, y_hat)
    if bids is None:
        bids = y_hat
    _, bids = _pair(y, bids)
    won = awarded(y, bids)
    return MetricsBundle(
        mae=mae(y, y_hat),
        mse=mse(y, y_hat),
        mape=mape(y, y_hat),
        revenue=revenue(y, bids),
        n_awarded=int(won.sum()),
        n_slots=int(y.size),
        mape_excluded=int(np.sum(y <= 0)),
    )
