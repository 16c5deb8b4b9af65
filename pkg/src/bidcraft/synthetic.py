"""Synthetic markets with a known, learnable daily price profile."""

from __future__ import annotations

from datetime import date

import numpy as np

from .data import BLOCKS_PER_DAY, Market, MarketSeries


def daily_profile(amplitude: float = 10.0, level: float = 20.0) -> np.ndarray:
    blocks = np.arange(BLOCKS_PER_DAY)
    return level + amplitude * np.sin(2 * np.pi * blocks / BLOCKS_PER_DAY)


def periodic_market(start: date, n_days: int, *, amplitude: float = 10.0, level: float = 20.0,
                    noise: float = 1.0, seed: int = 0, market: Market = Market.AFRR_POS) -> MarketSeries:
    """Daily-periodic prices plus i.i.d. Gaussian noise, floored at zero."""
    rng = np.random.default_rng(seed)
    signal = np.tile(daily_profile(amplitude, level), n_days)
    prices = np.maximum(signal + rng.normal(0.0, noise, signal.size), 0.0)
    return MarketSeries.from_days(market, start, prices)
