"""Price forecasting, bid-offset optimisation and walk-forward backtesting
for pay-as-bid reserve capacity auctions."""

__version__ = "0.1.0"
