"""Residual and offset diagnostics, error/revenue correlation and the
per-market summary report."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .backtest import shifted_bids, yearly_factor
from .errors import DegenerateInput
from .evaluation import revenue

REPORT_VERSION = 1
REPORT_COLUMNS = (
    "schema_version", "market", "best_model", "mae", "mse", "mape_pct", "revenue_test", "best_baseline",
    "baseline_revenue", "diff_abs", "diff_pct", "revenue_yearly", "diff_yearly", "n_test_days", "note",
)


def residual_histogram(y, y_hat, bin_width: float) -> list[tuple[float, int]]:
    """Counts of ``y_hat - y`` in bins ``[j*w, (j+1)*w)``, sorted by lower edge."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    res = np.asarray(y_hat, dtype=float).ravel() - np.asarray(y, dtype=float).ravel()
    bins, counts = np.unique(np.floor(res / bin_width).astype(np.int64), return_counts=True)
    return [(float(b * bin_width), int(c)) for b, c in zip(bins, counts)]


def offset_sweep(y, y_hat, deltas, floor: float = 0.0) -> list[tuple[float, float]]:
    return [(float(d), revenue(y, shifted_bids(y_hat, d, floor))) for d in np.asarray(deltas, dtype=float)]


# -- Student t via the regularised incomplete beta ---------------------------

_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float, eps: float = 1e-16, max_iter: int = 500) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _FPMIN else _FPMIN)
        c = 1.0 + aa / c
        c = c if abs(c) > _FPMIN else _FPMIN
        step = d * c
        h *= step
        if abs(step - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


def _centred(x, y, min_n):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size < min_n:
        raise ValueError(f"need two equal-length vectors with at least {min_n} points")
    return x - x.mean(), y - y.mean(), x, y


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value (t test, n - 2 df)."""
    dx, dy, _, _ = _centred(x, y, 3)
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise DegenerateInput("correlation with a constant vector is undefined")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    df = dx.size - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, t_two_sided_p(t, df)


def linear_fit(x, y) -> tuple[float, float]:
    """Least-squares ``y ~ slope * x + intercept``."""
    dx, dy, x, y = _centred(x, y, 2)
    sxx = dx @ dx
    if sxx == 0:
        raise DegenerateInput("linear fit needs a non-constant x")
    slope = float((dx @ dy) / sxx)
    return slope, float(y.mean() - slope * x.mean())


@dataclass
class CorrelationStudy:
    points: list
    r: float
    p: float
    slope: float
    intercept: float

    @classmethod
    def from_points(cls, points) -> "CorrelationStudy":
        """``points`` are ``(model_id, pre-offset MAE, post-offset revenue)``."""
        points = list(points)
        errs = [p[1] for p in points]
        revs = [p[2] for p in points]
        r, p = pearson(errs, revs)
        slope, intercept = linear_fit(errs, revs)
        return cls(points, r, p, slope, intercept)

    def as_dict(self) -> dict:
        return {"r": self.r, "p": self.p, "slope": self.slope, "intercept": self.intercept,
                "points": [list(p) for p in self.points]}


# -- report ---------------------------------------------------------------------


def _summary(result) -> dict:
    return result.summary() if hasattr(result, "summary") else result


@dataclass
class Report:
    rows: list
    correlations: dict

    def to_dict(self) -> dict:
        return {"version": REPORT_VERSION, "rows": self.rows,
                "correlations": {m: c.as_dict() for m, c in self.correlations.items()}}

    def write_csv(self, path) -> None:
        write_tidy_csv(path, REPORT_COLUMNS, [[row[c] for c in REPORT_COLUMNS] for row in self.rows])

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_correlation_csv(self, path) -> None:
        rows = [[m, *p] for m, c in self.correlations.items() for p in c.points]
        write_tidy_csv(path, ("market", "model", "mae_pre_offset", "revenue_post_offset"), rows)


def build_report(results) -> Report:
    summaries = [_summary(r) for r in results]
    if not summaries:
        raise ValueError("no backtest results to report")
    markets = sorted({s["market"] for s in summaries})
    rows, correlations = [], {}
    for market in markets:
        group = [s for s in summaries if s["market"] == market and s["metrics_post"]]
        models = [s for s in group if not s["benchmark"]]
        baselines = [s for s in group if s["benchmark"]]
        row = dict.fromkeys(REPORT_COLUMNS)
        row.update(schema_version=REPORT_VERSION, market=market, note="")
        notes = []
        best = max(models, key=lambda s: s["metrics_post"]["revenue"]) if models else None
        base = max(baselines, key=lambda s: s["metrics_post"]["revenue"]) if baselines else None
        if best is None:
            notes.append("no model")
        else:
            pre = best["metrics_pre"]
            rev = best["metrics_post"]["revenue"]
            factor = yearly_factor(date.fromisoformat(best["test_start"]), best["n_days"])
            row.update(
                best_model=best["strategy"], mae=pre["mae"], mse=pre["mse"],
                mape_pct=None if pre["mape"] is None else 100.0 * pre["mape"],
                revenue_test=rev, revenue_yearly=rev * factor, n_test_days=best["n_days"],
            )
            if base is not None:
                b_rev = base["metrics_post"]["revenue"]
                diff = rev - b_rev
                row.update(best_baseline=base["strategy"], baseline_revenue=b_rev, diff_abs=diff,
                           diff_yearly=diff * factor,
                           diff_pct=100.0 * diff / b_rev if b_rev else None)
        if base is None:
            notes.append("no baseline")
        row["note"] = "; ".join(notes)
        rows.append(row)
        points = [(s["strategy"], s["metrics_pre"]["mae"], s["metrics_post"]["revenue"]) for s in models]
        if len(points) >= 3:
            try:
                correlations[market] = CorrelationStudy.from_points(points)
            except DegenerateInput:
                pass
    return Report(rows, correlations)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def write_tidy_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
