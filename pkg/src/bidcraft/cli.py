"""Command line entry point: ``bidcraft <command> [options]``.

Exit codes: 0 success, 2 usage or data error, 3 runtime error.  Errors are
reported on stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from datetime import date
from pathlib import Path

import numpy as np

from . import analysis
from .backtest import ModelStrategy, fit_offset, out_of_fold_predictions, walk_forward
from .config import RunConfig
from .data import (
    ColumnMapping,
    MarketSeries,
    acf,
    build_supervised,
    ingest_csv,
    read_canonical,
    split,
    summary_stats,
    validate,
    write_csv,
)
from .errors import BidcraftError, DataError
from .models import fit, predict
from .tuning import ParamGrid, grid_search


@contextmanager
def atomic_path(path):
    """Yield a temporary sibling of ``path``; move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, obj) -> None:
    with atomic_path(path) as tmp, open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# -- shared plumbing -------------------------------------------------------


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.override(
        data=getattr(args, "data", None),
        market=getattr(args, "market", None),
        train_end=getattr(args, "train_end", None),
        test_end=getattr(args, "test_end", None),
        strategies=getattr(args, "strategy", None),
        retrain=getattr(args, "retrain", None),
        scoring=getattr(args, "scoring", None),
        k=getattr(args, "k", None),
        seed=getattr(args, "seed", None),
        offset=getattr(args, "offset", None),
        floor=getattr(args, "floor", None),
        out=getattr(args, "out", None),
    )


def _load_market(cfg: RunConfig) -> MarketSeries:
    if not cfg.data:
        raise DataError("no data file given (--data or config key 'data')")
    return ingest_csv(cfg.data, market=cfg.market_id)


def _splits(cfg: RunConfig, series: MarketSeries):
    return split(series, date.fromisoformat(cfg.train_end), date.fromisoformat(cfg.test_end))


def _tag(cfg: RunConfig, name: str) -> str:
    return f"{cfg.market_id.value}__{name}"


def _resolve(strategy, tuned, cfg, train) -> tuple[object, dict | None]:
    """Replace a model strategy's spec by its grid-search winner when ``tuned``."""
    if not tuned or not isinstance(strategy, ModelStrategy):
        return strategy, None
    cv = grid_search(ParamGrid.standard(strategy.spec.kind), build_supervised(train), cfg.k, cfg.scoring, cfg.seed)
    return ModelStrategy(cv.best_spec, strategy.offset, f"{strategy.id}_tuned"), cv.to_dict()


# -- commands ----------------------------------------------------------------


def cmd_ingest(args) -> int:
    mapping = ColumnMapping()
    if args.mapping:
        with open(args.mapping, encoding="utf-8") as fh:
            mapping = ColumnMapping.from_dict(json.load(fh))
    series = ingest_csv(args.raw, mapping, market=args.market)
    with atomic_path(args.out) as tmp:
        write_csv(series, tmp)
    report = validate(series)
    print(f"{series.market.value}: {report.summary()}")
    for day, block in report.gaps[:20]:
        print(f"  gap: {day.isoformat()} block {block}")
    return 0


def _markets(cfg: RunConfig, market_given: bool) -> dict:
    if not cfg.data:
        raise DataError("no data file given (--data or config key 'data')")
    everything = read_canonical(cfg.data)
    if market_given:
        return {cfg.market_id: everything.get(cfg.market_id) or ingest_csv(cfg.data, market=cfg.market_id)}
    return everything


def _split_of(cfg, series, which):
    if which == "all":
        return series
    train, test = _splits(cfg, series)
    return train if which == "train" else test


def cmd_stats(args) -> int:
    cfg = _config(args)
    rows = []
    markets = _markets(cfg, args.market is not None)
    print(f"{'market':<10}{'split':<7}" + "".join(f"{k:>10}" for k in ("mean", "std", "min", "max", "q25", "median", "q75")))
    for market, series in markets.items():
        for which in args.split:
            st = summary_stats(_split_of(cfg, series, which)).as_dict()
            print(f"{market.value:<10}{which:<7}" + "".join(f"{v:>10.2f}" for v in st.values()))
            rows += [[market.value, which, name, value] for name, value in st.items()]
    if args.out:
        with atomic_path(Path(args.out) / "stats.csv") as tmp:
            analysis.write_tidy_csv(tmp, ("market", "split", "statistic", "value"), rows)
    return 0


def cmd_acf(args) -> int:
    cfg = _config(args)
    rows = []
    for market, series in _markets(cfg, args.market is not None).items():
        values = acf(_split_of(cfg, series, args.split), args.max_lag)
        for lag, r in values:
            marker = "  <- 24 h" if lag == 6 else ("  <- 1 week" if lag == 42 else "")
            print(f"{market.value:<10}{lag:>4}{r:>10.4f}{marker}")
            rows.append([market.value, lag, r])
    if args.out:
        with atomic_path(Path(args.out) / "acf.csv") as tmp:
            analysis.write_tidy_csv(tmp, ("market", "lag", "coefficient"), rows)
    return 0


def cmd_tune(args) -> int:
    cfg = _config(args)
    train, _ = _splits(cfg, _load_market(cfg))
    data = build_supervised(train)
    models = [s for s, _ in cfg.parsed_strategies() if isinstance(s, ModelStrategy)]
    if not models:
        raise DataError("tune needs at least one model strategy")
    for strategy in models:
        cv = grid_search(ParamGrid.standard(strategy.spec.kind), data, cfg.k, cfg.scoring, cfg.seed)
        _write_json(Path(cfg.out) / "tune" / f"{_tag(cfg, strategy.spec.label)}.json", cv.to_dict())
        print(f"{strategy.spec.kind.value}: {len(cv.configs)} configs, {cv.n_fits} fits, best {cv.best.params} "
              f"({cfg.scoring} {cv.best.mean:.4f})")
    return 0


def cmd_backtest(args) -> int:
    cfg = _config(args)
    train, test = _splits(cfg, _load_market(cfg))
    out = Path(cfg.out) / "backtest"
    for strategy, tuned in cfg.parsed_strategies():
        strategy, cv = _resolve(strategy, tuned, cfg, train)
        if cv is not None:
            _write_json(Path(cfg.out) / "tune" / f"{_tag(cfg, strategy.id)}.json", cv)
        result = walk_forward(train, test, strategy, cfg.retrain_mode)
        tag = _tag(cfg, result.strategy_id)
        with atomic_path(out / f"{tag}.csv") as tmp:
            result.write_csv(tmp)
        summary = result.summary()
        summary["config"] = {"retrain": cfg.retrain, "scoring": cfg.scoring, "k": cfg.k, "seed": cfg.seed}
        _write_json(out / f"{tag}.json", summary)
        m = result.metrics_post
        print(f"{result.strategy_id:<24} revenue {m.revenue:>12.2f}  awarded {m.n_awarded}/{m.n_slots}  "
              f"MAE {result.metrics_pre.mae:.3f}")
    return 0


def cmd_sweep_offset(args) -> int:
    cfg = _config(args)
    train, test = _splits(cfg, _load_market(cfg))
    data = build_supervised(train)
    out = Path(cfg.out) / "sweep"
    deltas = np.round(np.arange(args.delta_min, args.delta_max + args.delta_step / 2, args.delta_step), 10)
    for strategy, tuned in cfg.parsed_strategies():
        if not isinstance(strategy, ModelStrategy):
            continue
        strategy, _ = _resolve(strategy, tuned, cfg, train)
        model = fit(strategy.spec, data)
        full = MarketSeries(train.market, train.slots + test.slots, np.concatenate([train.prices, test.prices]))
        test_set = build_supervised(full)
        keep = [i for i, a in enumerate(test_set.anchors) if a.date > train.slots[-1].date]
        test_set = test_set.subset(keep)
        y, y_hat = test_set.Y.ravel(), predict(model, test_set.X).ravel()
        oof = out_of_fold_predictions(strategy.spec, data, cfg.k)
        floor = strategy.offset.floor
        trained = fit_offset(data.Y, oof, floor)
        ex_post = fit_offset(y, y_hat, floor)
        curve = analysis.offset_sweep(y, y_hat, deltas, floor)
        tag = _tag(cfg, strategy.id)
        with atomic_path(out / f"{tag}.csv") as tmp:
            analysis.write_tidy_csv(tmp, ("delta", "revenue"), curve)
        hist = analysis.residual_histogram(y, y_hat, args.bin_width)
        with atomic_path(out / f"{tag}__residuals.csv") as tmp:
            analysis.write_tidy_csv(tmp, ("bin_lower", "count"), hist)
        _write_json(out / f"{tag}.json", {
            "strategy": strategy.id,
            "delta_train": trained.delta_star,
            "delta_ex_post": ex_post.delta_star,
            "revenue_at_zero": ex_post.revenue_at_zero,
            "revenue_at_delta_train": analysis.offset_sweep(y, y_hat, [trained.delta_star], floor)[0][1],
            "revenue_ex_post": ex_post.revenue,
        })
        print(f"{strategy.id:<24} delta(train) {trained.delta_star:>8.3f}  delta(ex post) {ex_post.delta_star:>8.3f}")
    return 0


def cmd_report(args) -> int:
    cfg = _config(args)
    root = Path(cfg.out)
    files = sorted((root / "backtest").glob("*.json"))
    if not files:
        raise DataError(f"no backtest summaries under {root / 'backtest'}")
    summaries = []
    for f in files:
        with open(f, encoding="utf-8") as fh:
            summaries.append(json.load(fh))
    report = analysis.build_report(summaries)
    with atomic_path(root / "report.csv") as tmp:
        report.write_csv(tmp)
    with atomic_path(root / "report.json") as tmp:
        report.write_json(tmp)
    with atomic_path(root / "correlation.csv") as tmp:
        report.write_correlation_csv(tmp)
    for row in report.rows:
        pct = "n/a" if row["diff_pct"] is None else f"{row['diff_pct']:+.2f} %"
        rev = "n/a" if row["revenue_test"] is None else f"{row['revenue_test']:.2f}"
        print(f"{row['market']:<10} best {row['best_model']}  revenue {rev}  vs baseline {pct}  {row['note']}")
    return 0


# -- argument parsing ------------------------------------------------------------


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its keys")
    p.add_argument("--data", help="canonical CSV file")
    p.add_argument("--market", help="AFRR_POS, AFRR_NEG, MFRR_POS or MFRR_NEG")
    p.add_argument("--train-end", dest="train_end", help="last training date (YYYY-MM-DD)")
    p.add_argument("--test-end", dest="test_end", help="last test date (YYYY-MM-DD)")
    p.add_argument("--strategy", action="append",
                   help="fixed:<day|week|month>, lagged:<6|42> or model:<kind>[:tuned]; repeatable")
    p.add_argument("--retrain", choices=["fixed", "weekly", "monthly"])
    p.add_argument("--scoring", choices=["mae", "mape", "neg-revenue"])
    p.add_argument("--k", type=int, help="cross-validation folds")
    p.add_argument("--seed", type=int)
    p.add_argument("--offset", choices=["on", "off"])
    p.add_argument("--floor", type=float, help="minimum bid in EUR/MW")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bidcraft", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw export to the canonical CSV")
    p.add_argument("--raw", required=True, help="raw CSV export")
    p.add_argument("--mapping", help="JSON column mapping (defaults to the canonical column names)")
    p.add_argument("--market", help="keep only this market")
    p.add_argument("--out", required=True, help="canonical CSV to write")
    p.set_defaults(func=cmd_ingest)

    for name, func, helptext in (("stats", cmd_stats, "summary statistics per market"),
                                 ("acf", cmd_acf, "autocorrelation per market")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config")
        p.add_argument("--data")
        p.add_argument("--market")
        p.add_argument("--train-end", dest="train_end")
        p.add_argument("--test-end", dest="test_end")
        p.add_argument("--out", help="directory for the CSV output")
        if name == "stats":
            p.add_argument("--split", action="append", choices=["train", "test", "all"],
                           help="repeatable; default train and test")
        else:
            p.add_argument("--split", choices=["train", "test", "all"], default="train")
            p.add_argument("--max-lag", dest="max_lag", type=int, default=50)
        p.set_defaults(func=func)

    for name, func, helptext in (("tune", cmd_tune, "grid search over the standard hyperparameter grids"),
                                 ("backtest", cmd_backtest, "walk-forward backtest of every strategy"),
                                 ("sweep-offset", cmd_sweep_offset, "test revenue as a function of the offset")):
        p = sub.add_parser(name, help=helptext)
        _run_options(p)
        if name == "sweep-offset":
            p.add_argument("--delta-min", dest="delta_min", type=float, default=-20.0)
            p.add_argument("--delta-max", dest="delta_max", type=float, default=20.0)
            p.add_argument("--delta-step", dest="delta_step", type=float, default=0.1)
            p.add_argument("--bin-width", dest="bin_width", type=float, default=1.0)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="per-market summary of backtest outputs")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory of earlier backtest runs")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "stats" and not args.split:
        args.split = ["train", "test"]
    try:
        return args.func(args)
    except BidcraftError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = 2
    except Exception as exc:  # noqa: BLE001
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = 3
    print(json.dumps(err), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
