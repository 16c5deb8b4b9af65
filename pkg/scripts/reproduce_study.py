"""Full four-market pipeline on real capacity-price exports.

Expects a canonical CSV (see ``bidcraft ingest``) covering 2021-01-01 to
2024-06-30 for AFRR_POS, AFRR_NEG, MFRR_POS and MFRR_NEG.

    python3 scripts/reproduce_study.py --data prices.csv --out runs/study
"""

import argparse

from bidcraft import cli
from bidcraft.data import Market
from bidcraft.models import ModelKind

BENCHMARKS = ["fixed:day", "fixed:week", "fixed:month", "lagged:6", "lagged:42"]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="runs/study")
    p.add_argument("--retrain", choices=["fixed", "weekly", "monthly"], default="fixed")
    p.add_argument("--scoring", choices=["mae", "mape", "neg-revenue"], default="mae")
    p.add_argument("--untuned", action="store_true", help="skip grid search and use default hyperparameters")
    args = p.parse_args()

    suffix = "" if args.untuned else ":tuned"
    strategies = BENCHMARKS + [f"model:{k.value}{suffix}" for k in ModelKind]
    common = ["--data", args.data, "--out", args.out]
    for market in Market:
        print(f"== {market.value}")
        cli.main(["stats", *common, "--market", market.value])
        argv = ["backtest", *common, "--market", market.value, "--retrain", args.retrain, "--scoring", args.scoring]
        for s in strategies:
            argv += ["--strategy", s]
        if cli.main(argv):
            raise SystemExit(f"backtest failed for {market.value}")
    raise SystemExit(cli.main(["report", "--out", args.out]))


if __name__ == "__main__":
    main()
