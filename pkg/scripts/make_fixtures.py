#!/usr/bin/env python3
"""Generate synthetic price CSVs plus a ready-to-run experiment config.

Each named pair gets its own seeded noisy sine series, so the full
stats/train/compare pipeline can be exercised without any market data.
A desk.toml pointing at the files is written next to them:

    python3 scripts/make_fixtures.py --out fixtures
    fxcast compare --config fixtures/desk.toml
"""

import argparse
import pathlib

from fxcast.cli import pair_slug
from fxcast.dataio import price_csv
from fxcast.synth import noisy_sine

DEFAULT_PAIRS = ["AUD/USD", "EUR/USD", "GBP/USD", "NZD/USD", "USD/JPY"]

CONFIG_TEMPLATE = """\
version = 1

[data]
bucket_seconds = 300
window_len = 10
train_fraction = 0.8

[data.pairs]
{pair_lines}

[train]
learning_rate = 0.01
epochs = 12
dropout_rate = 0.1
seed = 3

[model]
hidden_layers = 1
hidden_size = 16
input_activation = "linear"

[output]
out_dir = "{out_dir}"
"""


def main():
    ap = argparse.ArgumentParser(
        description="write seeded synthetic price CSVs and a desk.toml")
    ap.add_argument("--out", default="fixtures",
                    help="directory for the CSVs and config (default: fixtures)")
    ap.add_argument("--points", type=int, default=2000,
                    help="samples per series (default: 2000)")
    ap.add_argument("--pairs", nargs="+", default=DEFAULT_PAIRS,
                    help="pair names, one series each")
    ap.add_argument("--seed", type=int, default=0,
                    help="base seed; pair k uses seed+k (default: 0)")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for k, pair in enumerate(args.pairs):
        series = noisy_sine(args.points, seed=args.seed + k, pair=pair)
        path = out / f"{pair_slug(pair)}.csv"
        path.write_text(price_csv(series))
        paths[pair] = path
        print(f"wrote {path}")

    pair_lines = "\n".join(f'"{p}" = "{path.resolve()}"'
                           for p, path in paths.items())
    cfg = out / "desk.toml"
    cfg.write_text(CONFIG_TEMPLATE.format(pair_lines=pair_lines,
                                          out_dir=(out / "runs").resolve()))
    print(f"wrote {cfg}")


if __name__ == "__main__":
    main()
