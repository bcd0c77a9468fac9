"""Regenerate the bundled demo data set and its config under ``demo/``."""

import sys
from pathlib import Path

from trendlab.cli import main

ROOT = Path(__file__).resolve().parent.parent
DEMO = ROOT / "demo"

CONF = """\
# Demo run: two years of synthetic BTC-like prices with a synthetic classifier.
ohlcv = data/prices.csv
predictions = data/predictions.jsonl
tweets = data/tweets.jsonl
out_dir = out

tau = 30
f_upper = 1.0
f_lower = 1.0
v_max = 8

# reduced grid keeps the demo fast
grid_f_upper = 0.5,1.0,1.5,2.0,2.5,3.0
grid_f_lower = 0.5,1.0,1.5,2.0,2.5,3.0
grid_v_max = 8,10,12,15

mode = TCA
method = mean
optimize_thresholds = true
strategy = TBL
fee_rate = 0.001
confidence_sizing = true
seed = 4
"""


if __name__ == "__main__":
    (DEMO / "data").mkdir(parents=True, exist_ok=True)
    rc = main(["synth", "--out-dir", str(DEMO / "data"), "--seed", "4", "--days", "730",
               "--tweets-per-day", "10", "--accuracy", "0.75"])
    (DEMO / "demo.conf").write_text(CONF, encoding="utf-8")
    sys.exit(rc)
