"""Full comparison grid: subsets x encoders x {baseline, MGSC} x seeds.

Finished runs (those with a metrics.json) are picked up again, so the grid
can be stopped and restarted.
"""
import argparse
import logging
import os

from rulcon.cmapss import SUBSETS
from rulcon.experiments import run_grid
from rulcon.models import ENCODER_KINDS
from rulcon.training import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-root", default=os.environ.get("RULCON_DATA", "data/CMAPSS"))
    ap.add_argument("--out", default="runs/table")
    ap.add_argument("--subsets", nargs="+", default=list(SUBSETS))
    ap.add_argument("--encoders", nargs="+", default=list(ENCODER_KINDS))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    ap.add_argument("--per-condition", action="store_true", help="condition-wise normalization")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    run_grid(args.data_root, args.subsets, args.encoders, (False, True), args.seeds,
             cfg=TrainConfig(epochs=args.epochs), out_dir=args.out, per_condition=args.per_condition)
    print(open(os.path.join(args.out, "report.txt")).read())


if __name__ == "__main__":
    main()
