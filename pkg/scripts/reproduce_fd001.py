"""CNN-LSTM on FD001, with and without the contrastive phases, over three seeds.

Prints per-run metrics, the medians, and whether the MGSC median reaches
RMSE <= 14 / Score <= 450 and beats the baseline median.
"""
import argparse
import logging
import os
import statistics

from rulcon.experiments import run_grid
from rulcon.training import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-root", default=os.environ.get("RULCON_DATA", "data/CMAPSS"))
    ap.add_argument("--out", default="runs/fd001")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    reports = run_grid(args.data_root, subsets=("FD001",), encoders=("cnn_lstm",), seeds=args.seeds,
                       cfg=TrainConfig(epochs=args.epochs), out_dir=args.out)
    med = {}
    for mgsc in (False, True):
        runs = [r for r in reports if r.mgsc == mgsc]
        for r in runs:
            print(f"{'mgsc' if mgsc else 'base'} seed {r.seed}: RMSE {r.rmse:.2f} Score {r.score:.2f}")
        med[mgsc] = (statistics.median(r.rmse for r in runs), statistics.median(r.score for r in runs))
        print(f"{'mgsc' if mgsc else 'base'} median: RMSE {med[mgsc][0]:.2f} Score {med[mgsc][1]:.2f}")
    print("reproduction", "PASS" if med[True][0] <= 14.0 and med[True][1] <= 450 else "FAIL")
    print("mgsc <= baseline", "PASS" if med[True][0] <= med[False][0] else "FAIL")


if __name__ == "__main__":
    main()
