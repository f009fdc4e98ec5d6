"""Train on the fixed synthetic pool and print the per-epoch losses and embedding alignment."""
import argparse

from rulcon.evaluation import alignment_similarity
from rulcon.models import ModelConfig, build_model
from rulcon.synthetic import synthetic_pool
from rulcon.training import TrainConfig, fit, set_determinism


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--coarse-batch", type=int, default=TrainConfig.coarse_batch)
    ap.add_argument("--fine-batch", type=int, default=TrainConfig.fine_batch)
    ap.add_argument("--seed", type=int, default=TrainConfig.seed)
    args = ap.parse_args()

    pool = synthetic_pool()
    cfg = TrainConfig(epochs=args.epochs, coarse_batch=args.coarse_batch, fine_batch=args.fine_batch,
                      seed=args.seed)
    set_determinism(cfg.seed)
    model = build_model(ModelConfig(), seed=cfg.seed)
    history = fit(model, pool, cfg, n_classes=6,
                  on_epoch=lambda r, _m: print(f"epoch {r.epoch:3d}  L_HS {r.coarse_loss:.4f}  "
                                           f"L_RUL {r.fine_loss:.4f}  MSE {r.regression_loss:.5f}"))
    first, last = history.records[0].coarse_loss, history.records[-1].coarse_loss
    print(f"L_HS ratio last/first: {last / first:.3f}")
    for k, v in alignment_similarity(model, pool).items():
        print(f"{k:>9s} {v:.3f}")


if __name__ == "__main__":
    main()
