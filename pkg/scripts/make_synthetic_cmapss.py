"""Write synthetic FD00x files in the CMAPSS text layout, for exercising the pipeline offline."""
import argparse

from rulcon.cmapss import SUBSETS
from rulcon.synthetic import synthetic_split, write_cmapss_files


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out")
    ap.add_argument("--subsets", nargs="+", default=list(SUBSETS))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for i, name in enumerate(args.subsets):
        write_cmapss_files(synthetic_split(name, seed=args.seed + i), args.out)
        print(f"wrote {name} to {args.out}")


if __name__ == "__main__":
    main()
