"""Rerun the benchmark dataset with several cluster counts k."""
import argparse

from threadpoolctl import threadpool_limits

from mmselflabel.experiments import k_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", type=int, nargs="+", default=[8, 10, 20])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    with threadpool_limits(1):
        scores = k_sweep(tuple(args.ks), seed=args.seed)
    print("k\tnmi\taccuracy\tpurity")
    for k, s in scores.items():
        print(f"{k}\t{s['nmi']:.4f}\t{s['accuracy']:.4f}\t{s['mean_max_purity']:.4f}")


if __name__ == "__main__":
    main()
