"""Accuracy of the joint and degraded-only runs as one modality is corrupted."""
import argparse

import numpy as np
from threadpoolctl import threadpool_limits

from mmselflabel.experiments import DEGRADE_FACTORS, degradation_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--factors", type=int, nargs="+", default=list(DEGRADE_FACTORS))
    args = ap.parse_args()
    joint, single = [], []
    with threadpool_limits(1):
        for seed in range(args.seeds):
            j, s = degradation_curve(seed, tuple(args.factors))
            joint.append(j)
            single.append(s)
            print(f"seed {seed}: joint {np.round(j, 4).tolist()} single {np.round(s, 4).tolist()}", flush=True)
    print("factor\tjoint\tsingle")
    for f, j, s in zip(args.factors, np.mean(joint, axis=0), np.mean(single, axis=0)):
        print(f"{f}\t{j:.5f}\t{s:.5f}")


if __name__ == "__main__":
    main()
