#!/usr/bin/env python3
"""Run the full experiment grid on synthetic features and print the table.

Rows are feature sources (fc6, fc7, and the three merges), crossed with
the usual variance-retention levels; columns are the six classifiers.
Real activation files produced by the extractor can be substituted via
--fc6/--fc7.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from veilkit.cli import main as veilkit_main
from veilkit.dataset import save_features, synth_dataset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fc6", help="existing feature file (skip synthesis)")
    ap.add_argument("--fc7", help="existing feature file (skip synthesis)")
    ap.add_argument("--task", default="identity",
                    choices=("identity", "gender", "age", "smile"))
    ap.add_argument("--classes", type=int, default=30)
    ap.add_argument("--per-class", type=int, default=14)
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--separation", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="grid_results")
    ap.add_argument("--quick", action="store_true",
                    help="2 pca levels x 3 classifiers instead of the full grid")
    args = ap.parse_args()

    if args.fc6 and args.fc7:
        fc6_path, fc7_path = args.fc6, args.fc7
        tmp = None
    else:
        tmp = tempfile.mkdtemp(prefix="veilkit-grid-")
        fc6, _ = synth_dataset(args.classes, args.per_class, args.dim,
                               args.separation, seed=args.seed)
        fc7, _ = synth_dataset(args.classes, args.per_class, args.dim,
                               args.separation, seed=args.seed + 1, layer_tag="fc7")
        fc6_path = str(Path(tmp) / "fc6.csv")
        fc7_path = str(Path(tmp) / "fc7.csv")
        save_features(fc6, fc6_path)
        save_features(fc7, fc7_path)
        print(f"synthesized {fc6.n} x {fc6.dim} features in {tmp}")

    if args.quick:
        pca_levels, clfs = "none,0.95", "1nn,nb,rf"
    else:
        pca_levels, clfs = "none,0.99,0.97,0.95", "1nn,3nn,5nn,nb,rf,mlp"

    code = veilkit_main([
        "sweep",
        "--task", args.task,
        "--fc6", fc6_path,
        "--fc7", fc7_path,
        "--rows", "fc6,fc7,min,max,mean",
        "--pca-levels", pca_levels,
        "--clfs", clfs,
        # keep the demo quick; drop these overrides for a faithful run
        "--clf-opt", "mlp.epochs=100",
        "--clf-opt", "rf.trees=40",
        "--seed", str(args.seed),
        "--out", args.out,
    ])
    print()
    print((Path(args.out) / "accuracy.csv").read_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
