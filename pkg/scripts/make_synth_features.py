#!/usr/bin/env python3
"""Emit a row-aligned pair of synthetic feature files in VPF-CSV form.

The two files mimic independently extracted fc6/fc7 activations for the
same images: identical sample-name sequences, different feature draws.
"""

import argparse
from pathlib import Path

from veilkit.dataset import save_features, synth_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=30)
    ap.add_argument("--per-class", type=int, default=14)
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--separation", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out-dir", default="synth_features")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fc6, _ = synth_dataset(args.classes, args.per_class, args.dim, args.separation, seed=args.seed)
    fc7, _ = synth_dataset(
        args.classes, args.per_class, args.dim, args.separation, seed=args.seed + 1, layer_tag="fc7"
    )
    save_features(fc6, str(out / "fc6.csv"))
    save_features(fc7, str(out / "fc7.csv"))
    print(f"wrote {out / 'fc6.csv'} and {out / 'fc7.csv'} "
          f"({fc6.n} rows x {fc6.dim} features each)")


if __name__ == "__main__":
    main()
