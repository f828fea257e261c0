"""CLI: extract --images DIR --layers fc6,fc7 --out-prefix PATH [--weights PT]

Exit codes: 0 all images processed, 1 some files skipped (summary on
stderr), 2 configuration or weights problem.
"""

from __future__ import annotations

import argparse
import sys

from .errors import MissingWeights, UndecodableImage
from .extract import ExtractionJob, extract_features


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="extract", description=__doc__)
    ap.add_argument("--images", required=True, help="directory of sample-named images")
    ap.add_argument("--layers", default="fc6,fc7", help="comma list out of fc6,fc7")
    ap.add_argument("--out-prefix", required=True, help="output path prefix (.LAYER.csv appended)")
    ap.add_argument("--weights", default=None, help="VGG19 state-dict file")
    ap.add_argument("--batch-size", type=int, default=4)
    args = ap.parse_args(argv)

    try:
        job = ExtractionJob(
            images_dir=args.images,
            layers=tuple(tok for tok in args.layers.split(",") if tok),
            out_prefix=args.out_prefix,
            weights_path=args.weights,
            batch_size=args.batch_size,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        written = extract_features(job)
    except (MissingWeights, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UndecodableImage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for layer, path in written.items():
        print(f"{layer}: {path}")
    if job.skipped:
        print(f"skipped {len(job.skipped)} file(s)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
