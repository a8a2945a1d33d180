"""clip-exporter command line: export-bank and export-images."""

from __future__ import annotations

import argparse
import sys

from .errors import ExporterError
from .export import export_image_features, export_text_bank
from .manifest import DEFAULT_MODEL_TAG, ExportManifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ExporterError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="clip-exporter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    bank = sub.add_parser("export-bank", help="embed the five grade prompts into a bank file")
    bank.add_argument("--model-tag", default=DEFAULT_MODEL_TAG,
                      help="checkpoint tag, or 'stub' for the offline backend")
    bank.add_argument("--out", required=True, help="output .iqeb path")

    imgs = sub.add_parser("export-images", help="embed a scored image directory")
    imgs.add_argument("--model-tag", default=DEFAULT_MODEL_TAG)
    imgs.add_argument("--images", required=True, help="image directory")
    imgs.add_argument("--scores", required=True, help="csv table: image,score")
    imgs.add_argument("--lo", type=float, required=True, help="raw score lower bound")
    imgs.add_argument("--hi", type=float, required=True, help="raw score upper bound")
    imgs.add_argument("--invert", action="store_true",
                      help="raw scores are lower-is-better")
    imgs.add_argument("--out", required=True, help="output .iqeb path")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "export-bank":
            manifest = ExportManifest(
                image_dir=".", score_table=".", score_lo=0.0, score_hi=1.0,
                model_tag=args.model_tag,
            )
            features = export_text_bank(manifest, args.out)
            print(f"wrote {features.shape[0]}x{features.shape[1]} prompt bank to {args.out}")
        else:
            manifest = ExportManifest(
                image_dir=args.images, score_table=args.scores,
                score_lo=args.lo, score_hi=args.hi, invert=args.invert,
                model_tag=args.model_tag,
            )
            features, records = export_image_features(manifest, args.out)
            print(f"wrote {features.shape[0]} image feature rows to {args.out}")
        return 0
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
