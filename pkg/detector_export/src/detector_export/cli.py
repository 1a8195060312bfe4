"""detexport: export detector dumps and embedding slices for the engine."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from detector_export.embed_slice import export_embedding_slice
from detector_export.export import ModelLoadError, export_detections
from detector_export.manifest import load_manifest

log = logging.getLogger("detexport")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detexport",
        description="Produce detection dumps and embedding slices in engine formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_export = sub.add_parser("export", help="run a model per an export manifest")
    p_export.add_argument("manifest", help="JSON export manifest")

    p_slice = sub.add_parser("slice", help="subset a text embedding table")
    p_slice.add_argument("--table", required=True)
    p_slice.add_argument("--vocab", required=True, help="one token per line")
    p_slice.add_argument("--out", required=True)

    return parser


def cmd_export(args) -> int:
    manifest = load_manifest(args.manifest)
    report = export_detections(manifest)
    log.info(
        "%s: %d images, %d detections (%s)",
        report["output"], report["images"], report["detections"], report["weights"],
    )
    return 0


def cmd_slice(args) -> int:
    vocab = [t for t in Path(args.vocab).read_text(encoding="utf-8").split() if t]
    report = export_embedding_slice(vocab, args.table, args.out)
    log.info("kept %d entries; %d requested tokens missing",
             report.kept, len(report.missing))
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level="INFO", format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            return cmd_export(args)
        return cmd_slice(args)
    except ModelLoadError as exc:
        print(f"detexport: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"detexport: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
