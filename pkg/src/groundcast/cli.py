"""Command-line frontend.

Subcommands:
  localize       detections + embeddings + queries -> predictions TSV
  evaluate       predictions + queries -> report CSV and table
  colour-detect  PPM images + posterior table -> detection JSON
  overlay        render prediction / ground truth / candidates as SVG
  sweep          run many (detectors, similarity, strategy) configs, one CSV

Any localize/sweep option can also come from a config file of ``key = value``
lines (# comments allowed); command-line flags win. Sweep files use the same
syntax with one ``[name]`` section per run. GROUNDCAST_THREADS caps the
query worker pool.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from xml.sax.saxutils import quoteattr

from groundcast import colour_detector, evaluation, runner
from groundcast.concept_selection import SimilarityMode
from groundcast.detection_ingest import DETECTOR_IDS, load_category_file
from groundcast.evaluation import (
    build_report,
    format_box,
    format_report_table,
    load_queries,
    make_record,
    parse_box,
    write_report_csv,
)
from groundcast.localization import ConsensusConfig, Strategy

log = logging.getLogger("groundcast")


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; later keys override earlier ones."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def parse_sweep_file(path) -> list[tuple[str, dict[str, str]]]:
    """``[name]`` sections of key = value lines, one section per run."""
    sections: list[tuple[str, dict[str, str]]] = []
    current: dict[str, str] | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = {}
                sections.append((line[1:-1].strip(), current))
                continue
            if current is None:
                raise ValueError(f"{path}: line {lineno}: key outside any [section]")
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            current[key.strip()] = value.strip()
    if not sections:
        raise ValueError(f"{path}: no [section] blocks")
    return sections


def _add_run_options(parser: argparse.ArgumentParser):
    parser.add_argument("--embeddings", help="text embedding table")
    parser.add_argument("--frequencies", help="token frequency sidecar")
    parser.add_argument(
        "--detections",
        action="append",
        default=[],
        metavar="DETECTOR=PATH",
        help="detection dump tagged with its detector id (repeatable)",
    )
    parser.add_argument(
        "--detectors",
        help=f"comma list restricting detector ids ({','.join(sorted(DETECTOR_IDS))})",
    )
    parser.add_argument(
        "--similarity",
        choices=[m.value for m in SimilarityMode],
        default=SimilarityMode.W2V_MAX.value,
    )
    parser.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=Strategy.UNION.value,
    )
    parser.add_argument("--consensus-k", type=int, default=5)
    parser.add_argument("--consensus-threshold", type=float, default=0.6)
    parser.add_argument(
        "--spell-correct",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--categories", help="category subset file for tfcoco20")
    parser.add_argument("--config", help="key = value defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundcast",
        description="Localize free-form phrases from detector dumps and word embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_loc = sub.add_parser("localize", help="predict one box per query")
    _add_run_options(p_loc)
    p_loc.add_argument("--queries", required=True)
    p_loc.add_argument("--out", required=True)

    p_eval = sub.add_parser("evaluate", help="score a predictions file")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--queries", required=True)
    p_eval.add_argument("--out", help="report CSV path")
    p_eval.add_argument("--name", help="config label for report rows")

    p_col = sub.add_parser("colour-detect", help="colour detections from PPM images")
    p_col.add_argument("--images", required=True, help="directory of .ppm files")
    p_col.add_argument("--posterior-table", required=True)
    p_col.add_argument("--out", required=True)
    p_col.add_argument("--threshold", type=float,
                       default=colour_detector.POSTERIOR_THRESHOLD)
    p_col.add_argument("--min-area", type=int, default=colour_detector.MIN_BOX_AREA)

    p_ov = sub.add_parser("overlay", help="SVG of prediction vs ground truth")
    p_ov.add_argument("--image", required=True, help="image path/href for the SVG")
    p_ov.add_argument("--width", type=int, required=True)
    p_ov.add_argument("--height", type=int, required=True)
    p_ov.add_argument("--prediction", help="x_min,y_min,x_max,y_max")
    p_ov.add_argument("--gt", help="x_min,y_min,x_max,y_max")
    p_ov.add_argument("--candidates", help="semicolon-separated boxes")
    p_ov.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="run a list of configs, one combined CSV")
    _add_run_options(p_sweep)
    p_sweep.add_argument("--sweep-file", required=True)
    p_sweep.add_argument("--queries", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--predictions-dir", help="also keep per-run prediction TSVs")

    return parser


def _apply_config_file(args: argparse.Namespace, argv: list[str]):
    """Fill argparse defaults from --config; explicit flags keep priority."""
    if not getattr(args, "config", None):
        return args
    overrides = parse_config_file(args.config)
    argv_flags = {a.split("=")[0] for a in argv if a.startswith("--")}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        flag = "--" + key.replace("_", "-")
        if not hasattr(args, dest):
            raise ValueError(f"{args.config}: unknown option {key!r}")
        if flag in argv_flags:
            continue
        setattr(args, dest, _coerce_like(getattr(args, dest), value, dest))
    return args


def _coerce_like(current, value: str, dest: str):
    if dest == "detections":
        return (current or []) + [v for v in value.split() if v]
    if isinstance(current, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def _run_config_from_args(args) -> runner.RunConfig:
    detectors = set(DETECTOR_IDS)
    if args.detectors:
        detectors = {d.strip() for d in args.detectors.split(",") if d.strip()}
    config = runner.RunConfig(
        detectors=detectors,
        similarity=SimilarityMode(args.similarity),
        strategy=Strategy(args.strategy),
        consensus=ConsensusConfig(args.consensus_k, args.consensus_threshold),
        spell_correct=args.spell_correct,
        seed=args.seed,
    )
    if args.categories:
        config.category_subset = load_category_file(args.categories)
    config.validate()
    return config


def _detection_files(specs: list[str]) -> list[tuple[str, str]]:
    files = []
    for spec in specs:
        detector_id, sep, path = spec.partition("=")
        if not sep or not path:
            raise ValueError(
                f"--detections expects DETECTOR=PATH, got {spec!r}"
            )
        files.append((detector_id.strip(), path))
    return files


def cmd_localize(args) -> int:
    config = _run_config_from_args(args)
    engine = runner.build_engine(
        config,
        embeddings_path=args.embeddings,
        frequency_path=args.frequencies,
        detection_files=_detection_files(args.detections),
    )
    queries = load_queries(args.queries)
    rows = runner.run_queries(engine, queries)
    runner.write_predictions(rows, args.out)
    fallbacks = sum(1 for r in rows if r.concept is None)
    log.info("wrote %d predictions to %s (%d whole-image fallbacks)",
             len(rows), args.out, fallbacks)
    return 0


def cmd_evaluate(args) -> int:
    predictions = runner.read_predictions(args.predictions)
    queries = load_queries(args.queries)
    if len(predictions) != len(queries):
        raise ValueError(
            f"{len(predictions)} predictions vs {len(queries)} queries: counts must match"
        )
    records = []
    candidate_sets = []
    any_candidates = False
    for row, query in zip(predictions, queries):
        if row.image_id != query.image_id:
            raise ValueError(
                f"query {row.query_index}: prediction for image {row.image_id!r} "
                f"but query file has {query.image_id!r}"
            )
        records.append(make_record(query, row.box, row.candidates))
        candidate_sets.append(row.candidates)
        any_candidates = any_candidates or bool(row.candidates)
    name = args.name or (predictions[0].strategy if predictions else "run")
    rows = build_report(name, records, candidate_sets if any_candidates else None)
    print(format_report_table(rows))
    if args.out:
        write_report_csv(rows, args.out)
    return 0


def cmd_colour_detect(args) -> int:
    table = colour_detector.load_posterior_table(args.posterior_table)
    paths = sorted(
        fn for fn in os.listdir(args.images) if fn.lower().endswith(".ppm")
    )
    dump = []
    failures = 0
    for fn in paths:
        path = os.path.join(args.images, fn)
        try:
            image = colour_detector.read_ppm(path)
            detections = colour_detector.detect_colours(
                image, table, threshold=args.threshold, min_area=args.min_area
            )
        except (ValueError, OSError) as exc:
            log.error("%s: %s", path, exc)
            failures += 1
            continue
        height, width = image.shape[:2]
        dump.append(
            {
                "image_id": os.path.splitext(fn)[0],
                "width": width,
                "height": height,
                "detections": [
                    {
                        "label": d.label,
                        "box": list(d.box.as_tuple()),
                        "confidence": d.confidence,
                        "detector_id": "colour",
                    }
                    for d in detections
                ],
            }
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(dump, fh, indent=1)
        fh.write("\n")
    log.info("wrote %d image records to %s", len(dump), args.out)
    return 1 if failures else 0


def _svg_rect(box, colour: str, dashed: bool = False) -> str:
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (
        f'  <rect x="{box.x_min}" y="{box.y_min}" width="{box.x_max - box.x_min}" '
        f'height="{box.y_max - box.y_min}" fill="none" stroke="{colour}" '
        f'stroke-width="3"{dash}/>'
    )


def cmd_overlay(args) -> int:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{args.width}" '
        f'height="{args.height}" viewBox="0 0 {args.width} {args.height}">',
        f'  <image href={quoteattr(args.image)} width="{args.width}" '
        f'height="{args.height}"/>',
    ]
    if args.candidates:
        for token in filter(None, (t.strip() for t in args.candidates.split(";"))):
            lines.append(_svg_rect(parse_box(token), "blue", dashed=True))
    if args.gt:
        lines.append(_svg_rect(parse_box(args.gt), "lime"))
    if args.prediction:
        lines.append(_svg_rect(parse_box(args.prediction), "red"))
    lines.append("</svg>")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def cmd_sweep(args) -> int:
    sections = parse_sweep_file(args.sweep_file)
    queries = load_queries(args.queries)
    all_rows = []
    tables: dict[tuple, object] = {}  # embedding tables are big; load each once
    for name, overrides in sections:
        run_args = argparse.Namespace(**vars(args))
        for key, value in overrides.items():
            dest = key.replace("-", "_")
            if not hasattr(run_args, dest):
                raise ValueError(f"{args.sweep_file}: [{name}]: unknown option {key!r}")
            setattr(run_args, dest, _coerce_like(getattr(run_args, dest), value, dest))
        config = _run_config_from_args(run_args)
        table = None
        if run_args.embeddings:
            key = (run_args.embeddings, run_args.frequencies)
            if key not in tables:
                tables[key] = runner.load_table(*key)
            table = tables[key]
        engine = runner.build_engine(
            config,
            detection_files=_detection_files(run_args.detections),
            table=table,
        )
        rows = runner.run_queries(engine, queries)
        if args.predictions_dir:
            os.makedirs(args.predictions_dir, exist_ok=True)
            runner.write_predictions(
                rows, os.path.join(args.predictions_dir, f"{name}.tsv")
            )
        records = [make_record(q, r.box, r.candidates) for q, r in zip(queries, rows)]
        candidate_sets = [r.candidates for r in rows]
        all_rows.extend(build_report(name, records, candidate_sets))
        log.info("sweep [%s] done", name)
    write_report_csv(all_rows, args.out)
    print(format_report_table(all_rows))
    return 0


_COMMANDS = {
    "localize": cmd_localize,
    "evaluate": cmd_evaluate,
    "colour-detect": cmd_colour_detect,
    "overlay": cmd_overlay,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("GROUNDCAST_LOGLEVEL", "INFO"),
        format="%(levelname)s %(message)s",
    )
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args, argv)
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"groundcast: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
