"""Slice a full word-embedding text table down to the tokens a run needs.

Keeps the engine's text format (``token v1 ... vD`` per line). A requested
token also matches stored case variants (the engine's lookup does the same),
so slicing "scotch" keeps a stored "Scotch". Missing tokens are reported,
not fatal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger("detexport")


@dataclass
class SliceReport:
    kept: int = 0
    missing: list[str] = field(default_factory=list)


def export_embedding_slice(vocab: list[str], table_path, out_path) -> SliceReport:
    wanted: set[str] = set()
    for token in vocab:
        token = token.strip()
        if token:
            wanted.add(token)
    if not wanted:
        raise ValueError("empty vocabulary")
    wanted_folded = {t.lower() for t in wanted}

    report = SliceReport()
    found_folded: set[str] = set()
    seen_keys: set[str] = set()
    with open(table_path, encoding="utf-8") as fh, open(
        out_path, "w", encoding="utf-8"
    ) as out:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            parts = stripped.split(" ")
            if lineno == 1 and len(parts) == 2 and _all_int(parts):
                continue  # COUNT DIM header; the slice rewrites without one
            token = parts[0]
            if token in seen_keys:
                continue  # engine keeps first occurrences; so do we
            if token in wanted or token.lower() in wanted_folded:
                out.write(stripped + "\n")
                seen_keys.add(token)
                found_folded.add(token.lower())
                report.kept += 1
    report.missing = sorted(
        t for t in wanted if t.lower() not in found_folded
    )
    for token in report.missing:
        log.info("token not in source table: %s", token)
    return report


def _all_int(parts: list[str]) -> bool:
    try:
        [int(p) for p in parts]
        return True
    except ValueError:
        return False
