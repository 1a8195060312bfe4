"""Word-embedding table loading and phrase/synset vector construction.

The on-disk format is one entry per line, ``token v1 v2 ... vD`` with
single-space separators. An optional first header line ``COUNT DIM``
(exactly two integer fields) is detected and skipped. An optional sidecar
file of ``token count`` lines supplies corpus frequencies for the spell
corrector; without it, frequencies default to the table's own line order
(earlier entries rank higher, matching tables sorted by corpus frequency).

Every vector handed out of this module is unit-normalized. Phrase and
synset vectors are sums of per-token unit vectors, re-normalized, so
rescaling any stored raw vector never changes similarity rankings. A
phrase none of whose tokens resolve gets the "no vector" sentinel
(``values is None``) rather than a zero vector, forcing callers into an
explicit whole-image fallback instead of silently scoring 0 everywhere.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Resolver hook signature: (table, oov_token) -> replacement token or None.
Corrector = Callable[["EmbeddingTable", str], "str | None"]

_STRIP_CHARS = string.punctuation


def tokenize(text: str) -> list[str]:
    """Whitespace split, strip leading/trailing ASCII punctuation, lowercase.

    Tokens that are pure punctuation vanish ("red , shirt" -> ["red", "shirt"]).
    """
    out = []
    for raw in text.split():
        tok = raw.strip(_STRIP_CHARS).lower()
        if tok:
            out.append(tok)
    return out


@dataclass
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray]
    token_frequency: dict[str, int] = field(default_factory=dict)
    # lowercase form -> first stored key with that form, for case-variant lookup
    case_index: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.case_index:
            for key in self.entries:
                self.case_index.setdefault(key.lower(), key)
        if not self.token_frequency:
            n = len(self.entries)
            self.token_frequency = {t: n - i for i, t in enumerate(self.entries)}

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def frequency(self, token: str) -> int:
        return self.token_frequency.get(token, 0)


@dataclass
class PhraseVector:
    """Unit vector for a phrase, or the no-vector sentinel (values is None).

    contributing_tokens pairs each resolved query token (original lowercased
    spelling, pre spell-correction) with the unit vector it resolved to, in
    phrase order.
    """

    values: np.ndarray | None
    contributing_tokens: list[tuple[str, np.ndarray]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return self.values is None


def load_table(path, frequency_path=None) -> EmbeddingTable:
    """Parse the text embedding format.

    Duplicate tokens keep their first occurrence. A line whose float count
    disagrees with the table dimension is an error naming the line number.
    Vectors are stored float32 (multi-million-token tables at 300 dims);
    every derived quantity is computed in float64.
    """
    entries: dict[str, np.ndarray] = {}
    dimension = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if lineno == 1 and len(parts) == 2 and _all_int(parts):
                continue  # COUNT DIM header
            token, values = parts[0], parts[1:]
            try:
                vec = np.array(values, dtype=np.float32)
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: bad float ({exc})") from None
            if dimension is None:
                if len(vec) == 0:
                    raise ValueError(f"{path}: line {lineno}: no vector components")
                dimension = len(vec)
            elif len(vec) != dimension:
                raise ValueError(
                    f"{path}: line {lineno}: expected {dimension} floats, got {len(vec)}"
                )
            if token not in entries:
                entries[token] = vec
    if not entries:
        raise ValueError(f"{path}: no entries")
    table = EmbeddingTable(dimension=dimension, entries=entries)
    if frequency_path is not None:
        table.token_frequency = _load_frequencies(frequency_path)
    return table


def _all_int(parts: list[str]) -> bool:
    try:
        [int(p) for p in parts]
        return True
    except ValueError:
        return False


def _load_frequencies(path) -> dict[str, int]:
    freqs: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'token count'")
            freqs[parts[0]] = int(parts[1])
    return freqs


def lookup_token(table: EmbeddingTable, token: str) -> np.ndarray | None:
    """Resolve a token to its stored raw vector, trying case variants.

    Order: exact key, then the lowercased key, then any stored case variant
    of the token's lowercase form ("scotch" finds a stored "Scotch").
    Returns None when all three miss.
    """
    vec = table.entries.get(token)
    if vec is not None:
        return vec
    lowered = token.lower()
    vec = table.entries.get(lowered)
    if vec is not None:
        return vec
    variant = table.case_index.get(lowered)
    if variant is not None:
        return table.entries[variant]
    return None


def _unit(vec: np.ndarray) -> np.ndarray | None:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return None
    return vec / norm


def _resolve_unit(table: EmbeddingTable, token: str, corrector: Corrector | None):
    vec = lookup_token(table, token)
    if vec is None and corrector is not None:
        replacement = corrector(table, token)
        if replacement is not None:
            vec = lookup_token(table, replacement)
    if vec is None:
        return None
    return _unit(vec)


def phrase_vector(
    table: EmbeddingTable,
    tokens: list[str],
    corrector: Corrector | None = None,
) -> PhraseVector:
    """Unit-normalized sum of per-token unit vectors.

    Tokens must already be lowercased/tokenized. Tokens unresolved after
    case-variant lookup and spell correction are dropped; if every token
    drops, the result is the no-vector sentinel.
    """
    contributing: list[tuple[str, np.ndarray]] = []
    for token in tokens:
        unit = _resolve_unit(table, token, corrector)
        if unit is not None:
            contributing.append((token, unit))
    if not contributing:
        return PhraseVector(values=None)
    total = np.sum([vec for _, vec in contributing], axis=0)
    unit = _unit(total)
    if unit is None:  # opposing unit vectors cancelled out exactly
        return PhraseVector(values=None, contributing_tokens=contributing)
    return PhraseVector(values=unit, contributing_tokens=contributing)


def synset_vector(
    table: EmbeddingTable,
    terms: list[str],
    corrector: Corrector | None = None,
) -> PhraseVector:
    """Unit-normalized sum over a synset's terms.

    Each term resolves as a whole token first (keeps stored multiword keys
    like "sports_car" and their case variants), falling back to phrase rules
    over its constituent words. Terms keep their original case; the lookup
    chain handles variants.
    """
    if not terms:
        raise ValueError("empty synset")
    term_units: list[tuple[str, np.ndarray]] = []
    for term in terms:
        unit = _resolve_unit(table, term, corrector)
        if unit is None:
            sub = phrase_vector(table, tokenize(term.replace("_", " ")), corrector)
            if not sub.is_empty:
                unit = sub.values
        if unit is not None:
            term_units.append((term, unit))
    if not term_units:
        return PhraseVector(values=None)
    total = np.sum([vec for _, vec in term_units], axis=0)
    unit = _unit(total)
    if unit is None:
        return PhraseVector(values=None, contributing_tokens=term_units)
    return PhraseVector(values=unit, contributing_tokens=term_units)


def cosine(a: PhraseVector, b: PhraseVector) -> float:
    """Dot product of the two unit vectors; errors on the sentinel."""
    if a.is_empty or b.is_empty:
        raise ValueError("no representation")
    return float(np.dot(a.values, b.values))
