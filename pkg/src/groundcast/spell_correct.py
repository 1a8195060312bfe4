"""Frequency-ranked spelling correction for out-of-vocabulary tokens.

Candidates are generated by enumerating single-character inserts, deletes
and replaces (exactly the Levenshtein distance-1 neighbourhood) against the
embedding vocabulary, falling back to the distance-2 neighbourhood. That is
O(len(token) * alphabet) membership probes per level instead of a scan over
multi-million-token vocabularies. A distance-1 hit always wins over any
distance-2 hit; among equals the corpus frequency decides, then lexicographic
order so reruns are byte-stable.
"""

from __future__ import annotations

from groundcast.embedding_store import EmbeddingTable

_ALPHABET = "abcdefghijklmnopqrstuvwxyz'-"


def _edits1(token: str) -> set[str]:
    splits = [(token[:i], token[i:]) for i in range(len(token) + 1)]
    deletes = {left + right[1:] for left, right in splits if right}
    replaces = {left + c + right[1:] for left, right in splits if right for c in _ALPHABET}
    inserts = {left + c + right for left, right in splits for c in _ALPHABET}
    return deletes | replaces | inserts


def correct(table: EmbeddingTable, token: str) -> str | None:
    """Best in-vocabulary replacement within Levenshtein distance 2, or None.

    Callers only invoke this for lowercase tokens already known to miss the
    vocabulary (including case variants).
    """
    level1 = _edits1(token)
    candidates = {c for c in level1 if c in table.entries}
    if not candidates:
        candidates = {
            c2 for c1 in level1 for c2 in _edits1(c1) if c2 in table.entries
        }
    if not candidates:
        return None
    return min(candidates, key=lambda c: (-table.frequency(c), c))
