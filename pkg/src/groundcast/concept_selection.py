"""Rank an image's concept groups against the query phrase.

Three query aggregation modes: the whole phrase as one vector (w2v_avg),
the best single query word per concept (w2v_max), or the last resolvable
word only (w2v_last, head-word assumption).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from groundcast import embedding_store
from groundcast.detection_ingest import ConceptGroup
from groundcast.embedding_store import Corrector, EmbeddingTable, PhraseVector


class SimilarityMode(str, Enum):
    W2V_AVG = "w2v_avg"
    W2V_MAX = "w2v_max"
    W2V_LAST = "w2v_last"
    NO_FILTER = "no_filter"  # concept selection bypassed entirely


@dataclass
class QueryRepresentation:
    mode: SimilarityMode
    phrase_vec: PhraseVector
    token_vecs: list[tuple[str, np.ndarray]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        if self.mode is SimilarityMode.W2V_AVG:
            return self.phrase_vec.is_empty
        return not self.token_vecs


@dataclass
class ScoredConcept:
    group: ConceptGroup
    score: float
    matched_token: str | None = None  # which query word won, in w2v_max


def represent_query(
    table: EmbeddingTable,
    corrector: Corrector | None,
    phrase: str,
    mode: SimilarityMode,
) -> QueryRepresentation:
    """Tokenize and resolve the phrase under the given aggregation mode.

    A representation with no resolvable token is marked empty; callers turn
    that into the whole-image fallback.
    """
    if not phrase.strip():
        raise ValueError("empty phrase")
    tokens = embedding_store.tokenize(phrase)
    phrase_vec = embedding_store.phrase_vector(table, tokens, corrector)
    return QueryRepresentation(
        mode=mode,
        phrase_vec=phrase_vec,
        token_vecs=list(phrase_vec.contributing_tokens),
    )


def _mode_score(query: QueryRepresentation, label_vector: PhraseVector):
    label = label_vector.values
    if query.mode is SimilarityMode.W2V_AVG:
        return float(np.dot(query.phrase_vec.values, label)), None
    if query.mode is SimilarityMode.W2V_LAST:
        token, vec = query.token_vecs[-1]
        return float(np.dot(vec, label)), token
    if query.mode is SimilarityMode.W2V_MAX:
        best_score, best_token = -np.inf, None
        for token, vec in query.token_vecs:  # earliest token wins ties
            score = float(np.dot(vec, label))
            if score > best_score:
                best_score, best_token = score, token
        return best_score, best_token
    raise ValueError(f"mode {query.mode} does not rank concepts")


def score_concepts(
    query: QueryRepresentation, groups: list[ConceptGroup]
) -> list[ScoredConcept]:
    """Scored concepts in descending order, label-lexicographic on ties.

    Unscoreable groups (no label representation) are skipped.
    """
    if query.is_empty:
        raise ValueError("no representation")
    scored = []
    for group in groups:
        if not group.scoreable:
            continue
        score, matched = _mode_score(query, group.label_vector)
        scored.append(ScoredConcept(group=group, score=score, matched_token=matched))
    scored.sort(key=lambda sc: (-sc.score, sc.group.label))
    return scored
