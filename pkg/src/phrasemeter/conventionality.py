"""Conventionality scoring: how far a word's in-phrase uses drift from its
prototypical embedding.

The prototype is the mean embedding over uses of the word outside any target
instance of the phrase; the score is the negative mean Euclidean norm of the
z-normalized displacement of each in-phrase use from that prototype.  Scores
are always <= 0, with 0 only when every in-phrase use sits exactly on the
prototype.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import Corpus, PhraseInstance, PhraseSpec, SentenceRecord, \
    context_block, context_block_offset
from .providers import Provider, request_embedding

SIGMA_FLOOR = 1e-8
DEFAULT_MIN_OCCURRENCES = 10


class InsufficientDataError(Exception):
    """Not enough vectors to form a prototype or a score."""


@dataclass
class OccurrenceSet:
    lemma: str
    slot: str  # head | dep
    instances: list[tuple[tuple[str, int], int]]  # (sentence key, token index)

    @property
    def count(self) -> int:
        return len(self.instances)


@dataclass
class ConventionalityScore:
    phrase_id: str
    slot: str
    mu: Optional[np.ndarray]
    sigma: Optional[np.ndarray]
    n: int            # occurrence-set size behind mu/sigma
    m: int            # in-phrase uses scored
    value: Optional[float]
    flagged: bool = False
    reason: str = ""


def mean_embedding(vectors: list[np.ndarray]) -> np.ndarray:
    if not vectors:
        raise InsufficientDataError("cannot average an empty embedding set")
    stack = np.asarray(vectors, dtype=np.float64)
    if stack.ndim != 2:
        raise ValueError("embedding vectors must share one dimension")
    return stack.mean(axis=0)


def componentwise_std(vectors: list[np.ndarray], mu: np.ndarray,
                      floor: float = SIGMA_FLOOR) -> np.ndarray:
    if len(vectors) < 2:
        raise InsufficientDataError("need >= 2 vectors for a standard deviation")
    stack = np.asarray(vectors, dtype=np.float64)
    sigma = np.sqrt(np.mean((stack - mu) ** 2, axis=0))
    return np.maximum(sigma, floor)


def conv_score(target_vectors: list[np.ndarray], mu: np.ndarray,
               sigma: np.ndarray) -> float:
    """-(1/m) sum_i || (T_i - mu) / sigma ||_2 (component-wise division)."""
    if not target_vectors:
        raise InsufficientDataError("no in-phrase vectors to score")
    stack = np.asarray(target_vectors, dtype=np.float64)
    if stack.shape[1:] != mu.shape or mu.shape != sigma.shape:
        raise ValueError("dimension mismatch between vectors, mu, and sigma")
    z = (stack - mu) / sigma
    return float(-np.mean(np.linalg.norm(z, axis=1)))


def embed_occurrence(provider: Provider, corpus: Corpus, record: SentenceRecord,
                     token_index: int) -> np.ndarray:
    """Embed one token with its +-1-sentence context block."""
    block = context_block(record, corpus)
    offset = context_block_offset(record, corpus)
    return request_embedding(provider, block, offset + token_index)


def build_occurrence_set(corpus: Corpus, spec: PhraseSpec, slot: str,
                         target_instances: list[PhraseInstance]) -> OccurrenceSet:
    """All corpus uses of the slot's lemma outside any target instance.

    "Outside" excludes only token positions covered by a target-instance
    span of this spec; structurally matched control uses are included.
    """
    lemma = spec.head_lemma if slot == "head" else spec.dep_lemma
    blocked: set[tuple[tuple[str, int], int]] = set()
    for inst in target_instances:
        for i in range(inst.span[0], inst.span[1] + 1):
            blocked.add((inst.sentence_key, i))
    uses = [(key, idx) for key, idx in corpus.lemma_occurrences(lemma)
            if (key, idx) not in blocked]
    return OccurrenceSet(lemma=lemma, slot=slot, instances=uses)


def score_phrase_slot(corpus: Corpus, spec: PhraseSpec, slot: str,
                      provider: Provider,
                      target_instances: list[PhraseInstance],
                      in_phrase_uses: Optional[list[tuple[tuple[str, int], int]]] = None,
                      min_occurrences: int = DEFAULT_MIN_OCCURRENCES) -> ConventionalityScore:
    """Score one (phrase, slot) pair.

    ``in_phrase_uses`` defaults to the slot token of each target instance;
    passing the matched instances' slot tokens instead scores the control
    group against the same prototype.
    """
    if slot not in ("head", "dep"):
        raise ValueError(f"slot must be head or dep, got {slot!r}")
    occ = build_occurrence_set(corpus, spec, slot, target_instances)
    if in_phrase_uses is None:
        in_phrase_uses = [
            (inst.sentence_key,
             inst.head_index if slot == "head" else inst.dep_index)
            for inst in target_instances]
    if not in_phrase_uses:
        return ConventionalityScore(spec.phrase_id, slot, None, None,
                                    n=occ.count, m=0, value=None, flagged=True,
                                    reason="no in-phrase uses")
    if occ.count < max(min_occurrences, 2):
        return ConventionalityScore(spec.phrase_id, slot, None, None,
                                    n=occ.count, m=len(in_phrase_uses),
                                    value=None, flagged=True,
                                    reason=f"only {occ.count} out-of-phrase uses")
    occ_vectors = [embed_occurrence(provider, corpus, corpus.get(key), idx)
                   for key, idx in occ.instances]
    target_vectors = [embed_occurrence(provider, corpus, corpus.get(key), idx)
                      for key, idx in in_phrase_uses]
    mu = mean_embedding(occ_vectors)
    sigma = componentwise_std(occ_vectors, mu)
    value = conv_score(target_vectors, mu, sigma)
    return ConventionalityScore(spec.phrase_id, slot, mu, sigma,
                                n=occ.count, m=len(target_vectors), value=value)


def phrase_conventionality(head_score: ConventionalityScore,
                           dep_score: ConventionalityScore) -> float:
    """Mean of the head and primary non-head word scores."""
    if head_score.flagged or dep_score.flagged:
        raise InsufficientDataError(
            f"flagged slot score for {head_score.phrase_id}: "
            f"{head_score.reason or dep_score.reason}")
    return (head_score.value + dep_score.value) / 2.0
