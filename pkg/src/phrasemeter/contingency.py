"""Contingency scoring: generalized pointwise mutual information of a phrase
span, estimated from masked conditional probabilities.

The joint term accumulates conditionals right to left: the rightmost span
word is predicted with the whole span visible, and each earlier word is
predicted with every span word to its right masked.  Each marginal masks all
other span words.  The score is joint minus the sum of marginals, in
natural-log units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .corpus import Corpus, PhraseInstance, context_block, context_block_offset
from .providers import Provider, request_condprob


class ContingencyError(Exception):
    """Contract violation (e.g. single-word span)."""


@dataclass
class ContingencyScore:
    phrase_id: str
    instance: Optional[PhraseInstance]  # None for aggregates
    value: float
    joint_logprob: float
    marginal_logprobs: list[float]

    def __post_init__(self):
        recomputed = self.joint_logprob - sum(self.marginal_logprobs)
        if recomputed != self.value:
            raise ContingencyError("value must equal joint - sum(marginals)")


def tokenize_padding(padding: str) -> list[str]:
    return padding.split()


def instance_contingency(provider: Provider, corpus: Corpus,
                         instance: PhraseInstance,
                         padding: str = "") -> ContingencyScore:
    """Score one occurrence over the full string bounded by the phrase's
    outer words, intervening tokens included."""
    lo, hi = instance.span
    if hi <= lo:
        raise ContingencyError(
            f"contingency undefined for a single-word span ({instance.phrase_id})")
    record = corpus.get(instance.sentence_key)
    pad_tokens = tokenize_padding(padding)
    block = context_block(record, corpus)
    offset = len(pad_tokens) + context_block_offset(record, corpus)
    tokens = pad_tokens + block
    span = list(range(offset + lo, offset + hi + 1))

    joint = 0.0
    # right to left: position i is predicted with span words right of it hidden
    for pos in reversed(span):
        mask = [p in span and p > pos for p in range(len(tokens))]
        joint += request_condprob(provider, tokens, mask, pos)

    marginals = []
    for pos in span:
        mask = [p in span and p != pos for p in range(len(tokens))]
        marginals.append(request_condprob(provider, tokens, mask, pos))

    value = joint - sum(marginals)
    return ContingencyScore(phrase_id=instance.phrase_id, instance=instance,
                            value=value, joint_logprob=joint,
                            marginal_logprobs=marginals)


def phrase_contingency(scores: list[ContingencyScore]) -> float:
    """Per-phrase mean over instance scores."""
    if not scores:
        raise ContingencyError("no instance scores to average")
    return sum(s.value for s in scores) / len(scores)
