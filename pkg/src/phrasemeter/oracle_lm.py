"""Exactly solvable toy providers: a first-order Markov chain whose masked
marginals are computed by exact enumeration, and a count-based contextual
embedding.

The Markov provider doubles as the offline backend for the pipeline and as
ground truth for contingency tests: every conditional is a ratio of exact
sums over completions of the masked positions, not an approximation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import KERNEL_BACKEND, masked_logmarginal
from .corpus import Corpus, SentenceRecord, context_block, context_block_offset
from .providers import Handshake, Provider, ProviderError

DEFAULT_ENUMERATION_CEILING = 10 ** 6
MAX_VOCABULARY = 64
_DIST_TOL = 1e-12


class OracleError(Exception):
    """Bad model input or out-of-vocabulary token."""


class EnumerationLimitError(OracleError):
    """The request would enumerate more completions than the ceiling allows."""


@dataclass
class MarkovModel:
    vocabulary: list[str]
    initial: np.ndarray          # shape (V,)
    transitions: np.ndarray      # shape (V, V), rows sum to 1

    def __post_init__(self):
        V = len(self.vocabulary)
        if V > MAX_VOCABULARY:
            raise OracleError(f"vocabulary size {V} exceeds {MAX_VOCABULARY}")
        self.initial = np.asarray(self.initial, dtype=np.float64)
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        if self.initial.shape != (V,) or self.transitions.shape != (V, V):
            raise OracleError("distribution shapes do not match vocabulary")
        if np.any(self.initial < 0) or np.any(self.transitions < 0):
            raise OracleError("negative probability entries")
        if abs(self.initial.sum() - 1.0) > _DIST_TOL:
            raise OracleError("initial distribution does not sum to 1")
        rows = self.transitions.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > _DIST_TOL):
            raise OracleError("transition rows do not all sum to 1")
        self.index = {w: i for i, w in enumerate(self.vocabulary)}
        if len(self.index) != V:
            raise OracleError("duplicate vocabulary entries")
        with np.errstate(divide="ignore"):
            self.log_initial = np.log(self.initial)
            self.log_transitions = np.log(self.transitions)

    @property
    def size(self) -> int:
        return len(self.vocabulary)


def save_model(model: MarkovModel, path):
    payload = {"vocabulary": model.vocabulary,
               "initial": model.initial.tolist(),
               "transitions": model.transitions.tolist()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def load_model(path) -> MarkovModel:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    try:
        return MarkovModel(vocabulary=list(payload["vocabulary"]),
                           initial=payload["initial"],
                           transitions=payload["transitions"])
    except KeyError as exc:
        raise OracleError(f"model file {path} missing field {exc}") from exc


def model_fingerprint(model: MarkovModel) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(model.vocabulary).encode())
    digest.update(model.initial.tobytes())
    digest.update(model.transitions.tobytes())
    return digest.hexdigest()[:16]


def _ids(model: MarkovModel, tokens, skip: set[int]) -> np.ndarray:
    ids = np.zeros(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        if i in skip:
            continue
        try:
            ids[i] = model.index[tok]
        except KeyError:
            raise OracleError(f"token {tok!r} not in model vocabulary") from None
    return ids


def exact_conditional(model: MarkovModel, tokens, mask, target_index: int,
                      ceiling: int = DEFAULT_ENUMERATION_CEILING) -> float:
    """log P(tokens[target] | unmasked tokens), by exact enumeration.

    The target itself is always treated as hidden on the conditioning side,
    whether or not its mask bit is set.  Other masked positions are summed
    out of both numerator and denominator.
    """
    if len(mask) != len(tokens):
        raise OracleError("mask length must equal token length")
    if not 0 <= target_index < len(tokens):
        raise OracleError("target_index out of range")
    hidden_others = sorted(i for i, m in enumerate(mask)
                           if m and i != target_index)
    hidden_all = sorted(set(hidden_others) | {target_index})
    if model.size ** len(hidden_all) > ceiling:
        raise EnumerationLimitError(
            f"{model.size}^{len(hidden_all)} completions exceed ceiling {ceiling}")
    ids = _ids(model, tokens, skip=set(hidden_others))
    num = masked_logmarginal(model.log_initial, model.log_transitions, ids,
                             np.asarray(hidden_others, dtype=np.int64))
    den = masked_logmarginal(model.log_initial, model.log_transitions, ids,
                             np.asarray(hidden_all, dtype=np.int64))
    if den == -math.inf:
        raise OracleError("conditioning context has probability zero")
    return num - den


def exact_joint(model: MarkovModel, tokens) -> float:
    """log P(token sequence) under the chain."""
    if not tokens:
        raise OracleError("empty token sequence")
    ids = _ids(model, tokens, skip=set())
    return masked_logmarginal(model.log_initial, model.log_transitions, ids,
                              np.zeros(0, dtype=np.int64))


def fit_markov_model(corpus: Corpus, smoothing: float = 0.1,
                     extra_words: tuple[str, ...] = ()) -> MarkovModel:
    """MLE chain over corpus surfaces with add-``smoothing`` regularization."""
    vocab = sorted({s.lower() for rec in corpus for s in rec.surfaces()}
                   | {w.lower() for w in extra_words})
    index = {w: i for i, w in enumerate(vocab)}
    V = len(vocab)
    init = np.full(V, smoothing)
    trans = np.full((V, V), smoothing)
    for rec in corpus:
        words = [s.lower() for s in rec.surfaces()]
        init[index[words[0]]] += 1
        for a, b in zip(words, words[1:]):
            trans[index[a], index[b]] += 1
    init /= init.sum()
    trans /= trans.sum(axis=1, keepdims=True)
    return MarkovModel(vocabulary=vocab, initial=init, transitions=trans)


# --- count-based contextual embedding --------------------------------------

def count_vector(vocab_index: dict[str, int], tokens, target_index: int,
                 window: int) -> np.ndarray:
    """Co-occurrence counts within +-window of the target, concatenated with a
    one-hot identity component for the target word itself (dimension 2V)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    V = len(vocab_index)
    vec = np.zeros(2 * V, dtype=np.float64)
    lo = max(0, target_index - window)
    hi = min(len(tokens), target_index + window + 1)
    for i in range(lo, hi):
        if i == target_index:
            continue
        j = vocab_index.get(str(tokens[i]).lower())
        if j is not None:
            vec[j] += 1.0
    j = vocab_index.get(str(tokens[target_index]).lower())
    if j is not None:
        vec[V + j] = 1.0
    return vec


def count_embedding(corpus: Corpus, record: SentenceRecord, target_index: int,
                    window: int) -> np.ndarray:
    """Count vector of one token with its +-1-sentence context block."""
    vocab = corpus_vocabulary(corpus)
    block = context_block(record, corpus)
    offset = context_block_offset(record, corpus)
    index = {w: i for i, w in enumerate(vocab)}
    return count_vector(index, block, offset + target_index, window)


def corpus_vocabulary(corpus: Corpus) -> list[str]:
    return sorted({s.lower() for rec in corpus for s in rec.surfaces()})


# --- provider implementations ----------------------------------------------

class MarkovProvider(Provider):
    """Answers condprob probes exactly from a Markov chain."""

    def __init__(self, model: MarkovModel,
                 ceiling: int = DEFAULT_ENUMERATION_CEILING):
        self.model = model
        self.ceiling = ceiling

    def handshake(self) -> Handshake:
        return Handshake(dimension=None, provider_name="toy-markov",
                         config_fingerprint=model_fingerprint(self.model))

    def condprob(self, tokens, mask, target_index: int) -> float:
        try:
            return exact_conditional(self.model, [str(t).lower() for t in tokens],
                                     mask, target_index, ceiling=self.ceiling)
        except OracleError as exc:
            raise ProviderError(str(exc)) from exc


class CountEmbeddingProvider(Provider):
    """Answers embed probes with deterministic context-count signatures."""

    def __init__(self, vocabulary: list[str], window: int = 10):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.vocabulary = list(vocabulary)
        self.window = window
        self._index = {w: i for i, w in enumerate(self.vocabulary)}

    @classmethod
    def from_corpus(cls, corpus: Corpus, window: int = 10) -> "CountEmbeddingProvider":
        return cls(corpus_vocabulary(corpus), window=window)

    def handshake(self) -> Handshake:
        digest = hashlib.sha256(json.dumps(
            [self.vocabulary, self.window]).encode()).hexdigest()[:16]
        return Handshake(dimension=2 * len(self.vocabulary),
                         provider_name="toy-count-embedding",
                         config_fingerprint=digest)

    def embed(self, tokens, target_index: int) -> np.ndarray:
        return count_vector(self._index, tokens, target_index, self.window)


class ToyProvider(Provider):
    """The pipeline's offline backend: count embeddings + Markov conditionals."""

    def __init__(self, model: MarkovModel, vocabulary: list[str],
                 window: int = 10, ceiling: int = DEFAULT_ENUMERATION_CEILING):
        self._markov = MarkovProvider(model, ceiling=ceiling)
        self._counts = CountEmbeddingProvider(vocabulary, window=window)

    @classmethod
    def from_paths(cls, model_path, corpus: Corpus, window: int = 10) -> "ToyProvider":
        return cls(load_model(model_path), corpus_vocabulary(corpus), window=window)

    def handshake(self) -> Handshake:
        markov = self._markov.handshake()
        counts = self._counts.handshake()
        fingerprint = hashlib.sha256(
            f"{markov.config_fingerprint}:{counts.config_fingerprint}".encode()
        ).hexdigest()[:16]
        return Handshake(dimension=counts.dimension, provider_name="toy",
                         config_fingerprint=fingerprint)

    def embed(self, tokens, target_index: int) -> np.ndarray:
        return self._counts.embed(tokens, target_index)

    def condprob(self, tokens, mask, target_index: int) -> float:
        return self._markov.condprob(tokens, mask, target_index)
