"""Masked-LM probe provider.

Answers the two probe kinds of the phrasemeter wire protocol with a real
transformer:

- ``condprob``: hidden words (``mask[i] = true``) and the target word are
  replaced by ``[MASK]`` at the subword level; the returned value is the
  pseudo-log-likelihood of the target word, i.e. the sum over its subword
  positions of ``log_softmax(logits)[original_id]``. Always <= 0.
- ``embed``: a clean forward pass (nothing masked); the vector is the mean
  of the target word's subword hidden states at a configurable layer
  (default: last).

Probe tokens are whole words; alignment to subwords uses the fast
tokenizer's ``word_ids``. Words outside the tokenizer vocabulary fall back
to ``[UNK]`` and are still scored, which keeps the provider total on any
input.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer


class NeuralProviderError(Exception):
    pass


class NeuralProvider:
    def __init__(self, model_path: str, layer: int = -1,
                 lowercase: bool = True):
        self.tokenizer = AutoTokenizer.from_pretrained(model_path)
        if not self.tokenizer.is_fast:
            raise NeuralProviderError("a fast tokenizer is required "
                                      "(word alignment uses word_ids)")
        if self.tokenizer.mask_token_id is None:
            raise NeuralProviderError("tokenizer has no [MASK] token")
        self.model = AutoModelForMaskedLM.from_pretrained(
            model_path, output_hidden_states=True)
        self.model.eval()
        torch.set_grad_enabled(False)
        self.layer = layer
        self.lowercase = lowercase
        self.dimension = int(self.model.config.hidden_size)
        self.name = f"neural:{self.model.config.model_type}"
        self.fingerprint = self._fingerprint(model_path)

    def _fingerprint(self, model_path: str) -> str:
        digest = hashlib.sha256()
        digest.update(json.dumps(self.model.config.to_dict(), sort_keys=True,
                                 default=str).encode())
        for key in sorted(self.model.state_dict()):
            tensor = self.model.state_dict()[key]
            digest.update(key.encode())
            digest.update(tensor.numpy().tobytes())
        digest.update(f"layer={self.layer}".encode())
        return digest.hexdigest()[:16]

    # --- encoding ----------------------------------------------------------

    def _encode(self, tokens: list[str]):
        words = [t.lower() for t in tokens] if self.lowercase else list(tokens)
        enc = self.tokenizer(words, is_split_into_words=True,
                             return_tensors="pt", truncation=True,
                             max_length=self.model.config.max_position_embeddings)
        word_ids = enc.word_ids(0)
        positions: dict[int, list[int]] = {}
        for pos, wid in enumerate(word_ids):
            if wid is not None:
                positions.setdefault(wid, []).append(pos)
        if len(positions) != len(words):
            raise NeuralProviderError("tokenizer dropped a word entirely")
        return enc, positions

    # --- probes ------------------------------------------------------------

    def condprob(self, tokens: list[str], mask: list[bool],
                 target_index: int) -> float:
        if len(mask) != len(tokens):
            raise NeuralProviderError("mask length mismatch")
        if not 0 <= target_index < len(tokens):
            raise NeuralProviderError("target_index out of range")
        enc, positions = self._encode(tokens)
        input_ids = enc["input_ids"].clone()
        original = enc["input_ids"][0]
        hidden_words = {i for i, m in enumerate(mask) if m} | {target_index}
        for wid in hidden_words:
            for pos in positions[wid]:
                input_ids[0, pos] = self.tokenizer.mask_token_id
        logits = self.model(input_ids=input_ids,
                            attention_mask=enc["attention_mask"]).logits[0]
        logprobs = torch.log_softmax(logits.double(), dim=-1)
        total = 0.0
        for pos in positions[target_index]:
            total += float(logprobs[pos, original[pos]])
        return total

    def embed(self, tokens: list[str], target_index: int) -> np.ndarray:
        if not 0 <= target_index < len(tokens):
            raise NeuralProviderError("target_index out of range")
        enc, positions = self._encode(tokens)
        out = self.model(input_ids=enc["input_ids"],
                         attention_mask=enc["attention_mask"])
        states = out.hidden_states[self.layer][0]
        rows = states[positions[target_index]]
        return rows.mean(dim=0).double().numpy()
