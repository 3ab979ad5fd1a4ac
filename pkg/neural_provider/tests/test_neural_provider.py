import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from neural_provider.cli import serve
from neural_provider.provider import NeuralProvider, NeuralProviderError

FIXTURE = str(Path(__file__).parent / "fixtures" / "tiny-mlm")


@pytest.fixture(scope="module")
def provider():
    return NeuralProvider(FIXTURE)


TOKENS = ["the", "cat", "sat", "on", "the", "mat"]


class TestCondprob:
    def test_logprob_is_negative_and_finite(self, provider):
        lp = provider.condprob(TOKENS, [False] * 6, 2)
        assert lp <= 0.0 and math.isfinite(lp)

    def test_deterministic(self, provider):
        a = provider.condprob(TOKENS, [False] * 6, 3)
        b = provider.condprob(TOKENS, [False] * 6, 3)
        assert a == b

    def test_masking_context_changes_value(self, provider):
        clean = provider.condprob(TOKENS, [False] * 6, 5)
        masked = provider.condprob(TOKENS, [True, True, True, False, False,
                                            False], 5)
        assert clean != masked

    def test_target_word_is_hidden_from_itself(self, provider):
        # swapping the target word changes only the scored id, not the
        # input: both variants must see the identical masked input, so the
        # two log-probs must sum over the same distribution (both finite).
        a = provider.condprob(["the", "cat"], [False, False], 1)
        b = provider.condprob(["the", "dog"], [False, False], 1)
        assert a != b and math.isfinite(a) and math.isfinite(b)

    def test_errors(self, provider):
        with pytest.raises(NeuralProviderError):
            provider.condprob(TOKENS, [False] * 5, 0)
        with pytest.raises(NeuralProviderError):
            provider.condprob(TOKENS, [False] * 6, 6)

    def test_unknown_word_scored_as_unk(self, provider):
        lp = provider.condprob(["zzzqqq", "cat"], [False, False], 0)
        assert lp <= 0.0 and math.isfinite(lp)


class TestEmbed:
    def test_shape_and_determinism(self, provider):
        v = provider.embed(TOKENS, 1)
        assert v.shape == (provider.dimension,)
        assert np.array_equal(v, provider.embed(TOKENS, 1))

    def test_contextual(self, provider):
        a = provider.embed(["the", "cat", "sat"], 1)
        b = provider.embed(["a", "cat", "ran"], 1)
        assert not np.array_equal(a, b)

    def test_layer_selection(self):
        last = NeuralProvider(FIXTURE, layer=-1)
        first = NeuralProvider(FIXTURE, layer=0)
        assert not np.array_equal(last.embed(TOKENS, 0),
                                  first.embed(TOKENS, 0))
        assert last.fingerprint != first.fingerprint


class TestServeLoop:
    def run_serve(self, lines, provider):
        out = io.StringIO()
        serve(provider, io.StringIO("\n".join(lines) + "\n"), out)
        replies = [json.loads(l) for l in out.getvalue().splitlines()]
        return replies[0], replies[1:]

    def test_handshake_then_answers(self, provider):
        req = {"id": "r1", "kind": "condprob", "tokens": TOKENS,
               "mask": [False] * 6, "target_index": 2, "params": {}}
        hs, replies = self.run_serve([json.dumps(req)], provider)
        assert hs["dimension"] == provider.dimension
        assert hs["provider_name"].startswith("neural:")
        assert len(hs["config_fingerprint"]) == 16
        assert replies[0]["ok"] and replies[0]["logprob"] <= 0.0

    def test_embed_and_error_responses(self, provider):
        reqs = [
            {"id": "a", "kind": "embed", "tokens": TOKENS,
             "mask": [False] * 6, "target_index": 0, "params": {}},
            {"id": "b", "kind": "nonsense", "tokens": TOKENS,
             "mask": [False] * 6, "target_index": 0, "params": {}},
            "this is not json",
            {"id": "c", "kind": "condprob", "tokens": TOKENS,
             "mask": [False] * 6, "target_index": 99, "params": {}},
        ]
        lines = [r if isinstance(r, str) else json.dumps(r) for r in reqs]
        _, replies = self.run_serve(lines, provider)
        by_id = {r["id"]: r for r in replies}
        assert len(by_id["a"]["vector"]) == provider.dimension
        assert not by_id["b"]["ok"]
        assert not by_id["?"]["ok"]
        assert not by_id["c"]["ok"]


class TestFingerprint:
    def test_stable_across_loads(self):
        assert (NeuralProvider(FIXTURE).fingerprint
                == NeuralProvider(FIXTURE).fingerprint)
