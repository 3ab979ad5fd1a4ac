#!/usr/bin/env python3
"""Build the deterministic tiny masked-LM checkpoint used by the tests.

The checkpoint is a randomly initialized (seed 1234) 2-layer BERT with a
small WordPiece vocabulary, saved to tests/fixtures/tiny-mlm. It is not a
trained model — the tests only need a real transformer with the standard
interfaces, deterministic outputs, and a valid tokenizer.
"""

from pathlib import Path

import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "tiny-mlm"

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WORDS = """
the a an and or of to in on at by for with from cat dog mat sat ran big
small man woman child house tree water food day night hand eye head foot
kick bucket spill bean storm fence kettle ladder mirror anchor rope drum
farmer sailor teacher baker morning garden market river window bread eat
see buy hold pea fig nut plum is was be have has had do does did not
""".split()
PIECES = ["##s", "##ed", "##ing", "##er", "##y", "##e", "##t", "##n"]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    vocab_path = OUT / "vocab.txt"
    vocab_path.write_text("\n".join(SPECIALS + WORDS + PIECES) + "\n")
    tokenizer = BertTokenizerFast(str(vocab_path), do_lower_case=True)
    tokenizer.save_pretrained(OUT)

    torch.manual_seed(1234)
    config = BertConfig(vocab_size=tokenizer.vocab_size, hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=64)
    model = BertForMaskedLM(config)
    model.save_pretrained(OUT, safe_serialization=True)
    size = sum(f.stat().st_size for f in OUT.iterdir())
    print(f"wrote {OUT} ({size / 1024:.0f} KiB, vocab {tokenizer.vocab_size})")


if __name__ == "__main__":
    main()
