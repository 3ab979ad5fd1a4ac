#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus and its companions.

Emits, under src/phrasemeter/data/:

  synthetic_corpus.trees   engineered corpus: 10 idiom-like VO phrases with
                           strong verb->object transitions and shifted
                           in-phrase contexts, plus a 4x4 verb/noun grid of
                           ordinary phrases with uniform co-occurrence and
                           homogeneous contexts
  synthetic_phrases.tsv    phrase list for the corpus
  toy_model.json           Markov chain fit on the corpus (add-0.1 smoothing)
  toy_padding.txt          padding paragraph drawn from the corpus vocabulary

Deterministic: a fixed seed drives every random choice.
"""

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from phrasemeter.corpus import read_treebank  # noqa: E402
from phrasemeter.oracle_lm import fit_markov_model, save_model  # noqa: E402

SEED = 20240901

SUBJECTS = ["farmer", "sailor", "teacher", "baker"]
IDIOM_PAIRS = [("spill", "beans"), ("kick", "buckets"), ("stir", "storms"),
               ("bend", "fences"), ("chase", "kettles"), ("shake", "ladders"),
               ("dodge", "mirrors"), ("juggle", "anchors"), ("twist", "ropes"),
               ("sweep", "drums")]
FILLER_VERBS = ["grab", "carry", "wash", "paint"]
FILLER_NOUNS = ["plates", "shoes", "stones", "apples"]
ORDINARY_VERBS = ["eat", "see", "buy", "hold"]
ORDINARY_NOUNS = ["peas", "figs", "nuts", "plums"]
IDIOM_MARKERS = ["thunder", "gloom", "velvet", "ember"]
COMMON_MARKERS = ["morning", "garden", "market", "river", "window", "bread"]

TARGETS_PER_PHRASE = 60
MATCHED_PER_FILLER = 10         # x4 fillers = 40 matched per slot
GRID_PER_CELL = 30

IRREGULAR = {"kisses": "kiss"}


def lemma(word: str) -> str:
    if word in IRREGULAR:
        return IRREGULAR[word]
    if word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def main_sentence(subj: str, verb: str, noun: str) -> str:
    return (f"(S (NP (NN {subj}|{subj}|NN)) "
            f"(VP (VBP {verb}|{verb}|VBP) (NP (NNS {noun}|{lemma(noun)}|NNS))))")


ALL_CONTENT = ([v for v, _ in IDIOM_PAIRS] + [n for _, n in IDIOM_PAIRS]
               + FILLER_VERBS + FILLER_NOUNS + ORDINARY_VERBS + ORDINARY_NOUNS)


def marker_sentence(rng: random.Random, idiomatic_context: bool) -> str:
    # idiom markers never occur outside idiom contexts, so marker components
    # sit on the sigma floor and idiom targets score far below everything else
    pool = IDIOM_MARKERS if idiomatic_context else COMMON_MARKERS
    m1, m2 = rng.sample(pool, 2)
    # two "topic" mentions of random content words keep every co-occurrence
    # component off the sigma floor for large occurrence sets; their private
    # lemmas keep them out of phrase-slot occurrence sets, and interleaving
    # them with markers avoids spurious content-word bigrams in the chain
    t1, t2 = rng.choice(ALL_CONTENT), rng.choice(ALL_CONTENT)
    words = [(m1, m1), (t1, t1 + "_x"), (m2, m2), (t2, t2 + "_x")]
    inner = " ".join(f"(RB {w}|{lem}|RB)" for w, lem in words)
    return f"(S (ADVP {inner}))"


def emit_doc(lines: list[str], doc_id: str, rng: random.Random,
             verb: str, noun: str, idiomatic_context: bool):
    subj = rng.choice(SUBJECTS)
    lines.append(f"#doc {doc_id}")
    lines.append(marker_sentence(rng, idiomatic_context))
    lines.append(main_sentence(subj, verb, noun))
    lines.append(marker_sentence(rng, idiomatic_context))


def build_corpus() -> list[str]:
    rng = random.Random(SEED)
    lines = ["# synthetic evaluation corpus (regenerate with "
             "tools/make_synthetic_corpus.py)"]
    doc_n = 0

    def next_doc() -> str:
        nonlocal doc_n
        doc_n += 1
        return f"d{doc_n:04d}"

    for verb, noun in IDIOM_PAIRS:
        for _ in range(TARGETS_PER_PHRASE):
            emit_doc(lines, next_doc(), rng, verb, noun, idiomatic_context=True)
        for filler in FILLER_NOUNS:
            for _ in range(MATCHED_PER_FILLER):
                emit_doc(lines, next_doc(), rng, verb, filler, False)
        for filler in FILLER_VERBS:
            for _ in range(MATCHED_PER_FILLER):
                emit_doc(lines, next_doc(), rng, filler, noun, False)

    for verb in ORDINARY_VERBS:
        for noun in ORDINARY_NOUNS:
            for _ in range(GRID_PER_CELL):
                emit_doc(lines, next_doc(), rng, verb, noun, False)

    return lines


def build_phrase_list() -> list[str]:
    rows = ["phrase_id\tphrase_type\thead_lemma\tdep_lemma\tquery"]
    for verb, noun in IDIOM_PAIRS:
        rows.append(f"{verb}_{lemma(noun)}\tVO\t{verb}\t{lemma(noun)}\t")
    for verb, noun in zip(ORDINARY_VERBS, ORDINARY_NOUNS):
        rows.append(f"{verb}_{lemma(noun)}\tVO\t{verb}\t{lemma(noun)}\t")
    return rows


def build_padding(rng: random.Random) -> str:
    pool = COMMON_MARKERS + SUBJECTS
    return " ".join(rng.choice(pool) for _ in range(30))


def main():
    data = ROOT / "src" / "phrasemeter" / "data"
    data.mkdir(parents=True, exist_ok=True)
    corpus_lines = build_corpus()
    (data / "synthetic_corpus.trees").write_text(
        "\n".join(corpus_lines) + "\n", encoding="utf-8")
    (data / "synthetic_phrases.tsv").write_text(
        "\n".join(build_phrase_list()) + "\n", encoding="utf-8")
    (data / "toy_padding.txt").write_text(
        build_padding(random.Random(SEED + 1)) + "\n", encoding="utf-8")

    corpus = read_treebank(data / "synthetic_corpus.trees")
    model = fit_markov_model(corpus, smoothing=0.1, extra_words=("<s>",))
    save_model(model, data / "toy_model.json")
    print(f"{len(corpus)} sentences, vocabulary {model.size}")


if __name__ == "__main__":
    main()
