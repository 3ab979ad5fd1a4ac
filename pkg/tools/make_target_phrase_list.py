#!/usr/bin/env python3
"""Regenerate src/phrasemeter/data/target_phrases.tsv, the reference list of
English target phrases.

Head/dependent lemmas follow the phrase type: VO head is the verb and dep the
object noun; AN head is the noun and dep the adjective; NN head is the second
noun and dep the first; B head is the first conjunct and dep the second.
Lemmatization is deliberately naive (strip a final plural -s, with a tiny
irregular map); these lemmas are matching keys, not linguistic claims.
"""

from pathlib import Path

VO = ["deliver the goods", "run the show", "rock the boat", "call the shots",
      "talk turkey", "cut corners", "jump the gun", "have a ball",
      "foot the bill", "break the mold", "pull strings", "mean business",
      "raise hell", "close ranks", "strike a chord", "cry wolf",
      "lose ground", "make waves", "clear the air", "pay the piper",
      "spill the beans", "bite the dust", "saw logs", "lead the field",
      "take the powder", "buy the farm", "turn tail", "get the sack",
      "hit the sack", "kick the bucket", "shoot the bull"]

NN = ["swimming pool", "cash cow", "foot soldier", "attorney general",
      "hit list", "soup kitchen", "bull market", "boot camp",
      "message board", "gold mine", "report card", "comfort food",
      "pork barrel", "flower girl", "hit man", "blood money",
      "cottage industry", "board game", "death wish", "word salad",
      "altar boy", "bench warrant", "time travel", "love language",
      "night owl", "life blood", "road rage", "light house", "bid price",
      "carrot cake", "command line", "stag night", "husband material"]

AN = ["cold feet", "green light", "red tape", "black box", "blue sky",
      "bright future", "sour grape", "green room", "easy money",
      "last minute", "hard heart", "hot dog", "raw talent", "hard labor",
      "broken home", "fat chance", "dirty joke", "happy hour", "high time",
      "rich history", "clean slate", "stiff competition", "maiden voyage",
      "cold shoulder", "clean energy", "hard sell", "back pay",
      "deep pockets", "broken promise", "dead silence", "blind faith",
      "tight schedule", "brutal honesty", "bright idea", "kind soul",
      "bruised ego"]

B = ["by and large", "more or less", "bits and pieces", "up and down",
     "rise and fall", "sooner or later", "rough and ready", "far and wide",
     "give and take", "time and effort", "pro and con", "sick and tired",
     "back and forth", "day and night", "wear and tear", "nut and bolt",
     "tooth and nail", "on and off", "win or lose", "food and shelter",
     "odds and ends", "in and out", "sticks and stones", "make or break",
     "part and parcel", "loud and clear", "cops and robbers",
     "short and sweet", "safe and sound", "black and blue", "toss and turn",
     "fair and square", "heads or tails", "hearts and flowers",
     "rest and relaxation", "flesh and bone", "life and limb",
     "checks and balances", "fast and loose", "high and dry",
     "pots and pans", "now or never", "hugs and kisses", "bread and butter",
     "risk and reward", "cloak and dagger", "pins and needles",
     "nickel and dime", "sugar and spice", "rhyme or reason",
     "neat and tidy", "leaps and bounds", "step by step", "live and learn",
     "lost and found", "peace and quiet", "old and grey", "song and dance"]

IRREGULAR = {"feet": "foot", "kisses": "kiss"}


def lemma(word: str) -> str:
    if word in IRREGULAR:
        return IRREGULAR[word]
    if word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def slots(phrase: str, phrase_type: str) -> tuple[str, str]:
    words = phrase.split()
    first, last = words[0], words[-1]
    if phrase_type == "VO":
        return first, lemma(last)
    if phrase_type == "AN":
        return lemma(last), first
    if phrase_type == "NN":
        return lemma(last), lemma(first)
    return lemma(first), lemma(last)  # B


def main():
    out = (Path(__file__).resolve().parent.parent
           / "src" / "phrasemeter" / "data" / "target_phrases.tsv")
    rows = ["phrase_id\tphrase_type\thead_lemma\tdep_lemma\tquery"]
    for phrase_type, phrases in (("VO", VO), ("NN", NN), ("AN", AN), ("B", B)):
        for phrase in phrases:
            pid = phrase.replace(" ", "_")
            head, dep = slots(phrase, phrase_type)
            if head == dep:
                # head and dep lemmas must differ; phrases repeating one word
                # cannot be represented and are recorded here for completeness
                rows.append(f"# unrepresentable (head == dep): {pid}"
                            f"\t{phrase_type}\t{head}\t{dep}\t")
                continue
            rows.append(f"{pid}\t{phrase_type}\t{head}\t{dep}\t")
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    n = sum(1 for r in rows[1:] if not r.startswith("#"))
    print(f"{n} phrases written to {out}")


if __name__ == "__main__":
    main()
