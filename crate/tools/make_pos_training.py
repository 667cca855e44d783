#!/usr/bin/env python3
"""Generates the template-based POS training corpus (crates/core/data/pos-train.txt).

Each output line is a tagged phrase: `word/TAG word/TAG ...` using the coarse
universal tagset. Slots are filled from the Brill lexicon (Penn tags give the
inflectional form), plus hand-listed ambiguous words so that context features
carry weight. Phrases that appear in the evaluation fixture are skipped.

usage: make_pos_training.py --brill en-lexicon.txt --freq en-spelling.txt
"""
import argparse
import pathlib
import random
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "crates" / "core" / "data" / "pos-train.txt"
EVAL = ROOT / "crates" / "core" / "tests" / "fixtures" / "pos-eval.txt"

DETS = ["the", "a", "an", "this", "that", "every", "some", "no", "each", "these", "those", "another"]
PLURAL_DETS = ["the", "these", "those", "some", "many", "few", "all", "no"]
POSS = ["my", "your", "his", "her", "its", "our", "their"]
SUBJ = ["i", "you", "he", "she", "it", "we", "they"]
OBJ = ["me", "you", "him", "her", "it", "us", "them"]
MODALS = ["will", "would", "can", "could", "should", "might", "must", "may", "shall"]
BE_PRES = {"i": "am", "you": "are", "he": "is", "she": "is", "it": "is", "we": "are", "they": "are"}
BE_PAST = {"i": "was", "you": "were", "he": "was", "she": "was", "it": "was", "we": "were", "they": "were"}
HAVE = {"i": "have", "you": "have", "he": "has", "she": "has", "it": "has", "we": "have", "they": "have"}
PREPS = ["in", "on", "under", "over", "beside", "across", "through", "into", "onto", "behind", "beneath",
         "above", "near", "with", "without", "against", "along", "among", "around", "toward", "towards",
         "after", "before", "during", "from", "of", "by", "at", "upon", "between", "inside", "beyond", "via",
         "per", "until", "like", "past", "within"]
CONJS = ["and", "or", "but", "nor", "yet"]
NUMS = ["two", "three", "four", "five", "six", "seven", "ten", "twelve", "hundred", "thousand", "one", "nine"]
INTENS = ["very", "so", "too", "quite", "rather", "almost", "extremely", "really", "barely", "nearly", "utterly"]

NOUN_VERB = ["light", "walk", "run", "dream", "fall", "rain", "snow", "love", "hope", "fear", "sleep", "dance",
             "smile", "laugh", "cry", "kiss", "play", "rest", "sound", "turn", "look", "change", "end", "move",
             "work", "wish", "watch", "step", "call", "touch", "fire", "storm", "water", "plant", "paint", "drink",
             "swim", "fly", "bloom", "flow", "glow", "glaze", "whisper", "shout", "sigh", "wave", "ride", "crash",
             "drift", "burn", "shine", "cut", "break", "dress", "fish", "hunt", "ring", "sail", "shape", "sleep",
             "taste", "wind", "wonder", "stare", "roar", "flash", "flame", "bruise", "cover", "echo", "frown"]
ADJ_NOUN = ["cold", "dark", "kind", "green", "blue", "red", "white", "black", "gold", "silver", "past",
            "quiet", "calm", "blank", "bitter", "sweet", "light", "deep", "blind", "brown", "grey", "gray",
            "pale", "wild", "wrong", "right", "whole", "chief", "base", "fancy", "plain", "stable"]
ADV_ADJ = ["fast", "hard", "late", "early", "high", "low", "long", "near", "straight", "still", "well", "far"]


def load_brill(path, freq):
    by_tag = {}
    for line in open(path, encoding="utf-8"):
        if line.startswith(";"):
            continue
        parts = line.split()
        if len(parts) != 2 or not re.match(r"^[a-z]+$", parts[0]):
            continue
        word, penn = parts
        if freq.get(word, 0) < 3:
            continue
        by_tag.setdefault(penn, []).append(word)
    for words in by_tag.values():
        words.sort()
    return by_tag


def load_freq(path):
    freq = {}
    for line in open(path, encoding="utf-8"):
        parts = line.split()
        if len(parts) == 2 and not line.startswith(";"):
            freq[parts[0].lower()] = int(parts[1])
    return freq


class Gen:
    def __init__(self, by_tag, rng):
        self.by = by_tag
        self.rng = rng

    def pick(self, penn):
        return self.rng.choice(self.by[penn])

    def noun(self):
        r = self.rng.random()
        if r < 0.15:
            return (self.rng.choice(NOUN_VERB), "NOUN")
        if r < 0.22:
            return (self.rng.choice(ADJ_NOUN), "NOUN")
        return (self.pick("NN"), "NOUN")

    def nouns(self):
        return (self.pick("NNS"), "NOUN")

    def adj(self):
        r = self.rng.random()
        if r < 0.15:
            return (self.rng.choice(ADJ_NOUN), "ADJ")
        if r < 0.22:
            return (self.pick("VBN"), "VERB")
        return (self.pick("JJ"), "ADJ")

    def adv(self):
        r = self.rng.random()
        if r < 0.15:
            return (self.rng.choice(ADV_ADJ), "ADV")
        return (self.pick("RB"), "ADV")

    def verb_bare(self):
        if self.rng.random() < 0.2:
            return (self.rng.choice(NOUN_VERB), "VERB")
        return (self.pick("VB"), "VERB")

    def verb_past(self):
        return (self.pick("VBD"), "VERB")

    def verb_3s(self):
        return (self.pick("VBZ"), "VERB")

    def verb_ing(self):
        return (self.pick("VBG"), "VERB")

    def verb_pp(self):
        return (self.pick("VBN"), "VERB")

    def det(self):
        return (self.rng.choice(DETS), "DET")

    def np(self):
        r = self.rng.random()
        if r < 0.35:
            return [self.det(), self.noun()]
        if r < 0.6:
            return [self.det(), self.adj(), self.noun()]
        if r < 0.7:
            return [(self.rng.choice(POSS), "PRON"), self.noun()]
        if r < 0.8:
            return [(self.rng.choice(PLURAL_DETS), "DET"), self.nouns()]
        if r < 0.9:
            return [self.det(), self.noun(), self.noun()]
        return [(self.rng.choice(POSS), "PRON"), self.adj(), self.noun()]

    def subj(self):
        s = self.rng.choice(SUBJ)
        return s, [(s, "PRON")]

    def phrase(self):
        g = self
        rng = self.rng
        templates = [
            lambda: g.np(),
            lambda: [g.adj(), g.noun()],
            lambda: [g.adj(), g.adj(), g.noun()],
            lambda: [g.adj(), g.nouns()],
            lambda: [g.noun(), g.noun()],
            lambda: [(rng.choice(PREPS), "ADP")] + g.np(),
            lambda: g.np() + [g.verb_past()],
            lambda: g.np() + [g.verb_3s()],
            lambda: g.np() + [g.verb_past(), g.adv()],
            lambda: g.np() + [g.verb_past()] + g.np(),
            lambda: [g.nouns(), (g.pick("VBP"), "VERB")],
            lambda: g.subj()[1] + [g.verb_past(), g.adv()],
            lambda: g.subj()[1] + [g.verb_past()] + g.np(),
            lambda: g.subj()[1] + [g.adv(), g.verb_past()],
            lambda: g.subj()[1] + [g.verb_past(), (rng.choice(OBJ), "PRON")],
            lambda: g.subj()[1] + [(rng.choice(MODALS), "AUX"), g.verb_bare()],
            lambda: g.subj()[1] + [(rng.choice(MODALS), "AUX"), g.adv(), g.verb_bare()],
            lambda: g.subj()[1] + [(rng.choice(MODALS), "AUX"), rng.choice([("not", "PART"), ("never", "ADV")]), g.verb_bare()],
            lambda: (lambda s: [(s[0], "PRON"), (HAVE[s[0]], "AUX"), g.verb_pp()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (BE_PAST[s[0]], "AUX"), g.verb_ing()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (BE_PRES[s[0]], "AUX"), g.adj()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (BE_PAST[s[0]], "AUX"), (rng.choice(INTENS), "ADV"), g.adj()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (BE_PRES[s[0]], "AUX"), ("not", "PART"), g.adj()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (rng.choice(["do", "did"]), "AUX"), ("not", "PART"), g.verb_bare()])(g.subj()),
            lambda: (lambda s: [(s[0], "PRON"), (HAVE[s[0]], "VERB")] + g.np())(g.subj()),
            lambda: g.np() + [(rng.choice(["is", "was"]), "AUX"), g.adj()],
            lambda: [(rng.choice(INTENS), "ADV"), g.adj()],
            lambda: [g.adj(), (rng.choice(CONJS), "CONJ"), g.adj()],
            lambda: [g.noun(), (rng.choice(CONJS), "CONJ"), g.noun()],
            lambda: [g.adv(), (rng.choice(CONJS), "CONJ"), g.adv()],
            lambda: [(rng.choice(NUMS), "NUM"), g.adj(), g.nouns()],
            lambda: [(rng.choice(NUMS), "NUM"), g.nouns()],
            lambda: [g.verb_bare()] + g.np(),
            lambda: [g.verb_past(), (rng.choice(PREPS), "ADP")],
            lambda: [g.verb_past(), (rng.choice(PREPS), "ADP"), g.noun()],
            lambda: [g.verb_past(), (rng.choice(PREPS), "ADP")] + g.np(),
            lambda: [g.verb_ing(), (rng.choice(PREPS), "ADP")] + g.np(),
            lambda: [("to", "PART"), g.verb_bare()],
            lambda: [("to", "PART"), g.verb_bare()] + g.np(),
            lambda: [("to", "ADP")] + g.np(),
            lambda: [g.adv(), g.verb_ing()],
            lambda: [g.adv(), g.verb_past()],
            lambda: [g.verb_bare(), g.adv()],
            lambda: [g.adj(), g.noun(), g.verb_past()],
            lambda: g.np() + [(rng.choice(PREPS), "ADP")] + g.np(),
            lambda: g.np() + [(rng.choice(CONJS), "CONJ")] + g.np(),
        ]
        return rng.choice(templates)()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--brill", required=True)
    ap.add_argument("--freq", required=True)
    ap.add_argument("--count", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=20240517)
    args = ap.parse_args()

    freq = load_freq(args.freq)
    gen = Gen(load_brill(args.brill, freq), random.Random(args.seed))
    held_out = set()
    if EVAL.exists():
        for line in open(EVAL, encoding="utf-8"):
            if line.strip() and not line.startswith("#"):
                held_out.add(" ".join(tok.rsplit("/", 1)[0] for tok in line.split()))

    seen = set()
    lines = []
    while len(lines) < args.count:
        toks = gen.phrase()
        text = " ".join(w for w, _ in toks)
        if text in held_out or text in seen:
            continue
        seen.add(text)
        lines.append(" ".join(f"{w}/{t}" for w, t in toks))
    with open(OUT, "w", encoding="utf-8") as fh:
        fh.write("# generated by tools/make_pos_training.py; do not edit by hand\n")
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} phrases to {OUT}")


if __name__ == "__main__":
    main()
