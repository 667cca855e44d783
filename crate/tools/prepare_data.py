#!/usr/bin/env python3
"""Regenerates the bundled lexical resources under crates/core/data/.

Inputs (not vendored; fetch with `pip download --no-deps cmudict textblob`):
  --cmudict   path to cmudict.dict (CMU Pronouncing Dictionary, BSD-style licence)
  --brill     path to textblob's en-lexicon.txt (Brill tagger lexicon, MIT)
  --freq      path to textblob's en-spelling.txt (word frequency counts)

Outputs:
  crates/core/data/cmudict-subset.dict   frequent words plus the extra word list
  crates/core/data/pos-lexicon.tsv       word -> coarse universal tag
"""
import argparse
import pathlib
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"

AUX_WORDS = {
    "be", "am", "is", "are", "was", "were", "been", "being",
    "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    "'ll", "'d", "'m", "'re", "'ve", "wo", "ca",
}
SCONJ_WORDS = {
    "because", "although", "though", "if", "unless", "while", "whereas",
    "whether", "since", "once", "until", "till", "so", "lest",
}

PENN_TO_UPOS = {
    "NN": "NOUN", "NNS": "NOUN", "NNP": "PROPN", "NNPS": "PROPN",
    "VB": "VERB", "VBD": "VERB", "VBG": "VERB", "VBN": "VERB", "VBP": "VERB", "VBZ": "VERB",
    "MD": "AUX",
    "JJ": "ADJ", "JJR": "ADJ", "JJS": "ADJ",
    "RB": "ADV", "RBR": "ADV", "RBS": "ADV", "WRB": "ADV",
    "IN": "ADP", "RP": "ADP",
    "DT": "DET", "PDT": "DET", "WDT": "DET",
    "PRP": "PRON", "PRP$": "PRON", "WP": "PRON", "WP$": "PRON", "EX": "PRON",
    "CC": "CONJ", "CD": "NUM", "TO": "PART", "POS": "PART",
    "UH": "INTJ", "SYM": "SYM", "$": "SYM", "#": "SYM",
    "FW": "X", "LS": "X",
}

WORD_RE = re.compile(r"^[A-Za-z][A-Za-z'\-]*$")


def upos(word, penn):
    lower = word.lower()
    if lower in AUX_WORDS and penn in ("MD", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ"):
        return "AUX"
    if lower in SCONJ_WORDS and penn == "IN":
        return "SCONJ"
    if lower == "not" or lower == "n't":
        return "PART"
    return PENN_TO_UPOS.get(penn, "PUNCT" if not any(c.isalnum() for c in word) else "X")


def load_freq(path):
    freq = {}
    for line in open(path, encoding="utf-8"):
        if line.startswith(";"):
            continue
        parts = line.split()
        if len(parts) == 2:
            freq[parts[0].lower()] = int(parts[1])
    return freq


def write_pos_lexicon(brill, freq):
    lower_origin = {}
    capital_origin = {}
    for line in open(brill, encoding="utf-8"):
        if line.startswith(";"):
            continue
        parts = line.split()
        if len(parts) != 2 or not WORD_RE.match(parts[0]):
            continue
        word, penn = parts
        tag = upos(word, penn)
        if word.islower():
            lower_origin.setdefault(word, tag)
        else:
            capital_origin.setdefault(word.lower(), tag)
    merged = dict(lower_origin)
    for word, tag in capital_origin.items():
        if word not in merged and freq.get(word, 0) >= 5:
            merged[word] = tag
    out = DATA / "pos-lexicon.tsv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("# word\tcoarse tag (derived from the Brill tagger lexicon)\n")
        for word in sorted(merged):
            fh.write(f"{word}\t{merged[word]}\n")
    print(f"wrote {len(merged)} entries to {out}")


def write_cmudict_subset(cmudict, freq, top_n, extra):
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = {w for w, _ in ranked[:top_n]} | extra
    lines = []
    for line in open(cmudict, encoding="utf-8"):
        head = line.split(" ", 1)[0]
        base = re.sub(r"\(\d+\)$", "", head)
        if base in keep:
            lines.append(line.split("#")[0].rstrip() + "\n")
    out = DATA / "cmudict-subset.dict"
    with open(out, "w", encoding="utf-8") as fh:
        fh.writelines(lines)
    print(f"wrote {len(lines)} lines to {out}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cmudict", required=True)
    ap.add_argument("--brill", required=True)
    ap.add_argument("--freq", required=True)
    ap.add_argument("--top", type=int, default=12000)
    args = ap.parse_args()

    freq = load_freq(args.freq)
    extra = {
        w.strip().lower()
        for w in open(ROOT / "tools" / "lexicon_extra_words.txt", encoding="utf-8")
        if w.strip() and not w.startswith("#")
    }
    write_pos_lexicon(args.brill, freq)
    write_cmudict_subset(args.cmudict, freq, args.top, extra)


if __name__ == "__main__":
    main()
