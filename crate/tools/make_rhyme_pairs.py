"""Builds crates/core/tests/fixtures/rhyme-pairs.txt from the bundled lexicon.

Each line is `word other expected`, where expected is 1 when the two first
pronunciations share the phonemes from the last primary-stressed vowel on
(stress marks ignored). Half the pairs rhyme; the rest mix random pairs with
near misses that share a tail but not the full rhyme.
"""
import random
import re
from collections import defaultdict
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DICT = ROOT / "crates/core/data/cmudict-subset.dict"
OUT = ROOT / "crates/core/tests/fixtures/rhyme-pairs.txt"


def load():
    prons = {}
    for line in DICT.read_text().splitlines():
        if not line or line.startswith((";;;", "#")):
            continue
        word, *phones = line.split()
        if "(" in word or not re.fullmatch(r"[a-z]+", word):
            continue
        prons[word] = phones
    return prons


def suffix(phones):
    for stress in ("1", "2"):
        idx = [i for i, p in enumerate(phones) if p.endswith(stress)]
        if idx:
            return tuple(re.sub(r"\d", "", p) for p in phones[idx[-1]:])
    vowels = [i for i, p in enumerate(phones) if p[-1].isdigit()]
    start = vowels[-1] if vowels else 0
    return tuple(re.sub(r"\d", "", p) for p in phones[start:])


def main():
    rng = random.Random(20240517)
    prons = load()
    words = sorted(w for w in prons if len(w) >= 3)
    by_suffix = defaultdict(list)
    for w in words:
        by_suffix[suffix(prons[w])].append(w)
    groups = sorted(g for g in by_suffix.values() if len(g) >= 2)
    pairs = set()
    while len(pairs) < 50:
        g = rng.choice(groups)
        a, b = rng.sample(g, 2)
        pairs.add((a, b, 1))
    near = 0
    while near < 25:
        a, b = rng.sample(words, 2)
        sa, sb = suffix(prons[a]), suffix(prons[b])
        tail = min(len(sa), len(sb), 2)
        if sa != sb and sa[-tail:] == sb[-tail:]:
            if (a, b, 0) not in pairs:
                pairs.add((a, b, 0))
                near += 1
    while len(pairs) < 100:
        a, b = rng.sample(words, 2)
        if suffix(prons[a]) != suffix(prons[b]):
            pairs.add((a, b, 0))
    lines = sorted(f"{a} {b} {e}" for a, b, e in pairs)
    OUT.write_text(
        "# word other rhymes(1/0); generated by tools/make_rhyme_pairs.py\n" + "\n".join(lines) + "\n"
    )


if __name__ == "__main__":
    main()
