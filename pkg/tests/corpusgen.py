"""Deterministic synthetic corpora for tests.

A 20-letter alphabet, a dozen stems, and rule-based morphology:
nouns take sg (bare stem) / pl (stem+"s"), verbs take prs (stem+"t") /
pst (stem+"ed").  Every surface form maps to exactly one analysis, so a
model can memorize the corpus and an overfit run can hit perfect accuracy.
"""

import numpy as np

from lemtag.conllu import Analysis, Corpus, MorphoTag, Sentence, Token

ALPHABET = "abcdefghijklmnopqrst"


def _forms(stem, kind):
    if kind == "noun":
        return [
            (stem, Analysis(stem, MorphoTag(("n", "sg")))),
            (stem + "s", Analysis(stem, MorphoTag(("n", "pl")))),
        ]
    return [
        (stem + "t", Analysis(stem, MorphoTag(("prs", "v")))),
        (stem + "ed", Analysis(stem, MorphoTag(("pst", "v")))),
    ]


def lexicon(seed=0, n_stems=12):
    """List of (surface, analysis) pairs; deterministic for a seed."""
    rng = np.random.default_rng(seed)
    stems = set()
    while len(stems) < n_stems:
        length = int(rng.integers(3, 6))
        stems.add("".join(ALPHABET[i] for i in rng.integers(0, len(ALPHABET), length)))
    entries = []
    for i, stem in enumerate(sorted(stems)):
        entries.extend(_forms(stem, "noun" if i % 2 == 0 else "verb"))
    return entries


def make_corpus(n_sentences=32, seed=0, min_len=3, max_len=5):
    entries = lexicon(seed)
    rng = np.random.default_rng((seed, n_sentences))
    sentences = []
    for _ in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        tokens = []
        for i in rng.integers(0, len(entries), length):
            surface, analysis = entries[int(i)]
            tokens.append(Token(surface, gold=analysis))
        sentences.append(Sentence(tuple(tokens)))
    return Corpus(tuple(sentences))


def tiny_corpus():
    """Three analyzed tokens with two grammemes each."""
    return Corpus((
        Sentence((
            Token("Bats", gold=Analysis("bat", MorphoTag(("n", "pl")))),
            Token("are", gold=Analysis("be", MorphoTag(("aux", "prs")))),
            Token("flying", gold=Analysis("fly", MorphoTag(("prog", "v")))),
        )),
    ))
