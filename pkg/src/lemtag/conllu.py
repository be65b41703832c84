"""Tab-separated annotated-corpus reading, writing and statistics.

The format is a minimal three-column cousin of the usual treebank column
files: one token per line as FORM<TAB>LEMMA<TAB>TAG, sentences separated
by blank lines, ``#`` starting a comment line.  TAG is a ``;``-separated
grammeme list, ``_`` when the token carries no features.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class CorpusFormatError(ValueError):
    """Malformed corpus input; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class MorphoTag:
    """An ordered list of grammemes, normalized to sorted unique symbols."""

    grammemes: tuple[str, ...] = ()

    def __post_init__(self):
        for g in self.grammemes:
            if not g or any(c in g for c in ";\t\n "):
                raise ValueError(f"invalid grammeme {g!r}")
        if list(self.grammemes) != sorted(set(self.grammemes)):
            raise ValueError(
                f"grammemes must be unique and sorted: {self.grammemes!r}"
            )

    def __len__(self):
        return len(self.grammemes)


EMPTY_TAG = MorphoTag()


@dataclass(frozen=True)
class Analysis:
    """A lexical form: lemma string plus morpho-tag."""

    lemma: str
    tag: MorphoTag = EMPTY_TAG

    def __post_init__(self):
        if "\t" in self.lemma or "\n" in self.lemma:
            raise ValueError(f"lemma contains tab/newline: {self.lemma!r}")


@dataclass(frozen=True)
class Token:
    surface: str
    gold: Analysis | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError("empty surface form")
        if "\t" in self.surface or "\n" in self.surface:
            raise ValueError(f"surface contains tab/newline: {self.surface!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("empty sentence")

    def __len__(self):
        return len(self.tokens)

    def surfaces(self):
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    source_path: str | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def token_count(self):
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class CorpusStats:
    sentence_count: int
    token_count: int
    grammeme_form_ratio: float
    oov_rate: float | None = None


def normalize_tag(raw: str) -> MorphoTag:
    """Turn a ``;``-separated grammeme string into a normalized MorphoTag.

    ``_`` denotes the empty tag.  Duplicates are dropped and the result is
    sorted so that equal feature sets always compare equal.
    """
    if raw == "_":
        return EMPTY_TAG
    parts = raw.split(";")
    if any(p == "" for p in parts):
        raise CorpusFormatError(f"empty grammeme in tag {raw!r}")
    return MorphoTag(tuple(sorted(set(parts))))


def tag_to_string(tag: MorphoTag) -> str:
    return ";".join(tag.grammemes) if tag.grammemes else "_"


def _iter_lines(text) -> Iterator[str]:
    if isinstance(text, str):
        return iter(text.split("\n"))
    if isinstance(text, io.IOBase) or hasattr(text, "read"):
        return (line.rstrip("\n") for line in text)
    return iter(text)


def parse_corpus(text, mode: str = "gold") -> Corpus:
    """Parse corpus text into a Corpus.

    ``text`` may be a string, an open text file, or an iterable of lines.
    In ``gold`` mode every token line needs FORM, LEMMA and TAG columns and
    tags are normalized; in ``surface_only`` mode anything past FORM is
    ignored.  Raises CorpusFormatError with a line number on bad input.
    """
    if mode not in ("gold", "surface_only"):
        raise ValueError(f"unknown parse mode {mode!r}")
    sentences = []
    tokens: list[Token] = []
    block_start = None

    def finish_block(lineno):
        nonlocal tokens, block_start
        if block_start is None:
            return
        if not tokens:
            raise CorpusFormatError("sentence block without tokens", block_start)
        sentences.append(Sentence(tuple(tokens)))
        tokens = []
        block_start = None

    lineno = 0
    for lineno, line in enumerate(_iter_lines(text), start=1):
        line = line.rstrip("\n")
        if line == "":
            finish_block(lineno)
            continue
        if block_start is None:
            block_start = lineno
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        form = cols[0]
        if not form:
            raise CorpusFormatError("empty FORM column", lineno)
        if mode == "gold":
            if len(cols) < 3:
                raise CorpusFormatError(
                    f"expected at least 3 tab-separated columns, got {len(cols)}",
                    lineno,
                )
            try:
                tag = normalize_tag(cols[2])
            except CorpusFormatError as err:
                raise CorpusFormatError(str(err), lineno) from None
            gold = Analysis(cols[1], tag)
        else:
            gold = None
        try:
            tokens.append(Token(form, gold))
        except ValueError as err:
            raise CorpusFormatError(str(err), lineno) from None
    finish_block(lineno + 1)
    return Corpus(tuple(sentences))


def write_corpus(corpus: Corpus) -> str:
    """Serialize a gold corpus; inverse of parse_corpus on normalized input."""
    out = []
    for sent in corpus:
        for tok in sent.tokens:
            if tok.gold is None:
                raise ValueError(f"token {tok.surface!r} has no analysis")
            out.append(f"{tok.surface}\t{tok.gold.lemma}\t{tag_to_string(tok.gold.tag)}")
        out.append("")
    return "\n".join(out) + "\n" if out else ""


def read_corpus_file(path, mode: str = "gold") -> Corpus:
    """Read and parse a corpus file, reporting the line of any UTF-8 error."""
    with open(path, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        line = raw[: err.start].count(b"\n") + 1
        raise CorpusFormatError("input is not valid UTF-8", line) from None
    corpus = parse_corpus(text, mode)
    return Corpus(corpus.sentences, source_path=str(path))


def lexical_forms(corpus: Corpus) -> set[tuple[str, tuple[str, ...]]]:
    """The set of (lemma, grammemes) pairs attested as gold analyses."""
    forms = set()
    for sent in corpus:
        for tok in sent.tokens:
            if tok.gold is not None:
                forms.add((tok.gold.lemma, tok.gold.tag.grammemes))
    return forms


def corpus_stats(corpus: Corpus, reference: Corpus | None = None) -> CorpusStats:
    """Sentence/token counts, mean grammemes per token, optional OOV rate.

    A token is out-of-vocabulary when its exact gold (lemma, tag) pair never
    occurs as a gold lexical form in ``reference``; surface overlap does not
    count.
    """
    n_tokens = 0
    n_grammemes = 0
    oov = 0
    seen = lexical_forms(reference) if reference is not None else None
    for sent in corpus:
        for tok in sent.tokens:
            if tok.gold is None:
                raise ValueError("corpus_stats requires gold analyses")
            n_tokens += 1
            n_grammemes += len(tok.gold.tag)
            if seen is not None:
                if (tok.gold.lemma, tok.gold.tag.grammemes) not in seen:
                    oov += 1
    ratio = n_grammemes / n_tokens if n_tokens else 0.0
    rate = None
    if reference is not None:
        rate = oov / n_tokens if n_tokens else 0.0
    return CorpusStats(len(corpus.sentences), n_tokens, ratio, rate)
