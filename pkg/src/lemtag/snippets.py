"""Source/target symbol sequence construction and vocabularies.

A sequence is a list of atomic symbols: single characters, ``+``-prefixed
grammeme labels, or multi-character control symbols.  Words on the source
side and analyses on the target side are each terminated by the word
boundary symbol.  Two operating modes exist: one sequence pair per
sentence (full_sequence), or one pair per focal token covering ``W`` words
of context to each side (context_window).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .conllu import Analysis, Corpus, Sentence, Token

# Control symbols, always present in both vocabularies at these indices.
PADDING = "<PAD>"
UNKNOWN = "<UNK>"
SEQUENCE_START = "<S>"
SEQUENCE_END = "</S>"
WORD_BOUNDARY = "<WB>"

CONTROL_SYMBOLS = (PADDING, UNKNOWN, SEQUENCE_START, SEQUENCE_END, WORD_BOUNDARY)
PAD_ID, UNK_ID, START_ID, END_ID, BOUNDARY_ID = range(5)

GRAMMEME_PREFIX = "+"

TC_MODES = ("none", "lemmata", "tags", "both", "surface")
MODES = ("full_sequence", "context_window")


def grammeme_symbol(grammeme: str) -> str:
    return GRAMMEME_PREFIX + grammeme


def is_grammeme_symbol(symbol: str) -> bool:
    # single-character "+" is an ordinary character, not a grammeme label
    return len(symbol) > 1 and symbol.startswith(GRAMMEME_PREFIX)


@dataclass(frozen=True)
class SnippetConfig:
    """How to slice sentences into training sequences.

    ``window`` and ``tc_mode`` only apply in context_window mode: the
    window is measured in words, and tc_mode picks what context tokens
    contribute to the target side (their full analyses, lemmata only, tag
    symbols only, raw surface characters, or nothing).
    """

    mode: str = "context_window"
    window: int = 1
    tc_mode: str = "both"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.tc_mode not in TC_MODES:
            raise ValueError(f"unknown target-context mode {self.tc_mode!r}")
        if self.window < 0:
            raise ValueError("window must be non-negative")


@dataclass(frozen=True)
class SnippetExample:
    """One source/target sequence pair.

    ``focal_index`` is the token position this example is responsible for
    (context_window mode only).  ``focal_span`` is the half-open symbol
    range of the focal analysis inside ``target``, including its
    terminating boundary symbol.
    """

    source: tuple[str, ...]
    target: tuple[str, ...] | None = None
    focal_index: int | None = None
    focal_span: tuple[int, int] | None = None
    sentence_id: int = 0
    token_count: int = 0


def tokenize_surface(token: Token) -> list[str]:
    """Surface form as one symbol per character, boundary-terminated."""
    return list(token.surface) + [WORD_BOUNDARY]


def tokenize_analysis(analysis: Analysis) -> list[str]:
    """Lemma characters, then one atomic symbol per grammeme, then boundary."""
    symbols = list(analysis.lemma)
    symbols.extend(grammeme_symbol(g) for g in analysis.tag.grammemes)
    symbols.append(WORD_BOUNDARY)
    return symbols


def _context_unit(token: Token, tc_mode: str) -> list[str]:
    """Target-side rendering of a non-focal token, boundary-terminated."""
    if tc_mode == "both":
        return tokenize_analysis(token.gold)
    if tc_mode == "lemmata":
        return list(token.gold.lemma) + [WORD_BOUNDARY]
    if tc_mode == "tags":
        return [grammeme_symbol(g) for g in token.gold.tag.grammemes] + [WORD_BOUNDARY]
    if tc_mode == "surface":
        return tokenize_surface(token)
    raise ValueError(f"unknown target-context mode {tc_mode!r}")


def build_full_sequence_example(
    sentence: Sentence, sentence_id: int = 0
) -> SnippetExample:
    """One example covering the whole sentence; target only when gold is present."""
    source: list[str] = []
    for tok in sentence.tokens:
        source.extend(tokenize_surface(tok))
    target = None
    if all(tok.gold is not None for tok in sentence.tokens):
        target_syms: list[str] = []
        for tok in sentence.tokens:
            target_syms.extend(tokenize_analysis(tok.gold))
        target = tuple(target_syms)
    return SnippetExample(
        source=tuple(source),
        target=target,
        sentence_id=sentence_id,
        token_count=len(sentence),
    )


def build_window_examples(
    sentence: Sentence, cfg: SnippetConfig, sentence_id: int = 0
) -> list[SnippetExample]:
    """One example per focal token; the window is clipped at sentence edges."""
    if cfg.mode != "context_window":
        raise ValueError("build_window_examples requires context_window mode")
    length = len(sentence)
    have_gold = all(tok.gold is not None for tok in sentence.tokens)
    examples = []
    for focal in range(length):
        lo = max(0, focal - cfg.window)
        hi = min(length - 1, focal + cfg.window)
        source: list[str] = []
        for j in range(lo, hi + 1):
            source.extend(tokenize_surface(sentence.tokens[j]))
        target = None
        span = None
        if have_gold:
            target_syms: list[str] = []
            span_start = span_end = 0
            for j in range(lo, hi + 1):
                if j == focal:
                    unit = tokenize_analysis(sentence.tokens[j].gold)
                    span_start = len(target_syms)
                    span_end = span_start + len(unit)
                elif cfg.tc_mode == "none":
                    continue
                else:
                    unit = _context_unit(sentence.tokens[j], cfg.tc_mode)
                target_syms.extend(unit)
            target = tuple(target_syms)
            span = (span_start, span_end)
        examples.append(
            SnippetExample(
                source=tuple(source),
                target=target,
                focal_index=focal,
                focal_span=span,
                sentence_id=sentence_id,
                token_count=length,
            )
        )
    return examples


def examples_for_corpus(corpus: Corpus, cfg: SnippetConfig) -> list[SnippetExample]:
    """All examples of a corpus in sentence order."""
    examples = []
    for sid, sentence in enumerate(corpus):
        if cfg.mode == "full_sequence":
            examples.append(build_full_sequence_example(sentence, sid))
        else:
            examples.extend(build_window_examples(sentence, cfg, sid))
    return examples


class Vocab:
    """Bidirectional symbol<->id maps for the source and target sides.

    Control symbols occupy the first five indices on both sides; symbols
    seen fewer than ``min_freq`` times map to the unknown id.
    """

    def __init__(self, source_symbols, target_symbols, min_freq=1):
        self.source_symbols = tuple(source_symbols)
        self.target_symbols = tuple(target_symbols)
        self.min_freq = min_freq
        if self.source_symbols[:5] != CONTROL_SYMBOLS or self.target_symbols[:5] != CONTROL_SYMBOLS:
            raise ValueError("vocab must start with the control symbols")
        self._source_index = {s: i for i, s in enumerate(self.source_symbols)}
        self._target_index = {s: i for i, s in enumerate(self.target_symbols)}
        if len(self._source_index) != len(self.source_symbols):
            raise ValueError("duplicate source symbol")
        if len(self._target_index) != len(self.target_symbols):
            raise ValueError("duplicate target symbol")

    @property
    def source_size(self):
        return len(self.source_symbols)

    @property
    def target_size(self):
        return len(self.target_symbols)

    def source_id(self, symbol: str) -> int:
        return self._source_index.get(symbol, UNK_ID)

    def target_id(self, symbol: str) -> int:
        return self._target_index.get(symbol, UNK_ID)

    def source_symbol(self, idx: int) -> str:
        return self.source_symbols[idx]

    def target_symbol(self, idx: int) -> str:
        return self.target_symbols[idx]

    def __eq__(self, other):
        return (
            isinstance(other, Vocab)
            and self.source_symbols == other.source_symbols
            and self.target_symbols == other.target_symbols
            and self.min_freq == other.min_freq
        )

    def __repr__(self):
        return f"Vocab(source={self.source_size}, target={self.target_size})"


def build_vocab(examples, min_freq: int = 1) -> Vocab:
    """Count symbols over the examples and keep those at or above min_freq."""
    src_counts: Counter = Counter()
    tgt_counts: Counter = Counter()
    for ex in examples:
        src_counts.update(ex.source)
        if ex.target is not None:
            tgt_counts.update(ex.target)

    def kept(counts):
        return sorted(
            s for s, c in counts.items() if c >= min_freq and s not in CONTROL_SYMBOLS
        )

    return Vocab(
        CONTROL_SYMBOLS + tuple(kept(src_counts)),
        CONTROL_SYMBOLS + tuple(kept(tgt_counts)),
        min_freq,
    )


def encode(example: SnippetExample, vocab: Vocab):
    """Map an example to id sequences; targets are framed by start/end ids."""
    source_ids = [vocab.source_id(s) for s in example.source]
    target_ids = None
    if example.target is not None:
        target_ids = [START_ID]
        target_ids.extend(vocab.target_id(s) for s in example.target)
        target_ids.append(END_ID)
    return source_ids, target_ids


def format_example(example: SnippetExample) -> str:
    """One-line rendering: source symbols, tab, target symbols."""
    target = " ".join(example.target) if example.target is not None else ""
    return " ".join(example.source) + "\t" + target
