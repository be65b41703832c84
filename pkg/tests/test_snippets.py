import numpy as np
import pytest

from corpusgen import make_corpus
from lemtag.conllu import Analysis, Corpus, MorphoTag, Sentence, Token, parse_corpus
from lemtag.snippets import (BOUNDARY_ID, CONTROL_SYMBOLS, END_ID, PAD_ID,
                             START_ID, UNK_ID, SEQUENCE_END, SEQUENCE_START,
                             UNKNOWN, WORD_BOUNDARY, SnippetConfig,
                             Vocab, build_full_sequence_example, build_vocab,
                             build_window_examples, encode,
                             examples_for_corpus, format_example,
                             grammeme_symbol, is_grammeme_symbol,
                             tokenize_analysis, tokenize_surface)


def _sentence():
    return Sentence((
        Token("Bats", gold=Analysis("bat", MorphoTag(("n", "pl")))),
        Token("are", gold=Analysis("be", MorphoTag(("aux", "prs")))),
        Token("flying", gold=Analysis("fly", MorphoTag(("prog", "v")))),
    ))


def test_control_symbols_fixed_ids():
    assert CONTROL_SYMBOLS.index("<PAD>") == PAD_ID == 0
    assert CONTROL_SYMBOLS.index("<UNK>") == UNK_ID == 1
    assert CONTROL_SYMBOLS.index(SEQUENCE_START) == START_ID == 2
    assert CONTROL_SYMBOLS.index(SEQUENCE_END) == END_ID == 3
    assert CONTROL_SYMBOLS.index(WORD_BOUNDARY) == BOUNDARY_ID == 4


def test_grammeme_symbols_are_atomic():
    assert grammeme_symbol("pl") == "+pl"
    assert is_grammeme_symbol("+pl")
    assert not is_grammeme_symbol("+")  # a bare plus is an ordinary character
    assert not is_grammeme_symbol("pl")


def test_tokenizers():
    assert tokenize_surface(Token("Bats")) == ["B", "a", "t", "s", WORD_BOUNDARY]
    analysis = Analysis("bat", MorphoTag(("n", "pl")))
    assert tokenize_analysis(analysis) == ["b", "a", "t", "+n", "+pl", WORD_BOUNDARY]


def test_full_sequence_example():
    ex = build_full_sequence_example(_sentence())
    assert ex.source == ("B", "a", "t", "s", WORD_BOUNDARY,
                         "a", "r", "e", WORD_BOUNDARY,
                         "f", "l", "y", "i", "n", "g", WORD_BOUNDARY)
    assert ex.target == ("b", "a", "t", "+n", "+pl", WORD_BOUNDARY,
                         "b", "e", "+aux", "+prs", WORD_BOUNDARY,
                         "f", "l", "y", "+prog", "+v", WORD_BOUNDARY)
    assert ex.focal_index is None


def test_full_sequence_without_gold_has_no_target():
    sent = Sentence((Token("a"), Token("b")))
    ex = build_full_sequence_example(sent)
    assert ex.target is None


def test_window_examples_count_and_focus():
    cfg = SnippetConfig(mode="context_window", window=1, tc_mode="both")
    examples = build_window_examples(_sentence(), cfg)
    assert len(examples) == 3
    assert [e.focal_index for e in examples] == [0, 1, 2]
    # middle snippet sees all three words on the source side
    assert examples[1].source == ("B", "a", "t", "s", WORD_BOUNDARY,
                                  "a", "r", "e", WORD_BOUNDARY,
                                  "f", "l", "y", "i", "n", "g", WORD_BOUNDARY)
    # edge snippet is clipped
    assert examples[0].source == ("B", "a", "t", "s", WORD_BOUNDARY,
                                  "a", "r", "e", WORD_BOUNDARY)


def test_window_target_context_variants():
    sent = _sentence()
    focal_unit = ["b", "e", "+aux", "+prs", WORD_BOUNDARY]
    left_full = ["b", "a", "t", "+n", "+pl", WORD_BOUNDARY]
    right_full = ["f", "l", "y", "+prog", "+v", WORD_BOUNDARY]

    by_mode = {}
    for tc in ("none", "lemmata", "tags", "both", "surface"):
        cfg = SnippetConfig(mode="context_window", window=1, tc_mode=tc)
        by_mode[tc] = build_window_examples(sent, cfg)[1].target

    assert by_mode["none"] == tuple(focal_unit)
    assert by_mode["both"] == tuple(left_full + focal_unit + right_full)
    assert by_mode["lemmata"] == tuple(["b", "a", "t", WORD_BOUNDARY] + focal_unit
                                       + ["f", "l", "y", WORD_BOUNDARY])
    assert by_mode["tags"] == tuple(["+n", "+pl", WORD_BOUNDARY] + focal_unit
                                    + ["+prog", "+v", WORD_BOUNDARY])
    assert by_mode["surface"] == tuple(["B", "a", "t", "s", WORD_BOUNDARY] + focal_unit
                                       + ["f", "l", "y", "i", "n", "g", WORD_BOUNDARY])


def test_focal_span_points_at_focal_unit():
    rng = np.random.default_rng(1)
    corpus = make_corpus(8, seed=3)
    for tc in ("none", "lemmata", "tags", "both", "surface"):
        for w in (0, 1, 2):
            cfg = SnippetConfig(mode="context_window", window=w, tc_mode=tc)
            for sent in corpus:
                for ex in build_window_examples(sent, cfg):
                    lo, hi = ex.focal_span
                    unit = ex.target[lo:hi]
                    gold = sent.tokens[ex.focal_index].gold
                    assert unit == tuple(tokenize_analysis(gold))


def test_window_examples_need_context_window_mode():
    cfg = SnippetConfig(mode="full_sequence")
    with pytest.raises(ValueError):
        build_window_examples(_sentence(), cfg)


def test_snippet_config_validation():
    with pytest.raises(ValueError):
        SnippetConfig(mode="bogus")
    with pytest.raises(ValueError):
        SnippetConfig(window=-1)
    with pytest.raises(ValueError):
        SnippetConfig(tc_mode="everything")


def test_examples_for_corpus_modes():
    corpus = make_corpus(6, seed=0)
    full = examples_for_corpus(corpus, SnippetConfig(mode="full_sequence"))
    assert len(full) == len(corpus)
    cw = examples_for_corpus(corpus, SnippetConfig(mode="context_window", window=1))
    assert len(cw) == corpus.token_count()
    assert [e.sentence_id for e in full] == list(range(len(corpus)))


def test_overlap_law_small_cases():
    # window 1, three tokens: edge tokens covered twice, middle three times
    for i, expect in ((0, 2), (1, 3), (2, 2)):
        covering = [j for j in range(3) if abs(i - j) <= 1]
        assert len(covering) == expect


def test_vocab_orders_controls_first_and_sorts_rest():
    cfg = SnippetConfig(mode="context_window", window=1, tc_mode="both")
    examples = build_window_examples(_sentence(), cfg)
    vocab = build_vocab(examples)
    assert vocab.source_symbols[:5] == CONTROL_SYMBOLS
    assert vocab.target_symbols[:5] == CONTROL_SYMBOLS
    rest_src = vocab.source_symbols[5:]
    assert list(rest_src) == sorted(rest_src)
    assert "+pl" in vocab.target_symbols
    assert "+pl" not in vocab.source_symbols


def test_vocab_min_freq_filters():
    cfg = SnippetConfig(mode="full_sequence")
    examples = [build_full_sequence_example(_sentence())]
    vocab1 = build_vocab(examples, min_freq=1)
    vocab2 = build_vocab(examples, min_freq=2)
    assert vocab2.source_size < vocab1.source_size
    # "a" occurs twice on the source side, "B" only once
    assert "a" in vocab2.source_symbols
    assert "B" not in vocab2.source_symbols


def test_vocab_lookup_and_unk():
    vocab = Vocab(CONTROL_SYMBOLS + ("a",), CONTROL_SYMBOLS + ("b",), 1)
    assert vocab.source_id("a") == 5
    assert vocab.source_id("zzz") == UNK_ID
    assert vocab.target_symbol(5) == "b"
    assert vocab.source_symbol(UNK_ID) == UNKNOWN


def test_vocab_requires_control_prefix():
    with pytest.raises(ValueError):
        Vocab(("a",) + CONTROL_SYMBOLS, CONTROL_SYMBOLS, 1)
    with pytest.raises(ValueError):
        Vocab(CONTROL_SYMBOLS + ("a", "a"), CONTROL_SYMBOLS, 1)


def test_encode_frames_target():
    cfg = SnippetConfig(mode="context_window", window=1, tc_mode="none")
    examples = build_window_examples(_sentence(), cfg)
    vocab = build_vocab(examples)
    src, tgt = encode(examples[0], vocab)
    assert tgt[0] == START_ID and tgt[-1] == END_ID
    assert all(i != PAD_ID for i in src)
    symbols = tuple(vocab.target_symbol(i) for i in tgt[1:-1])
    assert symbols == examples[0].target


def test_encode_unknown_symbols_to_unk():
    cfg = SnippetConfig(mode="context_window", window=0, tc_mode="none")
    examples = build_window_examples(_sentence(), cfg)
    vocab = build_vocab(examples[:1])  # only knows the first word
    src, _ = encode(examples[2], vocab)
    assert UNK_ID in src


def test_format_example_round_readable():
    cfg = SnippetConfig(mode="context_window", window=1, tc_mode="none")
    ex = build_window_examples(_sentence(), cfg)[0]
    line = format_example(ex)
    src_text, tgt_text = line.split("\t")
    assert tuple(src_text.split(" ")) == ex.source
    assert tuple(tgt_text.split(" ")) == ex.target


def test_window_examples_random_lengths_emit_one_per_token():
    rng = np.random.default_rng(5)
    for _ in range(60):
        length = int(rng.integers(1, 13))
        window = int(rng.integers(0, 4))
        tokens = tuple(Token("ab", gold=Analysis("a")) for _ in range(length))
        cfg = SnippetConfig(mode="context_window", window=window, tc_mode="both")
        examples = build_window_examples(Sentence(tokens), cfg)
        assert len(examples) == length
        for i, ex in enumerate(examples):
            lo = max(0, i - window)
            hi = min(length - 1, i + window)
            assert ex.source.count(WORD_BOUNDARY) == hi - lo + 1
