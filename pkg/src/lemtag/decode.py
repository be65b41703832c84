"""Inference: greedy and beam search, parsing decoded symbol streams back
into analyses, and majority voting over overlapping context windows.

Per-token flags record anything suspicious on the way from symbols to
analyses: "truncated" (decode hit the length limit), "malformed" (a unit
with a grammeme before any lemma character, or an empty unit), "short"
(decode produced fewer units than the window needs, fallback used) and
"mismatch" (full-sequence unit count differs from the token count).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .conllu import EMPTY_TAG, Analysis, Corpus, MorphoTag, Sentence, Token
from .model import (Model, decode_step, encode_source, forward_loss,
                    init_decoder_state, make_batch)
from .snippets import (END_ID, PAD_ID, START_ID, WORD_BOUNDARY,
                       GRAMMEME_PREFIX, SnippetConfig, Vocab,
                       build_full_sequence_example, build_window_examples,
                       encode, is_grammeme_symbol)

FLAG_TRUNCATED = "truncated"
FLAG_MALFORMED = "malformed"
FLAG_SHORT = "short"
FLAG_MISMATCH = "mismatch"


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 5
    max_length: int | None = None

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_length is not None and self.max_length < 1:
            raise ValueError("max_length must be >= 1")

    def length_limit(self, source_length: int) -> int:
        if self.max_length is not None:
            return self.max_length
        return 2 * source_length + 16


def _check_vocab(model: Model, vocab: Vocab):
    if (model.config.source_vocab_size != vocab.source_size
            or model.config.target_vocab_size != vocab.target_size):
        raise ValueError("model and vocabulary sizes disagree")


def _encode_single(model, source_ids):
    batch = make_batch([(list(source_ids), None)])
    states, finals = encode_source(model, batch)
    return states[0], batch.src_mask[0], finals


def _log_probs(logits):
    m = logits.max(axis=-1, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=-1, keepdims=True))


def greedy_ids(model: Model, source_ids, cfg: DecodeConfig):
    """Argmax rollout. Returns (ids without start/end, finished flag)."""
    enc, mask, finals = _encode_single(model, source_ids)
    state = init_decoder_state(model, finals)
    limit = cfg.length_limit(len(source_ids))
    prev = START_ID
    out = []
    for _ in range(limit):
        logits, state = decode_step(model, np.array([prev]), state, enc, mask)
        row = logits[0].copy()
        row[PAD_ID] = -np.inf
        row[START_ID] = -np.inf
        nxt = int(np.argmax(row))
        if nxt == END_ID:
            return out, True
        out.append(nxt)
        prev = nxt
    return out, False


def score_sequence(model: Model, source_ids, target_ids) -> float:
    """Model log-probability (nats) of the framed target given the source."""
    framed = [START_ID] + list(target_ids) + [END_ID]
    batch = make_batch([(list(source_ids), framed)])
    n_predicted = len(framed) - 1
    return -forward_loss(model, batch) * n_predicted


def beam_ids(model: Model, source_ids, cfg: DecodeConfig):
    """Beam search over summed log-probabilities.

    Finished hypotheses retire at the end symbol; the best finished one is
    returned with score ties broken toward the lexicographically smallest
    id sequence.  The greedy rollout is kept as a candidate so the result
    never scores below it.  Returns (ids, finished flag).
    """
    if cfg.beam_size == 1:
        return greedy_ids(model, source_ids, cfg)
    enc, mask, finals = _encode_single(model, source_ids)
    init = init_decoder_state(model, finals)
    limit = cfg.length_limit(len(source_ids))
    layers = model.config.layers

    alive = [(0.0, (), init)]  # (score, ids, state)
    finished: list[tuple[float, tuple]] = []
    for _ in range(limit):
        prev = np.array([ids[-1] if ids else START_ID for _, ids, _ in alive])
        state = [
            (np.concatenate([st[l][0] for _, _, st in alive], axis=0),
             np.concatenate([st[l][1] for _, _, st in alive], axis=0))
            for l in range(layers)
        ]
        logits, new_state = decode_step(model, prev, state, enc, mask)
        logp = _log_probs(logits)
        logp[:, PAD_ID] = -np.inf
        logp[:, START_ID] = -np.inf
        expanded = []
        for bi, (score, ids, _) in enumerate(alive):
            for sym in range(logp.shape[1]):
                total = score + logp[bi, sym]
                if np.isfinite(total):
                    expanded.append((-total, ids + (sym,), bi))
        expanded.sort(key=lambda e: (e[0], e[1]))
        next_alive = []
        for neg, ids, bi in expanded:
            if ids[-1] == END_ID:
                finished.append((-neg, ids[:-1]))
            else:
                row_state = [
                    (new_state[l][0][bi:bi + 1], new_state[l][1][bi:bi + 1])
                    for l in range(layers)
                ]
                next_alive.append((-neg, ids, row_state))
            if len(next_alive) == cfg.beam_size:
                break
        alive = next_alive
        if not alive:
            break
        if finished and max(f[0] for f in finished) >= alive[0][0]:
            break  # scores only decrease as hypotheses grow

    candidates = [(score, ids, True) for score, ids in finished]
    greedy_out, greedy_done = greedy_ids(model, source_ids, cfg)
    if greedy_done:
        candidates.append((score_sequence(model, source_ids, greedy_out),
                           tuple(greedy_out), True))
    if not candidates:
        if alive:
            best = min(alive, key=lambda a: (-a[0], a[1]))
            return list(best[1]), False
        return greedy_out, greedy_done
    best = min(candidates, key=lambda c: (-c[0], c[1]))
    return list(best[1]), best[2]


def greedy_decode(model: Model, source_ids, vocab: Vocab,
                  cfg: DecodeConfig | None = None) -> list[str]:
    """Greedy rollout as target symbols, start/end stripped."""
    _check_vocab(model, vocab)
    ids, _ = greedy_ids(model, source_ids, cfg or DecodeConfig())
    return [vocab.target_symbol(i) for i in ids]


def beam_decode(model: Model, source_ids, vocab: Vocab,
                cfg: DecodeConfig | None = None) -> list[str]:
    """Beam-search output as target symbols, start/end stripped."""
    _check_vocab(model, vocab)
    ids, _ = beam_ids(model, source_ids, cfg or DecodeConfig())
    return [vocab.target_symbol(i) for i in ids]


# ---------------------------------------------------------------------------
# symbols -> analyses


def parse_analysis_units(symbols) -> tuple[list[Analysis], list[bool]]:
    """Split a decoded symbol stream on word boundaries into analyses.

    Within a unit, the leading run of non-grammeme symbols forms the lemma
    and "+"-prefixed symbols form the tag (normalized order).  A trailing
    unit without a boundary is kept.  Returns (units, malformed flags); a
    unit is malformed when a grammeme precedes any lemma character, a lemma
    character follows a grammeme, or the unit is empty.
    """
    units: list[Analysis] = []
    malformed: list[bool] = []
    chunk: list[str] = []
    pending = False
    for sym in symbols:
        if sym == WORD_BOUNDARY:
            analysis, bad = _parse_unit(chunk)
            units.append(analysis)
            malformed.append(bad)
            chunk = []
            pending = False
        else:
            chunk.append(sym)
            pending = True
    if pending:
        analysis, bad = _parse_unit(chunk)
        units.append(analysis)
        malformed.append(bad)
    return units, malformed


def _parse_unit(chunk):
    lemma_parts = []
    grammemes = []
    bad = not chunk
    for sym in chunk:
        if is_grammeme_symbol(sym):
            grammemes.append(sym[len(GRAMMEME_PREFIX):])
        else:
            if grammemes:
                bad = True  # lemma character after a grammeme
            lemma_parts.append(sym)
    if grammemes and not lemma_parts:
        bad = True
    tag = MorphoTag(tuple(sorted(set(grammemes)))) if grammemes else EMPTY_TAG
    return Analysis("".join(lemma_parts), tag), bad


def align_full_sequence(units: list[Analysis], sentence: Sentence):
    """Map decoded units onto tokens positionally.

    Equal counts align one-to-one.  Otherwise the longest positional prefix
    is kept, missing positions fall back to (surface, empty tag), extra
    units are dropped, and the mismatch flag is returned True.
    """
    length = len(sentence)
    if len(units) == length:
        return list(units), False
    aligned = []
    for i, token in enumerate(sentence.tokens):
        if i < len(units):
            aligned.append(units[i])
        else:
            aligned.append(Analysis(token.surface, EMPTY_TAG))
    return aligned, True


# ---------------------------------------------------------------------------
# voting


def build_ballots(sentence_length: int, window: int, decoded_units):
    """Collect per-token candidate lists from every covering snippet.

    ``decoded_units`` holds, per snippet (one per focal token), the parsed
    unit list.  Token i is covered by snippet j when |i - j| <= window; the
    unit ordinal inside snippet j is i - max(0, j - window).  A snippet too
    short to supply the unit contributes None at that slot.  Each ballot
    entry is (analysis-or-None, focal distance, snippet index).
    """
    ballots = []
    for i in range(sentence_length):
        entries = []
        for j in range(max(0, i - window), min(sentence_length - 1, i + window) + 1):
            ordinal = i - max(0, j - window)
            units = decoded_units[j]
            got = units[ordinal] if ordinal < len(units) else None
            entries.append((got, abs(i - j), j))
        ballots.append(entries)
    return ballots


def majority_vote(ballot):
    """Most frequent analysis; ties to the smaller focal distance, then to
    the lower snippet index."""
    if not ballot:
        raise ValueError("empty ballot")
    counts = Counter(analysis for analysis, _, _ in ballot)
    ranked = []
    for analysis, count in counts.items():
        dist = min(d for a, d, _ in ballot if a == analysis)
        idx = min(s for a, _, s in ballot if a == analysis)
        ranked.append((-count, dist, idx, analysis))
    ranked.sort(key=lambda r: r[:3])
    return ranked[0][3]


# ---------------------------------------------------------------------------
# sentence / corpus prediction


def _decode_example(model, vocab, example, cfg):
    source_ids, _ = encode(example, vocab)
    if cfg.beam_size == 1:
        ids, finished = greedy_ids(model, source_ids, cfg)
    else:
        ids, finished = beam_ids(model, source_ids, cfg)
    symbols = [vocab.target_symbol(i) for i in ids]
    units, malformed = parse_analysis_units(symbols)
    return units, malformed, finished


def predict_sentence(model: Model, sentence: Sentence, vocab: Vocab,
                     snippet_cfg: SnippetConfig, decode_cfg: DecodeConfig,
                     voting: bool = False):
    """Predict one analysis per token.

    Returns (analyses, flags), both of sentence length; a flag string is
    "" for a clean token, else comma-joined flag names.
    """
    _check_vocab(model, vocab)
    if voting and snippet_cfg.mode != "context_window":
        raise ValueError("voting requires context_window mode")
    length = len(sentence)
    flags = [set() for _ in range(length)]

    if snippet_cfg.mode == "full_sequence":
        example = build_full_sequence_example(sentence)
        units, malformed, finished = _decode_example(model, vocab, example, decode_cfg)
        analyses, mismatch = align_full_sequence(units, sentence)
        for i in range(length):
            if not finished:
                flags[i].add(FLAG_TRUNCATED)
            if mismatch:
                flags[i].add(FLAG_MISMATCH)
            if i < len(malformed) and malformed[i]:
                flags[i].add(FLAG_MALFORMED)
        return analyses, _render_flags(flags)

    examples = build_window_examples(sentence, snippet_cfg)
    decoded = []
    for example in examples:
        decoded.append(_decode_example(model, vocab, example, decode_cfg))

    analyses: list[Analysis] = []
    if voting:
        ballots = build_ballots(length, snippet_cfg.window,
                                [units for units, _, _ in decoded])
        for i, ballot in enumerate(ballots):
            filled = []
            for got, dist, j in ballot:
                if got is None:
                    flags[i].add(FLAG_SHORT)
                    got = Analysis(sentence.tokens[i].surface, EMPTY_TAG)
                filled.append((got, dist, j))
                if not decoded[j][2]:
                    flags[i].add(FLAG_TRUNCATED)
            analyses.append(majority_vote(filled))
    else:
        for i in range(length):
            units, malformed, finished = decoded[i]
            ordinal = i - max(0, i - snippet_cfg.window)
            if not finished:
                flags[i].add(FLAG_TRUNCATED)
            if ordinal < len(units):
                analyses.append(units[ordinal])
                if malformed[ordinal]:
                    flags[i].add(FLAG_MALFORMED)
            else:
                analyses.append(Analysis(sentence.tokens[i].surface, EMPTY_TAG))
                flags[i].add(FLAG_SHORT)
    return analyses, _render_flags(flags)


def _render_flags(flag_sets):
    return [",".join(sorted(s)) for s in flag_sets]


def predict_corpus(model: Model, corpus: Corpus, vocab: Vocab,
                   snippet_cfg: SnippetConfig, decode_cfg: DecodeConfig,
                   voting: bool = False):
    """Predict every sentence; returns (corpus with analyses, per-sentence flags)."""
    sentences = []
    all_flags = []
    for sentence in corpus:
        analyses, flags = predict_sentence(
            model, sentence, vocab, snippet_cfg, decode_cfg, voting)
        tokens = [Token(tok.surface, gold=analysis)
                  for tok, analysis in zip(sentence.tokens, analyses)]
        sentences.append(Sentence(tuple(tokens)))
        all_flags.append(flags)
    return Corpus(tuple(sentences), source_path=corpus.source_path), all_flags
