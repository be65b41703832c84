import itertools

import numpy as np
import pytest

from lemtag.conllu import (EMPTY_TAG, Analysis, Corpus, MorphoTag, Sentence,
                           Token)
from lemtag.metrics import (EvalAlignmentError, SplitScores, TagScore,
                            evaluate, levenshtein, tag_f1)


def tag(*grammemes):
    return MorphoTag(tuple(sorted(grammemes))) if grammemes else EMPTY_TAG


def corpus(*sentences):
    built = []
    for rows in sentences:
        tokens = [Token(surface, gold=Analysis(lemma, tag(*gs)))
                  for surface, lemma, gs in rows]
        built.append(Sentence(tuple(tokens)))
    return Corpus(tuple(built))


def brute_levenshtein(a, b):
    @_memo
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1,
                   d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


def _memo(fn):
    cache = {}

    def wrapped(*args):
        if args not in cache:
            cache[args] = fn(*args)
        return cache[args]
    return wrapped


def test_levenshtein_identity_and_empties():
    assert levenshtein("", "") == 0
    assert levenshtein("abc", "abc") == 0
    assert levenshtein("", "abc") == 3
    assert levenshtein("abc", "") == 3


def test_levenshtein_known_values():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("flaw", "lawn") == 2
    assert levenshtein("a", "b") == 1
    assert levenshtein("ab", "ba") == 2


def test_levenshtein_matches_recursive_oracle():
    rng = np.random.default_rng(0)
    letters = "abcd"
    for _ in range(300):
        a = "".join(rng.choice(list(letters), size=rng.integers(0, 8)))
        b = "".join(rng.choice(list(letters), size=rng.integers(0, 8)))
        assert levenshtein(a, b) == brute_levenshtein(a, b)


def test_levenshtein_symmetry_and_triangle():
    rng = np.random.default_rng(1)
    words = ["".join(rng.choice(list("abc"), size=rng.integers(0, 6)))
             for _ in range(12)]
    for a, b in itertools.combinations(words, 2):
        assert levenshtein(a, b) == levenshtein(b, a)
    for a, b, c in itertools.combinations(words, 3):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


def test_tag_f1_partial_overlap():
    score = tag_f1(tag("A"), tag("A", "B"))
    assert score == TagScore(1.0, 0.5, pytest.approx(2 / 3))


def test_tag_f1_empty_conventions():
    assert tag_f1(tag(), tag()) == TagScore(1.0, 1.0, 1.0)
    assert tag_f1(tag(), tag("A")) == TagScore(0.0, 0.0, 0.0)
    assert tag_f1(tag("A"), tag()) == TagScore(0.0, 0.0, 0.0)


def test_tag_f1_swaps_precision_and_recall():
    a, b = tag("A", "B", "C"), tag("B", "D")
    fwd, rev = tag_f1(a, b), tag_f1(b, a)
    assert fwd.precision == rev.recall
    assert fwd.recall == rev.precision
    assert fwd.f1 == pytest.approx(rev.f1)


def test_tag_f1_disjoint_sets():
    assert tag_f1(tag("A"), tag("B")) == TagScore(0.0, 0.0, 0.0)


def test_evaluate_perfect_prediction():
    gold = corpus([("Cats", "cat", ("N", "PL")), ("ran", "run", ("V",))],
                  [("it", "it", ("PRON",))])
    report = evaluate(gold, gold)
    assert report.overall == SplitScores(3, 1.0, 0.0, 1.0, 1.0, 1.0)
    assert report.oov is None and report.seen is None


def test_evaluate_hand_computed_mixture():
    gold = corpus([("aa", "aa", ("N",)), ("bb", "bb", ("V",))])
    pred = corpus([("aa", "ab", ("N",)), ("bb", "bb", ("V", "X"))])
    s = evaluate(pred, gold).overall
    assert s.token_count == 2
    assert s.lemma_accuracy == 0.5
    assert s.avg_lemma_distance == 0.5  # distance 1 and 0
    assert s.tag_accuracy == 0.5
    # token 1: P=1, R=1 on {V} vs {V,X} -> P=0.5, R=1, F1=2/3
    assert s.avg_tag_f1 == pytest.approx((1.0 + 2 / 3) / 2)
    assert s.analysis_accuracy == 0.0


def test_evaluate_joint_never_beats_parts():
    rng = np.random.default_rng(2)
    lemmas = ["cat", "cut", "cot"]
    grammeme_pool = ["N", "V", "PL"]
    for _ in range(30):
        rows_gold = []
        rows_pred = []
        for i in range(int(rng.integers(1, 6))):
            surface = f"w{i}"
            rows_gold.append((surface, str(rng.choice(lemmas)),
                              tuple(rng.choice(grammeme_pool, size=rng.integers(1, 3), replace=False))))
            rows_pred.append((surface, str(rng.choice(lemmas)),
                              tuple(rng.choice(grammeme_pool, size=rng.integers(1, 3), replace=False))))
        s = evaluate(corpus(rows_pred), corpus(rows_gold)).overall
        assert s.analysis_accuracy <= min(s.lemma_accuracy, s.tag_accuracy)
        assert (s.avg_lemma_distance == 0.0) == (s.lemma_accuracy == 1.0)


def test_evaluate_is_token_weighted():
    gold = corpus([("a", "a", ("N",)), ("b", "b", ("N",)), ("c", "c", ("N",))],
                  [("d", "d", ("N",))])
    pred = corpus([("a", "a", ("N",)), ("b", "x", ("V",)), ("c", "c", ("N",))],
                  [("d", "y", ("N",))])
    s = evaluate(pred, gold).overall
    assert s.token_count == 4
    assert s.lemma_accuracy == 0.5  # 2 of 4, not the mean of 2/3 and 0
    assert s.tag_accuracy == 0.75


def test_evaluate_alignment_errors_carry_location():
    gold = corpus([("a", "a", ("N",)), ("b", "b", ("N",))])
    two_sentences = corpus([("a", "a", ("N",))], [("b", "b", ("N",))])
    with pytest.raises(EvalAlignmentError, match="sentence count"):
        evaluate(two_sentences, gold)
    uneven = corpus([("a", "a", ("N",)), ("b", "b", ("N",)), ("c", "c", ("N",))])
    with pytest.raises(EvalAlignmentError, match="sentence 0"):
        evaluate(uneven, gold)
    renamed = corpus([("a", "a", ("N",)), ("z", "b", ("N",))])
    with pytest.raises(EvalAlignmentError, match="token 1"):
        evaluate(renamed, gold)


def test_evaluate_missing_analysis_is_an_error():
    gold = corpus([("a", "a", ("N",))])
    bare = Corpus((Sentence((Token("a"),)),))
    with pytest.raises(EvalAlignmentError, match="missing analysis"):
        evaluate(bare, gold)
    with pytest.raises(EvalAlignmentError, match="missing analysis"):
        evaluate(gold, bare)


def test_evaluate_oov_split():
    reference = corpus([("Cats", "cat", ("N", "PL"))])
    gold = corpus([("Cats", "cat", ("N", "PL")), ("dogs", "dog", ("N", "PL"))])
    pred = corpus([("Cats", "cat", ("N", "PL")), ("dogs", "dig", ("N", "PL"))])
    report = evaluate(pred, gold, train_reference=reference)
    assert report.overall.token_count == 2
    assert report.seen.token_count == 1 and report.oov.token_count == 1
    assert report.seen.lemma_accuracy == 1.0
    assert report.oov.lemma_accuracy == 0.0
    assert report.oov.avg_lemma_distance == 1.0


def test_evaluate_oov_uses_the_full_lexical_form():
    # same lemma, different grammemes: still out of vocabulary
    reference = corpus([("cat", "cat", ("N",))])
    gold = corpus([("cats", "cat", ("N", "PL"))])
    report = evaluate(gold, gold, train_reference=reference)
    assert report.oov.token_count == 1
    assert report.seen.token_count == 0
    assert report.seen == SplitScores(0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_evaluate_matches_brute_force():
    rng = np.random.default_rng(3)
    lemmas = ["ana", "bob", "cyc", "dud"]
    pool = ["N", "V", "PL", "SG"]
    for _ in range(60):
        n_sents = int(rng.integers(1, 4))
        gold_rows, pred_rows = [], []
        for _ in range(n_sents):
            n = int(rng.integers(1, 5))
            g_rows, p_rows = [], []
            for t in range(n):
                surface = f"s{t}"
                g_rows.append((surface, str(rng.choice(lemmas)),
                               tuple(rng.choice(pool, size=rng.integers(0, 3), replace=False))))
                p_rows.append((surface, str(rng.choice(lemmas)),
                               tuple(rng.choice(pool, size=rng.integers(0, 3), replace=False))))
            gold_rows.append(g_rows)
            pred_rows.append(p_rows)
        gold_c, pred_c = corpus(*gold_rows), corpus(*pred_rows)
        got = evaluate(pred_c, gold_c).overall
        flat_gold = [r for s in gold_rows for r in s]
        flat_pred = [r for s in pred_rows for r in s]
        n = len(flat_gold)
        lemma_hits = sum(p[1] == g[1] for p, g in zip(flat_pred, flat_gold))
        dists = sum(brute_levenshtein(p[1], g[1]) for p, g in zip(flat_pred, flat_gold))
        tag_hits = sum(set(p[2]) == set(g[2]) for p, g in zip(flat_pred, flat_gold))
        f1s = sum(tag_f1(tag(*p[2]), tag(*g[2])).f1 for p, g in zip(flat_pred, flat_gold))
        joint = sum(p[1] == g[1] and set(p[2]) == set(g[2])
                    for p, g in zip(flat_pred, flat_gold))
        assert got.token_count == n
        assert got.lemma_accuracy == pytest.approx(lemma_hits / n)
        assert got.avg_lemma_distance == pytest.approx(dists / n)
        assert got.tag_accuracy == pytest.approx(tag_hits / n)
        assert got.avg_tag_f1 == pytest.approx(f1s / n)
        assert got.analysis_accuracy == pytest.approx(joint / n)
