import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lcs_dp, unigram_f1
from stagesum.rouge import (
    RougeScore,
    lcs_length,
    rouge_l,
    rouge_l_summary,
    rouge_n,
    rouge_tokens,
    score_corpus,
)

tokens = st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=15)


def test_rouge_n_identity():
    seq = "the cat sat".split()
    assert rouge_n(seq, seq, 1) == RougeScore(1.0, 1.0, 1.0)


def test_rouge_n_disjoint():
    assert rouge_n(["a", "b"], ["c", "d"], 1) == RougeScore.zero()


def test_rouge_n_partial_overlap():
    score = rouge_n("the cat sat".split(), "the cat ran".split(), 1)
    assert score.precision == pytest.approx(2 / 3)
    assert score.recall == pytest.approx(2 / 3)
    assert score.f1 == pytest.approx(2 / 3)


def test_rouge_n_bigram_multiplicity():
    # hyp bigrams {(a,a):2}, ref bigrams {(a,a):1, (a,b):1} -> overlap 1
    score = rouge_n(["a", "a", "a"], ["a", "a", "b"], 2)
    assert (score.precision, score.recall) == (0.5, 0.5)


def test_rouge_n_empty_side():
    assert rouge_n([], ["a"], 1) == RougeScore.zero()
    assert rouge_n(["a"], ["a"], 2) == RougeScore.zero()


def test_rouge_n_rejects_zero_order():
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 0)


@given(tokens, tokens, st.integers(1, 3))
def test_rouge_n_symmetry_and_bounds(a, b, n):
    ab, ba = rouge_n(a, b, n), rouge_n(b, a, n)
    assert ab.f1 == ba.f1
    assert (ab.precision, ab.recall) == (ba.recall, ba.precision)
    for v in (ab.precision, ab.recall, ab.f1):
        assert 0.0 <= v <= 1.0
    p, r = ab.precision, ab.recall
    expected = 2 * p * r / (p + r) if p + r > 0 else 0.0
    assert abs(ab.f1 - expected) < 1e-12


@given(tokens, tokens)
def test_rouge_1_matches_definition(a, b):
    assert rouge_n(a, b, 1).f1 == pytest.approx(unigram_f1(a, b), abs=1e-12)


@given(tokens, tokens, st.sampled_from(["a", "b", "c", "d"]))
def test_rouge_1_recall_monotone(hyp, ref, extra):
    from collections import Counter

    if Counter(hyp)[extra] >= Counter(ref)[extra]:
        return
    assert rouge_n(hyp + [extra], ref, 1).recall >= rouge_n(hyp, ref, 1).recall


def test_rouge_l_examples():
    assert rouge_l(list("abcd"), list("abcd")) == RougeScore(1.0, 1.0, 1.0)
    score = rouge_l(list("abcd"), list("acbd"))
    assert (score.precision, score.recall) == (0.75, 0.75)
    assert rouge_l(["x"], ["a", "b"]) == RougeScore.zero()


@given(tokens, tokens)
def test_lcs_matches_dp(a, b):
    assert lcs_length(a, b) == lcs_dp(a, b)


def test_lcs_long_sequences():
    rng = random.Random(3)
    for _ in range(50):
        a = rng.choices("abcde", k=rng.randint(50, 120))
        b = rng.choices("abcde", k=rng.randint(50, 120))
        assert lcs_length(a, b) == lcs_dp(a, b)


def test_rouge_tokens_drop_punctuation():
    assert rouge_tokens("Hello, world!") == ["hello", "world"]


def test_rouge_tokens_stemming():
    pytest.importorskip("nltk")
    assert rouge_tokens("running cats", stem=True) == ["run", "cat"]


def test_rouge_l_summary_single_sentence_matches_rouge_l():
    hyp, ref = "the cat sat on a mat", "a cat sat on the mat today"
    assert rouge_l_summary(hyp, ref) == rouge_l(rouge_tokens(hyp), rouge_tokens(ref))


def test_rouge_l_summary_union():
    # reference sentence [a b c d]; hypothesis sentences [a b] and [c d]
    # union of LCS hits = {a, b, c, d} -> recall 4/4, precision 4/4
    score = rouge_l_summary("a b. c d.", "a b c d.")
    assert (score.precision, score.recall) == (1.0, 1.0)


def test_rouge_l_summary_union_partial():
    # reference sentences: r1=[a b c], r2=[d e]; hypothesis: h1=[c a], h2=[e d b]
    # r1: LCS(r1,h1) hits {a} or {c} (length 1), LCS(r1,h2) hits {b}; union size 2
    # r2: LCS(r2,h1) = 0, LCS(r2,h2) hits {d} or {e}; union size 1
    # total 3 over 5 reference and 5 hypothesis tokens
    score = rouge_l_summary("c a. e d b.", "a b c. d e.")
    assert score.recall == pytest.approx(3 / 5)
    assert score.precision == pytest.approx(3 / 5)


def test_rouge_l_summary_precision_capped():
    # without token-count clipping both reference copies of "a" would be credited
    score = rouge_l_summary("a.", "a. a.")
    assert score.precision == 1.0
    assert score.recall == 0.5


def test_rouge_l_summary_empty():
    assert rouge_l_summary("", "a b c.") == RougeScore.zero()
    assert rouge_l_summary("a b.", "") == RougeScore.zero()


def test_score_corpus_single_pair():
    pair = ("the cat sat.", "the cat ran.")
    scores = score_corpus([pair])
    assert scores["rouge-1"].f1 == pytest.approx(2 / 3)
    assert scores["rouge-2"].f1 == pytest.approx(1 / 2)
    assert set(scores) == {"rouge-1", "rouge-2", "rouge-l"}


def test_score_corpus_duplicate_pairs():
    pair = ("a b c.", "a c d.")
    assert score_corpus([pair]) == score_corpus([pair, pair])


def test_score_corpus_mean():
    scores = score_corpus([("a b.", "a b."), ("x y.", "a b.")])
    assert scores["rouge-1"].f1 == pytest.approx(0.5)


def test_score_corpus_rejects_empty():
    with pytest.raises(ValueError):
        score_corpus([])
