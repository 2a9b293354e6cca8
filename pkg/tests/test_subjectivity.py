from __future__ import annotations

import itertools

from hypothesis import given
from hypothesis import strategies as st

from opholder.lexicons import parse_subjectivity_lexicon
from opholder.subjectivity import (OBJECTIVE, SUBJECTIVE, UNLABELED, ClueCounts,
                                   classify_counts, classify_sentence, count_clues,
                                   label_corpus, label_document)

from conftest import doc, words

LEX = parse_subjectivity_lexicon(["s1\tstrong\tnegative", "s2\tstrong\tpositive",
                                  "w1\tweak\tneutral", "w2\tweak\tpositive"])


def oracle(prev, cur, nxt):
    """Independent restatement of the two high-precision rules."""
    subjective = cur[0] >= 2
    objective = prev[0] + cur[0] + nxt[0] == 0 and prev[1] + cur[1] + nxt[1] <= 1
    if subjective:
        return SUBJECTIVE
    return OBJECTIVE if objective else UNLABELED


def test_truth_table_matches_oracle_exhaustively():
    rng = range(5)
    slots = list(itertools.product(rng, rng))
    for prev, cur, nxt in itertools.product(slots, slots, slots):
        got = classify_counts(ClueCounts(*prev), ClueCounts(*cur), ClueCounts(*nxt))
        assert got == oracle(prev, cur, nxt), (prev, cur, nxt)


def test_rules_never_co_fire():
    # a sentence with >= 2 strong clues always has a strong clue in its window
    for s in range(2, 5):
        for w in range(5):
            assert classify_counts(ClueCounts(), ClueCounts(s, w), ClueCounts()) == SUBJECTIVE


def test_boundary_cases():
    z = ClueCounts()
    assert classify_counts(z, ClueCounts(1, 0), z) == UNLABELED
    assert classify_counts(z, z, z) == OBJECTIVE
    assert classify_counts(ClueCounts(0, 1), z, z) == OBJECTIVE
    assert classify_counts(ClueCounts(0, 1), z, ClueCounts(0, 1)) == UNLABELED
    assert classify_counts(z, z, ClueCounts(1, 0)) == UNLABELED


def test_clues_counted_per_occurrence(clue_lexicon):
    c = count_clues(words("s1 s1 w1 x w2 w2"), clue_lexicon)
    assert c == ClueCounts(2, 3)
    assert count_clues(None, clue_lexicon) == ClueCounts()


def test_classify_sentence_uses_neighbours(clue_lexicon):
    cur = words("x y")
    assert classify_sentence(None, cur, None, clue_lexicon) == OBJECTIVE
    assert classify_sentence(words("w1"), cur, words("w2"), clue_lexicon) == UNLABELED
    assert classify_sentence(words("s1"), cur, None, clue_lexicon) == UNLABELED
    assert classify_sentence(None, words("s1 s2"), None, clue_lexicon) == SUBJECTIVE


def test_label_document_windows_stop_at_document_edges(clue_lexicon):
    d1 = doc("a", words("s1 s2"), words("x"), words("y"), words("z"))
    d2 = doc("b", words("w1"))
    out = label_corpus([d1, d2], clue_lexicon)
    assert [s.subjectivity for s in out[0].sentences] == [
        SUBJECTIVE, UNLABELED, OBJECTIVE, OBJECTIVE]
    assert [s.subjectivity for s in out[1].sentences] == [OBJECTIVE]
    # inputs untouched
    assert all(s.subjectivity is None for s in d1.sentences)


counts = st.tuples(st.integers(0, 6), st.integers(0, 6)).map(lambda t: ClueCounts(*t))


@given(counts, counts, counts)
def test_label_always_one_of_three(prev, cur, nxt):
    assert classify_counts(prev, cur, nxt) in (SUBJECTIVE, OBJECTIVE, UNLABELED)


@given(st.lists(st.sampled_from(["s1", "s2", "w1", "w2", "x", "y"]), min_size=1, max_size=6),
       st.integers(0, 3))
def test_label_document_agrees_with_classify_sentence(lemmas, n_extra):
    sents = [words(" ".join(lemmas[i:] + lemmas[:i])) for i in range(n_extra + 1)]
    out = label_document(doc("d", *sents), LEX)
    for i, s in enumerate(sents):
        prev = sents[i - 1] if i else None
        nxt = sents[i + 1] if i + 1 < len(sents) else None
        assert out.sentences[i].subjectivity == classify_sentence(prev, s, nxt, LEX)
