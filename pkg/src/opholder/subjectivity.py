"""High-precision rule classifiers that mark sentences Subjective or Objective.

Sentences neither rule is confident about stay Unlabeled.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .corpus import Document, Sentence
from .lexicons import STRONG, WEAK, SubjectivityLexicon

SUBJECTIVE = "Subjective"
OBJECTIVE = "Objective"
UNLABELED = "Unlabeled"
SUBJECTIVITY_LABELS = (SUBJECTIVE, OBJECTIVE, UNLABELED)

# subjective: >= 2 strong clues in the sentence itself
MIN_STRONG_SUBJECTIVE = 2
# objective: over the previous+current+next window, no strong and <= 1 weak clue
MAX_WEAK_OBJECTIVE = 1


@dataclass(frozen=True)
class ClueCounts:
    strong: int = 0
    weak: int = 0

    def __add__(self, other: "ClueCounts") -> "ClueCounts":
        return ClueCounts(self.strong + other.strong, self.weak + other.weak)


def count_clues(sentence: Sentence | None, lex: SubjectivityLexicon) -> ClueCounts:
    if sentence is None:
        return ClueCounts()
    strong = weak = 0
    for tok in sentence.tokens:
        s = lex.strength(tok.lemma)
        if s == STRONG:
            strong += 1
        elif s == WEAK:
            weak += 1
    return ClueCounts(strong, weak)


def classify_counts(prev: ClueCounts, cur: ClueCounts, nxt: ClueCounts) -> str:
    if cur.strong >= MIN_STRONG_SUBJECTIVE:
        return SUBJECTIVE
    window = prev + cur + nxt
    if window.strong == 0 and window.weak <= MAX_WEAK_OBJECTIVE:
        return OBJECTIVE
    return UNLABELED


def classify_sentence(prev: Sentence | None, cur: Sentence, nxt: Sentence | None,
                      lex: SubjectivityLexicon) -> str:
    return classify_counts(count_clues(prev, lex), count_clues(cur, lex), count_clues(nxt, lex))


def label_document(doc: Document, lex: SubjectivityLexicon) -> Document:
    counts = [count_clues(s, lex) for s in doc.sentences]
    empty = ClueCounts()
    sents = []
    for i, sent in enumerate(doc.sentences):
        prev = counts[i - 1] if i > 0 else empty
        nxt = counts[i + 1] if i + 1 < len(counts) else empty
        sents.append(replace(sent, subjectivity=classify_counts(prev, counts[i], nxt)))
    return replace(doc, sentences=tuple(sents))


def label_corpus(docs, lex: SubjectivityLexicon) -> list[Document]:
    return [label_document(d, lex) for d in docs]
