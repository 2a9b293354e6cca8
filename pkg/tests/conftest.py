from __future__ import annotations

import sys

import pytest

from opholder.corpus import B_HOLDER, I_HOLDER, NON_HOLDER, Document, Sentence, Token
from opholder.lexicons import parse_subjectivity_lexicon
from opholder.synthetic import planted_cue_corpus

LABEL_CODE = {"B": B_HOLDER, "I": I_HOLDER, "O": NON_HOLDER}


def tok(lemma, pos="NOUN", ne="NONE", gold="O", bpc="O", surface=None, htype=None):
    return Token(surface or lemma, lemma, pos, bpc, ne, LABEL_CODE.get(gold, gold), htype)


def sent(*tokens, subjectivity=None):
    return Sentence(tuple(tokens), subjectivity)


def words(text, pos="NOUN"):
    """Sentence of plain tokens from whitespace-separated lemmas."""
    return sent(*(tok(w, pos) for w in text.split()))


def doc(doc_id, *sentences):
    return Document(doc_id, tuple(sentences))


@pytest.fixture
def clue_lexicon():
    return parse_subjectivity_lexicon([
        "s1\tstrongsubj\tnegative", "s2\tstrong\tpositive", "w1\tweaksubj\tneutral",
        "w2\tweak\tpositive",
    ])


@pytest.fixture(scope="session")
def synthetic():
    return planted_cue_corpus()


@pytest.fixture(scope="session")
def synthetic_files(synthetic, tmp_path_factory):
    """The planted-cue corpus and its resources written as CLI inputs."""
    return synthetic.write(tmp_path_factory.mktemp("syn"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
