"""Planted-cue synthetic corpora for tests, demos and sanity checks.

Holder spans are Person-tagged noun runs placed next to a cue verb.  The
same noun lemmas also occur untagged in distractor sentences, so the NE
column is what separates holders from look-alikes.  Only one of the three
cue constructions is covered by the shipped pattern, which gives the
pattern approach a recall ceiling the CRF does not have.

Run ``python -m opholder.synthetic OUTDIR`` to write a demo data set.
"""
from __future__ import annotations

import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .corpus import B_HOLDER, I_HOLDER, NON_HOLDER, Document, Sentence, Token, format_corpus
from .lexicons import (Resources, default_pos_map, parse_semantic_lexicon,
                       parse_subjectivity_lexicon)
from .patterns import Pattern, parse_pattern_file

SPEECH_CUE = ("qaala", ("qaala", "qaalat", "yaqulu"))
CONDEMN_CUE = ("nadada", ("nadada", "nadadat"))
GATHER_CUE = ("tajamhara", ("tajamhara", "tajamharu"))
MEET_VERB = ("iltaqa", ("iltaqa", "iltaqat"))

NOUNS = tuple(f"ism{i:02d}" for i in range(60))
STRONG_CLUES = ("mustankir", "fadih", "raai", "mukhzi", "baghid", "mudhhil")
WEAK_CLUES = ("muhtaram", "jayyid", "kabir", "muhimm")
PREPOSITIONS = ("fi", "min", "ala", "ila", "an")
PARTICLES = ("wa", "anna", "qad", "lam")
DEFINITES = ("al-hukuma", "al-wizara", "al-madina", "al-qarar", "al-mashru", "al-balad")
OTHER_VERBS = ("ajjala", "arsala", "bana", "dakhala", "kharaja")

PATTERN_TEXT = '# speech-event cue followed by the holder\n"qaala" HOLDER\n' \
               '# never fires on the synthetic data; rejected by the frequency test\n' \
               '"sarraha" HOLDER\n'

# sentence kinds and their share of the corpus (out of 100)
MIX = (("speech", 30), ("speech_distractor", 3), ("condemn", 14), ("condemn_distractor", 14),
       ("gather", 6), ("meet", 10), ("objective", 23))


@dataclass
class SyntheticCorpus:
    docs: list[Document]
    resources: Resources
    patterns: list[Pattern]
    subj_text: str
    semfield_text: str
    stop_text: str
    pattern_text: str = PATTERN_TEXT

    def write(self, outdir) -> dict[str, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        files = {"corpus": out / "corpus.col", "subj_lexicon": out / "subjectivity.tsv",
                 "semfield_lexicon": out / "semfields.tsv", "semfield_stop": out / "stop.txt",
                 "patterns": out / "patterns.txt"}
        files["corpus"].write_text(format_corpus(self.docs), encoding="utf-8")
        files["subj_lexicon"].write_text(self.subj_text, encoding="utf-8")
        files["semfield_lexicon"].write_text(self.semfield_text, encoding="utf-8")
        files["semfield_stop"].write_text(self.stop_text, encoding="utf-8")
        files["patterns"].write_text(self.pattern_text, encoding="utf-8")
        return files


def _tok(surface, lemma, pos, bpc="O", ne="NONE", gold=NON_HOLDER, htype=None):
    return Token(surface, lemma, pos, bpc, ne, gold, htype)


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def verb(self, cue):
        lemma, surfaces = cue
        return _tok(self.rng.choice(surfaces), lemma, "VERB_PERFECT", "B-VP")

    def nouns(self, ne: str, holder_type: int | None = None):
        n = self.rng.choice((1, 1, 2))
        out = []
        for i in range(n):
            lemma = self.rng.choice(NOUNS)
            gold = NON_HOLDER
            if holder_type is not None:
                gold = B_HOLDER if i == 0 else I_HOLDER
            out.append(_tok(lemma.capitalize(), lemma, "NOUN_PROP", "B-NP" if i == 0 else "I-NP",
                            ne, gold, holder_type if i == 0 and holder_type else None))
        return out

    def closer(self):
        # never slot-eligible, so a holder run stops right before it
        w = self.rng.choice(PREPOSITIONS + PARTICLES)
        return _tok(w, w, "PREP" if w in PREPOSITIONS else "PART", "B-PP" if w in PREPOSITIONS else "O")

    def filler(self, lo, hi):
        out = []
        for _ in range(self.rng.randint(lo, hi)):
            kind = self.rng.random()
            if kind < 0.35:
                out.append(self.closer())
            elif kind < 0.65:
                w = self.rng.choice(DEFINITES)
                out.append(_tok(w, w, "DET+NOUN", "B-NP"))
            elif kind < 0.85:
                w = self.rng.choice(OTHER_VERBS)
                out.append(_tok(w, w, "VERB_IMPERFECT", "B-VP"))
            else:
                n = str(self.rng.randint(2, 99))
                out.append(_tok(n, n, "NUM", "B-NP"))
        return out

    def clues(self, n_strong, n_weak=0):
        out = []
        for _ in range(n_strong):
            w = self.rng.choice(STRONG_CLUES)
            out.append(_tok(w, w, "ADJ", "B-ADJP"))
        for _ in range(n_weak):
            w = self.rng.choice(WEAK_CLUES)
            out.append(_tok(w, w, "ADJ", "B-ADJP"))
        return out

    def sentence(self, kind: str) -> list[Token]:
        f = self.filler
        if kind == "speech":
            return (f(0, 2) + [self.verb(SPEECH_CUE)] + self.nouns("Person", 1) + [self.closer()]
                    + f(0, 2) + self.clues(2) + f(0, 1))
        if kind == "speech_distractor":
            return (f(0, 2) + [self.verb(SPEECH_CUE)] + self.nouns("NONE") + [self.closer()]
                    + f(0, 2) + self.clues(2) + f(0, 1))
        if kind == "condemn":
            return ([self.closer()] + self.nouns("Person", 2) + [self.verb(CONDEMN_CUE)]
                    + f(1, 3) + self.clues(2) + f(0, 1))
        if kind == "condemn_distractor":
            return ([self.closer()] + self.nouns("NONE") + [self.verb(CONDEMN_CUE)]
                    + f(1, 3) + self.clues(2) + f(0, 1))
        if kind == "gather":
            return ([self.closer()] + self.nouns("Person", 3) + [self.verb(GATHER_CUE)]
                    + f(1, 3) + self.clues(2) + f(0, 1))
        if kind == "meet":
            return (f(0, 2) + [self.verb(MEET_VERB)] + self.nouns("Person") + [self.closer()]
                    + f(1, 3) + self.clues(1) + f(0, 1))
        if kind == "objective":
            return f(4, 9)
        raise ValueError(kind)


def _lexicon_texts():
    subj = "".join(f"{w}\tstrongsubj\tnegative\n" for w in STRONG_CLUES[:3])
    subj += "".join(f"{w}\tstrongsubj\tpositive\n" for w in STRONG_CLUES[3:])
    subj += "".join(f"{w}\tweaksubj\t{pol}\n"
                    for w, pol in zip(WEAK_CLUES, ("positive", "positive", "neutral", "neutral")))
    sem = ("qaala\tcommunication\nyaqulu\tcommunication\nsarraha\tcommunication\n"
           "nadada\tcondemnation\nistankara\tcondemnation\ntajamhara\tgathering\n"
           "iltaqa\tmeeting\n")
    sem += "".join(f"{w}\tevaluation\n" for w in STRONG_CLUES + WEAK_CLUES)
    stop = "".join(f"{w}\n" for w in PREPOSITIONS)
    return subj, sem, stop


def _resources(subj_text, sem_text, stop_text) -> Resources:
    return Resources(parse_subjectivity_lexicon(subj_text.splitlines()),
                     parse_semantic_lexicon(sem_text.splitlines(), stop_lemmas=stop_text.split()),
                     default_pos_map())


def planted_cue_corpus(n_docs: int = 60, sents_per_doc: int = 5, seed: int = 0) -> SyntheticCorpus:
    rng = random.Random(seed)
    gen = _Gen(rng)
    total = n_docs * sents_per_doc
    kinds = []
    for kind, share in MIX:
        kinds.extend([kind] * round(total * share / 100))
    while len(kinds) < total:
        kinds.append("objective")
    kinds = kinds[:total]
    rng.shuffle(kinds)
    docs = []
    for d in range(n_docs):
        sents = tuple(Sentence(tuple(gen.sentence(k)))
                      for k in kinds[d * sents_per_doc:(d + 1) * sents_per_doc])
        docs.append(Document(f"syn{d:03d}", sents))
    subj, sem, stop = _lexicon_texts()
    return SyntheticCorpus(docs, _resources(subj, sem, stop),
                           parse_pattern_file(PATTERN_TEXT.splitlines()), subj, sem, stop)


def person_cue_corpus(n_docs: int = 30, sents_per_doc: int = 5, seed: int = 0) -> list[Document]:
    """Every Person-tagged run is a holder and nothing else is.

    Untagged nouns share the holders' lemmas, so without NE features the
    holders are indistinguishable from other nouns.
    """
    rng = random.Random(seed)
    gen = _Gen(rng)
    docs = []
    for d in range(n_docs):
        sents = []
        for _ in range(sents_per_doc):
            toks = gen.filler(0, 2)
            for _ in range(rng.randint(1, 3)):
                ne = "Person" if rng.random() < 0.5 else "NONE"
                toks += gen.nouns(ne, rng.choice((1, 2, 3)) if ne == "Person" else None)
                toks += [gen.closer()] + gen.filler(0, 2)
            sents.append(Sentence(tuple(toks)))
        docs.append(Document(f"per{d:03d}", tuple(sents)))
    return docs


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m opholder.synthetic OUTDIR", file=sys.stderr)
        return 1
    files = planted_cue_corpus().write(argv[0])
    for name, path in files.items():
        print(f"{name}\t{path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
