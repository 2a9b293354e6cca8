"""Hand-written holder extraction patterns: parsing, matching, validation and
the subjectivity-aware retention rules.

Pattern lines use a small DSL of whitespace-separated elements::

    "qaala" HOLDER              # literal lemma, then the holder slot
    POS:Verb HOLDER POS:Definite
    HOLDER "nadada"

``HOLDER`` must appear exactly once.  Lines may carry an explicit id as
``<id>:<TAB><pattern>``; otherwise ids are ``p1``, ``p2``... in file order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Document, HolderSpan, Sentence, gold_spans
from .lexicons import DEFINITE, NOUN, REDUCED_TAGS, TRANSLIT, PosReductionMap, default_pos_map
from .subjectivity import OBJECTIVE, SUBJECTIVE, UNLABELED

HOLDER = "HOLDER"
SLOT_POS = frozenset({NOUN, DEFINITE, TRANSLIT})
NO_NE = frozenset({"", "NONE", "O", "_"})

DEFAULT_MIN_FREQUENCY = 5
DEFAULT_MIN_PRECISION = 0.8

_ELEMENT_RE = re.compile(r'"[^"]*"|\S+')


class PatternError(ValueError):
    pass


class MissingHolderSlot(PatternError):
    pass


class MultipleHolderSlots(PatternError):
    pass


class UnknownPosClass(PatternError):
    pass


class MissingSubjectivityLabels(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    lemma: str

    def __str__(self):
        return f'"{self.lemma}"'


@dataclass(frozen=True)
class PosClass:
    tag: str

    def __str__(self):
        return f"POS:{self.tag}"


@dataclass(frozen=True)
class HolderSlot:
    def __str__(self):
        return HOLDER


@dataclass(frozen=True)
class Pattern:
    id: str
    elements: tuple

    @property
    def slot_index(self) -> int:
        return next(i for i, e in enumerate(self.elements) if isinstance(e, HolderSlot))

    def __str__(self):
        return " ".join(str(e) for e in self.elements)


@dataclass(frozen=True)
class PatternMatch:
    pattern_id: str
    sentence_index: int
    holder: HolderSpan
    # token extent of the whole match, inclusive
    start: int
    end: int


@dataclass(frozen=True)
class PatternStats:
    pattern_id: str
    frequency: int
    tp: int
    retrieved: int
    retained: bool

    @property
    def precision(self) -> float | None:
        return self.tp / self.retrieved if self.retrieved else None


def parse_pattern(line: str, pattern_id: str = "p") -> Pattern:
    elements = []
    for tok in _ELEMENT_RE.findall(line):
        if tok == HOLDER:
            elements.append(HolderSlot())
        elif tok.startswith('"') and tok.endswith('"') and len(tok) >= 2:
            if len(tok) == 2:
                raise PatternError("empty literal")
            elements.append(Literal(tok[1:-1]))
        elif tok.startswith("POS:"):
            tag = tok[4:]
            if tag == "Definit":
                tag = DEFINITE
            if tag not in REDUCED_TAGS:
                raise UnknownPosClass(f"unknown POS class {tag!r}")
            elements.append(PosClass(tag))
        else:
            raise PatternError(f"cannot parse pattern element {tok!r}")
    nslots = sum(isinstance(e, HolderSlot) for e in elements)
    if nslots == 0:
        raise MissingHolderSlot(f"pattern {line.strip()!r} has no HOLDER slot")
    if nslots > 1:
        raise MultipleHolderSlots(f"pattern {line.strip()!r} has {nslots} HOLDER slots")
    if len(elements) < 2:
        raise PatternError(f"pattern {line.strip()!r} needs at least 2 elements")
    return Pattern(pattern_id, tuple(elements))


def parse_pattern_file(lines: Iterable[str], path: str | None = None) -> list[Pattern]:
    patterns = []
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        pid = f"p{len(patterns) + 1}"
        if "\t" in line:
            head, body = line.split("\t", 1)
            if head.endswith(":"):
                pid, line = head[:-1].strip(), body.strip()
        if pid in seen:
            raise PatternError(f"{path or '<patterns>'}:{lineno}: duplicate pattern id {pid!r}")
        seen.add(pid)
        try:
            patterns.append(parse_pattern(line, pid))
        except PatternError as exc:
            raise type(exc)(f"{path or '<patterns>'}:{lineno}: {exc}") from None
    return patterns


def _strip_comment(line: str) -> str:
    inside = False
    for i, ch in enumerate(line):
        if ch == '"':
            inside = not inside
        elif ch == "#" and not inside:
            return line[:i]
    return line


def load_patterns(path) -> list[Pattern]:
    with open(path, encoding="utf-8") as fh:
        return parse_pattern_file(fh, str(path))


def dump_patterns(patterns: Sequence[Pattern]) -> str:
    return "".join(f"{p.id}:\t{p}\n" for p in patterns)


# -- matching ----------------------------------------------------------------

def has_ne(tok) -> bool:
    return tok.ne not in NO_NE


def _element_ok(el, lemma: str, reduced: str) -> bool:
    if isinstance(el, Literal):
        return lemma == el.lemma
    return reduced == el.tag


def match_pattern(p: Pattern, s: Sentence, pos_map: PosReductionMap | None = None,
                  sentence_index: int = 0, doc_id: str = "") -> list[PatternMatch]:
    """All non-overlapping matches of ``p`` in ``s``, left to right.

    The holder slot takes the longest run of slot-eligible tokens (noun-like
    reduced POS or any NE tag) for which the elements after the slot still
    match.
    """
    if pos_map is None:
        pos_map = default_pos_map()
    toks = s.tokens
    n = len(toks)
    lemmas = [t.lemma for t in toks]
    reduced = [pos_map(t.pos_fine) for t in toks]
    eligible = [reduced[i] in SLOT_POS or has_ne(toks[i]) for i in range(n)]
    k = p.slot_index
    prefix, suffix = p.elements[:k], p.elements[k + 1:]

    matches = []
    i = 0
    while i < n:
        j = i + len(prefix)
        found = None
        if j < n and all(_element_ok(el, lemmas[i + q], reduced[i + q])
                         for q, el in enumerate(prefix)):
            run_end = j
            while run_end < n and eligible[run_end]:
                run_end += 1
            # slot covers j..e-1, longest first
            for e in range(run_end, j, -1):
                if e + len(suffix) > n:
                    continue
                if all(_element_ok(el, lemmas[e + q], reduced[e + q])
                       for q, el in enumerate(suffix)):
                    found = (j, e - 1, e + len(suffix) - 1)
                    break
        if found is None:
            i += 1
            continue
        hs, he, mend = found
        matches.append(PatternMatch(p.id, sentence_index,
                                    HolderSpan(doc_id, sentence_index, hs, he), i, mend))
        i = mend + 1
    return matches


def match_document(patterns: Sequence[Pattern], doc: Document,
                   pos_map: PosReductionMap | None = None) -> list[PatternMatch]:
    if pos_map is None:
        pos_map = default_pos_map()
    out = []
    for si, sent in enumerate(doc.sentences):
        for p in patterns:
            out.extend(match_pattern(p, sent, pos_map, si, doc.id))
    return out


def match_extents(docs: Sequence[Document], patterns: Sequence[Pattern],
                  pos_map: PosReductionMap | None = None) -> dict:
    """Token positions inside any match, keyed by ``(doc_id, sentence_index)``."""
    out: dict = {}
    for doc in docs:
        for m in match_document(patterns, doc, pos_map):
            out.setdefault((doc.id, m.sentence_index), set()).update(range(m.start, m.end + 1))
    return out


# -- validation --------------------------------------------------------------

def validate_patterns(cands: Sequence[Pattern], unlabeled: Sequence[Document],
                      annotated: Sequence[Document],
                      fmin: int = DEFAULT_MIN_FREQUENCY, pmin: float = DEFAULT_MIN_PRECISION,
                      pos_map: PosReductionMap | None = None):
    """Keep patterns that are frequent on ``unlabeled`` and precise on ``annotated``.

    Both thresholds are inclusive.  A pattern that retrieves nothing on the
    annotated corpus has no precision and is rejected.
    Returns ``(retained, stats)``.
    """
    if fmin < 1:
        raise ValueError("fmin must be >= 1")
    if not 0.0 <= pmin <= 1.0:
        raise ValueError("pmin must lie in [0, 1]")
    if pos_map is None:
        pos_map = default_pos_map()
    gold = set(gold_spans(annotated))
    retained, stats = [], []
    for p in cands:
        freq = sum(len(match_pattern(p, s, pos_map, si, d.id))
                   for d in unlabeled for si, s in enumerate(d.sentences))
        caught = [m.holder for d in annotated for si, s in enumerate(d.sentences)
                  for m in match_pattern(p, s, pos_map, si, d.id)]
        tp = sum(h in gold for h in caught)
        # tp/retrieved >= pmin, compared without a division
        keep = freq >= fmin and len(caught) > 0 and tp >= pmin * len(caught) - 1e-9
        stats.append(PatternStats(p.id, freq, tp, len(caught), keep))
        if keep:
            retained.append(p)
    return retained, stats


def format_stats(stats: Sequence[PatternStats]) -> str:
    lines = ["pattern_id\tfrequency\tprecision\tretained\n"]
    for st in stats:
        prec = "NA" if st.precision is None else f"{st.precision:.4f}"
        lines.append(f"{st.pattern_id}\t{st.frequency}\t{prec}\t{int(st.retained)}\n")
    return "".join(lines)


# -- retention rules ---------------------------------------------------------

def keep_match(m: PatternMatch, sent: Sentence) -> bool:
    """Objective sentence: drop.  Subjective: keep.  Unlabeled: keep only a
    holder whose every token carries an NE tag."""
    label = sent.subjectivity
    if label == OBJECTIVE:
        return False
    if label == SUBJECTIVE:
        return True
    if label == UNLABELED:
        return all(has_ne(sent.tokens[i]) for i in range(m.holder.start, m.holder.end + 1))
    raise MissingSubjectivityLabels(f"sentence {m.sentence_index} has no subjectivity label")


def extract_holders_by_pattern(doc: Document, patterns: Sequence[Pattern],
                               pos_map: PosReductionMap | None = None) -> list[HolderSpan]:
    if any(s.subjectivity is None for s in doc.sentences):
        raise MissingSubjectivityLabels(f"document {doc.id!r} is missing subjectivity labels")
    kept = set()
    for m in match_document(patterns, doc, pos_map):
        if keep_match(m, doc.sentences[m.sentence_index]):
            kept.add(m.holder)
    return sorted(kept)
