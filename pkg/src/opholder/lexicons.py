"""Pluggable lexical resources: subjectivity clues, semantic fields, POS reduction."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

STRONG = "Strong"
WEAK = "Weak"
POSITIVE = "Positive"
NEGATIVE = "Negative"
NEUTRAL = "Neutral"

NULL_FIELD = "__NULL__"

NOUN = "Noun"
DEFINITE = "Definite"
VERB = "Verb"
TRANSLIT = "Translit"
NUMBER = "Number"
SYMBOL = "Symbol"
NA = "NA"
REDUCED_TAGS = (NOUN, DEFINITE, VERB, TRANSLIT, NUMBER, SYMBOL, NA)

_STRENGTHS = {"strong": STRONG, "strongsubj": STRONG, "weak": WEAK, "weaksubj": WEAK}
_POLARITIES = {"positive": POSITIVE, "negative": NEGATIVE, "neutral": NEUTRAL}


class LexiconError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)


class DuplicateEntry(LexiconError):
    pass


class BadStrength(LexiconError):
    pass


class BadPolarity(LexiconError):
    pass


class BadRule(LexiconError):
    pass


def _data_rows(lines: Iterable[str]):
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line.split("\t")


@dataclass(frozen=True)
class Clue:
    strength: str
    polarity: str


@dataclass(frozen=True)
class SubjectivityLexicon:
    entries: Mapping[str, Clue] = field(default_factory=dict)

    def strength(self, lemma: str) -> str | None:
        clue = self.entries.get(lemma)
        return clue.strength if clue else None

    def is_strong(self, lemma: str) -> bool:
        return self.strength(lemma) == STRONG

    def is_weak(self, lemma: str) -> bool:
        return self.strength(lemma) == WEAK

    def __len__(self):
        return len(self.entries)

    def dumps(self) -> str:
        return "".join(f"{lemma}\t{c.strength.lower()}\t{c.polarity.lower()}\n"
                       for lemma, c in sorted(self.entries.items()))


def parse_subjectivity_lexicon(lines: Iterable[str], path: str | None = None) -> SubjectivityLexicon:
    entries: dict[str, Clue] = {}
    for lineno, cols in _data_rows(lines):
        if len(cols) != 3:
            raise LexiconError(f"expected 3 columns (lemma, strength, polarity), found {len(cols)}",
                               lineno, path)
        lemma, strength, polarity = (c.strip() for c in cols)
        if lemma in entries:
            raise DuplicateEntry(f"duplicate lemma {lemma!r}", lineno, path)
        if strength.lower() not in _STRENGTHS:
            raise BadStrength(f"bad strength {strength!r}", lineno, path)
        if polarity.lower() not in _POLARITIES:
            raise BadPolarity(f"bad polarity {polarity!r}", lineno, path)
        entries[lemma] = Clue(_STRENGTHS[strength.lower()], _POLARITIES[polarity.lower()])
    return SubjectivityLexicon(entries)


def load_subjectivity_lexicon(path) -> SubjectivityLexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_subjectivity_lexicon(fh, str(path))


@dataclass(frozen=True)
class SemanticFieldLexicon:
    entries: Mapping[str, str] = field(default_factory=dict)
    # lemmas that never carry a field, e.g. prepositions
    stop_lemmas: frozenset = frozenset()

    def __len__(self):
        return len(self.entries)

    def dumps(self) -> str:
        return "".join(f"{lemma}\t{fid}\n" for lemma, fid in sorted(self.entries.items()))


def lookup_semantic_field(lex: SemanticFieldLexicon | None, lemma: str) -> str:
    if lex is None or lemma in lex.stop_lemmas:
        return NULL_FIELD
    return lex.entries.get(lemma, NULL_FIELD)


def parse_semantic_lexicon(lines: Iterable[str], path: str | None = None,
                           stop_lemmas: Iterable[str] = ()) -> SemanticFieldLexicon:
    entries: dict[str, str] = {}
    for lineno, cols in _data_rows(lines):
        if len(cols) != 2:
            raise LexiconError(f"expected 2 columns (lemma, field), found {len(cols)}", lineno, path)
        lemma, fid = cols[0].strip(), cols[1].strip()
        if not fid or fid == NULL_FIELD:
            raise LexiconError(f"empty semantic field for {lemma!r}", lineno, path)
        if lemma in entries:
            raise DuplicateEntry(f"duplicate lemma {lemma!r}", lineno, path)
        entries[lemma] = fid
    return SemanticFieldLexicon(entries, frozenset(stop_lemmas))


def load_semantic_lexicon(path, stop_path=None) -> SemanticFieldLexicon:
    stops: list[str] = []
    if stop_path is not None:
        with open(stop_path, encoding="utf-8") as fh:
            stops = [cols[0].strip() for _, cols in _data_rows(fh)]
    with open(path, encoding="utf-8") as fh:
        return parse_semantic_lexicon(fh, str(path), stops)


# -- POS reduction -----------------------------------------------------------

@dataclass(frozen=True)
class PosRule:
    kind: str  # exact | prefix | regex
    pattern: str
    reduced: str

    def matches(self, tag: str) -> bool:
        if self.kind == "exact":
            return tag == self.pattern
        if self.kind == "prefix":
            return tag.startswith(self.pattern)
        return re.search(self.pattern, tag) is not None


@dataclass(frozen=True)
class PosReductionMap:
    """Ordered matcher rules; the first match wins, unmatched tags reduce to NA."""

    rules: tuple[PosRule, ...] = ()

    def __post_init__(self):
        # memo for the hot path; rules are immutable so this never goes stale
        object.__setattr__(self, "_cache", {})

    def __call__(self, fine_tag: str) -> str:
        return reduce_pos(self, fine_tag)


def reduce_pos(pmap: PosReductionMap, fine_tag: str) -> str:
    cache = pmap._cache
    hit = cache.get(fine_tag)
    if hit is not None:
        return hit
    reduced = NA
    for rule in pmap.rules:
        if rule.matches(fine_tag):
            reduced = rule.reduced
            break
    cache[fine_tag] = reduced
    return reduced


def parse_pos_rules(lines: Iterable[str], path: str | None = None) -> PosReductionMap:
    """Rule lines are ``<kind>:<pattern><TAB><reduced tag>`` with kind one of
    ``exact``, ``prefix`` or ``regex``.  A bare pattern means ``exact``."""
    rules = []
    for lineno, cols in _data_rows(lines):
        if len(cols) != 2:
            raise BadRule(f"expected 2 columns (matcher, reduced tag), found {len(cols)}",
                          lineno, path)
        matcher, reduced = cols[0], cols[1].strip()
        if reduced not in REDUCED_TAGS:
            raise BadRule(f"unknown reduced tag {reduced!r}", lineno, path)
        kind, sep, pattern = matcher.partition(":")
        if not sep or kind not in ("exact", "prefix", "regex"):
            kind, pattern = "exact", matcher
        if kind == "regex":
            try:
                re.compile(pattern)
            except re.error as exc:
                raise BadRule(f"bad regex {pattern!r}: {exc}", lineno, path) from None
        rules.append(PosRule(kind, pattern, reduced))
    return PosReductionMap(tuple(rules))


def load_pos_map(path) -> PosReductionMap:
    with open(path, encoding="utf-8") as fh:
        return parse_pos_rules(fh, str(path))


def default_pos_map() -> PosReductionMap:
    text = resources.files("opholder").joinpath("data/pos_rules.tsv").read_text(encoding="utf-8")
    return parse_pos_rules(text.splitlines(), "pos_rules.tsv")


def dump_pos_map(pmap: PosReductionMap) -> str:
    return "".join(f"{r.kind}:{r.pattern}\t{r.reduced}\n" for r in pmap.rules)


@dataclass(frozen=True)
class Resources:
    """Everything feature extraction and pattern matching look up per token."""

    subjectivity: SubjectivityLexicon = field(default_factory=SubjectivityLexicon)
    semantic: SemanticFieldLexicon | None = None
    pos_map: PosReductionMap = field(default_factory=default_pos_map)


def load_resources(subj_path=None, sem_path=None, sem_stop_path=None, pos_path=None) -> Resources:
    return Resources(
        load_subjectivity_lexicon(subj_path) if subj_path else SubjectivityLexicon(),
        load_semantic_lexicon(sem_path, sem_stop_path) if sem_path else None,
        load_pos_map(pos_path) if pos_path else default_pos_map(),
    )
