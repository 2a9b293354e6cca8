"""Token feature strings for the CRF, with per-family switches for ablation.

Window families emit one string per offset ``o`` in ``[-n, +n]`` shaped
``FAMILY[o]=value``; sentence-level families emit ``FAMILY=value``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .corpus import Document, Sentence
from .lexicons import Resources, lookup_semantic_field
from .subjectivity import OBJECTIVE, SUBJECTIVE

WORD = "WORD"
SEMFIELD = "SEMFIELD"
POS = "POS"
BPC = "BPC"
NE = "NE"
PATTERN = "PATTERN"
MPQA_STRONG = "MPQA_STRONG"
MPQA_WEAK = "MPQA_WEAK"
SUBJ_CLS = "SUBJ_CLS"
OBJ_CLS = "OBJ_CLS"

WINDOW_FAMILIES = (WORD, SEMFIELD, POS, BPC, NE, MPQA_STRONG, MPQA_WEAK)
SENTENCE_FAMILIES = (PATTERN, SUBJ_CLS, OBJ_CLS)
ALL_FAMILIES = WINDOW_FAMILIES + SENTENCE_FAMILIES

NE_CLASSES = ("Person", "Location", "Organization", "Job", "Device", "Car",
              "CellPhone", "Currency", "Date", "Time")

BOS = "__BOS__"
EOS = "__EOS__"

# disabled-feature groups used by the ablation study
ABLATION_GROUPS = ("Pattern", "SubjectivityClassifiers", "SemanticField",
                   "SubjectivityClues", "JobNE", "PersonNE", "AllNE")


class UnknownGroup(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    window: int = 3
    families: frozenset = field(default_factory=lambda: frozenset(ALL_FAMILIES))
    ne_classes: tuple = NE_CLASSES

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("window radius must be >= 0")
        unknown = set(self.families) - set(ALL_FAMILIES)
        if unknown:
            raise ValueError(f"unknown feature families {sorted(unknown)}")
        if not self.families:
            raise ValueError("at least one feature family must be enabled")
        bad = set(self.ne_classes) - set(NE_CLASSES)
        if bad:
            raise ValueError(f"unknown NE classes {sorted(bad)}")
        object.__setattr__(self, "families", frozenset(self.families))
        # keep the fixed class order whatever order was passed in
        object.__setattr__(self, "ne_classes",
                           tuple(c for c in NE_CLASSES if c in set(self.ne_classes)))

    def enabled(self, family: str) -> bool:
        if family == NE:
            return NE in self.families and bool(self.ne_classes)
        return family in self.families

    def with_families(self, *families: str) -> "FeatureConfig":
        return replace(self, families=self.families | set(families))

    def without_families(self, *families: str) -> "FeatureConfig":
        return replace(self, families=self.families - set(families))

    def without_group(self, group: str) -> "FeatureConfig":
        if group == "Pattern":
            return self.without_families(PATTERN)
        if group == "SubjectivityClassifiers":
            return self.without_families(SUBJ_CLS, OBJ_CLS)
        if group == "SemanticField":
            return self.without_families(SEMFIELD)
        if group == "SubjectivityClues":
            return self.without_families(MPQA_STRONG, MPQA_WEAK)
        if group == "JobNE":
            return replace(self, ne_classes=tuple(c for c in self.ne_classes if c != "Job"))
        if group == "PersonNE":
            return replace(self, ne_classes=tuple(c for c in self.ne_classes if c != "Person"))
        if group == "AllNE":
            return self.without_families(NE)
        raise UnknownGroup(f"unknown feature group {group!r}; expected one of {ABLATION_GROUPS}")

    def features_per_token(self) -> int:
        width = 2 * self.window + 1
        n = 0
        for fam in WINDOW_FAMILIES:
            if self.enabled(fam):
                n += width * (len(self.ne_classes) if fam == NE else 1)
        return n + sum(fam in self.families for fam in SENTENCE_FAMILIES)

    def describe(self) -> str:
        fams = ",".join(f for f in ALL_FAMILIES if f in self.families)
        return f"window={self.window};families={fams};ne={','.join(self.ne_classes)}"

    @classmethod
    def parse(cls, text: str) -> "FeatureConfig":
        kv = dict(part.split("=", 1) for part in text.split(";"))
        return cls(int(kv["window"]),
                   frozenset(f for f in kv["families"].split(",") if f),
                   tuple(c for c in kv["ne"].split(",") if c))


def ne_class(tag: str) -> str | None:
    """Normalise an NE column value to a class name, or None."""
    if tag in ("", "NONE", "O", "_"):
        return None
    if tag[:2] in ("B-", "I-"):
        tag = tag[2:]
    tag = tag.replace(" ", "")
    return tag


def _token_columns(s: Sentence, res: Resources, cfg: FeatureConfig) -> dict:
    toks = s.tokens
    cols: dict = {}
    if cfg.enabled(WORD):
        cols[WORD] = [t.lemma for t in toks]
    if cfg.enabled(SEMFIELD):
        cols[SEMFIELD] = [lookup_semantic_field(res.semantic, t.lemma) for t in toks]
    if cfg.enabled(POS):
        cols[POS] = [res.pos_map(t.pos_fine) for t in toks]
    if cfg.enabled(BPC):
        cols[BPC] = [t.bpc for t in toks]
    if cfg.enabled(NE):
        classes = [ne_class(t.ne) for t in toks]
        for c in cfg.ne_classes:
            cols[f"NE_{c}"] = ["1" if k == c else "0" for k in classes]
    if cfg.enabled(MPQA_STRONG):
        cols[MPQA_STRONG] = ["1" if res.subjectivity.is_strong(t.lemma) else "0" for t in toks]
    if cfg.enabled(MPQA_WEAK):
        cols[MPQA_WEAK] = ["1" if res.subjectivity.is_weak(t.lemma) else "0" for t in toks]
    return cols


def featurize_sentence(s: Sentence, res: Resources, cfg: FeatureConfig,
                       pattern_positions: Iterable[int] = ()) -> list[list[str]]:
    n = len(s)
    cols = _token_columns(s, res, cfg)
    offsets = range(-cfg.window, cfg.window + 1)
    in_pattern = set(pattern_positions)
    subj = "1" if s.subjectivity == SUBJECTIVE else "0"
    obj = "1" if s.subjectivity == OBJECTIVE else "0"
    out = []
    for t in range(n):
        feats = []
        for name, values in cols.items():
            for o in offsets:
                i = t + o
                v = BOS if i < 0 else EOS if i >= n else values[i]
                feats.append(f"{name}[{o}]={v}")
        if PATTERN in cfg.families:
            feats.append(f"{PATTERN}={'1' if t in in_pattern else '0'}")
        if SUBJ_CLS in cfg.families:
            feats.append(f"{SUBJ_CLS}={subj}")
        if OBJ_CLS in cfg.families:
            feats.append(f"{OBJ_CLS}={obj}")
        out.append(feats)
    return out


def extract_features(s: Sentence, t: int, res: Resources, cfg: FeatureConfig,
                     pattern_positions: Iterable[int] = ()) -> list[str]:
    if not 0 <= t < len(s):
        raise IndexError(f"position {t} outside sentence of length {len(s)}")
    return featurize_sentence(s, res, cfg, pattern_positions)[t]


def featurize_corpus(docs: Sequence[Document], res: Resources, cfg: FeatureConfig,
                     pattern_positions: Mapping | None = None) -> list[list[list[str]]]:
    """One feature-list sequence per sentence, documents in order.

    ``pattern_positions`` maps ``(doc_id, sentence_index)`` to the token
    positions covered by a pattern match.
    """
    pattern_positions = pattern_positions or {}
    return [featurize_sentence(s, res, cfg, pattern_positions.get((d.id, si), ()))
            for d in docs for si, s in enumerate(d.sentences)]


def dump_features(seqs: Sequence[Sequence[Sequence[str]]]) -> str:
    return "".join("".join("\t".join(tok) + "\n" for tok in seq) + "\n" for seq in seqs)
