"""Document/sentence/token model and the tab-separated column corpus format.

A corpus file looks like::

    #doc d1
    surface<TAB>lemma<TAB>pos<TAB>bpc<TAB>ne<TAB>gold
    ...
    <blank line between sentences>
    #doc d2
    ...

The annotation variant replaces the single ``gold`` column with three
annotator layers (``gold1 gold2 gold3``).  Either layout may carry holder
types in extra ``type`` / ``type1..3`` columns: ``1``, ``2`` or ``3`` on the
B-Holder token of a span, ``_`` elsewhere.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

B_HOLDER = "B-Holder"
I_HOLDER = "I-Holder"
NON_HOLDER = "Non-Holder"
LABELS = (B_HOLDER, I_HOLDER, NON_HOLDER)
HOLDER_TYPES = (1, 2, 3)

NO_VALUE = "_"
DOC_HEADER = "#doc"


class CorpusError(ValueError):
    """Raised for malformed corpus input.  ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)


class ColumnCountMismatch(CorpusError):
    pass


class InvalidLabel(CorpusError):
    pass


class BioViolation(CorpusError):
    pass


class EmptyDocument(CorpusError):
    pass


class DuplicateDocument(CorpusError):
    pass


class MissingDocHeader(CorpusError):
    pass


class LayerCountMismatch(CorpusError):
    pass


class TooFewDocuments(CorpusError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos_fine: str
    bpc: str
    ne: str
    gold: str = NON_HOLDER
    # holder type of the span this token starts; only set on B-Holder tokens
    holder_type: int | None = None

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("empty surface form")
        if self.gold not in LABELS:
            raise InvalidLabel(f"invalid holder label {self.gold!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    # Subjective / Objective / Unlabeled once labelled, None before
    subjectivity: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("empty sentence")

    def __len__(self):
        return len(self.tokens)

    @property
    def lemmas(self) -> list[str]:
        return [t.lemma for t in self.tokens]

    @property
    def labels(self) -> list[str]:
        return [t.gold for t in self.tokens]


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]


@dataclass(frozen=True, order=True)
class HolderSpan:
    """Inclusive token range ``start..end`` of one holder.

    Span identity (equality, hashing, ordering) is ``(doc_id,
    sentence_index, start, end)``; the holder type does not take part.
    """

    doc_id: str
    sentence_index: int
    start: int
    end: int
    holder_type: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad span bounds {self.start}..{self.end}")
        if self.holder_type is not None and self.holder_type not in HOLDER_TYPES:
            raise ValueError(f"bad holder type {self.holder_type!r}")

    def __len__(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class ColumnSchema:
    columns: tuple[str, ...]

    def __len__(self):
        return len(self.columns)

    def has(self, name: str) -> bool:
        return name in self.columns

    def index(self, name: str) -> int:
        return self.columns.index(name)


BASE_COLUMNS = ("surface", "lemma", "pos", "bpc", "ne")
STANDARD = ColumnSchema(BASE_COLUMNS + ("gold",))
TYPED = ColumnSchema(BASE_COLUMNS + ("gold", "type"))
ANNOTATION = ColumnSchema(BASE_COLUMNS + ("gold1", "gold2", "gold3"))
ANNOTATION_TYPED = ColumnSchema(
    BASE_COLUMNS + ("gold1", "gold2", "gold3", "type1", "type2", "type3"))


def _parse_type(value: str, lineno: int, path: str | None) -> int | None:
    if value in (NO_VALUE, ""):
        return None
    try:
        t = int(value)
    except ValueError:
        t = None
    if t not in HOLDER_TYPES:
        raise InvalidLabel(f"invalid holder type {value!r}", lineno, path)
    return t


def _check_bio(labels: Sequence[str], linenos: Sequence[int], path: str | None):
    prev = None
    for label, lineno in zip(labels, linenos):
        if label not in LABELS:
            raise InvalidLabel(f"invalid holder label {label!r}", lineno, path)
        if label == I_HOLDER and prev not in (B_HOLDER, I_HOLDER):
            where = "sentence start" if prev is None else prev
            raise BioViolation(f"I-Holder follows {where}", lineno, path)
        prev = label


def _iter_blocks(lines: Iterable[str], ncols: int, path: str | None):
    """Yield ``(doc_id, header_line, [sentence rows])`` per document.

    Each sentence row list holds ``(lineno, fields)`` pairs.
    """
    doc_id = None
    header_line = 0
    sentences: list[list[tuple[int, list[str]]]] = []
    current: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if "\t" not in line and line.startswith(DOC_HEADER) and (
                len(line) == len(DOC_HEADER) or line[len(DOC_HEADER)].isspace()):
            if current:
                sentences.append(current)
                current = []
            if doc_id is not None:
                yield doc_id, header_line, sentences
            doc_id = line[len(DOC_HEADER):].strip()
            if not doc_id:
                raise CorpusError("document header without id", lineno, path)
            header_line = lineno
            sentences = []
            continue
        if not line.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        if doc_id is None:
            raise MissingDocHeader("token line before any '#doc' header", lineno, path)
        fields = line.split("\t")
        # tolerate trailing whitespace after the last column
        if len(fields) > ncols and all(not f.strip() for f in fields[ncols:]):
            fields = fields[:ncols]
        if len(fields) != ncols:
            raise ColumnCountMismatch(
                f"expected {ncols} columns, found {len(fields)}", lineno, path)
        current.append((lineno, fields))
    if current:
        sentences.append(current)
    if doc_id is not None:
        yield doc_id, header_line, sentences


def _build_tokens(rows, schema: ColumnSchema, gold_col: str | None, type_col: str | None,
                  path: str | None) -> tuple[Token, ...]:
    labels = [r[1][schema.index(gold_col)] for r in rows] if gold_col else [NON_HOLDER] * len(rows)
    _check_bio(labels, [r[0] for r in rows], path)
    toks = []
    for (lineno, f), label in zip(rows, labels):
        htype = None
        if type_col is not None:
            htype = _parse_type(f[schema.index(type_col)], lineno, path)
            if htype is not None and label != B_HOLDER:
                raise InvalidLabel("holder type on a non B-Holder token", lineno, path)
        if not f[0]:
            raise CorpusError("empty surface form", lineno, path)
        toks.append(Token(f[0], f[1], f[2], f[3], f[4], label, htype))
    return tuple(toks)


def parse_corpus(lines: Iterable[str], schema: ColumnSchema = STANDARD,
                 path: str | None = None) -> list[Document]:
    if not schema.has("gold") and schema.has("gold1"):
        raise ValueError("annotation schemas are read with read_annotation_layers")
    type_col = "type" if schema.has("type") else None
    docs = []
    seen = set()
    for doc_id, header_line, blocks in _iter_blocks(lines, len(schema), path):
        if doc_id in seen:
            raise DuplicateDocument(f"duplicate document id {doc_id!r}", header_line, path)
        seen.add(doc_id)
        if not blocks:
            raise EmptyDocument(f"document {doc_id!r} has no sentences", header_line, path)
        sents = tuple(Sentence(_build_tokens(rows, schema, "gold", type_col, path))
                      for rows in blocks)
        docs.append(Document(doc_id, sents))
    return docs


def read_corpus(path, schema: ColumnSchema | None = None) -> list[Document]:
    """Read a column corpus.  The schema is sniffed from the first token line
    (6 columns = standard, 7 = typed) when not given."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if schema is None:
        schema = sniff_schema(lines)
    return parse_corpus(lines, schema, str(path))


def sniff_schema(lines: Sequence[str]) -> ColumnSchema:
    for line in lines:
        if "\t" in line:
            n = len(line.rstrip("\r\n").split("\t"))
            return {len(STANDARD): STANDARD, len(TYPED): TYPED,
                    len(ANNOTATION): ANNOTATION,
                    len(ANNOTATION_TYPED): ANNOTATION_TYPED}.get(n, STANDARD)
    return STANDARD


def has_holder_types(docs: Sequence[Document]) -> bool:
    return any(t.holder_type is not None
               for d in docs for s in d.sentences for t in s.tokens)


def format_corpus(docs: Sequence[Document], typed: bool | None = None) -> str:
    if typed is None:
        typed = has_holder_types(docs)
    out = []
    for doc in docs:
        out.append(f"{DOC_HEADER} {doc.id}\n")
        for sent in doc.sentences:
            for t in sent.tokens:
                cols = [t.surface, t.lemma, t.pos_fine, t.bpc, t.ne, t.gold]
                if typed:
                    cols.append(str(t.holder_type) if t.holder_type is not None else NO_VALUE)
                out.append("\t".join(cols) + "\n")
            out.append("\n")
    return "".join(out)


def write_corpus(docs: Sequence[Document], path, typed: bool | None = None):
    Path(path).write_text(format_corpus(docs, typed), encoding="utf-8")


# -- spans -----------------------------------------------------------------

def spans_from_labels(sentence: Sentence, sentence_index: int = 0,
                      doc_id: str = "", labels: Sequence[str] | None = None) -> list[HolderSpan]:
    """Turn each maximal ``B-Holder (I-Holder)*`` run into one span.

    ``labels`` overrides the sentence's gold labels (used for predictions).
    """
    if labels is None:
        labels = sentence.labels
        types = [t.holder_type for t in sentence.tokens]
    else:
        types = [None] * len(labels)
    spans = []
    start = None
    for i, label in enumerate(labels):
        if label == B_HOLDER or (label == I_HOLDER and start is None):
            if start is not None:
                spans.append(HolderSpan(doc_id, sentence_index, start, i - 1, types[start]))
            start = i
        elif label == NON_HOLDER and start is not None:
            spans.append(HolderSpan(doc_id, sentence_index, start, i - 1, types[start]))
            start = None
    if start is not None:
        spans.append(HolderSpan(doc_id, sentence_index, start, len(labels) - 1, types[start]))
    return spans


def labels_from_spans(length: int, spans: Iterable[HolderSpan]) -> list[str]:
    labels = [NON_HOLDER] * length
    for sp in sorted(spans, key=lambda s: s.start):
        if sp.end >= length:
            raise ValueError(f"span {sp.start}..{sp.end} outside sentence of length {length}")
        if any(labels[i] != NON_HOLDER for i in range(sp.start, sp.end + 1)):
            raise ValueError(f"overlapping span {sp.start}..{sp.end}")
        labels[sp.start] = B_HOLDER
        for i in range(sp.start + 1, sp.end + 1):
            labels[i] = I_HOLDER
    return labels


def gold_spans(docs: Iterable[Document]) -> list[HolderSpan]:
    out = []
    for doc in docs:
        for si, sent in enumerate(doc.sentences):
            out.extend(spans_from_labels(sent, si, doc.id))
    return out


def with_spans(doc: Document, spans: Iterable[HolderSpan]) -> Document:
    """Return ``doc`` with its gold labels (and types) rewritten from ``spans``."""
    by_sent: dict[int, list[HolderSpan]] = {}
    for sp in spans:
        by_sent.setdefault(sp.sentence_index, []).append(sp)
    sents = []
    for si, sent in enumerate(doc.sentences):
        sps = by_sent.get(si, [])
        labels = labels_from_spans(len(sent), sps)
        types = {sp.start: sp.holder_type for sp in sps}
        toks = tuple(replace(t, gold=lab, holder_type=types.get(i) if lab == B_HOLDER else None)
                     for i, (t, lab) in enumerate(zip(sent.tokens, labels)))
        sents.append(replace(sent, tokens=toks))
    return replace(doc, sentences=tuple(sents))


# -- multi-annotator input ---------------------------------------------------

def read_annotation_layers(path, schema: ColumnSchema | None = None):
    """Read the three-annotator variant.

    Returns ``(docs, layers)``: documents whose gold labels are all
    Non-Holder, and a list of three span lists, one per annotator.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if schema is None:
        schema = sniff_schema(lines)
    if not schema.has("gold1"):
        raise ColumnCountMismatch(f"annotation file needs {len(ANNOTATION)} or "
                                  f"{len(ANNOTATION_TYPED)} columns", None, str(path))
    typed = schema.has("type1")
    docs = []
    layers: list[list[HolderSpan]] = [[], [], []]
    seen = set()
    for doc_id, header_line, blocks in _iter_blocks(lines, len(schema), str(path)):
        if doc_id in seen:
            raise DuplicateDocument(f"duplicate document id {doc_id!r}", header_line, str(path))
        seen.add(doc_id)
        if not blocks:
            raise EmptyDocument(f"document {doc_id!r} has no sentences", header_line, str(path))
        sents = []
        for si, rows in enumerate(blocks):
            sent = Sentence(_build_tokens(rows, schema, None, None, str(path)))
            sents.append(sent)
            for k in range(3):
                layer_sent = Sentence(_build_tokens(
                    rows, schema, f"gold{k + 1}", f"type{k + 1}" if typed else None, str(path)))
                layers[k].extend(spans_from_labels(layer_sent, si, doc_id))
        docs.append(Document(doc_id, tuple(sents)))
    return docs, layers


def merge_annotations(layers: Sequence[Sequence[HolderSpan]]) -> list[HolderSpan]:
    """Majority vote over exactly three annotator layers.

    A span is kept when at least two layers contain it with identical
    boundaries.  Its type is the majority type among the agreeing layers,
    or absent on a tie.
    """
    if len(layers) != 3:
        raise LayerCountMismatch(f"expected 3 annotation layers, got {len(layers)}")
    votes: dict[HolderSpan, list[int | None]] = {}
    for layer in layers:
        # a layer votes once per span; keep that layer's own type
        types_here: dict[HolderSpan, int | None] = {}
        for sp in layer:
            types_here.setdefault(sp, sp.holder_type)
        for sp, ht in types_here.items():
            votes.setdefault(sp, []).append(ht)
    merged = []
    for sp, types in votes.items():
        if len(types) < 2:
            continue
        counts = Counter(t for t in types if t is not None)
        htype = None
        if counts:
            ranked = counts.most_common()
            if len(ranked) == 1 or ranked[0][1] > ranked[1][1]:
                htype = ranked[0][0]
        merged.append(replace(sp, holder_type=htype))
    return sorted(merged)


# -- cross-validation folds --------------------------------------------------

def split_folds(docs: Sequence[Document], k: int, seed: int = 0) -> list[list[Document]]:
    """Shuffle document ids with a seeded PRNG and deal them round-robin."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(docs) < k:
        raise TooFewDocuments(f"{len(docs)} documents cannot fill {k} folds")
    order = list(range(len(docs)))
    random.Random(seed).shuffle(order)
    return [[docs[i] for i in order[f::k]] for f in range(k)]
