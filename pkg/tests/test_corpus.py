from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opholder.corpus import (ANNOTATION, B_HOLDER, I_HOLDER, NON_HOLDER, STANDARD, TYPED,
                             BioViolation, ColumnCountMismatch, CorpusError, Document,
                             DuplicateDocument, EmptyDocument, HolderSpan, InvalidLabel,
                             LayerCountMismatch, MissingDocHeader, Sentence, Token,
                             TooFewDocuments, format_corpus, gold_spans, labels_from_spans,
                             merge_annotations, parse_corpus, read_annotation_layers,
                             read_corpus, sniff_schema, spans_from_labels, split_folds,
                             with_spans)

from conftest import doc, sent, tok

SAMPLE = """\
#doc d1
qala\tqaala\tVERB_PERFECT\tB-VP\tNONE\tNon-Holder
Ahmed\tahmad\tNOUN_PROP\tB-NP\tPerson\tB-Holder
Ali\tali\tNOUN_PROP\tI-NP\tPerson\tI-Holder

wa\twa\tPART\tO\tNONE\tNon-Holder
#doc d2
x\tx\tNOUN\tB-NP\tNONE\tB-Holder
"""


def test_parse_sample_structure():
    docs = parse_corpus(SAMPLE.splitlines(True))
    assert [d.id for d in docs] == ["d1", "d2"]
    assert [len(s) for s in docs[0].sentences] == [3, 1]
    t = docs[0].sentences[0].tokens[1]
    assert (t.surface, t.lemma, t.pos_fine, t.bpc, t.ne, t.gold) == (
        "Ahmed", "ahmad", "NOUN_PROP", "B-NP", "Person", B_HOLDER)
    assert gold_spans(docs) == [HolderSpan("d1", 0, 1, 2), HolderSpan("d2", 0, 0, 0)]


def test_format_round_trip_is_byte_identical(tmp_path):
    docs = parse_corpus(SAMPLE.splitlines(True))
    text = format_corpus(docs)
    assert parse_corpus(text.splitlines(True)) == docs
    p = tmp_path / "c.col"
    p.write_text(text, encoding="utf-8")
    assert format_corpus(read_corpus(p)) == text


def _line_of(exc):
    return exc.value.line


@pytest.mark.parametrize("body, err, line", [
    ("#doc a\nx\tx\tN\tO\tNONE\n", ColumnCountMismatch, 2),
    ("#doc a\nx\tx\tN\tO\tNONE\tNon-Holder\ny\ty\tN\tO\tNONE\tI-Holder\n", BioViolation, 3),
    ("#doc a\nx\tx\tN\tO\tNONE\tI-Holder\n", BioViolation, 2),
    ("#doc a\nx\tx\tN\tO\tNONE\tHolder\n", InvalidLabel, 2),
    ("x\tx\tN\tO\tNONE\tNon-Holder\n", MissingDocHeader, 1),
    ("#doc a\n\n#doc b\nx\tx\tN\tO\tNONE\tNon-Holder\n", EmptyDocument, 1),
    ("#doc a\nx\tx\tN\tO\tNONE\tNon-Holder\n#doc a\ny\ty\tN\tO\tNONE\tNon-Holder\n",
     DuplicateDocument, 3),
])
def test_malformed_input_reports_line(body, err, line):
    with pytest.raises(err) as exc:
        parse_corpus(body.splitlines(True), path="f.col")
    assert _line_of(exc) == line
    assert str(exc.value).startswith(f"f.col:{line}:")


def test_type_on_inside_token_rejected():
    body = "#doc a\nx\tx\tN\tO\tNONE\tB-Holder\t1\ny\ty\tN\tO\tNONE\tI-Holder\t2\n"
    with pytest.raises(InvalidLabel):
        parse_corpus(body.splitlines(True), TYPED)


def test_typed_corpus_keeps_types():
    body = "#doc a\nx\tx\tN\tO\tNONE\tB-Holder\t3\ny\ty\tN\tO\tNONE\tI-Holder\t_\n"
    docs = parse_corpus(body.splitlines(True), TYPED)
    (sp,) = gold_spans(docs)
    assert sp.holder_type == 3 and (sp.start, sp.end) == (0, 1)
    assert format_corpus(docs) == body + "\n"


def test_schema_sniffing():
    assert sniff_schema(["#doc a\n", "a\tb\tc\td\te\tf\n"]) == STANDARD
    assert sniff_schema(["a\tb\tc\td\te\tf\tg\n"]) == TYPED
    assert sniff_schema(["a\tb\tc\td\te\tf\tg\th\n"]) == ANNOTATION


def test_trailing_empty_columns_tolerated():
    docs = parse_corpus(["#doc a\n", "x\tx\tN\tO\tNONE\tNon-Holder\t \n"])
    assert len(docs[0].sentences[0]) == 1


def test_token_and_span_invariants():
    with pytest.raises(CorpusError):
        Token("", "x", "N", "O", "NONE")
    with pytest.raises(InvalidLabel):
        Token("x", "x", "N", "O", "NONE", "I")
    with pytest.raises(ValueError):
        HolderSpan("d", 0, 3, 2)
    with pytest.raises(ValueError):
        HolderSpan("d", 0, 0, 0, holder_type=4)
    with pytest.raises(CorpusError):
        Sentence(())


def test_span_identity_ignores_type():
    assert HolderSpan("d", 0, 1, 2, 1) == HolderSpan("d", 0, 1, 2, 3)
    assert len({HolderSpan("d", 0, 1, 2, 1), HolderSpan("d", 0, 1, 2)}) == 1


def test_orphan_inside_label_opens_a_span():
    s = sent(tok("a"), tok("b"))
    spans = spans_from_labels(s, labels=[I_HOLDER, I_HOLDER])
    assert [(sp.start, sp.end) for sp in spans] == [(0, 1)]


label_seqs = st.lists(st.sampled_from(["B", "I", "O"]), min_size=1, max_size=12).map(
    lambda xs: [{"B": B_HOLDER, "I": I_HOLDER, "O": NON_HOLDER}[x] for x in xs])


def _valid_bio(labels):
    prev = None
    out = []
    for lab in labels:
        if lab == I_HOLDER and prev is None or (lab == I_HOLDER and prev == NON_HOLDER):
            lab = B_HOLDER
        out.append(lab)
        prev = lab
    return out


@given(label_seqs)
def test_labels_spans_round_trip(labels):
    labels = _valid_bio(labels)
    s = Sentence(tuple(tok(f"w{i}", gold=lab) for i, lab in enumerate(labels)))
    spans = spans_from_labels(s)
    assert labels_from_spans(len(labels), spans) == labels
    # spans are disjoint and ordered
    for a, b in zip(spans, spans[1:]):
        assert a.end < b.start


def test_labels_from_spans_rejects_overlap_and_overflow():
    with pytest.raises(ValueError):
        labels_from_spans(4, [HolderSpan("", 0, 0, 2), HolderSpan("", 0, 2, 3)])
    with pytest.raises(ValueError):
        labels_from_spans(2, [HolderSpan("", 0, 1, 2)])


def test_with_spans_rewrites_labels_and_types():
    d = doc("d", sent(tok("a", gold="B"), tok("b"), tok("c")))
    out = with_spans(d, [HolderSpan("d", 0, 1, 2, 2)])
    assert out.sentences[0].labels == [NON_HOLDER, B_HOLDER, I_HOLDER]
    assert out.sentences[0].tokens[1].holder_type == 2
    assert gold_spans([out]) == [HolderSpan("d", 0, 1, 2)]


# -- documents strategy for round trips ---------------------------------------

ident = st.text(alphabet="abcdefghij", min_size=1, max_size=5)


@st.composite
def documents(draw):
    ndocs = draw(st.integers(1, 3))
    docs = []
    for d in range(ndocs):
        sents = []
        for _ in range(draw(st.integers(1, 3))):
            labels = _valid_bio(draw(label_seqs))
            toks = []
            for lab in labels:
                htype = draw(st.sampled_from([None, 1, 2, 3])) if lab == B_HOLDER else None
                toks.append(Token(draw(ident), draw(ident), draw(ident), draw(ident),
                                  draw(st.sampled_from(["NONE", "Person", "Job"])), lab, htype))
            sents.append(Sentence(tuple(toks)))
        docs.append(Document(f"doc{d}", tuple(sents)))
    return docs


@given(documents())
@settings(max_examples=60)
def test_corpus_round_trip_property(docs):
    text = format_corpus(docs, typed=True)
    back = parse_corpus(text.splitlines(True), TYPED)
    assert back == docs
    assert format_corpus(back, typed=True) == text


# -- annotation merging ------------------------------------------------------

def test_majority_vote_and_type_resolution():
    a = HolderSpan("d", 0, 0, 1, 1)
    b = HolderSpan("d", 0, 3, 3, 2)
    c = HolderSpan("d", 1, 0, 0, 1)
    layers = [
        [a, b, c],
        [HolderSpan("d", 0, 0, 1, 1), HolderSpan("d", 0, 3, 3, 3)],
        [HolderSpan("d", 0, 0, 1, 2)],
    ]
    merged = merge_annotations(layers)
    assert merged == [a, b]
    types = {(sp.start, sp.end): sp.holder_type for sp in merged}
    assert types[(0, 1)] == 1       # 2 of 3 said type 1
    assert types[(3, 3)] is None    # 2 vs 3 tie


def test_merge_requires_three_layers():
    with pytest.raises(LayerCountMismatch):
        merge_annotations([[], []])


def test_boundary_disagreement_loses_vote():
    layers = [[HolderSpan("d", 0, 0, 1)], [HolderSpan("d", 0, 0, 2)], [HolderSpan("d", 0, 1, 1)]]
    assert merge_annotations(layers) == []


def test_read_annotation_layers(tmp_path):
    body = ("#doc d\n"
            "a\ta\tN\tO\tPerson\tB-Holder\tB-Holder\tNon-Holder\n"
            "b\tb\tN\tO\tPerson\tI-Holder\tNon-Holder\tNon-Holder\n"
            "c\tc\tN\tO\tNONE\tNon-Holder\tNon-Holder\tB-Holder\n")
    p = tmp_path / "ann.col"
    p.write_text(body, encoding="utf-8")
    docs, layers = read_annotation_layers(p)
    assert [[(s.start, s.end) for s in layer] for layer in layers] == [[(0, 1)], [(0, 0)], [(2, 2)]]
    assert merge_annotations(layers) == []
    assert all(t.gold == NON_HOLDER for t in docs[0].sentences[0].tokens)


# -- folds -------------------------------------------------------------------

@given(st.integers(2, 6), st.integers(0, 30), st.integers(0, 1000))
def test_split_folds_partitions(k, extra, seed):
    docs = [doc(f"d{i}", sent(tok("x"))) for i in range(k + extra)]
    folds = split_folds(docs, k, seed)
    assert len(folds) == k
    ids = sorted(d.id for f in folds for d in f)
    assert ids == sorted(d.id for d in docs)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert split_folds(docs, k, seed) == folds


def test_split_folds_errors():
    docs = [doc("a", sent(tok("x")))]
    with pytest.raises(TooFewDocuments):
        split_folds(docs, 2)
    with pytest.raises(ValueError):
        split_folds(docs * 3, 1)
