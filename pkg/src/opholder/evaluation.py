"""Exact-match scoring, per-type recall, cross-validation and ablation drivers."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .corpus import Document, HolderSpan, gold_spans, split_folds
from .features import ABLATION_GROUPS, FeatureConfig, UnknownGroup

log = logging.getLogger(__name__)

# A system trains on the first argument and returns predicted spans for the
# second; ``fold`` identifies the held-out fold (or -1 outside CV).
System = Callable[..., list[HolderSpan]]


class MissingTypeLabels(ValueError):
    pass


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalReport:
    tp: int
    retrieved: int
    relevant: int

    @property
    def precision(self) -> float:
        return self.tp / self.retrieved if self.retrieved else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.relevant if self.relevant else 0.0

    @property
    def f_measure(self) -> float:
        return f_measure(self.precision, self.recall)

    @property
    def undefined(self) -> tuple[str, ...]:
        """Names of ratios whose denominator was empty (reported as 0)."""
        out = []
        if not self.retrieved:
            out.append("precision")
        if not self.relevant:
            out.append("recall")
        return tuple(out)

    def percentages(self) -> tuple[float, float, float]:
        return 100 * self.precision, 100 * self.recall, 100 * self.f_measure


def exact_match_prf(gold: Iterable[HolderSpan], pred: Iterable[HolderSpan]) -> EvalReport:
    """Spans count as a true positive only with identical sentence and boundaries."""
    g, p = set(gold), set(pred)
    return EvalReport(len(g & p), len(p), len(g))


@dataclass(frozen=True)
class TypeRow:
    holder_type: int
    relevant: int
    detected: int
    share: float           # fraction of gold holders of this type
    detected_ratio: float  # fraction of all true positives that are this type
    accumulative_ratio: float
    recall: float
    accumulative_recall: float


@dataclass(frozen=True)
class TypeBreakdown:
    rows: tuple[TypeRow, ...]
    overall_recall: float


def per_type_recall(gold: Iterable[HolderSpan], pred: Iterable[HolderSpan],
                    types: Sequence[int] = (1, 2, 3)) -> TypeBreakdown:
    """Recall per holder type plus cumulative recall over type prefixes.

    Detected counts are true positives of that type.
    """
    gold = list(dict.fromkeys(gold))
    if any(sp.holder_type is None for sp in gold):
        raise MissingTypeLabels("every gold span needs a holder type")
    pred = set(pred)
    tp_total = sum(sp in pred for sp in gold)
    rows = []
    acc_rel = acc_det = 0
    for t in types:
        rel = [sp for sp in gold if sp.holder_type == t]
        det = sum(sp in pred for sp in rel)
        acc_rel += len(rel)
        acc_det += det
        rows.append(TypeRow(
            t, len(rel), det,
            len(rel) / len(gold) if gold else 0.0,
            det / tp_total if tp_total else 0.0,
            acc_det / tp_total if tp_total else 0.0,
            det / len(rel) if rel else 0.0,
            acc_det / acc_rel if acc_rel else 0.0))
    overall = tp_total / len(gold) if gold else 0.0
    return TypeBreakdown(tuple(rows), overall)


@dataclass
class CVResult:
    folds: list[EvalReport]
    predictions: list[list[HolderSpan]] = field(default_factory=list)
    gold: list[list[HolderSpan]] = field(default_factory=list)

    @property
    def mean_f(self) -> float:
        # unweighted mean over folds
        return sum(r.f_measure for r in self.folds) / len(self.folds)

    @property
    def mean_precision(self) -> float:
        return sum(r.precision for r in self.folds) / len(self.folds)

    @property
    def mean_recall(self) -> float:
        return sum(r.recall for r in self.folds) / len(self.folds)


def _run_fold(system: System, folds, i):
    train = [d for j, f in enumerate(folds) if j != i for d in f]
    test = folds[i]
    pred = system(train, test, fold=i)
    gold = gold_spans(test)
    return gold, sorted(set(pred))


def cross_validate(docs: Sequence[Document], system: System, k: int = 3, seed: int = 0,
                   jobs: int = 1) -> CVResult:
    """Train on k-1 folds and score the held-out one, for every fold."""
    folds = split_folds(docs, k, seed)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(lambda i: _run_fold(system, folds, i), range(k)))
    else:
        outs = [_run_fold(system, folds, i) for i in range(k)]
    result = CVResult([], [], [])
    for i, (gold, pred) in enumerate(outs):
        rep = exact_match_prf(gold, pred)
        log.info("fold %d: P=%.2f R=%.2f F=%.2f", i + 1, *rep.percentages())
        result.folds.append(rep)
        result.gold.append(gold)
        result.predictions.append(pred)
    return result


@dataclass(frozen=True)
class AblationRow:
    disabled: str  # "None" for the all-features baseline
    report: EvalReport


def ablate(docs: Sequence[Document], system_factory: Callable[[FeatureConfig], System],
           base: FeatureConfig, groups: Sequence[str] = ABLATION_GROUPS, fold: int = 2,
           k: int = 3, seed: int = 0) -> list[AblationRow]:
    """Retrain on one fixed fold with each feature group switched off in turn.

    ``fold`` is 0-based; row 0 is the all-features baseline.
    """
    for g in groups:
        if g not in ABLATION_GROUPS:
            raise UnknownGroup(f"unknown feature group {g!r}; expected one of {ABLATION_GROUPS}")
    if not 0 <= fold < k:
        raise ValueError(f"fold must lie in [0, {k})")
    folds = split_folds(docs, k, seed)
    rows = []
    for name, cfg in [("None", base)] + [(g, base.without_group(g)) for g in groups]:
        gold, pred = _run_fold(system_factory(cfg), folds, fold)
        rep = exact_match_prf(gold, pred)
        log.info("ablation %s: F=%.2f", name, 100 * rep.f_measure)
        rows.append(AblationRow(name, rep))
    return rows


# -- report formatting -------------------------------------------------------

def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def format_prf_rows(rows: Sequence[tuple[str, str, EvalReport]], fmt: str = "tsv") -> str:
    """Rows of ``(technique, dataset, report)`` laid out like a results table."""
    header = ("technique", "dataset", "tp", "retrieved", "relevant",
              "precision", "recall", "f_measure")
    body = [(t, d, str(r.tp), str(r.retrieved), str(r.relevant),
             _pct(r.precision), _pct(r.recall), _pct(r.f_measure)) for t, d, r in rows]
    return format_table(header, body, fmt)


def format_ablation(rows: Sequence[AblationRow], fmt: str = "tsv") -> str:
    header = ("disabled_feature", "precision", "recall", "f_measure")
    body = [(r.disabled, _pct(r.report.precision), _pct(r.report.recall),
             _pct(r.report.f_measure)) for r in rows]
    return format_table(header, body, fmt)


def format_type_breakdown(bd: TypeBreakdown, fmt: str = "tsv") -> str:
    header = ("holder_type", "relevant", "detected_tp", "percentage", "detected_tp_ratio",
              "accumulative_ratio", "type_recall", "accumulative_recall")
    body = [(f"Type {r.holder_type}", str(r.relevant), str(r.detected), _pct(r.share),
             _pct(r.detected_ratio), _pct(r.accumulative_ratio), _pct(r.recall),
             _pct(r.accumulative_recall)) for r in bd.rows]
    return format_table(header, body, fmt)


def format_table(header, body, fmt: str) -> str:
    if fmt == "tsv":
        return "".join("\t".join(row) + "\n" for row in [header, *body])
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(len(header))]
    line = "+" + "+".join("-" * (w + 2) for w in widths) + "+\n"

    def fmt_row(row):
        return "|" + "|".join(f" {str(c):<{w}} " for c, w in zip(row, widths)) + "|\n"

    return line + fmt_row(header) + line + "".join(fmt_row(r) for r in body) + line


def format_errors(gold: Iterable[HolderSpan], pred: Iterable[HolderSpan], docs=None) -> str:
    """One line per false positive / false negative span, optionally with its text."""
    g, p = set(gold), set(pred)
    sents = {}
    if docs is not None:
        sents = {(d.id, i): s for d in docs for i, s in enumerate(d.sentences)}
    out = ["kind\tdoc\tsentence\tstart\tend\ttext\n"]
    for kind, spans in (("FP", sorted(p - g)), ("FN", sorted(g - p))):
        for sp in spans:
            s = sents.get((sp.doc_id, sp.sentence_index))
            text = " ".join(t.surface for t in s.tokens[sp.start:sp.end + 1]) if s else ""
            out.append(f"{kind}\t{sp.doc_id}\t{sp.sentence_index}\t{sp.start}\t{sp.end}\t{text}\n")
    return "".join(out)
