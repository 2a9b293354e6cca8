"""The three holder-extraction approaches, from column corpus to scores.

* PatternsOnly: subjectivity labelling, pattern matching and the retention
  rules, scored over the whole annotated corpus.
* CrfNoPattern / CrfWithPattern: k-fold cross-validated CRF tagging, with
  the pattern feature family off or on.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import crf
from .corpus import Document, HolderSpan, gold_spans, read_corpus, spans_from_labels
from .evaluation import CVResult, EvalReport, ablate, cross_validate, exact_match_prf
from .features import ALL_FAMILIES, PATTERN, FeatureConfig, featurize_corpus
from .lexicons import Resources, load_resources
from .patterns import (DEFAULT_MIN_FREQUENCY, DEFAULT_MIN_PRECISION, Pattern,
                       extract_holders_by_pattern, load_patterns, match_extents,
                       validate_patterns)
from .subjectivity import label_corpus

log = logging.getLogger(__name__)

PATTERNS_ONLY = "PatternsOnly"
CRF_NO_PATTERN = "CrfNoPattern"
CRF_WITH_PATTERN = "CrfWithPattern"
APPROACHES = (PATTERNS_ONLY, CRF_NO_PATTERN, CRF_WITH_PATTERN)
APPROACH_TITLES = {PATTERNS_ONLY: "Pattern results", CRF_NO_PATTERN: "CRF results",
                   CRF_WITH_PATTERN: "Integration results"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    approach: str = CRF_WITH_PATTERN
    features: FeatureConfig = field(default_factory=FeatureConfig)
    patterns: str | None = None
    subj_lexicon: str | None = None
    semfield_lexicon: str | None = None
    semfield_stop: str | None = None
    pos_map: str | None = None
    unlabeled: str | None = None
    train: crf.TrainConfig = field(default_factory=crf.TrainConfig)
    folds: int = 3
    seed: int = 0
    jobs: int = 1
    validate_patterns: bool = True
    pattern_min_freq: int = DEFAULT_MIN_FREQUENCY
    pattern_min_precision: float = DEFAULT_MIN_PRECISION

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ConfigError(f"unknown approach {self.approach!r}; expected one of {APPROACHES}")
        if self.approach in (PATTERNS_ONLY, CRF_WITH_PATTERN) and not self.patterns:
            raise ConfigError(f"approach {self.approach} needs a pattern file")

    def feature_config(self) -> FeatureConfig:
        """The approach decides the pattern family; everything else comes from ``features``."""
        if self.approach == CRF_WITH_PATTERN:
            return self.features.with_families(PATTERN)
        return self.features.without_families(PATTERN)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def config_from_mapping(d: Mapping[str, object]) -> PipelineConfig:
    """Build a config from string (or already typed) values; unknown keys are errors."""
    d = dict(d)

    def pop(key, conv, default):
        if key not in d or d[key] is None:
            d.pop(key, None)
            return default
        val = d.pop(key)
        if conv is bool and isinstance(val, str):
            if val.lower() not in _BOOL:
                raise ConfigError(f"{key}: expected a boolean, got {val!r}")
            return _BOOL[val.lower()]
        try:
            return conv(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    def families(val):
        if isinstance(val, str):
            val = [v.strip() for v in val.split(",") if v.strip()]
        return frozenset(val)

    feats = FeatureConfig(
        window=pop("window", int, 3),
        families=pop("families", families, frozenset(ALL_FAMILIES)),
    )
    train = crf.TrainConfig(
        sigma2=pop("sigma2", float, 10.0),
        max_iters=pop("max_iters", int, 200),
        tol=pop("tol", float, 1e-6),
        optimizer=pop("optimizer", str, "lbfgs"),
        forbid_invalid=pop("forbid_invalid_transitions", bool, False),
    )
    cfg = PipelineConfig(
        approach=pop("approach", str, CRF_WITH_PATTERN),
        features=feats,
        patterns=pop("patterns", str, None),
        subj_lexicon=pop("subj_lexicon", str, None),
        semfield_lexicon=pop("semfield_lexicon", str, None),
        semfield_stop=pop("semfield_stop", str, None),
        pos_map=pop("pos_map", str, None),
        unlabeled=pop("unlabeled", str, None),
        train=train,
        folds=pop("folds", int, 3),
        seed=pop("seed", int, 0),
        jobs=pop("jobs", int, 1),
        validate_patterns=pop("validate_patterns", bool, True),
        pattern_min_freq=pop("pattern_min_freq", int, DEFAULT_MIN_FREQUENCY),
        pattern_min_precision=pop("pattern_min_precision", float, DEFAULT_MIN_PRECISION),
    )
    if d:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(d))}")
    return cfg


def load_config(path) -> PipelineConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")))


# -- shared pieces -----------------------------------------------------------

@dataclass
class Inputs:
    resources: Resources
    patterns: list[Pattern]
    unlabeled: list[Document] | None = None


def load_inputs(cfg: PipelineConfig) -> Inputs:
    res = load_resources(cfg.subj_lexicon, cfg.semfield_lexicon, cfg.semfield_stop, cfg.pos_map)
    pats = load_patterns(cfg.patterns) if cfg.patterns else []
    unl = read_corpus(cfg.unlabeled) if cfg.unlabeled else None
    return Inputs(res, pats, unl)


def select_patterns(patterns: Sequence[Pattern], annotated: Sequence[Document],
                    unlabeled: Sequence[Document] | None, res: Resources,
                    cfg: PipelineConfig) -> list[Pattern]:
    """Validated patterns, or all of them when validation is off.

    Frequency is counted on ``unlabeled`` when given, else on ``annotated``.
    """
    if not cfg.validate_patterns or not patterns:
        return list(patterns)
    freq_corpus = unlabeled if unlabeled is not None else annotated
    kept, _ = validate_patterns(patterns, freq_corpus, annotated, cfg.pattern_min_freq,
                                cfg.pattern_min_precision, res.pos_map)
    return kept


def tag_documents(model: crf.CrfModel, docs: Sequence[Document], res: Resources,
                  fcfg: FeatureConfig, extents: Mapping | None = None) -> list[HolderSpan]:
    seqs = featurize_corpus(docs, res, fcfg, extents)
    out = []
    i = 0
    for d in docs:
        for si, s in enumerate(d.sentences):
            labels = crf.viterbi(model, seqs[i])
            out.extend(spans_from_labels(s, si, d.id, labels))
            i += 1
    return out


def training_pairs(docs: Sequence[Document], res: Resources, fcfg: FeatureConfig,
                   extents: Mapping | None = None):
    seqs = featurize_corpus(docs, res, fcfg, extents)
    labels = [s.labels for d in docs for s in d.sentences]
    return list(zip(seqs, labels))


class CrfSystem:
    """Train-then-tag system for cross-validation.

    Documents must already carry subjectivity labels.  When the pattern
    family is on, patterns are validated on the training documents only.
    """

    def __init__(self, inputs: Inputs, fcfg: FeatureConfig, cfg: PipelineConfig):
        self.inputs = inputs
        self.fcfg = fcfg
        self.cfg = cfg
        self.models: dict[int, crf.CrfModel] = {}
        self.retained: dict[int, list[Pattern]] = {}

    def __call__(self, train: Sequence[Document], test: Sequence[Document], fold: int = -1):
        res = self.inputs.resources
        tr_ext = te_ext = None
        if PATTERN in self.fcfg.families:
            pats = select_patterns(self.inputs.patterns, train, self.inputs.unlabeled, res, self.cfg)
            self.retained[fold] = pats
            tr_ext = match_extents(train, pats, res.pos_map)
            te_ext = match_extents(test, pats, res.pos_map)
        model = crf.train(training_pairs(train, res, self.fcfg, tr_ext), self.cfg.train,
                          feature_config=self.fcfg.describe())
        self.models[fold] = model
        return tag_documents(model, test, res, self.fcfg, te_ext)


def patterns_only(docs: Sequence[Document], inputs: Inputs, cfg: PipelineConfig):
    """Returns ``(predicted spans, retained patterns)`` over the whole corpus."""
    res = inputs.resources
    pats = select_patterns(inputs.patterns, docs, inputs.unlabeled, res, cfg)
    pred = []
    for d in docs:
        pred.extend(extract_holders_by_pattern(d, pats, res.pos_map))
    return pred, pats


@dataclass
class ApproachResult:
    approach: str
    # PatternsOnly: a single whole-corpus report; CRF approaches: one per fold
    reports: list[EvalReport]
    predictions: list[list[HolderSpan]]
    gold: list[list[HolderSpan]]
    models: dict = field(default_factory=dict)

    @property
    def mean_f(self) -> float:
        return sum(r.f_measure for r in self.reports) / len(self.reports)

    def rows(self):
        title = APPROACH_TITLES[self.approach]
        if self.approach == PATTERNS_ONLY:
            return [(title, "-", self.reports[0])]
        return [(title, f"Fold{i + 1}", r) for i, r in enumerate(self.reports)]


def run_approach(cfg: PipelineConfig, docs: Sequence[Document],
                 inputs: Inputs | None = None) -> ApproachResult:
    inputs = inputs or load_inputs(cfg)
    docs = label_corpus(docs, inputs.resources.subjectivity)
    if cfg.approach == PATTERNS_ONLY:
        pred, _ = patterns_only(docs, inputs, cfg)
        gold = gold_spans(docs)
        return ApproachResult(cfg.approach, [exact_match_prf(gold, pred)], [sorted(set(pred))],
                              [gold])
    system = CrfSystem(inputs, cfg.feature_config(), cfg)
    cv: CVResult = cross_validate(docs, system, cfg.folds, cfg.seed, cfg.jobs)
    return ApproachResult(cfg.approach, cv.folds, cv.predictions, cv.gold,
                          dict(sorted(system.models.items())))


def run_experiment(cfg: PipelineConfig, corpus, approaches: Sequence[str] | None = None,
                   inputs: Inputs | None = None) -> list[ApproachResult]:
    """Run ``approaches`` (default: just ``cfg.approach``) on one annotated corpus.

    ``corpus`` is a path or an already loaded document list.
    """
    docs = read_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    approaches = list(approaches or [cfg.approach])
    results = []
    for ap in approaches:
        sub = replace(cfg, approach=ap)
        if inputs is None:
            inputs = load_inputs(sub)
        log.info("running %s", ap)
        results.append(run_approach(sub, docs, inputs))
    return results


def run_ablation(cfg: PipelineConfig, docs: Sequence[Document], groups: Sequence[str],
                 fold: int = 2, inputs: Inputs | None = None):
    inputs = inputs or load_inputs(cfg)
    docs = label_corpus(docs, inputs.resources.subjectivity)
    return ablate(docs, lambda fc: CrfSystem(inputs, fc, cfg), cfg.feature_config(), groups,
                  fold, cfg.folds, cfg.seed)
