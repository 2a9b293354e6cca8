"""Opinion-holder extraction: column corpora, subjectivity rules, extraction
patterns, a linear-chain CRF and an exact-match evaluation harness."""
from .corpus import (B_HOLDER, I_HOLDER, LABELS, NON_HOLDER, Document, HolderSpan, Sentence,
                     Token, read_corpus, write_corpus)
from .crf import CrfModel, TrainConfig, load_model, save_model, train, viterbi
from .evaluation import EvalReport, cross_validate, exact_match_prf, per_type_recall
from .features import FeatureConfig
from .lexicons import Resources, load_resources
from .patterns import Pattern, load_patterns, parse_pattern, validate_patterns
from .pipeline import PipelineConfig, run_approach, run_experiment

__version__ = "0.1.0"

__all__ = [
    "B_HOLDER", "I_HOLDER", "LABELS", "NON_HOLDER", "CrfModel", "Document", "EvalReport",
    "FeatureConfig", "HolderSpan", "Pattern", "PipelineConfig", "Resources", "Sentence",
    "Token", "TrainConfig", "cross_validate", "exact_match_prf", "load_model", "load_patterns",
    "load_resources", "parse_pattern", "per_type_recall", "read_corpus", "run_approach",
    "run_experiment", "save_model", "train", "validate_patterns", "viterbi", "write_corpus",
]
