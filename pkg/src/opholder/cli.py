"""``opholder`` command-line front end.

Exit status: 0 on success, 1 on usage errors, 2 on data or validation
errors.  Logs go to standard error; results go to standard output or the
``--out`` file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import crf, plotting
from .corpus import (Document, format_corpus, gold_spans, has_holder_types,
                     merge_annotations, read_annotation_layers, read_corpus, with_spans)
from .evaluation import (MissingTypeLabels, exact_match_prf, format_ablation, format_errors,
                         format_prf_rows, format_table, format_type_breakdown,
                         per_type_recall)
from .features import ABLATION_GROUPS, PATTERN, FeatureConfig, dump_features, featurize_corpus
from .patterns import (dump_patterns, format_stats, keep_match, match_document, match_extents,
                       validate_patterns)
from .pipeline import (APPROACH_TITLES, APPROACHES, CRF_NO_PATTERN, CRF_WITH_PATTERN,
                       PATTERNS_ONLY, ApproachResult, Inputs, PipelineConfig,
                       config_from_mapping, load_inputs, parse_config_text, run_ablation,
                       run_approach, select_patterns, tag_documents, training_pairs)
from .subjectivity import count_clues, label_corpus

log = logging.getLogger("opholder")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# flags that map one-to-one onto PipelineConfig keys
_CONFIG_FLAGS = ("approach", "patterns", "subj_lexicon", "semfield_lexicon", "semfield_stop",
                 "pos_map", "unlabeled", "window", "families", "sigma2", "max_iters", "tol",
                 "optimizer", "forbid_invalid_transitions", "folds", "seed", "jobs",
                 "validate_patterns", "pattern_min_freq", "pattern_min_precision")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- argument groups ---------------------------------------------------------

def _add_output(p, fmt=True):
    p.add_argument("--out", help="write the primary output here instead of stdout")
    if fmt:
        p.add_argument("--format", choices=("tsv", "table"), default="tsv")


def _add_resources(p, patterns=True):
    g = p.add_argument_group("resources")
    g.add_argument("--subj-lexicon", dest="subj_lexicon", help="subjectivity clue TSV")
    g.add_argument("--semfield-lexicon", dest="semfield_lexicon", help="semantic field TSV")
    g.add_argument("--semfield-stop", dest="semfield_stop",
                   help="lemmas forced to the NULL field, one per line")
    g.add_argument("--pos-map", dest="pos_map", help="POS reduction rule file")
    if patterns:
        g.add_argument("--patterns", help="pattern file")
        g.add_argument("--unlabeled", help="corpus for pattern frequency counts")


def _add_validation(p):
    g = p.add_argument_group("pattern validation")
    g.add_argument("--pattern-min-freq", dest="pattern_min_freq", type=int,
                   help="minimum match count (default 5, inclusive)")
    g.add_argument("--pattern-min-precision", dest="pattern_min_precision", type=float,
                   help="minimum precision (default 0.8, inclusive)")
    g.add_argument("--no-validate-patterns", dest="validate_patterns", action="store_const",
                   const=False, help="use every pattern in the file")


def _add_features(p):
    g = p.add_argument_group("features")
    g.add_argument("--window", type=int, help="context radius (default 3)")
    g.add_argument("--families", help="comma-separated feature families to enable")
    g.add_argument("--disable-group", dest="disable_group", action="append", default=[],
                   choices=ABLATION_GROUPS, help="switch off an ablation group (repeatable)")


def _add_training(p):
    g = p.add_argument_group("training")
    g.add_argument("--sigma2", type=float, help="Gaussian prior variance (default 10)")
    g.add_argument("--max-iters", dest="max_iters", type=int, help="default 200")
    g.add_argument("--tol", type=float, help="convergence tolerance (default 1e-6)")
    g.add_argument("--optimizer", choices=("lbfgs", "gd"))
    g.add_argument("--forbid-invalid-transitions", dest="forbid_invalid_transitions",
                   action="store_const", const=True,
                   help="disallow Non-Holder->I-Holder and START->I-Holder")


def _add_cv(p, approach=True):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="key = value experiment config; flags override it")
    if approach:
        g.add_argument("--approach", choices=APPROACHES)
    g.add_argument("--folds", type=int, help="number of CV folds (default 3)")
    g.add_argument("--seed", type=int, help="fold shuffling seed (default 0)")
    g.add_argument("--jobs", type=int, help="folds trained in parallel (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opholder", description="Opinion-holder extraction toolkit.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("validate-corpus", help="check a column corpus and print a summary")
    p.add_argument("corpus")
    _add_output(p, fmt=False)

    p = sub.add_parser("merge-annotations", help="majority-vote three annotator layers")
    p.add_argument("annotations")
    _add_output(p, fmt=False)

    p = sub.add_parser("label-subjectivity", help="run the high-precision sentence classifiers")
    p.add_argument("corpus")
    p.add_argument("--subj-lexicon", dest="subj_lexicon", required=True)
    _add_output(p, fmt=False)

    p = sub.add_parser("mine-patterns", help="validate candidate patterns, report their stats")
    p.add_argument("corpus", help="annotated corpus used for precision")
    p.add_argument("--patterns", required=True)
    p.add_argument("--unlabeled", help="corpus for frequency counts (default: the annotated one)")
    p.add_argument("--pos-map", dest="pos_map")
    p.add_argument("--retained-out", dest="retained_out", help="write retained patterns here")
    _add_validation(p)
    _add_output(p, fmt=False)

    p = sub.add_parser("match-patterns", help="list pattern matches and the retention decision")
    p.add_argument("corpus")
    _add_resources(p)
    _add_output(p, fmt=False)

    p = sub.add_parser("featurize", help="dump per-token feature strings")
    p.add_argument("corpus")
    _add_resources(p)
    _add_features(p)
    p.add_argument("--pattern-feature", dest="pattern_feature", action="store_true",
                   help="include the pattern family (needs --patterns)")
    _add_validation(p)
    p.add_argument("--config", help="key = value experiment config; flags override it")
    _add_output(p, fmt=False)

    p = sub.add_parser("train", help="train a CRF on an annotated corpus")
    p.add_argument("corpus")
    p.add_argument("--model-out", dest="model_out", required=True)
    _add_resources(p)
    _add_features(p)
    _add_validation(p)
    _add_training(p)
    p.add_argument("--config", help="key = value experiment config; flags override it")
    p.add_argument("--approach", choices=(CRF_NO_PATTERN, CRF_WITH_PATTERN))

    p = sub.add_parser("tag", help="tag a corpus with a trained model")
    p.add_argument("corpus")
    p.add_argument("--model", required=True)
    _add_resources(p)
    _add_output(p, fmt=False)

    p = sub.add_parser("evaluate", help="exact-match scores of predicted against gold spans")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--by-type", dest="by_type", action="store_true",
                   help="add the per-type recall breakdown (gold needs type columns)")
    p.add_argument("--errors", help="write the FP/FN listing to this file")
    p.add_argument("--figures", help="directory for PNG figures")
    _add_output(p)

    p = sub.add_parser("cross-validate", help="k-fold CV of one approach")
    p.add_argument("corpus")
    _add_resources(p)
    _add_features(p)
    _add_validation(p)
    _add_training(p)
    _add_cv(p)
    p.add_argument("--figures", help="directory for PNG figures")
    _add_output(p)

    p = sub.add_parser("ablate", help="retrain one fold with each feature group disabled")
    p.add_argument("corpus")
    p.add_argument("--groups", default=",".join(ABLATION_GROUPS),
                   help="comma-separated groups (default: all)")
    p.add_argument("--fold", type=int, default=3, help="1-based held-out fold (default 3)")
    _add_resources(p)
    _add_features(p)
    _add_validation(p)
    _add_training(p)
    _add_cv(p)
    p.add_argument("--figures", help="directory for PNG figures")
    _add_output(p)

    p = sub.add_parser("experiment", help="run approaches and write reports, models, figures")
    p.add_argument("corpus")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--approaches", default=",".join(APPROACHES),
                   help="comma-separated approaches (default: all three)")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    _add_resources(p)
    _add_features(p)
    _add_validation(p)
    _add_training(p)
    _add_cv(p, approach=False)
    return parser


# -- helpers -----------------------------------------------------------------

def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pipeline_config(args, **force) -> PipelineConfig:
    """Config file values, overridden by explicitly given flags, then ``force``."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    for key in _CONFIG_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    values.update(force)
    # without an explicit approach, the presence of a pattern file decides
    values.setdefault("approach", CRF_WITH_PATTERN if values.get("patterns") else CRF_NO_PATTERN)
    cfg = config_from_mapping(values)
    for group in getattr(args, "disable_group", []):
        cfg = replace(cfg, features=cfg.features.without_group(group))
    return cfg


# -- commands ----------------------------------------------------------------

def cmd_validate_corpus(args):
    docs = read_corpus(args.corpus)
    n_sent = sum(len(d.sentences) for d in docs)
    n_tok = sum(len(s) for d in docs for s in d.sentences)
    holders = gold_spans(docs)
    lines = [f"documents\t{len(docs)}", f"sentences\t{n_sent}", f"tokens\t{n_tok}",
             f"holders\t{len(holders)}", f"typed\t{int(has_holder_types(docs))}"]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_merge_annotations(args):
    docs, layers = read_annotation_layers(args.annotations)
    merged = merge_annotations(layers)
    by_doc: dict[str, list] = {}
    for sp in merged:
        by_doc.setdefault(sp.doc_id, []).append(sp)
    out = [with_spans(d, by_doc.get(d.id, [])) for d in docs]
    typed = any(sp.holder_type is not None for layer in layers for sp in layer)
    log.info("merged %d spans from layers of %s", len(merged),
             "/".join(str(len(x)) for x in layers))
    _emit(format_corpus(out, typed=typed), args.out)


def cmd_label_subjectivity(args):
    res = load_inputs(PipelineConfig(approach=CRF_NO_PATTERN,
                                     subj_lexicon=args.subj_lexicon)).resources
    docs = label_corpus(read_corpus(args.corpus), res.subjectivity)
    lines = ["doc\tsentence\tstrong\tweak\tlabel\n"]
    for d in docs:
        for si, s in enumerate(d.sentences):
            c = count_clues(s, res.subjectivity)
            lines.append(f"{d.id}\t{si}\t{c.strong}\t{c.weak}\t{s.subjectivity}\n")
    _emit("".join(lines), args.out)


def cmd_mine_patterns(args):
    cfg = _pipeline_config(args, approach=PATTERNS_ONLY)
    inputs = load_inputs(cfg)
    annotated = read_corpus(args.corpus)
    freq = inputs.unlabeled if inputs.unlabeled is not None else annotated
    fmin = cfg.pattern_min_freq
    pmin = cfg.pattern_min_precision
    retained, stats = validate_patterns(inputs.patterns, freq, annotated, fmin, pmin,
                                        inputs.resources.pos_map)
    log.info("retained %d of %d patterns", len(retained), len(inputs.patterns))
    if args.retained_out:
        Path(args.retained_out).write_text(dump_patterns(retained), encoding="utf-8")
    _emit(format_stats(stats), args.out)


def cmd_match_patterns(args):
    cfg = _pipeline_config(args, approach=PATTERNS_ONLY)
    inputs = load_inputs(cfg)
    docs = label_corpus(read_corpus(args.corpus), inputs.resources.subjectivity)
    lines = ["doc\tsentence\tpattern\tholder_start\tholder_end\tsubjectivity\tkept\ttext\n"]
    for d in docs:
        for m in match_document(inputs.patterns, d, inputs.resources.pos_map):
            s = d.sentences[m.sentence_index]
            text = " ".join(t.surface for t in s.tokens[m.holder.start:m.holder.end + 1])
            lines.append(f"{d.id}\t{m.sentence_index}\t{m.pattern_id}\t{m.holder.start}\t"
                         f"{m.holder.end}\t{s.subjectivity}\t{int(keep_match(m, s))}\t{text}\n")
    _emit("".join(lines), args.out)


def _pattern_extents(cfg: PipelineConfig, inputs: Inputs, train_docs, docs):
    pats = select_patterns(inputs.patterns, train_docs, inputs.unlabeled, inputs.resources, cfg)
    return pats, match_extents(docs, pats, inputs.resources.pos_map)


def cmd_featurize(args):
    approach = CRF_WITH_PATTERN if args.pattern_feature else CRF_NO_PATTERN
    cfg = _pipeline_config(args, approach=approach)
    inputs = load_inputs(cfg)
    docs = label_corpus(read_corpus(args.corpus), inputs.resources.subjectivity)
    fcfg = cfg.feature_config()
    extents = None
    if PATTERN in fcfg.families:
        _, extents = _pattern_extents(cfg, inputs, docs, docs)
    _emit(dump_features(featurize_corpus(docs, inputs.resources, fcfg, extents)), args.out)


def cmd_train(args):
    cfg = _pipeline_config(args)
    inputs = load_inputs(cfg)
    docs = label_corpus(read_corpus(args.corpus), inputs.resources.subjectivity)
    fcfg = cfg.feature_config()
    extents = None
    meta = {"feature_config": fcfg.describe()}
    if PATTERN in fcfg.families:
        pats, extents = _pattern_extents(cfg, inputs, docs, docs)
        meta["patterns"] = ",".join(p.id for p in pats) or "-"
    model = crf.train(training_pairs(docs, inputs.resources, fcfg, extents), cfg.train, **meta)
    crf.save_model(model, args.model_out)
    log.info("wrote %s", args.model_out)


def cmd_tag(args):
    model = crf.load_model(args.model)
    if "feature_config" not in model.meta:
        raise ValueError(f"{args.model}: model has no feature_config metadata")
    fcfg = FeatureConfig.parse(str(model.meta["feature_config"]))
    needs_patterns = PATTERN in fcfg.families
    if needs_patterns and not args.patterns:
        raise UsageError("this model uses the pattern feature; pass --patterns")
    cfg = _pipeline_config(args, approach=CRF_WITH_PATTERN if needs_patterns else CRF_NO_PATTERN)
    inputs = load_inputs(cfg)
    docs = label_corpus(read_corpus(args.corpus), inputs.resources.subjectivity)
    extents = None
    if needs_patterns:
        keep = set(str(model.meta.get("patterns", "")).split(","))
        pats = [p for p in inputs.patterns if p.id in keep]
        extents = match_extents(docs, pats, inputs.resources.pos_map)
    pred = tag_documents(model, docs, inputs.resources, fcfg, extents)
    by_doc: dict[str, list] = {}
    for sp in pred:
        by_doc.setdefault(sp.doc_id, []).append(sp)
    out = [with_spans(d, by_doc.get(d.id, [])) for d in docs]
    _emit(format_corpus(out, typed=False), args.out)


def cmd_evaluate(args):
    gold_docs = read_corpus(args.gold)
    pred_docs = read_corpus(args.pred)
    gold, pred = gold_spans(gold_docs), gold_spans(pred_docs)
    rep = exact_match_prf(gold, pred)
    rows = [("Evaluation", Path(args.pred).name, rep)]
    text = format_prf_rows(rows, args.format)
    bd = None
    if args.by_type:
        if not has_holder_types(gold_docs):
            raise MissingTypeLabels(f"{args.gold}: no holder type columns")
        bd = per_type_recall(gold, pred)
        text += "\n" + format_type_breakdown(bd, args.format)
    if rep.undefined:
        log.warning("undefined ratio(s) reported as 0: %s", ", ".join(rep.undefined))
    _emit(text, args.out)
    if args.errors:
        Path(args.errors).write_text(format_errors(gold, pred, gold_docs), encoding="utf-8")
    if args.figures:
        plotting.plot_prf(rows, Path(args.figures) / "prf.png")
        if bd is not None:
            plotting.plot_type_recall({"Evaluation": bd}, Path(args.figures) / "type_recall.png")


def _result_text(results: list[ApproachResult], fmt: str, docs) -> str:
    rows = [row for r in results for row in r.rows()]
    text = format_prf_rows(rows, fmt)
    mean_rows = [(APPROACH_TITLES[r.approach], "Average", f"{100 * r.mean_f:.2f}")
                 for r in results]
    text += "\n" + format_table(("technique", "dataset", "f_measure"), mean_rows, fmt)
    if has_holder_types(docs):
        for r in results:
            bd = per_type_recall([g for fold in r.gold for g in fold],
                                 [p for fold in r.predictions for p in fold])
            text += f"\n{APPROACH_TITLES[r.approach]}\n" + format_type_breakdown(bd, fmt)
    return text


def _type_breakdowns(results, docs):
    if not has_holder_types(docs):
        return {}
    return {APPROACH_TITLES[r.approach]: per_type_recall(
        [g for fold in r.gold for g in fold], [p for fold in r.predictions for p in fold])
        for r in results}


def cmd_cross_validate(args):
    cfg = _pipeline_config(args)
    if cfg.approach == PATTERNS_ONLY:
        raise UsageError("cross-validate runs a CRF approach; use experiment for PatternsOnly")
    docs = read_corpus(args.corpus)
    result = run_approach(cfg, docs, load_inputs(cfg))
    _emit(_result_text([result], args.format, docs), args.out)
    if args.figures:
        plotting.plot_prf(result.rows(), Path(args.figures) / "prf.png",
                          APPROACH_TITLES[cfg.approach])
        bds = _type_breakdowns([result], docs)
        if bds:
            plotting.plot_type_recall(bds, Path(args.figures) / "type_recall.png")


def cmd_ablate(args):
    cfg = _pipeline_config(args)
    if cfg.approach == PATTERNS_ONLY:
        raise UsageError("ablation needs a CRF approach")
    groups = [g.strip() for g in args.groups.split(",") if g.strip()]
    if not 1 <= args.fold <= cfg.folds:
        raise UsageError(f"--fold must lie in 1..{cfg.folds}")
    docs = read_corpus(args.corpus)
    rows = run_ablation(cfg, docs, groups, args.fold - 1, load_inputs(cfg))
    _emit(format_ablation(rows, args.format), args.out)
    if args.figures:
        plotting.plot_ablation(rows, Path(args.figures) / "ablation.png")


def cmd_experiment(args):
    approaches = [a.strip() for a in args.approaches.split(",") if a.strip()]
    unknown = [a for a in approaches if a not in APPROACHES]
    if unknown or not approaches:
        raise UsageError(f"--approaches must name some of {', '.join(APPROACHES)}")
    cfg = _pipeline_config(args, approach=approaches[0])
    for ap in approaches:
        replace(cfg, approach=ap)  # fail before training if an approach lacks its inputs
    docs = read_corpus(args.corpus)
    inputs = load_inputs(cfg)
    results = [run_approach(replace(cfg, approach=ap), docs, inputs) for ap in approaches]
    write_experiment(results, docs, Path(args.out_dir), figures=args.figures)
    sys.stdout.write(_result_text(results, "table", docs))


def write_experiment(results: list[ApproachResult], docs: list[Document], out: Path,
                     figures: bool = True) -> dict[str, Path]:
    """Write ``report.tsv``, ``report.txt``, one model file per CRF fold and figures."""
    out.mkdir(parents=True, exist_ok=True)
    files = {"report.tsv": out / "report.tsv", "report.txt": out / "report.txt"}
    files["report.tsv"].write_text(_result_text(results, "tsv", docs), encoding="utf-8")
    files["report.txt"].write_text(_result_text(results, "table", docs), encoding="utf-8")
    models = out / "models"
    for r in results:
        for fold, model in r.models.items():
            models.mkdir(exist_ok=True)
            path = models / f"{r.approach}_fold{fold + 1}.model"
            crf.save_model(model, path)
            files[str(path.relative_to(out))] = path
    if figures:
        figs = out / "figures"
        rows = [row for r in results for row in r.rows()]
        files["figures/prf.png"] = plotting.plot_prf(rows, figs / "prf.png")
        bds = _type_breakdowns(results, docs)
        if bds:
            files["figures/type_recall.png"] = plotting.plot_type_recall(
                bds, figs / "type_recall.png")
    return files


COMMANDS = {
    "validate-corpus": cmd_validate_corpus,
    "merge-annotations": cmd_merge_annotations,
    "label-subjectivity": cmd_label_subjectivity,
    "mine-patterns": cmd_mine_patterns,
    "match-patterns": cmd_match_patterns,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "tag": cmd_tag,
    "evaluate": cmd_evaluate,
    "cross-validate": cmd_cross_validate,
    "ablate": cmd_ablate,
    "experiment": cmd_experiment,
}


def _setup_logging(verbose: int, quiet: bool):
    level = logging.ERROR if quiet else logging.DEBUG if verbose > 1 else \
        logging.INFO if verbose else logging.WARNING
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("level=%(levelname)s logger=%(name)s msg=%(message)s"))
    root = logging.getLogger("opholder")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose, args.quiet)
    try:
        COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"opholder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, ArithmeticError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
