"""Acceptance criteria 1-9.

Each test prints one ``criterion N: PASS|FAIL`` line (visible with ``-s``);
the same lines are repeated in the terminal summary of every run.
"""
from __future__ import annotations

import itertools
import time

import numpy as np

from opholder import cli, crf
from opholder.corpus import LABELS
from opholder.crf import FeatureIndex, Objective
from opholder.evaluation import f_measure
from opholder.patterns import extract_holders_by_pattern, parse_pattern, validate_patterns
from opholder.pipeline import (APPROACHES, CRF_NO_PATTERN, CRF_WITH_PATTERN, PATTERNS_ONLY,
                               Inputs, PipelineConfig, run_ablation, run_approach,
                               run_experiment, training_pairs)
from opholder.subjectivity import ClueCounts, classify_counts, label_corpus, label_document

from builders import (CLUES, THRESHOLD_PROFILE, THRESHOLD_RETAINED, retention_document,
                      validator_corpus)
from crf_oracle import (brute_force, finite_difference, path_score, random_model,
                        random_sequence, relative_error)
from test_evaluation import TABLE1

RESULTS: dict[int, str] = {}


def verdict(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_1_table_arithmetic():
    errs = [abs(f_measure(p, r) - f) for p, r, f in TABLE1]
    verdict(1, len(errs) == 7 and max(errs) <= 0.02,
            f"7 rows, max |F - published| = {max(errs):.4f}")


def test_criterion_2_enumeration_oracle():
    rng = np.random.default_rng(2024)
    worst_z = worst_m = 0.0
    viterbi_ok = True
    t0 = time.perf_counter()
    n_models = 240
    for i in range(n_models):
        n_attr = int(rng.integers(1, 21))
        m = random_model(rng, n_attr, forbid=i % 5 == 4)
        x = random_sequence(rng, int(rng.integers(1, 6)), n_attr)
        logZ, pos, edges, best = brute_force(m, x)
        worst_z = max(worst_z, abs(crf.log_partition(m, x) - logZ) / max(abs(logZ), 1e-300))
        got_pos, got_edges = crf.marginals(m, x)
        worst_m = max(worst_m, np.abs(got_pos - pos).max(),
                      np.abs(got_edges - edges).max() if len(x) > 1 else 0.0)
        path, _ = crf.viterbi_path(m, x)
        viterbi_ok &= abs(path_score(m, x, path) - best) <= 1e-12 * max(1.0, abs(best))
    elapsed = time.perf_counter() - t0
    verdict(2, worst_z <= 1e-9 and worst_m <= 1e-9 and viterbi_ok and elapsed < 10,
            f"{n_models} models, logZ rel {worst_z:.1e}, marginals abs {worst_m:.1e}, "
            f"viterbi optimal {viterbi_ok}, {elapsed:.1f}s")


def test_criterion_3_gradient_check():
    rng = np.random.default_rng(7)
    worst = 0.0
    t0 = time.perf_counter()
    n_sets = 24
    for _ in range(n_sets):
        n_attr = int(rng.integers(1, 10))
        data = []
        for _ in range(int(rng.integers(1, 6))):
            T = int(rng.integers(1, 6))
            data.append((random_sequence(rng, T, n_attr),
                         [LABELS[k] for k in rng.integers(0, 3, T)]))
        obj = Objective(FeatureIndex([f"f{i}" for i in range(n_attr)]), data,
                        sigma2=float(rng.uniform(0.5, 10)))
        w = rng.uniform(-2, 2, obj.index.size)
        worst = max(worst, relative_error(obj(w)[1], finite_difference(obj, w, 1e-5)).max())
    elapsed = time.perf_counter() - t0
    verdict(3, worst < 1e-5 and elapsed < 30,
            f"{n_sets} sets, max relative error {worst:.1e}, {elapsed:.1f}s")


def test_criterion_4_learnability(synthetic):
    t0 = time.perf_counter()
    docs = label_corpus(synthetic.docs, synthetic.resources.subjectivity)
    n_sent = sum(len(d.sentences) for d in docs)
    cfg = PipelineConfig(approach=CRF_NO_PATTERN)
    fcfg = cfg.feature_config()
    pairs = training_pairs(docs, synthetic.resources, fcfg)
    model = crf.train(pairs, cfg.train)
    right = total = 0
    for x, y in pairs:
        pred = crf.viterbi(model, x)
        right += sum(a == b for a, b in zip(pred, y))
        total += len(y)
    acc = right / total
    cv = run_approach(cfg, docs, Inputs(synthetic.resources, []))
    f = 100 * cv.mean_f
    elapsed = time.perf_counter() - t0
    verdict(4, n_sent >= 200 and acc >= 0.99 and f >= 95 and elapsed < 120,
            f"{n_sent} sentences, train token accuracy {100 * acc:.2f}%, "
            f"3-fold F {f:.2f}, {elapsed:.1f}s")


def test_criterion_5_subjectivity_truth_table():
    mismatches = co_fire = 0
    slots = list(itertools.product(range(5), range(5)))
    for prev, cur, nxt in itertools.product(slots, slots, slots):
        subj = cur[0] >= 2
        obj = prev[0] + cur[0] + nxt[0] == 0 and prev[1] + cur[1] + nxt[1] <= 1
        co_fire += subj and obj
        want = "Subjective" if subj else "Objective" if obj else "Unlabeled"
        got = classify_counts(ClueCounts(*prev), ClueCounts(*cur), ClueCounts(*nxt))
        mismatches += got != want
    verdict(5, mismatches == 0 and co_fire == 0,
            f"{len(slots) ** 3} windows, {mismatches} mismatches, {co_fire} co-firings")


def test_criterion_6_pattern_validator():
    docs, pats = validator_corpus(THRESHOLD_PROFILE)
    kept, _ = validate_patterns(pats, docs, docs)
    exact = {p.id for p in kept} == THRESHOLD_RETAINED
    monotone = True
    grid_f = range(1, 8)
    grid_p = [0.0, 0.5, 0.79, 0.8, 0.81, 1.0]
    retained = {(f, p): {q.id for q in validate_patterns(pats, docs, docs, f, p)[0]}
                for f in grid_f for p in grid_p}
    for (f1, p1), (f2, p2) in itertools.product(retained, retained):
        if f1 <= f2 and p1 <= p2:
            monotone &= retained[f2, p2] <= retained[f1, p1]
    verdict(6, exact and monotone,
            f"retained {sorted(q.id for q in kept)}, monotone over "
            f"{len(retained)} threshold pairs {monotone}")


def test_criterion_7_retention_rules():
    d, expected = retention_document()
    got = set(extract_holders_by_pattern(label_document(d, CLUES),
                                         [parse_pattern('"qaala" HOLDER')]))
    verdict(7, got == expected, f"{len(got)} spans kept, expected {len(expected)}")


def test_criterion_8_approach_ordering(synthetic):
    inputs = Inputs(synthetic.resources, synthetic.patterns)
    cfg = PipelineConfig(approach=CRF_WITH_PATTERN, patterns="planted")
    f = {r.approach: 100 * r.mean_f
         for r in run_experiment(cfg, synthetic.docs, APPROACHES, inputs)}
    base, no_pat, no_ne = (r.report.f_measure * 100 for r in
                           run_ablation(cfg, synthetic.docs, ["Pattern", "AllNE"], 2, inputs))
    d_pat, d_ne = base - no_pat, base - no_ne
    ordered = f[CRF_WITH_PATTERN] >= f[CRF_NO_PATTERN] >= f[PATTERNS_ONLY]
    verdict(8, ordered and abs(d_pat) < d_ne,
            f"F CWP {f[CRF_WITH_PATTERN]:.2f} >= CNP {f[CRF_NO_PATTERN]:.2f} >= "
            f"PO {f[PATTERNS_ONLY]:.2f}; fold-3 delta pattern {d_pat:.2f} vs AllNE {d_ne:.2f}")


def test_criterion_9_experiment_determinism(synthetic_files, tmp_path, capsys):
    f = synthetic_files
    flags = ["--subj-lexicon", f["subj_lexicon"], "--semfield-lexicon", f["semfield_lexicon"],
             "--semfield-stop", f["semfield_stop"], "--patterns", f["patterns"], "--seed", "11"]
    outs = []
    for run in ("a", "b"):
        code = cli.main([str(a) for a in ["experiment", f["corpus"], "--out-dir",
                                          tmp_path / run, *flags]])
        assert code == 0
        outs.append({p.relative_to(tmp_path / run): p.read_bytes()
                     for p in sorted((tmp_path / run).rglob("*")) if p.is_file()})
    capsys.readouterr()
    same = outs[0] == outs[1]
    n_models = sum(p.suffix == ".model" for p in outs[0])
    verdict(9, same and n_models == 6 and len(outs[0]) == 10,
            f"{len(outs[0])} files ({n_models} models) byte-identical {same}")
