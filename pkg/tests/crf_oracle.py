"""Brute-force references for the CRF: enumerate every label path."""
from __future__ import annotations

import itertools
import math

import numpy as np

from opholder.corpus import LABELS
from opholder.crf import CrfModel, FeatureIndex


def random_model(rng: np.random.Generator, n_attr: int, forbid: bool = False) -> CrfModel:
    index = FeatureIndex([f"f{i}" for i in range(n_attr)], LABELS)
    return CrfModel(index, rng.uniform(-2, 2, index.size), forbid)


def random_sequence(rng: np.random.Generator, length: int, n_attr: int, k_max: int = 4):
    k_max = min(k_max, n_attr)
    return [[f"f{i}" for i in sorted(rng.choice(n_attr, rng.integers(0, k_max + 1),
                                                replace=False))]
            for _ in range(length)]


def path_score(m: CrfModel, x, path) -> float:
    """Score straight from the documented parameter layout."""
    A, L = m.index.num_attributes, m.index.num_labels
    w = m.weights
    trans = w[A * L:].reshape(L + 1, L).copy()
    if m.forbid_invalid:
        trans[L, 1] = trans[2, 1] = -math.inf
    total, prev = 0.0, L
    for feats, y in zip(x, path):
        total += trans[prev, y]
        for f in feats:
            total += w[int(f[1:]) * L + y]
        prev = y
    return total


def enumerate_paths(m: CrfModel, x):
    L = m.index.num_labels
    paths = list(itertools.product(range(L), repeat=len(x)))
    scores = np.array([path_score(m, x, p) for p in paths])
    return paths, scores


def brute_force(m: CrfModel, x):
    """``(logZ, position marginals, edge marginals, best score)`` by enumeration."""
    L = m.index.num_labels
    T = len(x)
    paths, scores = enumerate_paths(m, x)
    top = scores.max()
    logZ = top + math.log(np.exp(scores - top).sum())
    probs = np.exp(scores - logZ)
    pos = np.zeros((T, L))
    edges = np.zeros((max(T - 1, 0), L, L))
    for p, pr in zip(paths, probs):
        for t, y in enumerate(p):
            pos[t, y] += pr
            if t:
                edges[t - 1, p[t - 1], y] += pr
    return logZ, pos, edges, top


def finite_difference(fun, w, h=1e-5):
    g = np.empty_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (fun(w + e)[0] - fun(w - e)[0]) / (2 * h)
    return g


def relative_error(a, b, floor=1e-8):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
