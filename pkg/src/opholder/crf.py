"""Linear-chain CRF over the three holder labels.

Parameters are one weight per (attribute, label) pair plus one per
(previous label, label) transition, where the previous label of the first
token is a distinguished START state.  All dynamic programming runs in log
space.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.special import logsumexp

from .corpus import B_HOLDER, I_HOLDER, LABELS, NON_HOLDER

log = logging.getLogger(__name__)

START = "START"
MAGIC = "HOLDERCRF"
FORMAT_VERSION = 1


class UnknownLabel(ValueError):
    pass


class DivergedObjective(ArithmeticError):
    pass


class ModelFormatError(ValueError):
    pass


class BadMagic(ModelFormatError):
    pass


class VersionMismatch(ModelFormatError):
    pass


class CorruptWeights(ModelFormatError):
    pass


class FeatureIndex:
    """Frozen attribute table; parameter ids are dense in ``[0, K)``.

    Emission weight of attribute ``a`` under label ``y`` has id ``a*L + y``;
    transition ``prev -> y`` has id ``A*L + prev*L + y`` with ``prev = L``
    standing for START.
    """

    def __init__(self, attributes: Sequence[str], labels: Sequence[str] = LABELS):
        self.attributes = tuple(attributes)
        self.labels = tuple(labels)
        self._ids = {a: i for i, a in enumerate(self.attributes)}
        if len(self._ids) != len(self.attributes):
            raise ValueError("duplicate attribute strings")
        self._label_ids = {y: i for i, y in enumerate(self.labels)}

    @classmethod
    def build(cls, sequences, labels: Sequence[str] = LABELS) -> "FeatureIndex":
        seen: dict[str, None] = {}
        for seq in sequences:
            for feats in seq:
                for f in feats:
                    seen.setdefault(f, None)
        return cls(list(seen), labels)

    @property
    def num_attributes(self) -> int:
        return len(self.attributes)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        L = self.num_labels
        return self.num_attributes * L + (L + 1) * L

    def attribute_id(self, attr: str) -> int | None:
        return self._ids.get(attr)

    def label_id(self, label: str) -> int:
        try:
            return self._label_ids[label]
        except KeyError:
            raise UnknownLabel(f"unknown label {label!r}") from None

    def feature_id(self, attr: str, label: str) -> int | None:
        a = self._ids.get(attr)
        return None if a is None else a * self.num_labels + self.label_id(label)

    def transition_id(self, prev: str, label: str) -> int:
        L = self.num_labels
        p = L if prev == START else self.label_id(prev)
        return self.num_attributes * L + p * L + self.label_id(label)

    def encode(self, seq) -> list[np.ndarray]:
        """Attribute ids per position; attributes unseen in training are dropped."""
        ids = self._ids
        return [np.fromiter((ids[f] for f in feats if f in ids), dtype=np.int64) for feats in seq]

    def __eq__(self, other):
        return (isinstance(other, FeatureIndex) and self.attributes == other.attributes
                and self.labels == other.labels)


@dataclass
class CrfModel:
    index: FeatureIndex
    weights: np.ndarray
    forbid_invalid: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.index.size,):
            raise ValueError(f"expected {self.index.size} weights, got {self.weights.shape}")

    @classmethod
    def zeros(cls, index: FeatureIndex, **kw) -> "CrfModel":
        return cls(index, np.zeros(index.size), **kw)

    @property
    def labels(self) -> tuple:
        return self.index.labels

    @property
    def emission(self) -> np.ndarray:
        A, L = self.index.num_attributes, self.index.num_labels
        return self.weights[:A * L].reshape(A, L)

    @property
    def transition(self) -> np.ndarray:
        """``(L+1, L)`` transition weights; the last row is START."""
        A, L = self.index.num_attributes, self.index.num_labels
        return self.weights[A * L:].reshape(L + 1, L)

    def effective_transition(self) -> np.ndarray:
        return _apply_constraints(self.transition, self.index, self.forbid_invalid)


def _forbidden_mask(index: FeatureIndex) -> np.ndarray:
    L = index.num_labels
    mask = np.zeros((L + 1, L), dtype=bool)
    if I_HOLDER in index.labels:
        i = index.label_id(I_HOLDER)
        mask[L, i] = True
        if NON_HOLDER in index.labels:
            mask[index.label_id(NON_HOLDER), i] = True
    return mask


def _apply_constraints(trans: np.ndarray, index: FeatureIndex, forbid: bool) -> np.ndarray:
    if not forbid:
        return trans
    out = trans.copy()
    out[_forbidden_mask(index)] = -np.inf
    return out


# -- batched lattice computations ------------------------------------------

class _Batch:
    """Sequences packed for vectorised forward-backward.

    Tokens are stacked into one sparse attribute matrix ``X`` (tokens x A);
    emissions are scattered into a padded ``(N, Tmax, L)`` array.
    """

    def __init__(self, encoded: Sequence[Sequence[np.ndarray]], num_attributes: int,
                 labels: Sequence[Sequence[int]] | None = None):
        if not encoded:
            raise ValueError("empty batch")
        self.lengths = np.array([len(s) for s in encoded], dtype=np.int64)
        if (self.lengths < 1).any():
            raise ValueError("sequences must have at least one position")
        self.N = len(encoded)
        self.Tmax = int(self.lengths.max())
        rows, cols = [], []
        r = 0
        for seq in encoded:
            for ids in seq:
                rows.append(np.full(len(ids), r, dtype=np.int64))
                cols.append(ids)
                r += 1
        self.ntok = r
        rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
        cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
        self.X = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)),
                                   shape=(self.ntok, num_attributes))
        self.seq_idx = np.repeat(np.arange(self.N), self.lengths)
        self.pos_idx = np.concatenate([np.arange(n) for n in self.lengths])
        self.valid = np.arange(self.Tmax)[None, :] < self.lengths[:, None]
        self.y = None
        if labels is not None:
            self.y = np.concatenate([np.asarray(l, dtype=np.int64) for l in labels])
            if len(self.y) != self.ntok:
                raise ValueError("label/feature length mismatch")

    def emissions(self, emission_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        flat = np.asarray(self.X @ emission_w)
        E = np.zeros((self.N, self.Tmax, emission_w.shape[1]))
        E[self.seq_idx, self.pos_idx] = flat
        return flat, E


def _forward(E, trans, lengths):
    N, Tmax, L = E.shape
    start, T_ = trans[L], trans[:L]
    alpha = np.empty_like(E)
    alpha[:, 0] = start + E[:, 0]
    for t in range(1, Tmax):
        nxt = logsumexp(alpha[:, t - 1, :, None] + T_[None], axis=1) + E[:, t]
        alpha[:, t] = np.where((t < lengths)[:, None], nxt, alpha[:, t - 1])
    # padded steps carry alpha forward, so the last column is the final state
    return alpha, logsumexp(alpha[:, -1], axis=1)


def _backward(E, trans, lengths):
    N, Tmax, L = E.shape
    start, T_ = trans[L], trans[:L]
    beta = np.zeros_like(E)
    for t in range(Tmax - 2, -1, -1):
        nxt = logsumexp(T_[None] + (E[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        beta[:, t] = np.where((t + 1 < lengths)[:, None], nxt, 0.0)
    return beta, logsumexp(start + E[:, 0] + beta[:, 0], axis=1)


def _edge_marginals(alpha, beta, E, trans, logZ, valid):
    """``xi[n, t, i, j] = p(y_{t-1}=i, y_t=j)`` for ``t >= 1`` (zero elsewhere)."""
    L = E.shape[2]
    T_ = trans[:L]
    s = (alpha[:, :-1, :, None] + T_[None, None] + (E[:, 1:] + beta[:, 1:])[:, :, None, :]
         - logZ[:, None, None, None])
    xi = np.exp(s)
    xi *= valid[:, 1:, None, None]
    return xi


# -- single-sequence API -----------------------------------------------------

def _one(m: CrfModel, x):
    enc = m.index.encode(x)
    b = _Batch([enc], m.index.num_attributes)
    _, E = b.emissions(m.emission)
    return b, E, m.effective_transition()


def emission_scores(m: CrfModel, x) -> np.ndarray:
    """``(T, L)`` emission score matrix for one feature sequence."""
    _, E, _ = _one(m, x)
    return E[0]


def score_path(m: CrfModel, x, y: Sequence[str]) -> float:
    """Unnormalised log-potential of label path ``y``."""
    if len(x) != len(y):
        raise ValueError("feature and label sequences differ in length")
    ids = [m.index.label_id(lab) for lab in y]
    E = emission_scores(m, x)
    trans = m.effective_transition()
    L = m.index.num_labels
    total = 0.0
    prev = L
    for t, yi in enumerate(ids):
        total += trans[prev, yi] + E[t, yi]
        prev = yi
    return float(total)


def log_partition(m: CrfModel, x) -> float:
    if len(x) < 1:
        raise ValueError("empty sequence")
    b, E, trans = _one(m, x)
    _, logZ = _forward(E, trans, b.lengths)
    return float(logZ[0])


def log_partition_backward(m: CrfModel, x) -> float:
    b, E, trans = _one(m, x)
    _, logZ = _backward(E, trans, b.lengths)
    return float(logZ[0])


def marginals(m: CrfModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Position marginals ``(T, L)`` and edge marginals ``(T-1, L, L)``."""
    if len(x) < 1:
        raise ValueError("empty sequence")
    b, E, trans = _one(m, x)
    alpha, logZ = _forward(E, trans, b.lengths)
    beta, _ = _backward(E, trans, b.lengths)
    pos = np.exp(alpha + beta - logZ[:, None, None])[0]
    edges = _edge_marginals(alpha, beta, E, trans, logZ, b.valid)[0]
    return pos, edges


def viterbi_path(m: CrfModel, x) -> tuple[list[int], float]:
    """Best label-id path and its score, before BIO repair.

    Ties go to the lower label ordinal at every decision.
    """
    if len(x) < 1:
        raise ValueError("empty sequence")
    E = emission_scores(m, x)
    trans = m.effective_transition()
    L = m.index.num_labels
    delta = trans[L] + E[0]
    back = []
    cols = np.arange(L)
    for t in range(1, len(E)):
        cand = delta[:, None] + trans[:L]
        bp = np.argmax(cand, axis=0)
        delta = cand[bp, cols] + E[t]
        back.append(bp)
    best = int(np.argmax(delta))
    score = float(delta[best])
    path = [best]
    for bp in reversed(back):
        path.append(int(bp[path[-1]]))
    path.reverse()
    return path, score


def repair_bio(labels: Sequence[str]) -> list[str]:
    """Turn every orphan I-Holder (after Non-Holder or at the start) into B-Holder."""
    out = []
    prev = None
    for lab in labels:
        if lab == I_HOLDER and prev not in (B_HOLDER, I_HOLDER):
            lab = B_HOLDER
        out.append(lab)
        prev = lab
    return out


def viterbi(m: CrfModel, x, repair: bool = True) -> list[str]:
    path, _ = viterbi_path(m, x)
    labels = [m.index.labels[i] for i in path]
    return repair_bio(labels) if repair else labels


# -- training ----------------------------------------------------------------

class Objective:
    """Regularised negative log-likelihood over a fixed training batch."""

    def __init__(self, index: FeatureIndex, data, sigma2: float = 10.0,
                 forbid_invalid: bool = False):
        if not data:
            raise ValueError("empty training batch")
        self.index = index
        self.sigma2 = float(sigma2)
        self.forbid_invalid = forbid_invalid
        for x, y in data:
            if len(x) != len(y):
                raise ValueError("feature and label sequences differ in length")
        encoded = [index.encode(x) for x, _ in data]
        ys = [[index.label_id(lab) for lab in y] for _, y in data]
        self.batch = _Batch(encoded, index.num_attributes, ys)
        L = index.num_labels
        b = self.batch
        onehot = np.zeros((b.ntok, L))
        onehot[np.arange(b.ntok), b.y] = 1.0
        self._onehot = onehot
        emp_trans = np.zeros((L + 1, L))
        first = np.concatenate([[0], np.cumsum(b.lengths)[:-1]])
        np.add.at(emp_trans, (L, b.y[first]), 1.0)
        starts = np.zeros(b.ntok, dtype=bool)
        starts[first] = True
        prev = b.y[:-1][~starts[1:]]
        cur = b.y[1:][~starts[1:]]
        np.add.at(emp_trans, (prev, cur), 1.0)
        self._emp_emission = np.asarray(b.X.T @ onehot)
        self._emp_trans = emp_trans
        self.evaluations = 0

    def __call__(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        self.evaluations += 1
        idx = self.index
        A, L = idx.num_attributes, idx.num_labels
        b = self.batch
        W = w[:A * L].reshape(A, L)
        trans = _apply_constraints(w[A * L:].reshape(L + 1, L), idx, self.forbid_invalid)
        flat, E = b.emissions(W)
        alpha, logZ = _forward(E, trans, b.lengths)
        beta, _ = _backward(E, trans, b.lengths)

        gold_emission = flat[np.arange(b.ntok), b.y].sum()
        with np.errstate(invalid="ignore"):
            gold_trans = np.where(self._emp_trans > 0, trans * self._emp_trans, 0.0).sum()
        obj = logZ.sum() - gold_emission - gold_trans + 0.5 * float(w @ w) / self.sigma2

        P = np.exp(alpha + beta - logZ[:, None, None])
        P_flat = P[b.seq_idx, b.pos_idx]
        xi = _edge_marginals(alpha, beta, E, trans, logZ, b.valid)
        exp_trans = np.zeros((L + 1, L))
        exp_trans[:L] = xi.sum(axis=(0, 1))
        exp_trans[L] = P[:, 0].sum(axis=0)

        grad = np.empty_like(w)
        grad[:A * L] = (np.asarray(b.X.T @ P_flat) - self._emp_emission).ravel()
        grad[A * L:] = (exp_trans - self._emp_trans).ravel()
        grad += w / self.sigma2
        return float(obj), grad


def nll_and_gradient(m: CrfModel, batch, sigma2: float = 10.0) -> tuple[float, np.ndarray]:
    """Objective ``sum_i [log Z(x_i) - score(x_i, y_i)] + |w|^2 / (2 sigma2)`` and its gradient
    at the model's current weights.  ``batch`` holds ``(features, labels)`` pairs."""
    return Objective(m.index, batch, sigma2, m.forbid_invalid)(m.weights)


@dataclass(frozen=True)
class TrainConfig:
    sigma2: float = 10.0
    max_iters: int = 200
    tol: float = 1e-6
    optimizer: str = "lbfgs"  # or "gd"
    forbid_invalid: bool = False


def _gradient_descent(fun, w0, max_iters, tol, history):
    w = w0.copy()
    f, g = fun(w)
    step = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        gnorm2 = float(g @ g)
        if math.sqrt(gnorm2) <= tol:
            it -= 1
            break
        # Armijo backtracking along -g
        while True:
            w_new = w - step * g
            f_new, g_new = fun(w_new)
            if f_new <= f - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                return w, it - 1
        rel = (f - f_new) / max(abs(f), abs(f_new), 1.0)
        w, f, g = w_new, f_new, g_new
        history.append(f)
        step = min(step * 2.0, 1e3)
        if rel <= tol:
            break
    return w, it


def train(data, cfg: TrainConfig | None = None, index: FeatureIndex | None = None,
          **meta) -> CrfModel:
    """Fit weights by minimising the regularised NLL.

    ``data`` is a list of ``(features, labels)`` pairs.  Extra keyword
    arguments are stored verbatim in the model metadata.
    """
    cfg = cfg or TrainConfig()
    if not data:
        raise ValueError("no training data")
    if index is None:
        index = FeatureIndex.build(x for x, _ in data)
    w0 = np.zeros(index.size)
    history: list[float] = []
    fun = Objective(index, data, cfg.sigma2, cfg.forbid_invalid)

    def checked(w):
        f, g = fun(w)
        if not (math.isfinite(f) and np.isfinite(g).all()):
            raise DivergedObjective(f"non-finite objective {f!r}")
        return f, g

    if cfg.max_iters <= 0:
        f0, _ = checked(w0)
        w, iters = w0, 0
        history.append(f0)
    elif cfg.optimizer == "lbfgs":
        last = {}

        def fg(w):
            f, g = checked(w)
            last["w"], last["f"] = w.copy(), f
            return f, g

        def callback(xk):
            if "w" in last and np.array_equal(xk, last["w"]):
                history.append(last["f"])
            else:
                history.append(checked(xk)[0])

        history.append(checked(w0)[0])
        res = optimize.minimize(fg, w0, jac=True, method="L-BFGS-B", callback=callback,
                                options={"maxiter": cfg.max_iters, "ftol": cfg.tol,
                                         "gtol": cfg.tol, "maxcor": 10})
        w, iters = res.x, int(res.nit)
    elif cfg.optimizer == "gd":
        history.append(checked(w0)[0])
        w, iters = _gradient_descent(checked, w0, cfg.max_iters, cfg.tol, history)
    else:
        raise ValueError(f"unknown optimizer {cfg.optimizer!r}")

    f_final, _ = checked(w)
    model = CrfModel(index, w, cfg.forbid_invalid)
    model.meta = {"sigma2": cfg.sigma2, "iterations": iters, "objective": f_final,
                  "optimizer": cfg.optimizer, **meta}
    model.meta["history"] = history
    log.info("trained CRF: K=%d iterations=%d objective=%.6f", index.size, iters, f_final)
    return model


# -- serialisation -----------------------------------------------------------

def dumps_model(m: CrfModel) -> str:
    idx = m.index
    lines = [f"{MAGIC}\t{FORMAT_VERSION}",
             "labels\t" + "\t".join(idx.labels),
             f"K\t{idx.size}",
             f"attributes\t{idx.num_attributes}",
             f"forbid_invalid\t{int(m.forbid_invalid)}"]
    for key in sorted(m.meta):
        if key == "history":
            continue
        val = m.meta[key]
        lines.append(f"meta\t{key}\t{repr(val) if isinstance(val, float) else val}")
    lines.append("#attributes")
    lines.extend(idx.attributes)
    lines.append("#weights")
    # repr gives the shortest string that round-trips exactly
    lines.extend(repr(float(v)) for v in m.weights)
    return "\n".join(lines) + "\n"


def save_model(m: CrfModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(m))


def _meta_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def loads_model(text: str) -> CrfModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(MAGIC):
        raise BadMagic("not a holder CRF model file")
    head = lines[0].split("\t")
    if len(head) != 2 or head[0] != MAGIC:
        raise BadMagic("malformed model header")
    if head[1] != str(FORMAT_VERSION):
        raise VersionMismatch(f"model format version {head[1]}, expected {FORMAT_VERSION}")
    try:
        labels = tuple(lines[1].split("\t")[1:])
        K = int(lines[2].split("\t")[1])
        A = int(lines[3].split("\t")[1])
        forbid = bool(int(lines[4].split("\t")[1]))
        i = 5
        meta = {}
        while lines[i].startswith("meta\t"):
            _, key, val = lines[i].split("\t", 2)
            meta[key] = _meta_value(val)
            i += 1
        if lines[i] != "#attributes":
            raise CorruptWeights("missing attribute table")
        attrs = lines[i + 1:i + 1 + A]
        j = i + 1 + A
        if len(attrs) != A or j >= len(lines) or lines[j] != "#weights":
            raise CorruptWeights("truncated attribute table")
        wlines = lines[j + 1:]
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise CorruptWeights(f"malformed model header: {exc}") from None
    if len(wlines) != K:
        raise CorruptWeights(f"expected {K} weights, found {len(wlines)}")
    try:
        weights = np.array([float(v) for v in wlines])
    except ValueError as exc:
        raise CorruptWeights(str(exc)) from None
    if not np.isfinite(weights).all():
        raise CorruptWeights("non-finite weight")
    index = FeatureIndex(attrs, labels)
    if index.size != K:
        raise CorruptWeights(f"K={K} inconsistent with {A} attributes and {len(labels)} labels")
    return CrfModel(index, weights, forbid, meta)


def load_model(path) -> CrfModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
