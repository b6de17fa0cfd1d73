"""Soft-margin SVC on a precomputed kernel.

Binary problems are solved in the dual with sequential minimal optimization
using maximal-violating-pair working set selection; multiclass problems use a
one-vs-one reduction with majority voting.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ValidationError

SV_EPS = 1e-8


@dataclass
class BinarySvmModel:
    alpha: np.ndarray
    bias: float
    labels: np.ndarray
    C: float
    n_iter: int = 0

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > SV_EPS)

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.labels


def dual_objective(alpha, y, K) -> float:
    """sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ np.asarray(K) @ ay)


def _psd_guard(K):
    K = 0.5 * (K + K.T)
    evals, vecs = np.linalg.eigh(K)
    if evals[0] < -1e-6:
        warnings.warn(
            f"kernel matrix is not PSD (min eigenvalue {evals[0]:.3g}); clipping", RuntimeWarning
        )
        K = (vecs * np.clip(evals, 0.0, None)) @ vecs.T
    return K


def smo_fit(K, y, C: float = 1.0, tol: float = 1e-3, max_iter: int = 1_000_000) -> BinarySvmModel:
    """Solve the binary SVC dual for labels in {-1, +1}."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if K.shape != (n, n):
        raise ValidationError(f"Gram shape {K.shape} does not match {n} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValidationError("binary labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValidationError("smo_fit needs at least one example of each class")
    if C <= 0:
        raise ValidationError("C must be positive")
    K = _psd_guard(K)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a with Q = yy'K
    diag = np.diag(K)
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        score = -y * grad
        i = np.flatnonzero(up)[np.argmax(score[up])]
        j = np.flatnonzero(low)[np.argmin(score[low])]
        if score[i] - score[j] < tol:
            break
        it += 1
        # move alpha_i += y_i t, alpha_j -= y_j t along the equality constraint
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        t = (score[i] - score[j]) / eta
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        for k in (i, j):
            if alpha[k] < 1e-14 * C:
                alpha[k] = 0.0
            elif alpha[k] > C * (1 - 1e-14):
                alpha[k] = C
        grad += t * y * (K[:, i] - K[:, j])
    else:
        warnings.warn("SMO reached max_iter before convergence", RuntimeWarning)

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        lo = np.max(score[up]) if np.any(up) else -np.inf
        hi = np.min(score[low]) if np.any(low) else np.inf
        bias = float(0.5 * (lo + hi)) if np.isfinite(lo) and np.isfinite(hi) else float(
            lo if np.isfinite(lo) else hi
        )
    return BinarySvmModel(alpha=alpha, bias=bias, labels=y, C=float(C), n_iter=it)


def kkt_violation(model: BinarySvmModel, K) -> float:
    """Largest violation of the pairwise KKT optimality gap (<= tol at convergence)."""
    y, alpha, C = model.labels, model.alpha, model.C
    grad = y * (np.asarray(K) @ (alpha * y)) - 1.0
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    return float(max(np.max(score[up]) - np.min(score[low]), 0.0))


def decision_function(model: BinarySvmModel, k_row) -> np.ndarray | float:
    """sum_i alpha_i y_i k_row[i] + bias; ``k_row`` may be one row or a matrix of rows."""
    k_row = np.asarray(k_row, dtype=np.float64)
    if k_row.shape[-1] != model.alpha.size:
        raise ValidationError(
            f"kernel row has length {k_row.shape[-1]}, model has {model.alpha.size} points"
        )
    out = k_row @ model.coef + model.bias
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class MulticlassSvmModel:
    class_labels: list
    pairwise_models: dict = field(default_factory=dict)  # (a, b) -> BinarySvmModel
    pair_indices: dict = field(default_factory=dict)  # (a, b) -> training row indices


def ovo_fit(K, y, C: float = 1.0, tol: float = 1e-3) -> MulticlassSvmModel:
    """One binary model per unordered class pair; class a is +1, class b is -1."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y)
    classes = sorted(np.unique(y).tolist())
    if len(classes) < 2:
        raise ValidationError("need at least two classes")
    model = MulticlassSvmModel(classes)
    for a, b in combinations(classes, 2):
        idx = np.flatnonzero((y == a) | (y == b))
        labels = np.where(y[idx] == a, 1.0, -1.0)
        model.pairwise_models[(a, b)] = smo_fit(K[np.ix_(idx, idx)], labels, C, tol)
        model.pair_indices[(a, b)] = idx
    return model


def ovo_votes(model: MulticlassSvmModel, k_rows):
    """Vote counts and summed |decision| of won contests, each (m, k)."""
    k_rows = np.atleast_2d(np.asarray(k_rows, dtype=np.float64))
    k = len(model.class_labels)
    pos = {c: i for i, c in enumerate(model.class_labels)}
    votes = np.zeros((k_rows.shape[0], k))
    strength = np.zeros((k_rows.shape[0], k))
    for (a, b), sub in model.pairwise_models.items():
        idx = model.pair_indices[(a, b)]
        if k_rows.shape[1] <= idx.max():
            raise ValidationError("kernel rows are narrower than the training set")
        d = decision_function(sub, k_rows[:, idx])
        win_a = d > 0
        votes[win_a, pos[a]] += 1
        votes[~win_a, pos[b]] += 1
        strength[win_a, pos[a]] += np.abs(d[win_a])
        strength[~win_a, pos[b]] += np.abs(d[~win_a])
    return votes, strength


def _pick(votes, strength):
    # lexicographic: most votes, then largest summed |decision|, then lowest index
    best = votes.max(axis=1, keepdims=True)
    masked = np.where(votes == best, strength, -np.inf)
    return np.argmax(masked, axis=1)


def ovo_predict(model: MulticlassSvmModel, k_rows) -> np.ndarray:
    votes, strength = ovo_votes(model, k_rows)
    return np.asarray(model.class_labels)[_pick(votes, strength)]


def ovo_confidence(model: MulticlassSvmModel, k_rows) -> np.ndarray:
    """Heuristic confidence in [0, 1] for the predicted class.

    Half vote share, half tanh of the mean |decision| over the contests the
    winner took.  Not a calibrated probability.
    """
    votes, strength = ovo_votes(model, k_rows)
    win = _pick(votes, strength)
    rows = np.arange(votes.shape[0])
    k = len(model.class_labels)
    share = votes[rows, win] / (k - 1)
    mean_margin = strength[rows, win] / np.maximum(votes[rows, win], 1)
    return 0.5 * share + 0.5 * np.tanh(mean_margin)


def rbf_kernel(x, xp, gamma: float) -> float:
    """exp(-gamma ||x - xp||^2)."""
    x = np.asarray(x, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    if x.shape != xp.shape:
        raise ValidationError("rbf_kernel needs equal-length vectors")
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    return float(np.exp(-gamma * np.sum((x - xp) ** 2)))


def rbf_gram(X, Y, gamma: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    d2 = (X**2).sum(1)[:, None] + (Y**2).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


def scale_gamma(X) -> float:
    """1 / (n_features * Var(X)), the usual 'scale' heuristic."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


# --- plain-text serialization -------------------------------------------------

FORMAT_TAG = "qutritml-svm"
FORMAT_VERSION = 1


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def dumps(model: MulticlassSvmModel) -> str:
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}", "classes " + " ".join(map(str, model.class_labels))]
    for (a, b), sub in model.pairwise_models.items():
        idx = model.pair_indices[(a, b)]
        lines += [
            f"pair {a} {b}",
            f"C {format(sub.C, '.17g')}",
            f"bias {format(sub.bias, '.17g')}",
            "indices " + " ".join(map(str, idx.tolist())),
            "labels " + _fmt(sub.labels),
            "alpha " + _fmt(sub.alpha),
            "support " + " ".join(map(str, sub.support_indices.tolist())),
        ]
    return "\n".join(lines) + "\n"


def loads(text: str) -> MulticlassSvmModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tag, version = lines[0].split()
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise ValidationError(f"unsupported model header {lines[0]!r}")
    classes = [int(c) for c in lines[1].split()[1:]]
    model = MulticlassSvmModel(classes)
    rest = lines[2:]
    for start in range(0, len(rest), 7):
        block = {ln.split(" ", 1)[0]: ln.split(" ", 1)[1] if " " in ln else "" for ln in rest[start : start + 7]}
        a, b = (int(v) for v in block["pair"].split())
        sub = BinarySvmModel(
            alpha=np.array(block["alpha"].split(), dtype=np.float64),
            bias=float(block["bias"]),
            labels=np.array(block["labels"].split(), dtype=np.float64),
            C=float(block["C"]),
        )
        model.pairwise_models[(a, b)] = sub
        model.pair_indices[(a, b)] = np.array(block["indices"].split(), dtype=np.int64)
    return model
