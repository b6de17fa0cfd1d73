"""Data re-uploading qutrit classifier trained with RMSProp.

One layer = encoding rotations carrying the features followed by rotations
carrying four trainable weights.  Class c is read out as the probability of
basis state |c> on qutrit 0 (marginalised over qutrit 1 for the two-qutrit
model); binary tasks renormalise (p0, p1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .feature_maps import Arch, feature_chunks
from .gates import (
    GELL_MANN,
    _generator_eig,
    Circuit,
    Gate,
    GateKind,
    Weight,
    execute_batch,
    had,
    lz,
    rot,
    rotation,
)
from .linalg import kron

PROB_FLOOR = 1e-12
_I3 = np.eye(3, dtype=np.complex128)


@dataclass
class QnnModel:
    arch: Arch
    n_layers: int
    n_features: int
    n_classes: int = 2
    weights: np.ndarray | None = None
    hadamard_every_layer: bool = False

    def __post_init__(self):
        self.arch = Arch(self.arch)
        if self.n_layers < 1:
            raise ValidationError("n_layers must be >= 1")
        if self.n_features < 1:
            raise ValidationError("n_features must be >= 1")
        if self.n_classes not in (2, 3):
            raise ValidationError("a single readout qutrit supports 2 or 3 classes")
        if self.weights is not None:
            self.weights = np.array(self.weights, dtype=np.float64)
            if self.weights.shape != (self.n_layers, 4):
                raise ValidationError(f"weights must have shape ({self.n_layers}, 4)")

    @property
    def n_qutrits(self) -> int:
        return 1 if self.arch is Arch.SINGLE else 2

    @property
    def n_params(self) -> int:
        return 4 * self.n_layers

    @cached_property
    def circuit(self) -> Circuit:
        """The full stacked circuit with weight slot 4*layer + k."""
        gates: list[Gate] = []
        chunks = feature_chunks(self.n_features)
        for layer in range(self.n_layers):
            w = [Weight(4 * layer + k) for k in range(4)]
            with_h = layer == 0 or self.hadamard_every_layer
            if self.arch is Arch.SINGLE:
                if with_h:
                    gates.append(had(0))
                for chunk in chunks:
                    gates += [rot(a + 1, 0, b) for a, b in enumerate(chunk)]
                gates += [rot(a + 5, 0, w[a]) for a in range(4)]
            else:
                if with_h:
                    gates += [had(0), had(1)]
                for chunk in chunks:
                    gates += [rot(1, 0, chunk[0]), rot(2, 0, chunk[1])]
                    gates += [rot(5, 1, chunk[2]), rot(6, 1, chunk[3])]
                gates += [rot(3, 0, w[0]), rot(4, 0, w[1]), rot(7, 1, w[2]), rot(8, 1, w[3])]
                gates.append(Gate(GateKind.ENT_L1L8, (0, 1)))
        return Circuit(self.n_qutrits, gates, self.n_features, self.n_params)

    def copy(self) -> QnnModel:
        return QnnModel(self.arch, self.n_layers, self.n_features, self.n_classes,
                        None if self.weights is None else self.weights.copy(),
                        self.hadamard_every_layer)


def init_weights(model: QnnModel, rng) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, size=(model.n_layers, 4))


# --- compiled execution ---------------------------------------------------------


def _embed(m, target, n_qutrits):
    if n_qutrits == 1:
        return m
    return kron(m, _I3) if target == 0 else kron(_I3, m)


@dataclass
class _Program:
    """Circuit split into per-sample fixed blocks and weight rotations.

    ``steps`` holds ("fixed", (B, D, D) block) or ("weight", slot) entries, where
    slot indexes the weight-gate tables below.
    """

    n_qutrits: int
    steps: list = field(default_factory=list)
    w_index: np.ndarray = None  # weight index per weight gate
    w_evals: np.ndarray = None  # (G, D) eigenvalues of the embedded generators
    w_evecs: np.ndarray = None  # (G, D, D) eigenvectors
    w_gens: np.ndarray = None  # (G, D, D) embedded generators


def compile_program(model: QnnModel, X) -> _Program:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValidationError(f"expected {model.n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features must be finite")
    n = model.n_qutrits
    dim = 3**n
    prog = _Program(n)
    pending: list[Gate] = []
    w_gates: list[Gate] = []

    def flush():
        if not pending:
            return
        sub = Circuit(n, pending, model.n_features, 0)
        # columns of the block unitary: run the gates on every basis state
        b = X.shape[0]
        cols = []
        for j in range(dim):
            start = np.zeros((b, dim), dtype=np.complex128)
            start[:, j] = 1.0
            cols.append(execute_batch(sub, X, (), initial=start))
        prog.steps.append(("fixed", np.stack(cols, axis=2)))
        pending.clear()

    for g in model.circuit.gates:
        if isinstance(g.param, Weight):
            flush()
            prog.steps.append(("weight", len(w_gates)))
            w_gates.append(g)
        else:
            pending.append(g)
    flush()

    eig = {a: _generator_eig(a) for a in range(1, 9)}
    prog.w_index = np.array([g.param.index for g in w_gates], dtype=np.int64)
    prog.w_gens = np.stack([_embed(GELL_MANN[g.generator - 1], g.targets[0], n) for g in w_gates])
    if n == 1:
        prog.w_evals = np.stack([eig[g.generator][0] for g in w_gates])
        prog.w_evecs = np.stack([eig[g.generator][1] for g in w_gates])
    else:
        evals, evecs = [], []
        for g in w_gates:
            e, v = eig[g.generator]
            ones = np.ones(3)
            if g.targets[0] == 0:
                evals.append(np.kron(e, ones))
                evecs.append(kron(v, _I3))
            else:
                evals.append(np.kron(ones, e))
                evecs.append(kron(_I3, v))
        prog.w_evals = np.stack(evals)
        prog.w_evecs = np.stack(evecs)
    return prog


def _take(prog: _Program, idx) -> _Program:
    steps = [(kind, obj[idx]) if kind == "fixed" else (kind, obj) for kind, obj in prog.steps]
    return _Program(prog.n_qutrits, steps, prog.w_index, prog.w_evals, prog.w_evecs, prog.w_gens)


def _weight_matrices(prog: _Program, weights) -> np.ndarray:
    """exp(-i w G) for every weight gate at once, shape (G, D, D)."""
    angles = np.asarray(weights, dtype=np.float64)[prog.w_index]
    phases = np.exp(-1j * angles[:, None] * prog.w_evals)
    return np.matmul(prog.w_evecs * phases[:, None, :], np.conj(np.swapaxes(prog.w_evecs, 1, 2)))


def _run(prog: _Program, weights, batch: int, keep: bool = False):
    dim = 3**prog.n_qutrits
    psi = np.zeros((batch, dim), dtype=np.complex128)
    psi[:, 0] = 1.0
    mats = _weight_matrices(prog, weights)
    trace = []
    for kind, obj in prog.steps:
        if kind == "fixed":
            psi = np.matmul(obj, psi[:, :, None])[:, :, 0]
        else:
            psi = psi @ mats[obj].T
        if keep:
            trace.append(psi)
    return (psi, trace, mats) if keep else psi


def _class_of_basis(model: QnnModel) -> np.ndarray:
    return np.arange(3) if model.n_qutrits == 1 else np.repeat(np.arange(3), 3)


def readout(model: QnnModel, states) -> np.ndarray:
    """Class probabilities from final states, shape (B, n_classes)."""
    q = np.abs(np.atleast_2d(states)) ** 2
    marg = q if model.n_qutrits == 1 else q.reshape(-1, 3, 3).sum(axis=2)
    if model.n_classes == 2:
        return marg[:, :2] / marg[:, :2].sum(axis=1, keepdims=True)
    return marg


def _require_weights(model: QnnModel) -> np.ndarray:
    if model.weights is None:
        raise ValidationError("model has no weights; initialise or train it first")
    if not np.all(np.isfinite(model.weights)):
        raise ValidationError("weights must be finite")
    return model.weights.reshape(-1)


def forward(model: QnnModel, X) -> np.ndarray:
    """Class probabilities for one sample (n_classes,) or a batch (B, n_classes)."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    prog = compile_program(model, np.atleast_2d(X))
    states = _run(prog, _require_weights(model), np.atleast_2d(X).shape[0])
    p = readout(model, states)
    return p[0] if single else p


def predict(model: QnnModel, X) -> np.ndarray | int:
    """Argmax class; ties go to the lowest class index."""
    p = forward(model, X)
    out = np.argmax(p, axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def cross_entropy(p, label: int) -> float:
    """-log(max(p[label], 1e-12))."""
    p = np.asarray(p, dtype=np.float64)
    if not (isinstance(label, (int, np.integer)) and 0 <= label < p.shape[-1]):
        raise ValidationError(f"label {label!r} out of range for {p.shape[-1]} classes")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def _losses(p, y):
    return -np.log(np.maximum(p[np.arange(len(y)), y], PROB_FLOOR))


def lz_expectation(state) -> float:
    """<psi| LZ (x) I |psi> for one or two qutrits: 2 P(q0=0) - 2 P(q0=2)."""
    state = np.asarray(state)
    q = np.abs(state) ** 2
    marg = q if state.size == 3 else q.reshape(3, -1).sum(axis=1)
    return float(np.real(np.diag(lz())) @ marg)


# --- gradients ------------------------------------------------------------------


def _loss_and_grad(model: QnnModel, prog: _Program, y, weights):
    """Mean loss and d(mean loss)/d(weights) by reverse-mode state propagation.

    The derivative of exp(-i w G) is (-i G) exp(-i w G), so each weight gate
    contributes 2 Re <bra| -i G |psi> with psi the state just after the gate
    and bra the loss co-state pulled back to the same point.
    """
    b = len(y)
    psi, trace, mats = _run(prog, weights, b, keep=True)
    q = np.abs(psi) ** 2
    cls = _class_of_basis(model)
    marg = q if model.n_qutrits == 1 else q.reshape(-1, 3, 3).sum(axis=2)
    rows = np.arange(b)
    if model.n_classes == 2:
        z = marg[:, 0] + marg[:, 1]
        p_y = marg[rows, y] / z
    else:
        z = np.ones(b)
        p_y = marg[rows, y]
    losses = -np.log(np.maximum(p_y, PROB_FLOOR))

    # dL/dq_k per basis index
    dmarg = np.zeros_like(marg)
    live = p_y > PROB_FLOOR
    dmarg[rows[live], y[live]] -= 1.0 / marg[rows[live], y[live]]
    if model.n_classes == 2:
        dmarg[live, :2] += (1.0 / z[live])[:, None]
    bra = dmarg[:, cls] * psi / b  # mean over the batch

    grad = np.zeros(model.n_params)
    for pos in range(len(prog.steps) - 1, -1, -1):
        kind, obj = prog.steps[pos]
        if kind == "fixed":
            bra = np.matmul(np.conj(np.swapaxes(obj, 1, 2)), bra[:, :, None])[:, :, 0]
            continue
        after = trace[pos]
        dpsi = after @ prog.w_gens[obj].T
        # d/dw <psi|P|psi> = 2 Re <bra| -i G |psi>
        grad[prog.w_index[obj]] += 2.0 * np.imag(np.vdot(bra, dpsi))
        bra = bra @ mats[obj].conj()
    return float(losses.mean()), grad


def gradient(model: QnnModel, X, y) -> np.ndarray:
    """Mean cross-entropy gradient over the batch, shape (n_layers, 4)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise ValidationError("empty batch")
    if np.any((y < 0) | (y >= model.n_classes)):
        raise ValidationError("labels out of range")
    prog = compile_program(model, X)
    _, g = _loss_and_grad(model, prog, y, _require_weights(model))
    return g.reshape(model.n_layers, 4)


def loss(model: QnnModel, X, y) -> float:
    p = forward(model, np.atleast_2d(X))
    return float(_losses(p, np.asarray(y, dtype=np.int64)).mean())


# --- optimizer and training -----------------------------------------------------


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    gamma: float = 0.9
    epsilon: float = 1e-8
    batch_size: int = 4
    max_epochs: int = 100
    restart_threshold: float | None = None  # default 1/n_classes + 0.10
    max_restarts: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValidationError("gamma must be in (0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValidationError("learning_rate and epsilon must be positive")
        if self.batch_size < 1 or self.max_epochs < 0 or self.max_restarts < 0:
            raise ValidationError("batch_size >= 1, max_epochs >= 0, max_restarts >= 0")


@dataclass
class OptimizerState:
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, weights) -> OptimizerState:
        return cls(np.zeros_like(np.asarray(weights, dtype=np.float64)))


def rmsprop_step(weights, grads, state: OptimizerState, cfg: TrainConfig):
    """v <- gamma v + (1 - gamma) g^2;  w <- w - lr g / (sqrt(v) + eps)."""
    weights = np.asarray(weights, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if weights.shape != grads.shape or state.v.shape != weights.shape:
        raise ValidationError("weights, gradients and optimizer state must share a shape")
    v = cfg.gamma * state.v + (1.0 - cfg.gamma) * grads**2
    new = weights - cfg.learning_rate * grads / (np.sqrt(v) + cfg.epsilon)
    return new, OptimizerState(v, state.t + 1)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float


@dataclass
class LearningCurve:
    records: list[EpochRecord] = field(default_factory=list)
    restarts: int = 0
    best_epoch: int | None = None

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,train_acc,test_acc"]
        for r in self.records:
            lines.append(f"{r.epoch},{r.train_loss:.17g},{r.train_acc:.17g},{r.test_acc:.17g}")
        return "\n".join(lines) + "\n"


def _xy(data):
    if hasattr(data, "features"):
        return np.asarray(data.features, dtype=np.float64), np.asarray(data.labels, dtype=np.int64)
    X, y = data
    return np.atleast_2d(np.asarray(X, dtype=np.float64)), np.asarray(y, dtype=np.int64)


def train(model: QnnModel, train_set, test_set=None, cfg: TrainConfig | None = None):
    """Mini-batch RMSProp with restart-on-poor-start and best-epoch selection.

    ``train_set``/``test_set`` are Datasets or (X, y) pairs.  Returns a new
    model carrying the weights of the epoch with the best test accuracy
    (training accuracy when no test set is given) and the learning curve.
    """
    cfg = cfg or TrainConfig()
    X, y = _xy(train_set)
    if y.size == 0:
        raise ValidationError("empty training set")
    if np.any((y < 0) | (y >= model.n_classes)):
        raise ValidationError("training labels out of range")
    Xt, yt = _xy(test_set) if test_set is not None else (None, None)

    shuffle_rng = np.random.default_rng([cfg.rng_seed, 0])
    trained = model.copy()
    if trained.weights is None:
        trained.weights = init_weights(trained, np.random.default_rng([cfg.rng_seed, 1, 0]))
    curve = LearningCurve()
    if cfg.max_epochs == 0:
        return trained, curve

    threshold = cfg.restart_threshold
    if threshold is None:
        threshold = 1.0 / model.n_classes + 0.10
    prog = compile_program(trained, X)
    prog_test = compile_program(trained, Xt) if Xt is not None else None

    def evaluate(w):
        p = readout(trained, _run(prog, w, len(y)))
        tr_loss = float(_losses(p, y).mean())
        tr_acc = float(np.mean(np.argmax(p, axis=1) == y))
        te_acc = float("nan")
        if prog_test is not None:
            pt = readout(trained, _run(prog_test, w, len(yt)))
            te_acc = float(np.mean(np.argmax(pt, axis=1) == yt))
        return tr_loss, tr_acc, te_acc

    w = trained.weights.reshape(-1).copy()
    state = OptimizerState.zeros_like(w)
    best_w, best_score = w.copy(), -np.inf
    epoch = 0
    while epoch < cfg.max_epochs:
        order = shuffle_rng.permutation(len(y))
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, g = _loss_and_grad(trained, _take(prog, idx), y[idx], w)
            w, state = rmsprop_step(w, g, state, cfg)
        epoch += 1
        tr_loss, tr_acc, te_acc = evaluate(w)
        if epoch == 1 and tr_acc < threshold and curve.restarts < cfg.max_restarts:
            curve.restarts += 1
            rng = np.random.default_rng([cfg.rng_seed, 1, curve.restarts])
            w = init_weights(trained, rng).reshape(-1)
            state = OptimizerState.zeros_like(w)
            epoch = 0
            continue
        curve.records.append(EpochRecord(epoch, tr_loss, tr_acc, te_acc))
        score = te_acc if prog_test is not None else tr_acc
        if score > best_score:
            best_score, best_w, curve.best_epoch = score, w.copy(), epoch
    trained.weights = best_w.reshape(model.n_layers, 4)
    return trained, curve


# --- plain-text serialization -------------------------------------------------

FORMAT_TAG = "qutritml-qnn"
FORMAT_VERSION = 1


def dumps(model: QnnModel) -> str:
    w = _require_weights(model).reshape(model.n_layers, 4)
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"arch {model.arch.value}",
        f"layers {model.n_layers}",
        f"n_features {model.n_features}",
        f"n_classes {model.n_classes}",
        f"hadamard_every_layer {int(model.hadamard_every_layer)}",
        "weights",
    ]
    lines += [" ".join(format(v, ".17g") for v in row) for row in w]
    return "\n".join(lines) + "\n"


def loads(text: str) -> QnnModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    tag, version = lines[0].split()
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise ValidationError(f"unsupported model header {lines[0]!r}")
    meta = dict(ln.split(" ", 1) for ln in lines[1:6])
    layers = int(meta["layers"])
    w_start = lines.index("weights") + 1
    weights = np.array([ln.split() for ln in lines[w_start : w_start + layers]], dtype=np.float64)
    return QnnModel(meta["arch"], layers, int(meta["n_features"]), int(meta["n_classes"]),
                    weights, bool(int(meta["hadamard_every_layer"])))
