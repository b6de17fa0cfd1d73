"""Experiment orchestration: config files, the fit/evaluate pipeline and output files.

A run writes ``metrics.json`` (deterministic under a fixed seed), optional
``gram.csv``, ``boundary.csv``, ``curve.csv``, ``predictions.csv`` and a
``manifest.json`` that also records inputs' hashes and wall time.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import qnn as qnn_mod
from . import svm as svm_mod
from .data import (
    BUILTIN_CSV,
    Dataset,
    data_path,
    fit_preprocessor,
    is_synthetic,
    load_dataset,
    split,
)
from .errors import ConfigError, ValidationError
from .feature_maps import Arch, FeatureMapSpec, auto_angle_scale, build
from .kernel import gram, gram_cross, write_gram_csv
from .metrics import compute_metrics

TASKS = ("qksvm", "qnn", "svm")


@dataclass
class ExperimentConfig:
    task: str = "qksvm"
    seed: int | None = None
    dataset: str = "circles"
    # data
    n_samples: int = 400
    noise: float | None = None  # None = generator default
    label_column: str = "-1"
    delimiter: str = ","  # "whitespace" for space/tab separated files
    header: bool = True
    train_fraction: float = 0.7
    stratified: bool = True
    # preprocessing
    scale: bool = True
    pca: int | None = None  # None = task default, 0 = off
    angle_scale: float | None = None  # None = auto bandwidth rule, see auto_angle_scale
    # quantum kernel
    arch: str | None = None  # None = task default (two for qksvm, single for qnn)
    hadamard: bool = True
    shots: int | None = None
    # SVM
    C: float = 1.0
    tol: float = 1e-3
    gamma: float | None = None  # RBF width; None = 1 / (d Var X)
    # QNN
    layers: int = 3
    epochs: int = 100
    batch: int = 4
    lr: float = 0.001
    rms_gamma: float = 0.9
    epsilon: float = 1e-8
    restart_threshold: float | None = None
    max_restarts: int = 10
    hadamard_every_layer: bool = False
    # outputs
    out: str = "run"
    boundary_res: int = 0  # 0 = no boundary grid
    write_gram: bool = False

    def validate(self) -> ExperimentConfig:
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {', '.join(TASKS)}, got {self.task!r}")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if not is_synthetic(self.dataset) and self.dataset.lower() not in BUILTIN_CSV \
                and self.dataset.lower() != "seed" and not Path(self.dataset).is_file():
            raise ConfigError(f"dataset {self.dataset!r} is neither built in nor an existing file")
        if self.arch is not None and self.arch not in (a.value for a in Arch):
            raise ConfigError(f"arch must be 'single' or 'two', got {self.arch!r}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.boundary_res != 0 and self.boundary_res < 2:
            raise ConfigError("boundary_res must be 0 (off) or >= 2")
        for name in ("layers", "batch", "n_samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.epochs < 0 or self.max_restarts < 0:
            raise ConfigError("epochs and max_restarts must be >= 0")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.angle_scale is not None and not self.angle_scale > 0:
            raise ConfigError("angle_scale must be positive (or none for the automatic rule)")
        if self.C <= 0 or self.tol <= 0 or self.lr <= 0:
            raise ConfigError("C, tol and lr must be positive")
        return self

    @property
    def resolved_delimiter(self) -> str | None:
        return None if self.delimiter.lower() in ("whitespace", "space", "tab", "\\t") else self.delimiter

    @property
    def resolved_arch(self) -> Arch:
        if self.arch is not None:
            return Arch(self.arch)
        return Arch.SINGLE if self.task == "qnn" else Arch.TWO

    def resolved_pca(self, n_features: int) -> int | None:
        if self.pca is not None:
            return self.pca or None
        # the QNN gets four principal components; kernel and classical SVMs
        # use all features
        if self.task == "qnn" and n_features > 4:
            return 4
        return None


# --- flat "section.key = value" config files -------------------------------------

# dotted key -> ExperimentConfig attribute
CONFIG_KEYS = {
    "task": "task",
    "seed": "seed",
    "dataset": "dataset",
    "data.n": "n_samples",
    "data.noise": "noise",
    "data.label_column": "label_column",
    "data.delimiter": "delimiter",
    "data.header": "header",
    "data.train_fraction": "train_fraction",
    "data.stratified": "stratified",
    "preprocess.scale": "scale",
    "preprocess.pca": "pca",
    "preprocess.angle_scale": "angle_scale",
    "feature_map.arch": "arch",
    "feature_map.hadamard": "hadamard",
    "kernel.shots": "shots",
    "svm.C": "C",
    "svm.tol": "tol",
    "svm.gamma": "gamma",
    "qnn.arch": "arch",
    "qnn.layers": "layers",
    "qnn.epochs": "epochs",
    "qnn.batch": "batch",
    "qnn.lr": "lr",
    "qnn.gamma": "rms_gamma",
    "qnn.epsilon": "epsilon",
    "qnn.restart_threshold": "restart_threshold",
    "qnn.max_restarts": "max_restarts",
    "qnn.hadamard_every_layer": "hadamard_every_layer",
    "output.dir": "out",
    "output.boundary_res": "boundary_res",
    "output.gram": "write_gram",
}

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(attr: str, raw: str):
    kind = _TYPES[attr]
    text = raw.strip()
    if "None" in kind and text.lower() in ("", "none", "null", "default"):
        return None
    try:
        if kind.startswith("bool"):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {attr}") from None
    return text


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """``key = value`` per line, ``#`` comments, keys from CONFIG_KEYS."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr = CONFIG_KEYS[key]
        values[attr] = _coerce(attr, raw)
    cfg = base or ExperimentConfig()
    for attr, v in values.items():
        setattr(cfg, attr, v)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    return parse_config_text(path.read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig) -> str:
    """Inverse of parse_config_text (one canonical key per attribute)."""
    seen, lines = set(), []
    for key, attr in CONFIG_KEYS.items():
        if attr in seen:
            continue
        seen.add(attr)
        v = getattr(cfg, attr)
        lines.append(f"{key} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


# --- deterministic JSON ---------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + "  " * indent + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    return json.dumps(obj)


def to_json(obj) -> str:
    """JSON text with keys in insertion order and floats at 17 significant digits."""
    return _encode(_plain(obj)) + "\n"


def fmt(v) -> str:
    return format(float(v), ".17g")


# --- decision-boundary grid -------------------------------------------------------


def padded_bounds(X, pad: float = 0.10):
    """Bounding box of 2-D points, widened by ``pad`` of the range on each side."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ConfigError("decision boundaries need exactly two features")
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (lo[0] - pad * span[0], hi[0] + pad * span[0], lo[1] - pad * span[1], hi[1] + pad * span[1])


def boundary_grid(predictor, bounds, resolution: int, n_inputs: int | None = 2) -> np.ndarray:
    """Evaluate ``predictor`` on a resolution x resolution grid, row-major in y then x.

    ``predictor`` maps an (m, 2) array to (classes, confidences).  Returns an
    (r*r, 4) array of x, y, class, confidence.
    """
    if n_inputs != 2:
        raise ConfigError(f"boundary grids need a 2-feature predictor, got {n_inputs}")
    if resolution < 2:
        raise ConfigError("resolution must be >= 2")
    xmin, xmax, ymin, ymax = bounds
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.c_[gx.ravel(), gy.ravel()]
    cls, conf = predictor(pts)
    return np.c_[pts, np.asarray(cls, dtype=np.float64), np.asarray(conf, dtype=np.float64)]


def write_boundary_csv(path, grid) -> None:
    lines = ["x,y,class,confidence"]
    for x, y, c, p in grid:
        lines.append(f"{fmt(x)},{fmt(y)},{int(c)},{fmt(p)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_predictions_csv(path, y_true, y_pred) -> None:
    lines = ["index,y_true,y_pred"]
    lines += [f"{i},{int(t)},{int(p)}" for i, (t, p) in enumerate(zip(y_true, y_pred))]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions_csv(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"predictions file {str(path)!r} not found")
    rows = [ln.split(",") for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    header = [h.strip() for h in rows[0]]
    if "y_true" not in header or "y_pred" not in header:
        raise ConfigError("predictions CSV needs y_true and y_pred columns")
    it, ip = header.index("y_true"), header.index("y_pred")
    try:
        y_true = np.array([int(r[it]) for r in rows[1:]], dtype=np.int64)
        y_pred = np.array([int(r[ip]) for r in rows[1:]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"bad predictions row in {path}: {exc}") from None
    return y_true, y_pred


# --- hashing ------------------------------------------------------------------------


def git_blob_hash(content: bytes) -> str:
    """Hash of ``content`` as git would store it as a blob."""
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()


def _dataset_bytes(ds: Dataset) -> bytes:
    rows = [",".join(fmt(v) for v in row) + f",{lab}" for row, lab in zip(ds.features, ds.labels)]
    return ("\n".join(rows) + "\n").encode()


def input_hashes(cfg: ExperimentConfig, ds: Dataset) -> dict:
    key = cfg.dataset.lower()
    key = "seeds" if key == "seed" else key
    if key in BUILTIN_CSV:
        content, source = data_path(BUILTIN_CSV[key]).read_bytes(), f"builtin:{BUILTIN_CSV[key]}"
    elif is_synthetic(key):
        content, source = _dataset_bytes(ds), f"synthetic:{key}"
    else:
        content, source = Path(cfg.dataset).read_bytes(), str(Path(cfg.dataset).resolve())
    return {"source": source, "sha256": hashlib.sha256(content).hexdigest(), "git_blob": git_blob_hash(content)}


# --- the pipeline ---------------------------------------------------------------------


@dataclass
class RunResult:
    metrics: dict
    manifest: dict
    out_dir: Path | None
    model: object = None
    curve: object = None
    gram: np.ndarray | None = None
    boundary: np.ndarray | None = None


def _label_column(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def encoding_circuit(cfg: ExperimentConfig, n_features: int, n_classes: int):
    """The circuit whose rotations the features will drive (None for the classical SVM)."""
    if cfg.task == "qksvm":
        return build(FeatureMapSpec(cfg.resolved_arch, cfg.hadamard, n_features))
    if cfg.task == "qnn":
        return qnn_mod.QnnModel(cfg.resolved_arch, cfg.layers, n_features, max(min(n_classes, 3), 2),
                                hadamard_every_layer=cfg.hadamard_every_layer).circuit
    return None


def prepare_data(cfg: ExperimentConfig):
    """Load, split and preprocess.  Returns (raw dataset, train, test, preprocessor)."""
    ds = load_dataset(cfg.dataset, seed=[cfg.seed, 0], n=cfg.n_samples, noise_sd=cfg.noise,
                      label_column=_label_column(cfg.label_column), has_header=cfg.header,
                      delimiter=cfg.resolved_delimiter)
    if ds.n_classes < 2:
        raise ValidationError("dataset has fewer than two classes")
    train_raw, test_raw = split(ds, cfg.train_fraction, cfg.stratified, seed=[cfg.seed, 1])
    pre = fit_preprocessor(train_raw.features, cfg.scale, cfg.resolved_pca(ds.features.shape[1]),
                           cfg.angle_scale or 1.0)
    if cfg.angle_scale is None:
        circuit = encoding_circuit(cfg, pre.transform(train_raw.features[:1]).shape[1], ds.n_classes)
        if circuit is not None:
            pre.angle_scale = auto_angle_scale(pre.transform(train_raw.features), circuit)
    train = train_raw.with_features(pre.transform(train_raw.features))
    test = test_raw.with_features(pre.transform(test_raw.features))
    return ds, train, test, pre


def _fit_qksvm(cfg, train, test):
    spec = FeatureMapSpec(cfg.resolved_arch, cfg.hadamard, train.features.shape[1])
    shots_rng = np.random.default_rng([cfg.seed, 2])
    K = gram(train.features, spec, cfg.shots, shots_rng)
    model = svm_mod.ovo_fit(K, train.labels, cfg.C, cfg.tol)

    def kernel_rows(X):
        return gram_cross(X, train.features, spec, cfg.shots, shots_rng)

    def predictor(X):
        rows = kernel_rows(X)
        return svm_mod.ovo_predict(model, rows), svm_mod.ovo_confidence(model, rows)

    train_pred = svm_mod.ovo_predict(model, K)
    test_pred = svm_mod.ovo_predict(model, kernel_rows(test.features))
    n_sv = len(set().union(*(set(model.pair_indices[p][m.support_indices].tolist())
                             for p, m in model.pairwise_models.items())))
    extra = {"feature_map": {"arch": spec.arch.value, "hadamard": spec.use_hadamard,
                             "n_features": spec.n_features, "n_chunks": spec.n_chunks},
             "n_support": n_sv}
    return model, K, train_pred, test_pred, predictor, extra, None


def _fit_svm(cfg, train, test):
    gamma = cfg.gamma if cfg.gamma is not None else svm_mod.scale_gamma(train.features)
    K = svm_mod.rbf_gram(train.features, train.features, gamma)
    model = svm_mod.ovo_fit(K, train.labels, cfg.C, cfg.tol)

    def predictor(X):
        rows = svm_mod.rbf_gram(X, train.features, gamma)
        return svm_mod.ovo_predict(model, rows), svm_mod.ovo_confidence(model, rows)

    train_pred = svm_mod.ovo_predict(model, K)
    test_pred = svm_mod.ovo_predict(model, svm_mod.rbf_gram(test.features, train.features, gamma))
    return model, K, train_pred, test_pred, predictor, {"gamma": gamma}, None


def _fit_qnn(cfg, train, test):
    k = train.n_classes if test is None else max(train.n_classes, test.n_classes)
    if k > 3:
        raise ConfigError(f"the QNN reads out at most 3 classes, dataset has {k}")
    model = qnn_mod.QnnModel(cfg.resolved_arch, cfg.layers, train.features.shape[1], max(k, 2),
                             hadamard_every_layer=cfg.hadamard_every_layer)
    tcfg = qnn_mod.TrainConfig(cfg.lr, cfg.rms_gamma, cfg.epsilon, cfg.batch, cfg.epochs,
                               cfg.restart_threshold, cfg.max_restarts, cfg.seed)
    trained, curve = qnn_mod.train(model, train, test, tcfg)

    def predictor(X):
        p = qnn_mod.forward(trained, X)
        return np.argmax(p, axis=1), p.max(axis=1)

    extra = {"arch": trained.arch.value, "layers": trained.n_layers, "n_params": trained.n_params,
             "epochs_run": len(curve), "best_epoch": curve.best_epoch, "restarts": curve.restarts}
    return (trained, None, qnn_mod.predict(trained, train.features),
            qnn_mod.predict(trained, test.features), predictor, extra, curve)


_FITTERS = {"qksvm": _fit_qksvm, "svm": _fit_svm, "qnn": _fit_qnn}


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """ingest -> preprocess -> fit -> evaluate, then write the output files."""
    cfg.validate()
    t0 = time.perf_counter()
    ds, train, test, pre = prepare_data(cfg)
    k = ds.n_classes
    model, K, train_pred, test_pred, predictor, extra, curve = _FITTERS[cfg.task](cfg, train, test)
    report = compute_metrics(test.labels, test_pred, k)

    boundary = None
    if cfg.boundary_res:
        bounds = padded_bounds(ds.features) if ds.features.shape[1] == 2 else None
        if bounds is None:
            raise ConfigError("decision boundaries need a dataset with exactly two features")
        boundary = boundary_grid(lambda P: predictor(pre.transform(P)), bounds, cfg.boundary_res,
                                 ds.features.shape[1])

    metrics = {
        "task": cfg.task,
        "dataset": ds.name or cfg.dataset,
        "seed": cfg.seed,
        "n_train": len(train),
        "n_test": len(test),
        "n_features": int(train.features.shape[1]),
        "n_classes": k,
        "class_names": ds.class_names,
        "angle_scale": pre.angle_scale,
        "train_accuracy": float(np.mean(train_pred == train.labels)),
        **report.to_dict(),
        **extra,
    }
    result = RunResult(metrics, {}, None, model, curve, K, boundary)
    wall = time.perf_counter() - t0
    result.manifest = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "inputs": input_hashes(cfg, ds),
        "versions": {"qutritml": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "wall_time_s": wall,
        "outputs": [],
    }
    if write:
        _write_outputs(cfg, result, test.labels, test_pred)
    return result


def _write_outputs(cfg, result: RunResult, y_true, y_pred):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    names = ["metrics.json", "predictions.csv"]
    (out / "metrics.json").write_text(to_json(result.metrics), encoding="utf-8")
    write_predictions_csv(out / "predictions.csv", y_true, y_pred)
    if cfg.write_gram and result.gram is not None:
        write_gram_csv(out / "gram.csv", result.gram)
        names.append("gram.csv")
    if result.boundary is not None:
        write_boundary_csv(out / "boundary.csv", result.boundary)
        names.append("boundary.csv")
    if result.curve is not None:
        (out / "curve.csv").write_text(result.curve.to_csv(), encoding="utf-8")
        names.append("curve.csv")
    if cfg.task == "qnn" and result.model is not None:
        (out / "model.txt").write_text(qnn_mod.dumps(result.model), encoding="utf-8")
        names.append("model.txt")
    elif result.model is not None:
        (out / "model.txt").write_text(svm_mod.dumps(result.model), encoding="utf-8")
        names.append("model.txt")
    result.manifest["outputs"] = names + ["manifest.json"]
    (out / "manifest.json").write_text(to_json(result.manifest), encoding="utf-8")
    result.out_dir = out
