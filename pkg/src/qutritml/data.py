"""Datasets, synthetic generators and preprocessing (standardization, PCA, splits)."""
from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataParseError, DatasetUnavailable, ValidationError
from .linalg import symmetric_eig


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] | None = None
    class_names: list[str] | None = None
    name: str = ""

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValidationError("features and labels have different lengths")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("non-finite feature values")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def take(self, idx) -> Dataset:
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def with_features(self, features, feature_names=None) -> Dataset:
        return replace(self, features=features, feature_names=feature_names)


def relabel(raw_labels):
    """Map labels to 0..k-1 in order of first appearance."""
    mapping: dict = {}
    out = np.empty(len(raw_labels), dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out, [str(k) for k in mapping]


def load_csv(path, label_column=-1, has_header: bool = True, name: str = "",
             delimiter: str | None = ",") -> Dataset:
    """Read a delimited table; every column except the label is numeric.

    ``label_column`` is a column name (needs a header) or an integer index
    (negative counts from the end).  ``delimiter=None`` splits on runs of
    whitespace, as in the UCI ``seeds_dataset.txt`` file.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"data file {str(path)!r} not found")
    with path.open(newline="", encoding="utf-8") as fh:
        if delimiter is None:
            rows = [ln.split() for ln in fh if ln.strip()]
        else:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataParseError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]] if has_header else None
    body = rows[1:] if has_header else rows
    width = len(rows[0])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise ConfigError(f"{path}: label column {label_column!r} not found")
        lab = header.index(label_column)
    else:
        lab = int(label_column)
        if not -width <= lab < width:
            raise ConfigError(f"{path}: label column {lab} out of range for {width} columns")
        lab %= width
    feats, raw = [], []
    for r_i, row in enumerate(body):
        line = r_i + (2 if has_header else 1)
        if len(row) != width:
            raise DataParseError(f"{path}:{line}: expected {width} cells, got {len(row)}")
        vals = []
        for c_i, cell in enumerate(row):
            if c_i == lab:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataParseError(
                    f"{path}:{line}: column {c_i}: cannot parse {cell.strip()!r} as a number"
                ) from None
            if not np.isfinite(v):
                raise DataParseError(f"{path}:{line}: column {c_i}: non-finite value {cell!r}")
            vals.append(v)
        feats.append(vals)
        raw.append(row[lab].strip())
    labels, class_names = relabel(raw)
    names = [h for i, h in enumerate(header) if i != lab] if header else None
    return Dataset(np.array(feats).reshape(len(body), width - 1), labels, names, class_names,
                   name or path.stem)


# --- bundled UCI tables ---------------------------------------------------------

BUILTIN_CSV = {
    "iris": "iris.csv",
    "wine": "wine.csv",
    "glass": "glass.csv",
    "seeds": "seeds.csv",
}
ALIASES = {"seed": "seeds"}


def data_path(filename: str) -> Path:
    return Path(str(resources.files("qutritml") / "data" / filename))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_checksums() -> dict[str, str]:
    out = {}
    for line in data_path("SHA256SUMS").read_text().splitlines():
        if line.strip():
            digest, fname = line.split()
            out[fname] = digest
    return out


def verify_builtin() -> dict[str, bool]:
    """Compare each present bundled table against SHA256SUMS."""
    sums = read_checksums()
    return {f: data_path(f).is_file() and sha256(data_path(f)) == d for f, d in sums.items()}


def top_classes(ds: Dataset, k: int) -> Dataset:
    """Keep the k most frequent classes (ties -> earlier label), relabelled 0..k-1."""
    counts = np.bincount(ds.labels)
    keep = sorted(np.argsort(-counts, kind="stable")[:k].tolist())
    mask = np.isin(ds.labels, keep)
    remap = {old: new for new, old in enumerate(keep)}
    sub = ds.take(mask)
    sub.labels = np.array([remap[v] for v in sub.labels], dtype=np.int64)
    if ds.class_names:
        sub.class_names = [ds.class_names[i] for i in keep]
    return sub


def load_builtin(name: str) -> Dataset:
    """One of the bundled tables: iris, wine, glass (three largest classes), seeds."""
    key = ALIASES.get(name.lower(), name.lower())
    if key not in BUILTIN_CSV:
        raise ConfigError(f"unknown dataset {name!r}")
    if not data_path(BUILTIN_CSV[key]).is_file():
        raise DatasetUnavailable(
            f"the bundled {key!r} table is not present in this installation; pass the UCI file "
            f"directly (e.g. load_csv(path, has_header=False, delimiter=None) or --dataset PATH)"
        )
    ds = load_csv(data_path(BUILTIN_CSV[key]), label_column="class", name=key)
    if key == "glass":
        ds = top_classes(ds, 3)
    return ds


# --- synthetic 2-D problems -----------------------------------------------------


def make_xor(n: int = 400, noise_sd: float = 0.05, seed=0, quadrants: bool = False) -> Dataset:
    """Uniform points on [-1, 1]^2 labelled (x > 0) xor (y > 0), then jittered.

    ``quadrants=True`` draws n // 4 points per quadrant (remainder spread from
    the first quadrant on), keeping every point off the axes.
    """
    if n < 4 or noise_sd < 0:
        raise ValidationError("need n >= 4 and noise_sd >= 0")
    rng = np.random.default_rng(seed)
    if quadrants:
        counts = [n // 4 + (1 if q < n % 4 else 0) for q in range(4)]
        signs = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
        pts = [rng.uniform(0.05, 1.0, size=(c, 2)) * s for c, s in zip(counts, signs)]
        X = np.concatenate(pts)
        X = X[rng.permutation(n)]
    else:
        X = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(np.int64)
    X = X + rng.normal(0.0, noise_sd, size=X.shape) if noise_sd > 0 else X
    return Dataset(X, y, ["x", "y"], ["0", "1"], "xor")


def make_moons(n: int = 400, noise_sd: float = 0.15, seed=0) -> Dataset:
    """Two interleaving half circles."""
    if n < 4 or noise_sd < 0:
        raise ValidationError("need n >= 4 and noise_sd >= 0")
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0, np.pi, n_out)
    t_in = np.linspace(0, np.pi, n_in)
    X = np.concatenate([
        np.c_[np.cos(t_out), np.sin(t_out)],
        np.c_[1 - np.cos(t_in), 1 - np.sin(t_in) - 0.5],
    ])
    y = np.r_[np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)]
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]
    if noise_sd > 0:
        X = X + rng.normal(0.0, noise_sd, size=X.shape)
    return Dataset(X, y, ["x", "y"], ["0", "1"], "moons")


def make_circles(n: int = 400, noise_sd: float = 0.10, factor: float = 0.5, seed=0) -> Dataset:
    """Outer unit circle (class 0) around an inner circle of radius ``factor`` (class 1)."""
    if n < 4 or noise_sd < 0:
        raise ValidationError("need n >= 4 and noise_sd >= 0")
    if not 0 < factor < 1:
        raise ValidationError("factor must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0, 2 * np.pi, n_out, endpoint=False)
    t_in = np.linspace(0, 2 * np.pi, n_in, endpoint=False)
    X = np.concatenate([
        np.c_[np.cos(t_out), np.sin(t_out)],
        factor * np.c_[np.cos(t_in), np.sin(t_in)],
    ])
    y = np.r_[np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)]
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]
    if noise_sd > 0:
        X = X + rng.normal(0.0, noise_sd, size=X.shape)
    return Dataset(X, y, ["x", "y"], ["0", "1"], "circles")


SYNTHETIC = {"xor": make_xor, "moons": make_moons, "circles": make_circles}


def load_dataset(name_or_path: str, seed=0, n: int = 400, noise_sd: float | None = None,
                 label_column=-1, has_header: bool = True, delimiter: str | None = ",") -> Dataset:
    """Resolve a dataset name (bundled or synthetic) or a CSV path.

    ``noise_sd=None`` keeps each generator's default jitter.
    """
    key = ALIASES.get(str(name_or_path).lower(), str(name_or_path).lower())
    if key in SYNTHETIC:
        kw = {} if noise_sd is None else {"noise_sd": noise_sd}
        return SYNTHETIC[key](n=n, seed=seed, **kw)
    if key in BUILTIN_CSV:
        return load_builtin(key)
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(f"no dataset or file named {name_or_path!r}")
    return load_csv(path, label_column=label_column, has_header=has_header, name=path.stem,
                    delimiter=delimiter)


def is_synthetic(name: str) -> bool:
    return str(name).lower() in SYNTHETIC


# --- preprocessing --------------------------------------------------------------


@dataclass
class ScalerParams:
    mean: np.ndarray
    scale: np.ndarray


def scaler_fit(X) -> ScalerParams:
    """Per-column mean and population standard deviation."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        raise ValidationError("scaler needs at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    const = std <= 1e-12 * np.maximum(np.abs(mean), 1.0)
    if np.any(const):
        warnings.warn(f"constant feature columns {np.flatnonzero(const).tolist()}; scale set to 1",
                      RuntimeWarning)
        std = np.where(const, 1.0, std)
    return ScalerParams(mean, std)


def scaler_transform(params: ScalerParams, X) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - params.mean) / params.scale


def scaler_inverse(params: ScalerParams, Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) * params.scale + params.mean


@dataclass
class PcaParams:
    components: np.ndarray  # d x k, orthonormal columns
    explained_variance: np.ndarray  # descending, length k
    mean: np.ndarray
    all_variances: np.ndarray = field(default=None, repr=False)


def pca_fit(X, k: int) -> PcaParams:
    """Top-k eigenvectors of the sample covariance (Jacobi eigensolver)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, d = X.shape
    if not 1 <= k <= d:
        raise ConfigError(f"cannot keep {k} components of {d} features")
    if n < k + 1:
        raise ValidationError(f"PCA with k={k} needs at least {k + 1} rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    evals, vecs = symmetric_eig(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    vecs = vecs[:, order]
    # deterministic sign: largest-magnitude loading positive
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(d)])
    return PcaParams(vecs[:, :k].copy(), evals[:k].copy(), mean, evals)


def pca_transform(params: PcaParams, X) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - params.mean) @ params.components


def pca_inverse(params: PcaParams, Z) -> np.ndarray:
    return np.asarray(Z) @ params.components.T + params.mean


# --- splitting ------------------------------------------------------------------


def split(ds: Dataset, train_fraction: float = 0.7, stratified: bool = True, seed=0):
    """Seeded train/test partition; stratified allocation rounds per class."""
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n = len(ds)
    if stratified:
        train, test = [], []
        for c in np.unique(ds.labels):
            idx = np.flatnonzero(ds.labels == c)
            if idx.size < 2:
                raise ValidationError(f"class {c} has fewer than 2 members; cannot stratify")
            idx = idx[rng.permutation(idx.size)]
            n_tr = min(max(int(round(train_fraction * idx.size)), 1), idx.size - 1)
            train.append(idx[:n_tr])
            test.append(idx[n_tr:])
        train = np.concatenate(train)
        test = np.concatenate(test)
        train = train[rng.permutation(train.size)]
        test = test[rng.permutation(test.size)]
    else:
        perm = rng.permutation(n)
        n_tr = min(max(int(round(train_fraction * n)), 1), n - 1)
        train, test = perm[:n_tr], perm[n_tr:]
    return ds.take(train), ds.take(test)


@dataclass
class Preprocessor:
    """Fitted standardize -> [PCA(k) -> standardize] chain."""

    scaler: ScalerParams | None = None
    pca: PcaParams | None = None
    post_scaler: ScalerParams | None = None
    angle_scale: float = 1.0  # final multiplier; the features become rotation angles

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.scaler is not None:
            X = scaler_transform(self.scaler, X)
        if self.pca is not None:
            X = pca_transform(self.pca, X)
        if self.post_scaler is not None:
            X = scaler_transform(self.post_scaler, X)
        return X * self.angle_scale if self.angle_scale != 1.0 else X


def fit_preprocessor(X, scale: bool = True, pca_k: int | None = None,
                     angle_scale: float = 1.0) -> Preprocessor:
    """Fit on training rows only.  PCA output is re-standardized when ``scale``."""
    X = np.asarray(X, dtype=np.float64)
    if pca_k is not None and not 1 <= pca_k <= X.shape[1]:
        raise ConfigError(f"cannot keep {pca_k} components of {X.shape[1]} features")
    if not (np.isfinite(angle_scale) and angle_scale > 0):
        raise ConfigError("angle_scale must be a positive number")
    pre = Preprocessor(angle_scale=float(angle_scale))
    if scale:
        pre.scaler = scaler_fit(X)
        X = scaler_transform(pre.scaler, X)
    if pca_k is not None and pca_k < X.shape[1]:
        pre.pca = pca_fit(X, pca_k)
        X = pca_transform(pre.pca, X)
        if scale:
            pre.post_scaler = scaler_fit(X)
    return pre
