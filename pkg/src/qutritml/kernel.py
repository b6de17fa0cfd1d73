"""Fidelity kernel K(x, x') = |<phi(x')|phi(x)>|^2 via the implicit circuit.

The circuit U_phi(x) is followed by the adjoint circuit U_phi(x')^dagger and
the probability of the all-zeros outcome is read from the exact amplitudes.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .feature_maps import FeatureMapSpec, build
from .gates import execute, execute_batch, run_gates


def _check_width(x, spec: FeatureMapSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (spec.n_features,):
        raise ValidationError(f"expected {spec.n_features} features, got shape {x.shape}")
    return x


def _sample(p, shots, rng):
    if shots is None:
        return p
    rng = np.random.default_rng(rng)
    return rng.binomial(int(shots), np.clip(p, 0.0, 1.0)) / shots


def kernel(x, xp, spec: FeatureMapSpec, shots: int | None = None, rng=None) -> float:
    """Kernel value for one pair.  ``shots`` switches to a sampled estimate."""
    x = _check_width(x, spec)
    xp = _check_width(xp, spec)
    if x.ndim != 1 or xp.ndim != 1:
        raise ValidationError("kernel takes two single feature vectors")
    circuit = build(spec)
    state = execute(circuit, x)
    state = run_gates(circuit.dagger().gates, state, circuit.n_qutrits, xp, ())
    return float(_sample(abs(state[0]) ** 2, shots, rng))


def _rows_against(circuit, adjoint_gates, state, xs):
    """All-zeros probability of U(xs[j])^dagger |state> for every row j."""
    batch = np.broadcast_to(state, (xs.shape[0], state.size)).copy()
    out = run_gates(adjoint_gates, batch, circuit.n_qutrits, xs, ())
    return np.abs(out[:, 0]) ** 2


def gram(X, spec: FeatureMapSpec, shots: int | None = None, rng=None) -> np.ndarray:
    """Symmetric Gram matrix; the upper triangle is evaluated and mirrored."""
    X = np.atleast_2d(_check_width(X, spec))
    n = X.shape[0]
    circuit = build(spec)
    adjoint = circuit.dagger().gates
    states = execute_batch(circuit, X)
    K = np.empty((n, n))
    for i in range(n):
        K[i, i:] = _rows_against(circuit, adjoint, states[i], X[i:])
    if shots is not None:
        gen = np.random.default_rng(rng)
        iu = np.triu_indices(n)
        K[iu] = _sample(K[iu], shots, gen)
    il = np.tril_indices(n, -1)
    K[il] = K.T[il]
    return K


def gram_cross(X_test, X_train, spec: FeatureMapSpec, shots: int | None = None, rng=None):
    """Rectangular kernel matrix, entry (i, j) = kernel(X_test[i], X_train[j])."""
    X_test = np.atleast_2d(_check_width(X_test, spec))
    X_train = np.atleast_2d(_check_width(X_train, spec))
    circuit = build(spec)
    adjoint = circuit.dagger().gates
    states = execute_batch(circuit, X_test)
    K = np.empty((X_test.shape[0], X_train.shape[0]))
    for i, state in enumerate(states):
        K[i] = _rows_against(circuit, adjoint, state, X_train)
    if shots is not None:
        K = _sample(K, shots, rng)
    return K


def write_gram_csv(path, K) -> None:
    """Row-major, header-free CSV with 17 significant digits."""
    np.savetxt(path, np.asarray(K), delimiter=",", fmt="%.17g")


def read_gram_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
