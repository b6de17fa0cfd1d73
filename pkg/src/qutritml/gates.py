"""Qutrit gate set and a small parameterized circuit executor.

Rotations follow R_a(w) = exp(-i w lambda_a).  The two-qutrit entanglers are
fixed (parameter free): LZZ = exp(-i LZ (x) LZ) and EntL1L8 = exp(+i lambda_1 (x) lambda_8);
note the opposite sign convention of the latter.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import ValidationError
from .linalg import apply_unitary, basis_state, exp_from_eig, herm_exp, hermitian_eig, kron

_S3 = 1.0 / np.sqrt(3.0)

GELL_MANN = np.array(
    [
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]],
        [[_S3, 0, 0], [0, _S3, 0], [0, 0, -2 * _S3]],
    ],
    dtype=np.complex128,
)
GELL_MANN.setflags(write=False)


def _check_index(a) -> int:
    if isinstance(a, (bool, np.bool_)) or int(a) != a or not 1 <= int(a) <= 8:
        raise ValidationError(f"Gell-Mann index must be in 1..8, got {a!r}")
    return int(a)


def gell_mann(a: int) -> np.ndarray:
    """The Gell-Mann matrix lambda_a, a in 1..8."""
    return GELL_MANN[_check_index(a) - 1].copy()


@lru_cache(maxsize=None)
def _generator_eig(a: int):
    return hermitian_eig(GELL_MANN[a - 1])


def rotation(a: int, w) -> np.ndarray:
    """exp(-i w lambda_a).  A 1-D array of angles gives a (len(w), 3, 3) stack."""
    a = _check_index(a)
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValidationError("rotation angle must be finite")
    evals, vecs = _generator_eig(a)
    return exp_from_eig(evals, vecs, -w)


def multi_rotation(weights) -> np.ndarray:
    """exp(-i sum_a w_a lambda_a) over all eight generators."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (8,):
        raise ValidationError(f"expected 8 weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    gen = np.tensordot(w, GELL_MANN, axes=1)
    return herm_exp(gen, -1.0)


def hadamard3() -> np.ndarray:
    """Generalized (Fourier) Hadamard on one qutrit."""
    omega = np.exp(2j * np.pi / 3)
    return _S3 * np.array(
        [[1, 1, 1], [1, omega, omega**2], [1, omega**2, omega]], dtype=np.complex128
    )


def lz() -> np.ndarray:
    """LZ = lambda_3 + sqrt(3) lambda_8 = diag(2, 0, -2)."""
    return GELL_MANN[2] + np.sqrt(3.0) * GELL_MANN[7]


@lru_cache(maxsize=None)
def _lzz() -> np.ndarray:
    m = herm_exp(kron(lz(), lz()), -1.0)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _ent_l1l8() -> np.ndarray:
    m = herm_exp(kron(GELL_MANN[0], GELL_MANN[7]), 1.0)
    m.setflags(write=False)
    return m


def lzz() -> np.ndarray:
    """exp(-i LZ (x) LZ): diagonal, entry exp(-i lz_i lz_j) at basis |ij>."""
    return _lzz().copy()


def ent_l1l8() -> np.ndarray:
    """exp(+i lambda_1 (x) lambda_8)."""
    return _ent_l1l8().copy()


# --- circuits ---------------------------------------------------------------


@dataclass(frozen=True)
class Feature:
    index: int


@dataclass(frozen=True)
class Weight:
    index: int


@dataclass(frozen=True)
class Constant:
    value: float


Binding = Union[Feature, Weight, Constant]


class GateKind(str, Enum):
    ROTATION = "rotation"
    HADAMARD = "hadamard"
    LZZ = "lzz"
    ENT_L1L8 = "ent_l1l8"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    generator: int | None = None
    param: Binding | None = None
    adjoint: bool = False

    def __post_init__(self):
        n_targets = 2 if self.kind in (GateKind.LZZ, GateKind.ENT_L1L8) else 1
        if len(self.targets) != n_targets or len(set(self.targets)) != n_targets:
            raise ValidationError(f"{self.kind.value} needs {n_targets} distinct targets")
        if self.kind is GateKind.ROTATION:
            _check_index(self.generator)
            if self.param is None:
                raise ValidationError("rotation gate needs a parameter binding")
            if isinstance(self.param, (Feature, Weight)) and self.param.index < 0:
                raise ValidationError("binding index must be non-negative")

    def matrix(self, angle=None) -> np.ndarray:
        """Gate matrix; ``angle`` (scalar or 1-D array) is required for rotations."""
        if self.kind is GateKind.ROTATION:
            a = np.asarray(angle, dtype=np.float64)
            return rotation(self.generator, -a if self.adjoint else a)
        if self.kind is GateKind.HADAMARD:
            m = hadamard3()
        elif self.kind is GateKind.LZZ:
            m = _lzz()
        else:
            m = _ent_l1l8()
        return m.conj().T if self.adjoint else m

    def dagger(self) -> Gate:
        return Gate(self.kind, self.targets, self.generator, self.param, not self.adjoint)


def rot(generator: int, target: int, param: Binding) -> Gate:
    return Gate(GateKind.ROTATION, (target,), generator, param)


def had(target: int) -> Gate:
    return Gate(GateKind.HADAMARD, (target,))


@dataclass(frozen=True)
class Circuit:
    n_qutrits: int
    gates: tuple[Gate, ...] = ()
    n_features: int = 0
    n_weights: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qutrits not in (1, 2):
            raise ValidationError("only 1 or 2 qutrits are supported")
        for g in self.gates:
            if any(t >= self.n_qutrits for t in g.targets):
                raise ValidationError(f"gate targets {g.targets} exceed {self.n_qutrits} qutrits")
            if isinstance(g.param, Feature) and g.param.index >= self.n_features:
                raise ValidationError(f"feature index {g.param.index} >= {self.n_features}")
            if isinstance(g.param, Weight) and g.param.index >= self.n_weights:
                raise ValidationError(f"weight index {g.param.index} >= {self.n_weights}")

    def dagger(self) -> Circuit:
        """Adjoint circuit: reversed order, every gate conjugate-transposed."""
        return Circuit(
            self.n_qutrits,
            tuple(g.dagger() for g in reversed(self.gates)),
            self.n_features,
            self.n_weights,
        )

    def __len__(self):
        return len(self.gates)


def bind_angle(param: Binding, features, weights):
    """Resolve a binding against (possibly batched) features and weights."""
    if isinstance(param, Feature):
        return features[..., param.index]
    if isinstance(param, Weight):
        return weights[param.index]
    return param.value


def _check_args(circuit: Circuit, features, weights):
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if features.shape[-1:] != (circuit.n_features,) and not (
        circuit.n_features == 0 and features.size == 0
    ):
        raise ValidationError(
            f"circuit expects {circuit.n_features} features, got shape {features.shape}"
        )
    if weights.shape != (circuit.n_weights,):
        raise ValidationError(f"circuit expects {circuit.n_weights} weights, got {weights.shape}")
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(weights))):
        raise ValidationError("features and weights must be finite")
    return features, weights


def run_gates(gates, state, n_qutrits, features, weights):
    for g in gates:
        angle = bind_angle(g.param, features, weights) if g.kind is GateKind.ROTATION else None
        state = apply_unitary(state, g.matrix(angle), g.targets, n_qutrits)
    return state


def execute(circuit: Circuit, features=(), weights=()) -> np.ndarray:
    """Run ``circuit`` on |0...0> and return the final state vector."""
    features, weights = _check_args(circuit, features, weights)
    if features.ndim != 1:
        raise ValidationError("execute takes a single feature vector; use execute_batch")
    state = basis_state(circuit.n_qutrits)
    return run_gates(circuit.gates, state, circuit.n_qutrits, features, weights)


def execute_batch(circuit: Circuit, features, weights=(), initial=None) -> np.ndarray:
    """Run ``circuit`` once per feature row; returns states of shape (B, 3**n).

    ``initial`` optionally supplies per-row starting states (default |0...0>).
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    features, weights = _check_args(circuit, features, weights)
    b = features.shape[0]
    if initial is None:
        state = np.zeros((b, 3**circuit.n_qutrits), dtype=np.complex128)
        state[:, 0] = 1.0
    else:
        state = np.array(initial, dtype=np.complex128, copy=True)
        if state.ndim == 1:
            state = np.broadcast_to(state, (b, state.size)).copy()
    return run_gates(circuit.gates, state, circuit.n_qutrits, features, weights)
