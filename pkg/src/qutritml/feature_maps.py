"""Gell-Mann rotation encoding circuits for one and two qutrits."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .gates import Circuit, Constant, Feature, Gate, GateKind, execute, had, rot


class Arch(str, Enum):
    SINGLE = "single"
    TWO = "two"


@dataclass(frozen=True)
class FeatureMapSpec:
    arch: Arch = Arch.TWO
    use_hadamard: bool = True
    n_features: int = 4

    def __post_init__(self):
        object.__setattr__(self, "arch", Arch(self.arch))
        if self.n_features < 1:
            raise ValidationError("n_features must be >= 1")

    @property
    def n_chunks(self) -> int:
        return -(-self.n_features // 4)


def feature_chunks(n_features: int):
    """Bindings for each 4-slot encoding block.

    Fewer than four features are cycled (x1, x2, x1, x2 for two features);
    otherwise features fill consecutive blocks of four and the last block is
    padded with zero angles.
    """
    if n_features < 4:
        return [tuple(Feature(i % n_features) for i in range(4))]
    chunks = []
    for start in range(0, n_features, 4):
        chunk = [Feature(i) if i < n_features else Constant(0.0) for i in range(start, start + 4)]
        chunks.append(tuple(chunk))
    return chunks


def build_single_qutrit_map(spec: FeatureMapSpec) -> Circuit:
    if spec.arch is not Arch.SINGLE:
        raise ValidationError("spec is not a single-qutrit map")
    gates: list[Gate] = [had(0)] if spec.use_hadamard else []
    for chunk in feature_chunks(spec.n_features):
        gates += [rot(a + 1, 0, b) for a, b in enumerate(chunk)]
    return Circuit(1, gates, n_features=spec.n_features)


def build_two_qutrit_map(spec: FeatureMapSpec) -> Circuit:
    if spec.arch is not Arch.TWO:
        raise ValidationError("spec is not a two-qutrit map")
    gates: list[Gate] = [had(0), had(1)] if spec.use_hadamard else []
    for chunk in feature_chunks(spec.n_features):
        gates += [rot(a + 1, 0, b) for a, b in enumerate(chunk)]
        gates += [rot(a + 5, 1, b) for a, b in enumerate(chunk)]
        gates.append(Gate(GateKind.LZZ, (0, 1)))
    return Circuit(2, gates, n_features=spec.n_features)


def build(spec: FeatureMapSpec) -> Circuit:
    if spec.arch is Arch.SINGLE:
        return build_single_qutrit_map(spec)
    return build_two_qutrit_map(spec)


def embed(spec: FeatureMapSpec, x) -> np.ndarray:
    """|phi(x)> = U_phi(x)|0...0>."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_features,):
        raise ValidationError(f"expected {spec.n_features} features, got shape {x.shape}")
    return execute(build(spec), x)


def feature_rotation_count(circuit: Circuit) -> int:
    """Largest number of feature-carrying rotations acting on any one qutrit."""
    counts = [0] * circuit.n_qutrits
    for g in circuit.gates:
        if g.kind is GateKind.ROTATION and isinstance(g.param, Feature):
            counts[g.targets[0]] += 1
    return max(counts)


def auto_angle_scale(X, circuit: Circuit) -> float:
    """Bandwidth rule for rotation encodings: 1 / sqrt(m * Var X).

    m counts the feature rotations on the busiest qutrit, so the summed
    encoded angle variance stays O(1) however wide or deep the circuit is.
    Same idea as the 1 / (d Var X) width of an RBF kernel.
    """
    X = np.asarray(X, dtype=np.float64)
    var = float(X.var(axis=0).mean()) if X.shape[0] > 1 else 1.0
    m = feature_rotation_count(circuit)
    if m == 0 or var <= 0:
        return 1.0
    return 1.0 / np.sqrt(m * var)
