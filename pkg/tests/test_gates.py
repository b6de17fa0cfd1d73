import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qutritml.errors import ValidationError
from qutritml.gates import (
    GELL_MANN,
    Circuit,
    Constant,
    Feature,
    Gate,
    GateKind,
    Weight,
    ent_l1l8,
    execute,
    execute_batch,
    gell_mann,
    had,
    hadamard3,
    lz,
    lzz,
    multi_rotation,
    rot,
    rotation,
)
from qutritml.linalg import is_unitary, kron

I3 = np.eye(3)
OMEGA = np.exp(2j * np.pi / 3)


def test_gell_mann_listing():
    assert np.array_equal(gell_mann(1), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    s = 1 / np.sqrt(3)
    assert np.allclose(gell_mann(8), np.diag([s, s, -2 * s]), atol=0)
    for a in range(1, 9):
        m = gell_mann(a)
        assert np.array_equal(m, m.conj().T)
        assert abs(np.trace(m)) < 1e-15


def test_gell_mann_orthogonality():
    for i in range(8):
        for j in range(8):
            t = np.trace(GELL_MANN[i] @ GELL_MANN[j])
            assert abs(t - 2 * (i == j)) <= 1e-14


@pytest.mark.parametrize("bad", [0, 9, -1, 2.5, True])
def test_gell_mann_bad_index(bad):
    with pytest.raises(ValidationError):
        gell_mann(bad)


def test_gell_mann_table_is_read_only():
    with pytest.raises(ValueError):
        GELL_MANN[0, 0, 0] = 5
    m = gell_mann(1)
    m[0, 0] = 7
    assert GELL_MANN[0, 0, 0] == 0


def test_rotation_examples():
    for a in range(1, 9):
        assert np.allclose(rotation(a, 0.0), I3)
    assert np.allclose(rotation(1, np.pi), np.diag([-1, -1, 1]), atol=1e-14)
    w = 0.83
    s = 1 / np.sqrt(3)
    assert np.allclose(rotation(8, w), np.diag(np.exp([-1j * w * s, -1j * w * s, 2j * w * s])), atol=1e-14)


def test_rotation_matches_scipy(rng):
    for a in range(1, 9):
        w = rng.normal() * 3
        assert np.allclose(rotation(a, w), scipy.linalg.expm(-1j * w * gell_mann(a)), atol=1e-12)


def test_rotation_stack(rng):
    ws = rng.normal(size=5)
    stack = rotation(4, ws)
    assert stack.shape == (5, 3, 3)
    for w, m in zip(ws, stack):
        assert np.allclose(m, rotation(4, w), atol=1e-15)


def test_rotation_rejects_non_finite():
    with pytest.raises(ValidationError):
        rotation(1, np.nan)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.floats(-20, 20))
def test_rotation_inverse(a, w):
    assert np.allclose(rotation(a, w) @ rotation(a, -w), I3, atol=1e-12)


def test_multi_rotation_examples():
    assert np.allclose(multi_rotation(np.zeros(8)), I3)
    w = np.zeros(8)
    w[0] = 0.4
    assert np.allclose(multi_rotation(w), rotation(1, 0.4), atol=1e-12)
    w = np.array([0.3, 0.7, 0, 0, 0, 0, 0, 0])
    oracle = scipy.linalg.expm(-1j * (0.3 * gell_mann(1) + 0.7 * gell_mann(2)))
    assert np.allclose(multi_rotation(w), oracle, atol=1e-12)


def test_multi_rotation_one_hot():
    for a in range(1, 9):
        w = np.zeros(8)
        w[a - 1] = 1.3
        assert np.max(np.abs(multi_rotation(w) - rotation(a, 1.3))) < 1e-12


def test_multi_rotation_bad_shape():
    with pytest.raises(ValidationError):
        multi_rotation(np.zeros(7))


def test_hadamard():
    h = hadamard3()
    assert np.allclose(h[:, 0], np.ones(3) / np.sqrt(3))
    assert np.isclose(h[1, 1] * np.sqrt(3), OMEGA)
    assert np.isclose(OMEGA, complex(-0.5, np.sqrt(3) / 2))
    assert np.max(np.abs(h.conj().T @ h - I3)) < 1e-12


def test_lz():
    assert np.allclose(gell_mann(3) + np.sqrt(3) * gell_mann(8), lz(), atol=1e-15)
    assert np.allclose(lz(), np.diag([2, 0, -2]))


def test_lzz_entries():
    u = lzz()
    assert np.isclose(u[0, 0], np.exp(-4j))
    assert np.isclose(u[4, 4], 1)
    assert np.isclose(u[2, 2], np.exp(4j))
    assert np.allclose(u, scipy.linalg.expm(-1j * kron(lz(), lz())), atol=1e-10)


def test_ent_l1l8():
    u = ent_l1l8()
    assert is_unitary(u)
    assert np.allclose(u, scipy.linalg.expm(1j * kron(gell_mann(1), gell_mann(8))), atol=1e-10)
    # first digit 2 is annihilated by lambda_1 (x) lambda_8
    for q in range(3):
        e = np.zeros(9)
        e[6 + q] = 1
        assert np.allclose(u @ e, e)


def test_cached_matrices_are_copies():
    u = lzz()
    u[:] = 0
    assert np.isclose(lzz()[0, 0], np.exp(-4j))


def test_all_gates_unitary(rng):
    for a in range(1, 9):
        assert is_unitary(rotation(a, rng.normal()))
    for m in (hadamard3(), lzz(), ent_l1l8()):
        assert is_unitary(m)
    for _ in range(500):
        assert is_unitary(multi_rotation(rng.normal(size=8) * 3))


def test_gate_validation():
    with pytest.raises(ValidationError):
        Gate(GateKind.LZZ, (0,))
    with pytest.raises(ValidationError):
        Gate(GateKind.ROTATION, (0,), 1, None)
    with pytest.raises(ValidationError):
        Gate(GateKind.ROTATION, (0,), 9, Constant(0.0))
    with pytest.raises(ValidationError):
        Circuit(1, [rot(1, 0, Feature(2))], n_features=2)
    with pytest.raises(ValidationError):
        Circuit(1, [rot(1, 0, Weight(0))])
    with pytest.raises(ValidationError):
        Circuit(1, [Gate(GateKind.LZZ, (0, 1))])
    with pytest.raises(ValidationError):
        Circuit(3)


def test_gate_dagger():
    g = rot(3, 0, Constant(0.7))
    assert np.allclose(g.dagger().matrix(0.7), g.matrix(0.7).conj().T)
    for kind, targets in ((GateKind.HADAMARD, (0,)), (GateKind.LZZ, (0, 1)), (GateKind.ENT_L1L8, (0, 1))):
        g = Gate(kind, targets)
        assert np.allclose(g.dagger().matrix() @ g.matrix(), np.eye(g.matrix().shape[0]), atol=1e-12)


def test_execute_examples():
    assert np.array_equal(execute(Circuit(2)), np.eye(9)[0])
    assert np.allclose(execute(Circuit(1, [had(0)])), np.ones(3) / np.sqrt(3))
    fig4 = Circuit(1, [had(0)] + [rot(a + 1, 0, Feature(a)) for a in range(4)], n_features=4)
    assert np.allclose(execute(fig4, np.zeros(4)), np.ones(3) / np.sqrt(3))


def test_execute_binds_features_weights_constants(rng):
    x, w = rng.normal(size=2), rng.normal(size=1)
    c = Circuit(1, [rot(1, 0, Feature(1)), rot(2, 0, Weight(0)), rot(3, 0, Constant(0.25))],
                n_features=2, n_weights=1)
    expect = rotation(3, 0.25) @ rotation(2, w[0]) @ rotation(1, x[1]) @ np.eye(3)[0]
    assert np.allclose(execute(c, x, w), expect, atol=1e-14)


def test_execute_deterministic(rng):
    x = rng.normal(size=4)
    c = Circuit(2, [had(0), rot(5, 1, Feature(3)), Gate(GateKind.LZZ, (0, 1)), rot(2, 0, Feature(0))],
                n_features=4)
    assert np.array_equal(execute(c, x), execute(c, x))


def test_execute_argument_errors():
    c = Circuit(1, [rot(1, 0, Feature(0))], n_features=1)
    with pytest.raises(ValidationError):
        execute(c, [1.0, 2.0])
    with pytest.raises(ValidationError):
        execute(c, [np.inf])
    with pytest.raises(ValidationError):
        execute(c, [[1.0], [2.0]])


def test_execute_batch_matches_single(rng):
    c = Circuit(2, [had(0), had(1), rot(1, 0, Feature(0)), rot(6, 1, Feature(1)),
                    Gate(GateKind.ENT_L1L8, (0, 1)), rot(4, 1, Weight(0))], n_features=2, n_weights=1)
    X = rng.normal(size=(6, 2))
    w = rng.normal(size=1)
    batch = execute_batch(c, X, w)
    for x, s in zip(X, batch):
        assert np.allclose(s, execute(c, x, w), atol=1e-14)


def test_circuit_dagger_inverts(rng):
    c = Circuit(2, [had(0), rot(7, 1, Feature(0)), Gate(GateKind.LZZ, (0, 1)),
                    Gate(GateKind.ENT_L1L8, (0, 1)), rot(8, 0, Feature(1))], n_features=2)
    x = rng.normal(size=2)
    back = execute_batch(c.dagger(), x[None], initial=execute(c, x)[None])[0]
    assert np.allclose(back, np.eye(9)[0], atol=1e-12)
