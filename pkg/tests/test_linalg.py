import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian, random_state
from qutritml.errors import ValidationError
from qutritml.gates import gell_mann, hadamard3, lz, multi_rotation
from qutritml.linalg import (
    apply_unitary,
    basis_state,
    herm_exp,
    hermitian_eig,
    inner_product,
    is_unitary,
    kron,
    symmetric_eig,
)

I3 = np.eye(3)


def test_kron_examples():
    assert np.array_equal(kron(I3, I3), np.eye(9))
    assert kron(np.ones((3, 3)), np.ones((3, 3))).shape == (9, 9)
    l3 = gell_mann(3)
    assert np.allclose(np.diag(kron(l3, l3)), [1, -1, 0, -1, 1, 0, 0, 0, 0])


def test_kron_matches_numpy(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    assert np.allclose(kron(a, b), np.kron(a, b), atol=1e-15)


def test_eig_examples():
    assert np.allclose(hermitian_eig(I3)[0], [1, 1, 1])
    assert np.allclose(hermitian_eig(gell_mann(3))[0], [-1, 0, 1], atol=1e-14)
    assert np.allclose(hermitian_eig(lz())[0], [-2, 0, 2], atol=1e-14)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


@pytest.mark.parametrize("d", [3, 9])
def test_eig_reconstruction(rng, d):
    for _ in range(100):
        h = random_hermitian(rng, d)
        e, v = hermitian_eig(h)
        assert np.all(np.diff(e) >= 0)
        assert np.max(np.abs(h - (v * e) @ v.conj().T)) < 1e-10
        assert is_unitary(v)
        # eigenvalues agree with LAPACK
        assert np.allclose(e, np.linalg.eigvalsh(h), atol=1e-10)


def test_symmetric_eig_large(rng):
    a = rng.normal(size=(13, 13))
    s = a + a.T
    e, v = symmetric_eig(s)
    assert np.allclose(e, np.linalg.eigvalsh(s), atol=1e-10)
    assert np.max(np.abs(s - (v * e) @ v.T)) < 1e-10


def test_herm_exp_examples():
    assert np.allclose(herm_exp(gell_mann(1), 0.0), I3)
    u = herm_exp(gell_mann(1), -np.pi / 2)
    assert np.allclose(u @ basis_state(1, 0), [0, -1j, 0], atol=1e-14)
    lzz = herm_exp(kron(lz(), lz()), -1.0)
    assert np.isclose(lzz[0, 0], np.exp(-4j), atol=1e-14)
    assert np.allclose(lzz, np.diag(np.diag(lzz)), atol=1e-14)


def test_herm_exp_matches_scipy(rng):
    for d in (3, 9):
        h = random_hermitian(rng, d)
        c = rng.normal()
        assert np.allclose(herm_exp(h, c), scipy.linalg.expm(1j * c * h), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**31))
def test_herm_exp_group_laws(c1, c2, seed):
    h = random_hermitian(np.random.default_rng(seed), 3)
    assert np.allclose(herm_exp(h, c1) @ herm_exp(h, -c1), I3, atol=1e-10)
    assert np.allclose(herm_exp(h, c1) @ herm_exp(h, c2), herm_exp(h, c1 + c2), atol=1e-10)


@pytest.mark.parametrize("a", range(1, 8))
def test_closed_form_oracle(rng, a):
    lam = gell_mann(a)
    for theta in rng.uniform(-2 * np.pi, 2 * np.pi, 100):
        closed = I3 + lam @ lam * (np.cos(theta) - 1) - 1j * lam * np.sin(theta)
        assert np.allclose(herm_exp(lam, -theta), closed, atol=1e-10)


def test_apply_unitary_examples(rng):
    psi = random_state(rng, 9)
    assert np.allclose(apply_unitary(psi, I3, (1,)), psi)
    out = apply_unitary(basis_state(2, 0), hadamard3(), (0,))
    expect = np.zeros(9, complex)
    expect[[0, 3, 6]] = 1 / np.sqrt(3)
    assert np.allclose(out, expect)
    u = multi_rotation(rng.normal(size=8))
    big = kron(u, multi_rotation(rng.normal(size=8)))
    assert np.allclose(apply_unitary(psi, big, (0, 1)), big @ psi, atol=1e-14)


def test_apply_unitary_on_second_qutrit_and_swapped_targets(rng):
    psi = random_state(rng, 9)
    u = multi_rotation(rng.normal(size=8))
    assert np.allclose(apply_unitary(psi, u, (1,)), kron(I3, u) @ psi, atol=1e-14)
    v = kron(u, I3)
    # targets (1, 0): the first factor acts on qutrit 1
    assert np.allclose(apply_unitary(psi, v, (1, 0)), kron(I3, u) @ psi, atol=1e-14)


def test_apply_unitary_batched(rng):
    states = np.stack([random_state(rng, 9) for _ in range(5)])
    us = np.stack([multi_rotation(rng.normal(size=8)) for _ in range(5)])
    out = apply_unitary(states, us, (1,))
    for s, u, o in zip(states, us, out):
        assert np.allclose(o, kron(I3, u) @ s, atol=1e-14)


def test_apply_unitary_errors(rng):
    with pytest.raises(ValidationError):
        apply_unitary(np.ones(4), I3, (0,))
    with pytest.raises(ValidationError):
        apply_unitary(basis_state(2), I3, (2,))
    with pytest.raises(ValidationError):
        apply_unitary(basis_state(2), np.eye(9), (0,))


def test_norm_preserved_over_50_unitaries(rng):
    psi = random_state(rng, 9)
    for _ in range(50):
        target = (int(rng.integers(2)),)
        psi = apply_unitary(psi, multi_rotation(rng.normal(size=8)), target)
    assert abs(np.linalg.norm(psi) - 1) < 1e-10


def test_inner_product():
    h = hadamard3()
    assert inner_product(basis_state(1, 0), basis_state(1, 1)) == 0
    assert np.isclose(inner_product(basis_state(1, 0), h @ basis_state(1, 0)), 1 / np.sqrt(3))
    with pytest.raises(ValidationError):
        inner_product(np.ones(3), np.ones(9))
