"""Dense complex linear algebra for one- and two-qutrit systems.

States are plain 1-D complex arrays of length 3**n with qutrit 0 as the most
significant ternary digit (basis |q0 q1> <-> index 3*q0 + q1).  Batched states
are 2-D arrays of shape (batch, 3**n).
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
MAX_SWEEPS = 64


def kron(a, b):
    """Kronecker product; entry (i*rb + k, j*cb + l) = a[i, j] * b[k, l]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        raise ValidationError("kron of an empty matrix")
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T)) < tol


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def _jacobi(a: np.ndarray, tol: float = 1e-15) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi sweeps on a Hermitian (or real symmetric) matrix.

    Each (p, q) rotation first removes the phase of a[p, q] with a diagonal
    unitary, then applies the classical real Jacobi rotation, so the same code
    serves both complex Hermitian and real symmetric input.
    """
    a = np.array(a, dtype=np.complex128 if np.iscomplexobj(a) else np.float64)
    n = a.shape[0]
    v = np.eye(n, dtype=a.dtype)
    scale = max(np.max(np.abs(a)), 1e-300)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(MAX_SWEEPS):
        if np.max(np.abs(a[offdiag]), initial=0.0) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag < 1e-18 * scale:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                phase = apq / mag
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                j = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=a.dtype)
                cols = [p, q]
                a[:, cols] = a[:, cols] @ j
                a[cols, :] = j.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                v[:, cols] = v[:, cols] @ j
    evals = np.real(np.diag(a)).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix of dim <= 9."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    if h.shape[0] > 9:
        raise ValidationError("hermitian_eig supports dimension <= 9")
    if not is_hermitian(h):
        raise ValidationError("matrix is not Hermitian")
    return _jacobi(h.astype(np.complex128))


def symmetric_eig(s) -> tuple[np.ndarray, np.ndarray]:
    """Real symmetric eigendecomposition of any size, ascending eigenvalues."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {s.shape}")
    if np.max(np.abs(s - s.T), initial=0.0) > 1e-10 * max(np.max(np.abs(s), initial=0.0), 1.0):
        raise ValidationError("matrix is not symmetric")
    return _jacobi(0.5 * (s + s.T))


def herm_exp(h, c: float) -> np.ndarray:
    """exp(i * c * h) for Hermitian h, via the eigendecomposition."""
    evals, vecs = hermitian_eig(h)
    return exp_from_eig(evals, vecs, c)


def exp_from_eig(evals, vecs, c):
    """exp(i * c * h) from a precomputed eigendecomposition.

    ``c`` may be a scalar or a 1-D array, in which case a stack of matrices of
    shape (len(c), d, d) is returned.
    """
    c = np.asarray(c, dtype=np.float64)
    phases = np.exp(1j * np.multiply.outer(c, evals))
    return np.einsum("ij,...j,kj->...ik", vecs, phases, vecs.conj())


def apply_unitary(state, u, targets, n_qutrits: int | None = None) -> np.ndarray:
    """Apply ``u`` to the listed target qutrits of ``state``.

    ``state`` may be a single state (3**n,) or a batch (B, 3**n).  ``u`` may be a
    single matrix or a per-sample stack (B, d, d) matching the batch.
    """
    state = np.asarray(state)
    u = np.asarray(u)
    targets = tuple(int(t) for t in targets)
    batched = state.ndim == 2
    dim = state.shape[-1]
    if n_qutrits is None:
        n_qutrits = int(round(np.log(dim) / np.log(3)))
    if 3**n_qutrits != dim:
        raise ValidationError(f"state length {dim} is not 3**{n_qutrits}")
    if len(set(targets)) != len(targets) or any(t < 0 or t >= n_qutrits for t in targets):
        raise ValidationError(f"invalid targets {targets} for {n_qutrits} qutrits")
    k = len(targets)
    if u.shape[-2:] != (3**k, 3**k):
        raise ValidationError(f"unitary of shape {u.shape[-2:]} does not act on {k} qutrits")
    if k == n_qutrits and targets == tuple(range(n_qutrits)):
        if u.ndim == 3:
            out = np.einsum("bij,bj->bi", u, state if batched else state[None])
            return out if batched else out[0]
        return state @ u.T

    b = state.shape[0] if batched else 1
    psi = state.reshape((b,) + (3,) * n_qutrits)
    # move targets to the front (after batch) and flatten them
    axes = [t + 1 for t in targets]
    rest = [ax for ax in range(1, n_qutrits + 1) if ax not in axes]
    psi = np.transpose(psi, [0] + axes + rest).reshape(b, 3**k, -1)
    if u.ndim == 3:
        psi = np.einsum("bij,bjr->bir", u, psi)
    else:
        psi = np.einsum("ij,bjr->bir", u, psi)
    psi = psi.reshape((b,) + (3,) * n_qutrits)
    inverse = np.argsort([0] + axes + rest)
    psi = np.transpose(psi, inverse).reshape(b, dim)
    return psi if batched else psi[0]


def inner_product(a, b) -> complex:
    """<a|b> = sum(conj(a_k) * b_k)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def basis_state(n_qutrits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(3**n_qutrits, dtype=np.complex128)
    psi[index] = 1.0
    return psi
