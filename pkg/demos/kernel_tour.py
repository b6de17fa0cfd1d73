"""A short tour of the qutrit kernel.

Builds the two feature maps, looks at the states they prepare, and checks a
few kernel values by hand.  Run:  python demos/kernel_tour.py
"""
import numpy as np

from qutritml.feature_maps import FeatureMapSpec, build, embed
from qutritml.gates import GELL_MANN
from qutritml.kernel import gram, kernel

np.set_printoptions(precision=4, suppress=True)

# The eight Gell-Mann matrices are the qutrit analogue of the Pauli matrices.
# They are traceless, Hermitian and satisfy Tr(l_i l_j) = 2 delta_ij.
print("Tr(l_i l_j):")
print(np.einsum("aij,bji->ab", GELL_MANN, GELL_MANN).real)

# A four-feature input on one qutrit: H then R1..R4.  Two qutrits: H (x) H,
# the four features on each qutrit, then the fixed LZZ entangler.
for arch in ("single", "two"):
    spec = FeatureMapSpec(arch, use_hadamard=True, n_features=4)
    c = build(spec)
    print(f"\n{arch}-qutrit map: {len(c)} gates ->", [g.kind.value + (str(g.generator) if g.generator else "") for g in c.gates])

spec = FeatureMapSpec("two", True, 2)
x = np.array([0.3, -0.8])
psi = embed(spec, x)
print("\nembedded state of", x, "\n", psi, "\nnorm", np.linalg.norm(psi))

# The kernel is the overlap |<phi(x')|phi(x)>|^2.  It is evaluated the way a
# device would: run U(x), then U(x') in reverse, then read P(|00>).
xp = np.array([0.1, 0.4])
print("\nK(x, x)  =", kernel(x, x, spec))
print("K(x, x') =", kernel(x, xp, spec))
print("overlap  =", abs(np.vdot(embed(spec, xp), psi)) ** 2)

# A shot-sampled estimate converges to the exact value like 1/sqrt(shots).
rng = np.random.default_rng(0)
for shots in (100, 10_000, 1_000_000):
    print(f"{shots:>9} shots:", kernel(x, xp, spec, shots=shots, rng=rng))

# Gram matrices are symmetric and positive semidefinite.
X = rng.uniform(-1, 1, (20, 2))
K = gram(X, spec)
print("\n20x20 Gram: symmetric", np.allclose(K, K.T), "min eigenvalue", np.linalg.eigvalsh(K).min())
