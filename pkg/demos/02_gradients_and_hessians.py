"""Gradients and Hessians of a real function of quaternion variables.

Shows that the conjugate gradient carries the same information as the
real gradient, and that the augmented Hessian maps onto the real one.
"""

import numpy as np

from ghrcalc import fields
from ghrcalc.gradhess import (
    augmented_hessian,
    conj_gradient,
    gradient_correspondence_residual,
    hessian_bundle,
    hessian_correspondence_residual,
    real_gradient,
    real_hessian,
)
from ghrcalc.linalg import QVector

rng = np.random.default_rng(1)
f = fields.real_corpus(2)[2]
q = QVector(rng.uniform(-1, 1, (2, 4)))
print(f"field: {f.name}")
print(f"f(q) = {f.real(q):.6f}")

g = conj_gradient(f, q)
print("\nconjugate gradient (steepest-descent direction):")
for n, gn in enumerate(g):
    print(f"  coordinate {n}: {gn}")
print("4 x real part of it vs the real gradient:")
print("  ", np.round(4 * g.to_real(), 6))
print("  ", np.round(real_gradient(f, q), 6))
print(f"gradient correspondence residual {gradient_correspondence_residual(f, q):.2e}")

H = augmented_hessian(f, q)
print(f"\naugmented Hessian is {H.H.shape[0]}x{H.H.shape[1]} quaternion, Hermitian: {H.H.is_hermitian(atol=1e-8)}")
print(f"real Hessian eigenvalues: {np.round(np.linalg.eigvalsh(real_hessian(f, q)), 4)}")
print(f"Hessian correspondence residual {hessian_correspondence_residual(f, q, H):.2e}")

b = hessian_bundle(f, q)
print("\nH_qq* block:")
for row in range(2):
    print("  " + "  ".join(str(b.Hqq_conj[row, col]) for col in range(2)))
print(f"size of the cross blocks H_q^mu q*: {b.cross_norm():.4f}")
