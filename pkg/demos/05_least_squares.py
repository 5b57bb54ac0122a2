"""Quaternion least squares against a real-embedded reference solve."""

import numpy as np

from ghrcalc.linalg import QVector, real_adjoint
from ghrcalc.qls import qls_report, random_problem

rng = np.random.default_rng(5)
p = random_problem(rng, 12, 5)
sol = qls_report(p)
print(f"A is {p.A.shape[0]}x{p.A.shape[1]} quaternion")
print(f"residual norm           {sol.residual_norm:.6f}")
print(f"normal-equation residual {sol.normal_residual:.2e}")
print(f"condition estimate       {sol.condition:.2f}")

oracle = QVector.from_real(np.linalg.lstsq(real_adjoint(p.A), p.b.to_real(), rcond=None)[0])
print(f"max difference to real lstsq: {(sol.q - oracle).max_abs():.2e}")
for n, qn in enumerate(sol.q):
    print(f"  q[{n}] = {qn}")
